//! Pseudodeterministic construction of strings with high rKt, the witness
//! printer for truth-table prefixes, and the truth-table embeddings that tie
//! hard languages to high-complexity strings.

use crate::bits::{ceil_log2, fmt_bits, to_bits, Bits};
use crate::capp::{capp_pseudodet, CappInstance, GenConfig};
use crate::error::{LabError, Result};
use crate::kolmogorov::{
    gap_mrkt_circuit, normalized, rkt, ComplexityBudget, GapMode, CENSUS_MAX_LEN,
};
use crate::machine::{exec_program, Instr, ToyProgram};
use crate::sampler::SeededSampler;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

/// Multiplier C′ in the prefix-printer bound.
pub const FACT51_C_PRIME: u64 = 1;
/// Additive constant c₀: an unrolled printer for a 16-entry table plus its jump.
pub const FACT51_C0: u64 = 8 * ((1 << FACT51_MAX_N) + 1);
/// Largest input length the prefix printer handles.
pub const FACT51_MAX_N: usize = 4;

/// Size exponent for the circuits handed to the estimator: bound n^(d+2).
pub const CONSTRUCT_SIZE_SLACK: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RndSearchInstance {
    pub n: u64,
    pub d: u32,
    /// ⌈d·log n⌉.
    pub m: usize,
}

impl RndSearchInstance {
    pub fn new(n: u64, d: u32) -> Result<RndSearchInstance> {
        if n < 2 || d == 0 {
            return Err(LabError::Parameter("need n >= 2 and d >= 1".into()));
        }
        let m = ((d as f64) * (n as f64).log2() - 1e-9).ceil() as usize;
        if m == 0 || m > CENSUS_MAX_LEN {
            return Err(LabError::Budget(format!(
                "target length {m} outside 1..={CENSUS_MAX_LEN}"
            )));
        }
        Ok(RndSearchInstance { n, d, m })
    }

    /// Required complexity m/2 (compared as 2·value ≥ m).
    pub fn meets(&self, value: i64) -> bool {
        2 * value >= self.m as i64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructResult {
    /// `None` is FAIL.
    pub string: Option<String>,
    /// Raw budget rkt of the output, when witnessed.
    pub oracle_rkt: Option<u64>,
    /// rkt above the literal-printer overhead, or the certified floor when unwitnessed.
    pub normalized_rkt: Option<i64>,
    pub canonical: bool,
    /// Candidates examined before stopping.
    pub examined: u64,
}

/// Scan a ∈ {0,1}^m in lexicographic order and return the first whose
/// estimated acceptance by the gap decider exceeds 1/3 + 1/10.
pub fn construct_high_rkt(
    inst: &RndSearchInstance,
    cfg: &GenConfig,
    mode: GapMode,
    budget: &ComplexityBudget,
    sampler: &SeededSampler,
) -> Result<ConstructResult> {
    construct_with(inst, cfg, budget, sampler, |a| {
        gap_mrkt_circuit(a, budget, mode)
    })
}

/// As [`construct_high_rkt`] with the decider's circuit supplied by `decider`.
pub fn construct_with(
    inst: &RndSearchInstance,
    cfg: &GenConfig,
    budget: &ComplexityBudget,
    sampler: &SeededSampler,
    mut decider: impl FnMut(&[bool]) -> Result<crate::circuit::Circuit>,
) -> Result<ConstructResult> {
    let m = inst.m;
    for v in 0..1u64 << m {
        let a = to_bits(v, m);
        let c = decider(&a)?;
        let ci = CappInstance::new(inst.n, inst.d + CONSTRUCT_SIZE_SLACK, c)?;
        let mu = capp_pseudodet(&ci, cfg, sampler, 0)?.mu;
        // μ > 13/30
        if mu.cmp_ratio(13, 30) == Ordering::Greater {
            let r = rkt(&a, budget)?;
            let norm = normalized(r.value).or_else(|| normalized(Some(r.lower_bound)));
            return Ok(ConstructResult {
                string: Some(fmt_bits(&a)),
                oracle_rkt: r.value,
                normalized_rkt: norm,
                canonical: true,
                examined: v + 1,
            });
        }
    }
    Ok(ConstructResult {
        string: None,
        oracle_rkt: None,
        normalized_rkt: None,
        canonical: true,
        examined: 1 << m,
    })
}

/// A deterministic toy decider: input is advice ∘ x, accepts when the first
/// output bit is 1 within `time` steps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeciderSpec {
    pub program: ToyProgram,
    pub advice: Bits,
    pub time: u64,
}

impl DeciderSpec {
    pub fn decide(&self, x: &[bool]) -> bool {
        let mut input = self.advice.clone();
        input.extend_from_slice(x);
        exec_program(&self.program, &input, self.time, &[]).accepts()
    }

    /// string(L^{=n}): bit i is membership of the i-th n-bit string.
    pub fn truth_table(&self, n: usize) -> Bits {
        (0..1u64 << n)
            .map(|i| self.decide(&to_bits(i, n)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fact51Witness {
    pub program: ToyProgram,
    pub t: u64,
    /// |M| + |a| + ⌈log t⌉.
    pub cost: u64,
    /// C′·(⌈log ℓ⌉ + ⌈log a(n)⌉ + b(n) + ⌈log n⌉) + c₀.
    pub bound: u64,
    pub prefix: String,
}

/// Printer for the first ℓ bits of the decider's truth table at length n.
///
/// The machine has no memory to iterate over inputs, so the table is
/// unrolled into OUT instructions followed by a jump back; ℓ enters only
/// through the clock t = ℓ.
pub fn fact51_witness(decider: &DeciderSpec, n: usize, ell: usize) -> Result<Fact51Witness> {
    if n == 0 || n > FACT51_MAX_N {
        return Err(LabError::Budget(format!(
            "n = {n} outside 1..={FACT51_MAX_N}"
        )));
    }
    if ell == 0 || ell > 1 << n {
        return Err(LabError::Parameter(format!(
            "prefix length {ell} outside 1..=2^{n}"
        )));
    }
    let table = decider.truth_table(n);
    let mut ins: Vec<Instr> = table.iter().map(|&b| Instr::Out(b)).collect();
    ins.push(Instr::Jmp(0));
    let program = ToyProgram::from_instrs(&ins);
    let t = ell as u64;
    let run = exec_program(&program, &[], t, &[]);
    if run.output != table[..ell] {
        return Err(LabError::Oracle("prefix printer does not replay".into()));
    }
    let cost = program.description_length() + ceil_log2(t) as u64;
    let bound = FACT51_C_PRIME
        * (ceil_log2(ell as u64) as u64
            + ceil_log2(decider.time) as u64
            + decider.advice.len() as u64
            + ceil_log2(n as u64) as u64)
        + FACT51_C0;
    if cost > bound {
        return Err(LabError::Oracle(format!(
            "witness cost {cost} exceeds bound {bound}"
        )));
    }
    Ok(Fact51Witness {
        program,
        t,
        cost,
        bound,
        prefix: fmt_bits(&table[..ell]),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthTableString {
    pub n: usize,
    pub bits: Bits,
    pub prefix_len: usize,
}

/// m(n) = ⌈(10·C′/ε)·log t(n)⌉.
pub fn embed_length(eps: f64, t_n: u64) -> Result<usize> {
    if eps <= 0.0 || t_n == 0 {
        return Err(LabError::Parameter("need eps > 0 and t(n) >= 1".into()));
    }
    Ok(
        ((10.0 * FACT51_C_PRIME as f64 / eps) * (t_n as f64).log2() - 1e-9)
            .ceil()
            .max(0.0) as usize,
    )
}

/// Table of length 2^n holding w_{m(n)} as its prefix and zeros after it.
pub fn embed_hard_language(
    supplier: &mut dyn FnMut(usize) -> Result<Bits>,
    n: usize,
    eps: f64,
    t_n: u64,
) -> Result<TruthTableString> {
    if n >= 24 {
        return Err(LabError::Budget(format!(
            "table of 2^{n} bits is too large"
        )));
    }
    let m = embed_length(eps, t_n)?;
    if m > 1 << n {
        return Err(LabError::Parameter(format!("m(n) = {m} exceeds 2^{n}")));
    }
    let w = supplier(m)?;
    if w.len() != m {
        return Err(LabError::InputShape(format!(
            "supplier returned {} bits, need {m}",
            w.len()
        )));
    }
    let mut bits = w;
    bits.resize(1 << n, false);
    Ok(TruthTableString {
        n,
        bits,
        prefix_len: m,
    })
}

/// string(L^{=n}) ∘ 0^{m − 2^n}.
pub fn extract_string(lang: &dyn Fn(&[bool]) -> bool, n: usize, m: usize) -> Result<Bits> {
    if n >= 24 || m < 1 << n {
        return Err(LabError::Parameter(format!("need 2^{n} <= m = {m}")));
    }
    let mut y: Bits = (0..1u64 << n).map(|i| lang(&to_bits(i, n))).collect();
    y.resize(m, false);
    Ok(y)
}
