//! Diagonalization against clocked probabilistic machines through a canonical
//! CAPP estimator, and the reduction from clocked machines to a hard language.

use crate::bits::{ceil_log2, fmt_bits, from_bits, to_bits, Bits};
use crate::capp::{
    capp_pseudodet, capp_success, exact_acceptance, CappInstance, GenConfig, Success,
};
use crate::circuit::Circuit;
use crate::compile::compile_machine_to_circuit;
use crate::dyadic::Dyadic;
use crate::error::{LabError, Result};
use crate::machine::{enumerate_machines, ToyProgram};
use crate::sampler::SeededSampler;
use crate::structured::{frame_header, unframe};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

/// The padded input 1^{n−⌈log n⌉} i.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagInput {
    pub n: usize,
    pub i: u64,
}

impl DiagInput {
    pub fn index_bits(n: usize) -> usize {
        ceil_log2(n as u64) as usize
    }

    pub fn new(n: usize, i: u64) -> Result<DiagInput> {
        let l = DiagInput::index_bits(n);
        if n == 0 || i >> l != 0 {
            return Err(LabError::Parameter(format!(
                "index {i} does not fit {l} bits at n = {n}"
            )));
        }
        Ok(DiagInput { n, i })
    }

    pub fn parse(x: &[bool]) -> Option<DiagInput> {
        let n = x.len();
        if n == 0 {
            return None;
        }
        let l = DiagInput::index_bits(n);
        if l > n || !x[..n - l].iter().all(|&b| b) {
            return None;
        }
        Some(DiagInput {
            n,
            i: from_bits(&x[n - l..]),
        })
    }

    pub fn to_bits(&self) -> Bits {
        let l = DiagInput::index_bits(self.n);
        let mut x = vec![true; self.n - l];
        x.extend(to_bits(self.i, l));
        x
    }

    pub fn machine(&self) -> ToyProgram {
        enumerate_machines(self.i)
    }
}

fn clock(n: usize, d: u32) -> Result<u64> {
    (n as u64)
        .checked_pow(d)
        .ok_or_else(|| LabError::Parameter(format!("{n}^{d} overflows")))
}

/// C_i: machine i on its padded input, clocked at n^d, as a function of its coins.
pub fn diag_circuit(x: &DiagInput, d: u32) -> Result<Circuit> {
    compile_machine_to_circuit(&x.machine(), &x.to_bits(), clock(x.n, d)?)
}

/// The CAPP instance (1^n, C_i) with size bound n^{d+1}.
pub fn diag_instance(x: &DiagInput, d: u32) -> Result<CappInstance> {
    CappInstance::new(x.n as u64, d + 1, diag_circuit(x, d)?)
}

/// Accept iff the canonical estimate for C_i is at most 1/2; malformed inputs reject.
pub fn diag_decide(x: &[bool], cfg: &GenConfig, d: u32, sampler: &SeededSampler) -> Result<bool> {
    let Some(input) = DiagInput::parse(x) else {
        return Ok(false);
    };
    let est = capp_pseudodet(&diag_instance(&input, d)?, cfg, sampler, 0)?;
    Ok(est.mu.cmp_ratio(1, 2) != Ordering::Greater)
}

/// Uniform choice of i ∈ {0,1}^{⌈log n⌉}, mapped to C_i.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagEnsemble {
    pub n: usize,
    pub d: u32,
}

pub fn diag_ensemble(n: usize, d: u32) -> DiagEnsemble {
    DiagEnsemble { n, d }
}

impl DiagEnsemble {
    pub fn support(&self) -> Vec<DiagInput> {
        let l = DiagInput::index_bits(self.n);
        (0..1u64 << l).map(|i| DiagInput { n: self.n, i }).collect()
    }

    /// Probability of each support element.
    pub fn mass(&self) -> Dyadic {
        Dyadic::new(1, DiagInput::index_bits(self.n) as u32)
    }

    pub fn sample(&self, sampler: &SeededSampler) -> Result<(DiagInput, CappInstance)> {
        let l = DiagInput::index_bits(self.n);
        let i = sampler.rng().gen_range(0..1u64 << l);
        let x = DiagInput { n: self.n, i };
        Ok((x, diag_instance(&x, self.d)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Differs,
    /// The estimate was accurate but the decision matched the machine.
    Agrees,
    /// The machine's acceptance is within 1/6 of 1/2.
    NotApplicable,
    /// The estimate missed by more than 1/10, so nothing is claimed.
    EstimateFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagReport {
    pub i: u64,
    pub n: usize,
    pub verdict: Verdict,
    pub exact: Dyadic,
    pub estimate: Dyadic,
    /// |estimate − exact| as a float, for tables.
    pub capp_err: f64,
    pub decision: bool,
    pub majority: bool,
}

/// Is |μ − 1/2| ≥ 1/6? Exact: |6μ − 3| ≥ 1.
fn bounded_away(mu: Dyadic) -> bool {
    let six = mu.num * 6;
    let three = 3u128 << mu.logden;
    six.abs_diff(three) >= 1u128 << mu.logden
}

pub fn diag_verify(
    i: u64,
    n: usize,
    cfg: &GenConfig,
    d: u32,
    sampler: &SeededSampler,
) -> Result<DiagReport> {
    let x = DiagInput::new(n, i)?;
    let inst = diag_instance(&x, d)?;
    let exact = exact_acceptance(&inst.circuit)?;
    let est = capp_pseudodet(&inst, cfg, sampler, 0)?;
    let decision = est.mu.cmp_ratio(1, 2) != Ordering::Greater;
    let majority = exact.cmp_ratio(1, 2) == Ordering::Greater;
    let verdict = if !bounded_away(exact) {
        Verdict::NotApplicable
    } else if capp_success(&inst, &est) != Success::Success {
        Verdict::EstimateFailed
    } else if decision != majority {
        Verdict::Differs
    } else {
        Verdict::Agrees
    };
    Ok(DiagReport {
        i,
        n,
        verdict,
        exact,
        estimate: est.mu,
        capp_err: (est.mu.to_f64() - exact.to_f64()).abs(),
        decision,
        majority,
    })
}

/// First `count` indices whose machines respect the bounded-error promise.
pub fn promise_respecting(n: usize, d: u32, count: usize) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for x in diag_ensemble(n, d).support() {
        if out.len() == count {
            break;
        }
        if bounded_away(exact_acceptance(&diag_circuit(&x, d)?)?) {
            out.push(x.i);
        }
    }
    Ok(out)
}

pub fn diag_sweep_csv(reports: &[DiagReport]) -> String {
    let mut s = String::from("i,n,verdict,capp_err\n");
    for r in reports {
        let v = serde_json::to_value(r.verdict).unwrap();
        s.push_str(&format!(
            "{},{},{},{}\n",
            r.i,
            r.n,
            v.as_str().unwrap(),
            r.capp_err
        ));
    }
    s
}

/// (⟨M⟩, x, 1^t) with both strings length-framed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HardInstance {
    pub machine: ToyProgram,
    pub x: Bits,
    pub t: u64,
}

impl HardInstance {
    pub fn to_bits(&self) -> Bits {
        let code: Bits = self
            .machine
            .bytes()
            .iter()
            .flat_map(|&b| to_bits(b as u64, 8))
            .collect();
        let mut w = frame_header(code.len());
        w.extend(code);
        w.extend(frame_header(self.x.len()));
        w.extend_from_slice(&self.x);
        w.extend(std::iter::repeat_n(true, self.t as usize));
        w
    }

    pub fn framing_len(&self) -> usize {
        frame_header(self.machine.len() * 8).len() + frame_header(self.x.len()).len()
    }

    pub fn parse(w: &[bool]) -> Result<HardInstance> {
        let bad = || LabError::Parse("not a framed (machine, input, clock) string".into());
        let code = unframe(w).ok_or_else(bad)?;
        let used = frame_header(code.len()).len() + code.len();
        if code.len() % 8 != 0 || code.is_empty() {
            return Err(bad());
        }
        let bytes: Vec<u8> = code.chunks(8).map(|c| from_bits(c) as u8).collect();
        let rest = &w[used..];
        let x = unframe(rest).ok_or_else(bad)?;
        let clock = &rest[frame_header(x.len()).len() + x.len()..];
        if clock.is_empty() || !clock.iter().all(|&b| b) {
            return Err(bad());
        }
        Ok(HardInstance {
            machine: ToyProgram::from_bytes(bytes),
            x,
            t: clock.len() as u64,
        })
    }
}

pub fn hardness_reduce(m: &ToyProgram, x: &[bool], t: u64) -> Result<HardInstance> {
    if t == 0 {
        return Err(LabError::Parameter("clock must be at least 1".into()));
    }
    Ok(HardInstance {
        machine: m.clone(),
        x: x.to_vec(),
        t,
    })
}

/// 1 iff the canonical estimate for C_(M,x) at clock t is at least 1/2.
/// The CAPP index is the instance length; the size bound is its square.
pub fn hard_language_decide(
    w: &HardInstance,
    cfg: &GenConfig,
    sampler: &SeededSampler,
) -> Result<bool> {
    let c = compile_machine_to_circuit(&w.machine, &w.x, w.t)?;
    let n = w.to_bits().len() as u64;
    let inst = CappInstance::new(n, 2, c)?;
    let est = capp_pseudodet(&inst, cfg, sampler, 0)?;
    Ok(est.mu.cmp_ratio(1, 2) != Ordering::Less)
}

pub fn fmt_instance(w: &HardInstance) -> String {
    fmt_bits(&w.to_bits())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::Instr;

    fn s() -> SeededSampler {
        SeededSampler::new("diag", 32, 0, 0)
    }

    #[test]
    fn parse_padded_inputs() {
        let x = DiagInput::new(32, 5).unwrap();
        let bits = x.to_bits();
        assert_eq!(bits.len(), 32);
        assert_eq!(DiagInput::parse(&bits), Some(x));
        let mut bad = bits.clone();
        bad[0] = false;
        assert_eq!(DiagInput::parse(&bad), None);
        assert!(!diag_decide(&bad, &GenConfig::Identity, 2, &s()).unwrap());
        assert!(DiagInput::new(32, 32).is_err());
    }

    #[test]
    fn always_accept_and_reject() {
        // index 2 is OUT1, index 1 is OUT0
        let acc = DiagInput::new(32, 2).unwrap();
        assert_eq!(acc.machine().instrs(), vec![Instr::Out(true)]);
        assert!(!diag_decide(&acc.to_bits(), &GenConfig::Identity, 2, &s()).unwrap());
        let rej = DiagInput::new(32, 1).unwrap();
        assert!(diag_decide(&rej.to_bits(), &GenConfig::Identity, 2, &s()).unwrap());
        assert_eq!(
            diag_verify(2, 32, &GenConfig::Identity, 2, &s())
                .unwrap()
                .verdict,
            Verdict::Differs
        );
    }

    #[test]
    fn ensemble_mass() {
        for n in 2..=64 {
            let e = diag_ensemble(n, 2);
            assert_eq!(e.support().len(), 1 << DiagInput::index_bits(n));
            assert_ne!(e.mass().cmp_ratio(1, 2 * n as u128), Ordering::Less);
        }
    }

    #[test]
    fn hard_instances_round_trip() {
        let m = ToyProgram::from_instrs(&[
            Instr::Rnd,
            Instr::Brf(1),
            Instr::Out(false),
            Instr::Out(true),
        ]);
        let w = hardness_reduce(&m, &[true, false], 9).unwrap();
        let bits = w.to_bits();
        assert_eq!(bits.len(), 8 * m.len() + 2 + 9 + w.framing_len());
        assert_eq!(HardInstance::parse(&bits).unwrap(), w);
        let yes = hardness_reduce(&ToyProgram::from_instrs(&[Instr::Out(true)]), &[], 4).unwrap();
        assert!(hard_language_decide(&yes, &GenConfig::Identity, &s()).unwrap());
        let no = hardness_reduce(&ToyProgram::from_instrs(&[Instr::Out(false)]), &[], 4).unwrap();
        assert!(!hard_language_decide(&no, &GenConfig::Identity, &s()).unwrap());
    }
}
