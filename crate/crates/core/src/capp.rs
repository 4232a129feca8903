//! Circuit acceptance probability: exact, sampled and generator-derandomized
//! estimators plus the 1/10 success predicate.

use crate::bits::{parse_bits, Bits};
use crate::circuit::Circuit;
use crate::dyadic::Dyadic;
use crate::error::{LabError, Result};
use crate::nw::{build_design, NWGenerator, Prg};
use crate::sampler::SeededSampler;
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Most inputs an exact count will enumerate.
pub const EXACT_SUPPORT_CAP: usize = 24;

/// Default exponent C in the n·(log n)^C size bound.
pub const DEFAULT_SIZE_LOG_EXPONENT: u32 = 2;

/// Sampled estimates are rounded down to this many fractional bits.
pub const SAMPLE_PRECISION_BITS: u32 = 32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CappInstance {
    pub n: u64,
    /// Size exponent, when the bound is n^d.
    pub d: Option<u32>,
    /// Bound on both the input count and the netlist byte length.
    pub bound: u64,
    pub circuit: Circuit,
}

fn checked_pow(n: u64, d: u32) -> Result<u64> {
    n.checked_pow(d)
        .ok_or_else(|| LabError::Parameter(format!("{n}^{d} overflows")))
}

impl CappInstance {
    /// An instance with both size bounds n^d.
    pub fn new(n: u64, d: u32, circuit: Circuit) -> Result<CappInstance> {
        CappInstance::with_bound(n, Some(d), checked_pow(n, d)?, circuit)
    }

    /// The n·⌈log n⌉^C variant.
    pub fn quasilinear(n: u64, c: u32, circuit: Circuit) -> Result<CappInstance> {
        let log = crate::bits::ceil_log2(n).max(1) as u64;
        let bound = checked_pow(log, c)?
            .checked_mul(n)
            .ok_or_else(|| LabError::Parameter("size bound overflows".into()))?;
        CappInstance::with_bound(n, None, bound, circuit)
    }

    fn with_bound(n: u64, d: Option<u32>, bound: u64, circuit: Circuit) -> Result<CappInstance> {
        if n == 0 {
            return Err(LabError::Parameter("n must be positive".into()));
        }
        if circuit.input_arity() as u64 > bound {
            return Err(LabError::InputShape(format!(
                "circuit has {} inputs, bound is {bound}",
                circuit.input_arity()
            )));
        }
        let bytes = circuit.to_netlist().len() as u64;
        if bytes > bound {
            return Err(LabError::Budget(format!(
                "netlist is {bytes} bytes, bound is {bound}"
            )));
        }
        Ok(CappInstance {
            n,
            d,
            bound,
            circuit,
        })
    }

    /// The encoded pair (1^n, C) with the netlist padded to exactly `bound` bytes.
    pub fn encode(&self) -> Result<String> {
        let mut s = "1".repeat(self.n as usize);
        s.push('\n');
        s.push_str(&self.circuit.to_padded_netlist(self.bound as usize)?);
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimateMode {
    Exact,
    Sampled,
    Prg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CappEstimate {
    pub mu: Dyadic,
    pub mode: EstimateMode,
    pub canonical: bool,
}

/// Lane patterns enumerating six variables across the 64 lanes.
const LANE_PATTERNS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

/// Exact Pr_y[c(y) = 1], enumerating only the inputs the output depends on.
pub fn exact_acceptance(c: &Circuit) -> Result<Dyadic> {
    let support = c.support();
    let k = support.len();
    if k > EXACT_SUPPORT_CAP {
        return Err(LabError::Budget(format!(
            "circuit depends on {k} inputs, exact enumeration cap is {EXACT_SUPPORT_CAP}"
        )));
    }
    let lane_vars = k.min(6);
    let lane_mask: u64 = if lane_vars == 6 {
        !0
    } else {
        (1u64 << (1 << lane_vars)) - 1
    };
    let outer = 1u64 << (k - lane_vars);
    let count: u64 = (0..outer)
        .into_par_iter()
        .map_init(
            || (vec![0u64; c.input_arity()], Vec::new()),
            |(words, buf), hi| {
                for (j, &v) in support.iter().enumerate() {
                    words[v] = if j < lane_vars {
                        LANE_PATTERNS[j]
                    } else if hi >> (j - lane_vars) & 1 == 1 {
                        !0
                    } else {
                        0
                    };
                }
                (c.eval_words(words, buf) & lane_mask).count_ones() as u64
            },
        )
        .sum();
    Ok(Dyadic::new(count as u128, k as u32))
}

/// Fraction of `s` uniform inputs accepted, rounded down to 32 fractional bits.
///
/// Hoeffding: the error exceeds ε with probability at most 2·exp(−2sε²); at
/// ε = 1/10 that is 2·exp(−s/50).
pub fn sample_acceptance(c: &Circuit, s: u64, sampler: &SeededSampler) -> Result<Dyadic> {
    if s == 0 {
        return Err(LabError::Parameter(
            "sample count must be at least 1".into(),
        ));
    }
    let support = c.support();
    let mut rng = sampler.rng();
    let mut words = vec![0u64; c.input_arity()];
    let mut buf = Vec::new();
    let mut count = 0u64;
    let mut left = s;
    while left > 0 {
        let lanes = left.min(64);
        for &v in &support {
            words[v] = rng.next_u64();
        }
        let mask = if lanes == 64 { !0 } else { (1u64 << lanes) - 1 };
        count += (c.eval_words(&words, &mut buf) & mask).count_ones() as u64;
        left -= lanes;
    }
    let scaled = ((count as u128) << SAMPLE_PRECISION_BITS) / s as u128;
    Ok(Dyadic::new(scaled, SAMPLE_PRECISION_BITS))
}

pub fn capp_exact(inst: &CappInstance) -> Result<CappEstimate> {
    Ok(CappEstimate {
        mu: exact_acceptance(&inst.circuit)?,
        mode: EstimateMode::Exact,
        canonical: true,
    })
}

pub fn capp_sample(inst: &CappInstance, s: u64, sampler: &SeededSampler) -> Result<CappEstimate> {
    Ok(CappEstimate {
        mu: sample_acceptance(&inst.circuit, s, sampler)?,
        mode: EstimateMode::Sampled,
        canonical: false,
    })
}

/// Pr_z[C(G(z)) = 1] averaged exactly over every seed.
pub fn capp_prg(inst: &CappInstance, g: &Prg) -> Result<CappEstimate> {
    let composed = g.compose(&inst.circuit)?;
    Ok(CappEstimate {
        mu: exact_acceptance(&composed)?,
        mode: EstimateMode::Prg,
        canonical: true,
    })
}

/// A registered generator family, instantiated per instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
#[derive(Default)]
pub enum GenConfig {
    #[default]
    Identity,
    Constant {
        bits: String,
    },
    Nw {
        /// Seed length is ⌈n^eps⌉.
        eps: f64,
        k: usize,
        alpha: usize,
        /// Truth table as a bit string; the padded-language table when absent.
        #[serde(default)]
        hard_fn: Option<String>,
    },
}

/// ⌈n^eps⌉, guarded against representation error just above an integer.
pub fn seed_length(n: u64, eps: f64) -> usize {
    ((n as f64).powf(eps) - 1e-9).ceil().max(1.0) as usize
}

impl GenConfig {
    pub fn from_json(text: &str) -> Result<GenConfig> {
        let g: GenConfig = serde_json::from_str(text)
            .map_err(|e| LabError::Parse(format!("generator config: {e}")))?;
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if let GenConfig::Nw { eps, k, .. } = self {
            if !(*eps > 0.0 && *eps < 1.0) {
                return Err(LabError::Parameter(format!(
                    "eps must lie in (0,1), got {eps}"
                )));
            }
            if *k == 0 || *k > 16 {
                return Err(LabError::Parameter(format!(
                    "hard function arity {k} outside 1..=16"
                )));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            GenConfig::Identity => "identity",
            GenConfig::Constant { .. } => "constant",
            GenConfig::Nw { .. } => "nw",
        }
    }

    /// The generator used at index `n` for a circuit with `arity` inputs.
    pub fn instantiate(&self, n: u64, arity: usize) -> Result<Prg> {
        self.validate()?;
        match self {
            GenConfig::Identity => Ok(Prg::Identity { len: arity }),
            GenConfig::Constant { bits } => {
                let mut b: Bits = parse_bits(bits)?;
                b.resize(b.len().max(arity), false);
                Ok(Prg::Constant { bits: b })
            }
            GenConfig::Nw {
                eps,
                k,
                alpha,
                hard_fn,
            } => {
                let ell = seed_length(n, *eps);
                let table = match hard_fn {
                    Some(t) => parse_bits(t)?,
                    None => crate::structured::lk_hard_table(*k)?,
                };
                let design = build_design(ell, *k, arity, *alpha)?;
                Ok(Prg::Nw(NWGenerator::new(design, table)?))
            }
        }
    }
}

/// Generator outputs past the last relevant input are never read.
fn relevant_arity(c: &Circuit) -> usize {
    c.support().last().map_or(0, |&v| v + 1)
}

/// Canonical estimate through the configured generator.
///
/// `self_check` > 0 compares against that many uniform samples and fails
/// loudly when they disagree by more than 1/5; μ itself never depends on the
/// sampler.
pub fn capp_pseudodet(
    inst: &CappInstance,
    cfg: &GenConfig,
    sampler: &SeededSampler,
    self_check: u64,
) -> Result<CappEstimate> {
    let c = &inst.circuit;
    let g = match cfg {
        GenConfig::Identity => Prg::Identity {
            len: c.input_arity(),
        },
        _ => cfg.instantiate(inst.n, relevant_arity(c))?,
    };
    let est = match g.output_len() < c.input_arity() {
        // unread tail inputs are tied to zero
        true => {
            let mut b = crate::circuit::CircuitBuilder::new(g.seed_len());
            let seed: Vec<u32> = (0..g.seed_len()).map(|i| b.input(i)).collect();
            let mut outs = g.output_gates(&mut b, &seed, g.output_len())?;
            let zero = b.constant(false);
            outs.resize(c.input_arity(), zero);
            let o = b.embed(c, &outs);
            CappEstimate {
                mu: exact_acceptance(&b.finish(o))?,
                mode: EstimateMode::Prg,
                canonical: true,
            }
        }
        false => capp_prg(inst, &g)?,
    };
    if self_check > 0 {
        let sampled = sample_acceptance(c, self_check, &sampler.fork("self-check", 0))?;
        if !est.mu.within(sampled, 1, 5) {
            return Err(LabError::Oracle(format!(
                "generator estimate {} far from sampled {}",
                est.mu, sampled
            )));
        }
    }
    Ok(est)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Success {
    Success,
    Failure,
    Unresolved,
}

/// Whether |Pr[C = 1] − μ| ≤ 1/10, judged against the exact value.
pub fn capp_success(inst: &CappInstance, est: &CappEstimate) -> Success {
    match exact_acceptance(&inst.circuit) {
        Ok(exact) if exact.within(est.mu, 1, 10) => Success::Success,
        Ok(_) => Success::Failure,
        Err(_) => Success::Unresolved,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SuccessTally {
    pub success: u64,
    pub failure: u64,
    pub unresolved: u64,
}

impl SuccessTally {
    pub fn record(&mut self, s: Success) {
        match s {
            Success::Success => self.success += 1,
            Success::Failure => self.failure += 1,
            Success::Unresolved => self.unresolved += 1,
        }
    }

    pub fn resolved(&self) -> u64 {
        self.success + self.failure
    }

    pub fn rate(&self) -> f64 {
        if self.resolved() == 0 {
            return 0.0;
        }
        self.success as f64 / self.resolved() as f64
    }
}
