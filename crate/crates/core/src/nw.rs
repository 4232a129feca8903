//! Combinatorial designs, the NW generator, distinguisher advantage and the
//! hybrid-argument next-bit predictor.

use crate::bits::{from_bits, Bits};
use crate::capp::{exact_acceptance, seed_length};
use crate::circuit::{truth_table_circuit, Circuit, CircuitBuilder};
use crate::dyadic::Dyadic;
use crate::error::{LabError, Result};
use crate::sampler::SeededSampler;
use crate::structured::{good_length, lk_hard_table, HierarchyParams, TimeBoundTable};
use rand::RngCore;
use serde::{Deserialize, Serialize};

/// Largest seed or output length the exact advantage routines enumerate.
pub const EXACT_ADVANTAGE_CAP: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Design {
    pub ell: usize,
    pub k: usize,
    pub alpha: usize,
    /// Each set as ascending positions in `0..ell`.
    pub sets: Vec<Vec<usize>>,
}

fn mask(set: &[usize]) -> u64 {
    set.iter().fold(0u64, |m, &i| m | 1 << i)
}

impl Design {
    /// Exhaustive check of set sizes and pairwise intersections.
    pub fn verify(&self) -> Result<()> {
        let masks: Vec<u64> = self.sets.iter().map(|s| mask(s)).collect();
        for (i, s) in self.sets.iter().enumerate() {
            if s.len() != self.k
                || masks[i].count_ones() as usize != self.k
                || s.iter().any(|&x| x >= self.ell)
            {
                return Err(LabError::Parameter(format!(
                    "set {i} is not a {}-subset of [{}]",
                    self.k, self.ell
                )));
            }
            for j in 0..i {
                let inter = (masks[i] & masks[j]).count_ones() as usize;
                if inter > self.alpha {
                    return Err(LabError::Parameter(format!(
                        "sets {j} and {i} share {inter} > {} points",
                        self.alpha
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.sets.len()
    }
}

/// k-subsets of [ell] in lexicographic order.
fn next_subset(s: &mut [usize], ell: usize) -> bool {
    let k = s.len();
    for i in (0..k).rev() {
        if s[i] < ell - k + i {
            s[i] += 1;
            for j in i + 1..k {
                s[j] = s[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Greedy construction: each set is the lexicographically first k-subset
/// meeting every earlier set in at most `alpha` points.
pub fn build_design(ell: usize, k: usize, m: usize, alpha: usize) -> Result<Design> {
    if k == 0 || k > ell || ell > 64 {
        return Err(LabError::Parameter(format!(
            "need 1 <= k <= ell <= 64, got k = {k}, ell = {ell}"
        )));
    }
    let mut sets: Vec<Vec<usize>> = Vec::with_capacity(m);
    let mut masks: Vec<u64> = Vec::with_capacity(m);
    for index in 0..m {
        let mut cand: Vec<usize> = (0..k).collect();
        let found = loop {
            let cm = mask(&cand);
            if !masks.contains(&cm)
                && masks
                    .iter()
                    .all(|&o| (o & cm).count_ones() as usize <= alpha)
            {
                break true;
            }
            if !next_subset(&mut cand, ell) {
                break false;
            }
        };
        if !found {
            return Err(LabError::DesignStuck {
                index,
                reason: format!(
                    "no {k}-subset of [{ell}] meets the previous {index} sets in <= {alpha} points"
                ),
            });
        }
        masks.push(mask(&cand));
        sets.push(cand);
    }
    let d = Design {
        ell,
        k,
        alpha,
        sets,
    };
    d.verify()?;
    Ok(d)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NWGenerator {
    pub design: Design,
    /// Truth table of the hard function on k bits, indexed big-endian.
    pub hard_fn: Bits,
}

impl NWGenerator {
    pub fn new(design: Design, hard_fn: Bits) -> Result<NWGenerator> {
        if hard_fn.len() != 1 << design.k {
            return Err(LabError::Parameter(format!(
                "hard function table has {} entries, need {}",
                hard_fn.len(),
                1usize << design.k
            )));
        }
        Ok(NWGenerator { design, hard_fn })
    }

    pub fn seed_len(&self) -> usize {
        self.design.ell
    }

    pub fn output_len(&self) -> usize {
        self.design.m()
    }

    pub fn generate(&self, seed: &[bool]) -> Result<Bits> {
        if seed.len() != self.design.ell {
            return Err(LabError::InputShape(format!(
                "seed has {} bits, need {}",
                seed.len(),
                self.design.ell
            )));
        }
        Ok(self
            .design
            .sets
            .iter()
            .map(|s| {
                let restricted: Bits = s.iter().map(|&i| seed[i]).collect();
                self.hard_fn[from_bits(&restricted) as usize]
            })
            .collect())
    }
}

pub fn nw_generate(g: &NWGenerator, seed: &[bool]) -> Result<Bits> {
    g.generate(seed)
}

/// A seed-to-output map used to derandomize circuit inputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Prg {
    Identity { len: usize },
    Constant { bits: Bits },
    Nw(NWGenerator),
}

impl Prg {
    pub fn seed_len(&self) -> usize {
        match self {
            Prg::Identity { len } => *len,
            Prg::Constant { .. } => 0,
            Prg::Nw(g) => g.seed_len(),
        }
    }

    pub fn output_len(&self) -> usize {
        match self {
            Prg::Identity { len } => *len,
            Prg::Constant { bits } => bits.len(),
            Prg::Nw(g) => g.output_len(),
        }
    }

    pub fn generate(&self, seed: &[bool]) -> Result<Bits> {
        if seed.len() != self.seed_len() {
            return Err(LabError::InputShape(format!(
                "seed has {} bits, need {}",
                seed.len(),
                self.seed_len()
            )));
        }
        match self {
            Prg::Identity { .. } => Ok(seed.to_vec()),
            Prg::Constant { bits } => Ok(bits.clone()),
            Prg::Nw(g) => g.generate(seed),
        }
    }

    /// Gates for the first `count` output bits as functions of the seed gates.
    pub fn output_gates(
        &self,
        b: &mut CircuitBuilder,
        seed: &[u32],
        count: usize,
    ) -> Result<Vec<u32>> {
        if count > self.output_len() {
            return Err(LabError::Parameter(format!(
                "generator outputs {} bits, {count} needed",
                self.output_len()
            )));
        }
        Ok(match self {
            Prg::Identity { .. } => seed[..count].to_vec(),
            Prg::Constant { bits } => bits[..count].iter().map(|&v| b.constant(v)).collect(),
            Prg::Nw(g) => {
                let f = truth_table_circuit(g.design.k, &g.hard_fn);
                g.design.sets[..count]
                    .iter()
                    .map(|s| {
                        let ins: Vec<u32> = s.iter().map(|&i| seed[i]).collect();
                        b.embed(&f, &ins)
                    })
                    .collect()
            }
        })
    }

    /// The circuit `z ↦ c(G(z))` over the seed.
    pub fn compose(&self, c: &Circuit) -> Result<Circuit> {
        let mut b = CircuitBuilder::new(self.seed_len());
        let seed: Vec<u32> = (0..self.seed_len()).map(|i| b.input(i)).collect();
        let outs = self.output_gates(&mut b, &seed, c.input_arity())?;
        let o = b.embed(c, &outs);
        Ok(b.finish(o))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdvantageMode {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistinguisherReport {
    pub advantage: Dyadic,
    pub pr_uniform: Dyadic,
    pub pr_generator: Dyadic,
    pub mode: AdvantageMode,
    /// Threshold the report is judged against.
    pub threshold: f64,
}

fn abs_diff(a: Dyadic, b: Dyadic) -> Dyadic {
    let l = a.logden.max(b.logden);
    Dyadic::new(a.scaled_num(l).abs_diff(b.scaled_num(l)), l)
}

/// Distinguishers read the first `D.input_arity()` output bits.
fn check_reader(d: &Circuit, g: &Prg) -> Result<()> {
    if d.input_arity() > g.output_len() {
        return Err(LabError::InputShape(format!(
            "distinguisher reads {} bits, generator outputs {}",
            d.input_arity(),
            g.output_len()
        )));
    }
    Ok(())
}

/// |Pr_U[D = 1] − Pr_z[D(G(z)) = 1]| by full enumeration.
pub fn advantage_exact(d: &Circuit, g: &Prg) -> Result<DistinguisherReport> {
    check_reader(d, g)?;
    if g.seed_len() > EXACT_ADVANTAGE_CAP || g.output_len() > EXACT_ADVANTAGE_CAP {
        return Err(LabError::Budget(format!(
            "exact advantage needs seed and output <= {EXACT_ADVANTAGE_CAP}"
        )));
    }
    let pu = exact_acceptance(d)?;
    let pg = exact_acceptance(&g.compose(d)?)?;
    Ok(DistinguisherReport {
        advantage: abs_diff(pu, pg),
        pr_uniform: pu,
        pr_generator: pg,
        mode: AdvantageMode::Exact,
        threshold: 0.1,
    })
}

/// Sampling analogue; error beyond ε has probability ≤ 4·exp(−2sε²).
pub fn advantage_sample(
    d: &Circuit,
    g: &Prg,
    s: u64,
    sampler: &SeededSampler,
) -> Result<DistinguisherReport> {
    check_reader(d, g)?;
    let pu = crate::capp::sample_acceptance(d, s, &sampler.fork("uniform", 0))?;
    let pg = crate::capp::sample_acceptance(&g.compose(d)?, s, &sampler.fork("generator", 0))?;
    Ok(DistinguisherReport {
        advantage: abs_diff(pu, pg),
        pr_uniform: pu,
        pr_generator: pg,
        mode: AdvantageMode::Sampled,
        threshold: 0.1,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorReport {
    /// 0-based index of the predicted output bit.
    pub position: usize,
    /// Inputs: the `position` preceding output bits, then `m − position` fresh bits.
    pub predictor: Circuit,
    /// Pr[predictor = G_i] − 1/2, signed, exact.
    pub advantage: f64,
    pub advantage_exact: (i128, u32),
    pub total_advantage: Dyadic,
    /// Pr[D(H_i) = 1] for i = 0..=m.
    pub hybrids: Vec<Dyadic>,
}

/// Pr[D(H_i) = 1] where H_i takes i generator bits and m − i uniform bits.
pub fn hybrid_probabilities(d: &Circuit, g: &Prg) -> Result<Vec<Dyadic>> {
    check_reader(d, g)?;
    let m = d.input_arity();
    let ell = g.seed_len();
    (0..=m)
        .map(|i| {
            let mut b = CircuitBuilder::new(ell + m - i);
            let seed: Vec<u32> = (0..ell).map(|j| b.input(j)).collect();
            let mut ins = g.output_gates(&mut b, &seed, i)?;
            ins.extend((0..m - i).map(|j| b.input(ell + j)));
            let o = b.embed(d, &ins);
            exact_acceptance(&b.finish(o))
        })
        .collect()
}

/// Signed p_i − p_{i−1} as an integer over 2^l.
fn signed_gap(hi: Dyadic, lo: Dyadic) -> (i128, u32) {
    let l = hi.logden.max(lo.logden);
    (hi.scaled_num(l) as i128 - lo.scaled_num(l) as i128, l)
}

/// Distinguisher → next-bit predictor via the hybrid argument.
pub fn hybrid_predictor(d: &Circuit, g: &Prg) -> Result<Option<PredictorReport>> {
    let probs = hybrid_probabilities(d, g)?;
    let m = d.input_arity();
    let total = signed_gap(probs[m], probs[0]);
    if total.0 == 0 {
        return Ok(None);
    }
    let sign: i128 = if total.0 > 0 { 1 } else { -1 };
    // position with the largest gap in the direction of the total
    let mut best = 0usize;
    let mut best_gap = (i128::MIN, 0u32);
    for i in 1..=m {
        let (num, l) = signed_gap(probs[i], probs[i - 1]);
        let v = (sign * num, l);
        let better = {
            let ll = v.1.max(best_gap.1);
            best_gap.0 == i128::MIN || (v.0 << (ll - v.1)) > (best_gap.0 << (ll - best_gap.1))
        };
        if better {
            best = i;
            best_gap = v;
        }
    }
    let pos = best - 1;
    // P(x_<i, r_i..r_m) = r_i if D(x_<i, r) agrees with the sign, else ¬r_i
    let mut b = CircuitBuilder::new(m);
    let ins: Vec<u32> = (0..m).map(|j| b.input(j)).collect();
    let dv = b.embed(d, &ins);
    let x = b.xor(dv, ins[pos]);
    let out = if sign > 0 { b.not(x) } else { x };
    let predictor = b.finish(out);
    let measured = predictor_advantage(&predictor, g, pos)?;
    Ok(Some(PredictorReport {
        position: pos,
        predictor,
        advantage: measured.0 as f64 / 2f64.powi(measured.1 as i32),
        advantage_exact: measured,
        total_advantage: abs_diff(probs[m], probs[0]),
        hybrids: probs,
    }))
}

/// Exact Pr_{z,r}[P(G(z)_<i, r) = G(z)_i] − 1/2 as a signed integer over 2^l.
pub fn predictor_advantage(p: &Circuit, g: &Prg, pos: usize) -> Result<(i128, u32)> {
    let m = p.input_arity();
    let ell = g.seed_len();
    let mut b = CircuitBuilder::new(ell + m - pos);
    let seed: Vec<u32> = (0..ell).map(|j| b.input(j)).collect();
    let outs = g.output_gates(&mut b, &seed, pos + 1)?;
    let mut ins = outs[..pos].to_vec();
    ins.extend((0..m - pos).map(|j| b.input(ell + j)));
    let pv = b.embed(p, &ins);
    let x = b.xor(pv, outs[pos]);
    let correct = b.not(x);
    let pr = exact_acceptance(&b.finish(correct))?;
    let l = pr.logden.max(1);
    Ok((pr.scaled_num(l) as i128 - (1i128 << (l - 1)), l))
}

/// Uniform random seed of the generator's length.
pub fn random_seed(g: &Prg, sampler: &SeededSampler) -> Bits {
    let mut r = sampler.rng();
    (0..g.seed_len()).map(|_| r.next_u32() & 1 == 1).collect()
}

/// Parameters of the seed-length-⌈n^ε⌉ generator with a one-bit advice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudodetPrgConfig {
    pub eps: f64,
    /// Arity of the hard function (the prefix length of the padded language).
    pub k: usize,
    pub alpha: usize,
    /// Adversary time and error exponents; recorded, not used by the construction.
    pub c: u32,
    pub d: u32,
    pub time_bounds: TimeBoundTable,
    pub hierarchy: HierarchyParams,
}

impl Default for PseudodetPrgConfig {
    fn default() -> Self {
        PseudodetPrgConfig {
            eps: 0.9,
            k: 5,
            alpha: 3,
            c: 1,
            d: 1,
            time_bounds: TimeBoundTable::constant(1, 1),
            hierarchy: HierarchyParams::default(),
        }
    }
}

impl PseudodetPrgConfig {
    /// The advice bit: whether n is a good length. Never looks at the seed.
    pub fn advice(&self, n: u64) -> bool {
        good_length(n, &self.time_bounds, &self.hierarchy).good
    }

    pub fn seed_len(&self, n: u64) -> usize {
        seed_length(n, self.eps)
    }

    pub fn generator(&self, n: u64) -> Result<NWGenerator> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(LabError::Parameter(format!(
                "eps must lie in (0,1), got {}",
                self.eps
            )));
        }
        let design = build_design(self.seed_len(n), self.k, n as usize, self.alpha)?;
        NWGenerator::new(design, lk_hard_table(self.k)?)
    }
}

/// G_n(x) with advice: the NW output over the padded-language truth table when
/// n is good, all zeros otherwise. Oracle answers are exact here, so every run
/// returns the same string.
pub fn pseudodet_prg(
    cfg: &PseudodetPrgConfig,
    n: u64,
    x: &[bool],
    _sampler: &SeededSampler,
) -> Result<Bits> {
    if x.len() != cfg.seed_len(n) {
        return Err(LabError::InputShape(format!(
            "seed has {} bits, need {}",
            x.len(),
            cfg.seed_len(n)
        )));
    }
    if !cfg.advice(n) {
        return Ok(vec![false; n as usize]);
    }
    cfg.generator(n)?.generate(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::to_bits;

    fn first_bit(m: usize) -> Circuit {
        let b = CircuitBuilder::new(m);
        let z = b.input(0);
        b.finish(z)
    }

    #[test]
    fn trivial_designs() {
        let d = build_design(5, 5, 1, 0).unwrap();
        assert_eq!(d.sets, vec![vec![0, 1, 2, 3, 4]]);
        let d = build_design(6, 3, 20, 3).unwrap();
        assert_eq!(d.m(), 20);
        let d = build_design(16, 4, 8, 2).unwrap();
        d.verify().unwrap();
    }

    #[test]
    fn stuck_design_names_the_set() {
        match build_design(4, 3, 10, 1) {
            Err(LabError::DesignStuck { index, .. }) => assert!(index < 10),
            other => panic!("expected stuck design, got {other:?}"),
        }
    }

    #[test]
    fn constant_and_projection() {
        let d = build_design(16, 4, 8, 2).unwrap();
        let g = NWGenerator::new(d, vec![true; 16]).unwrap();
        assert_eq!(g.generate(&[false; 16]).unwrap(), vec![true; 8]);
        assert!(g.generate(&[false; 3]).is_err());
        // disjoint sets with the first-coordinate projection select seed bits
        let sets = vec![vec![0, 1], vec![2, 3], vec![4, 5]];
        let d = Design {
            ell: 6,
            k: 2,
            alpha: 0,
            sets,
        };
        d.verify().unwrap();
        let proj = vec![false, false, true, true];
        let g = NWGenerator::new(d, proj).unwrap();
        let seed = vec![true, false, false, true, true, true];
        assert_eq!(g.generate(&seed).unwrap(), vec![true, false, true]);
    }

    #[test]
    fn first_bit_against_constant_one() {
        let d = build_design(16, 4, 8, 2).unwrap();
        let g = Prg::Nw(NWGenerator::new(d, vec![true; 16]).unwrap());
        let r = advantage_exact(&first_bit(8), &g).unwrap();
        assert_eq!(r.advantage, Dyadic::new(1, 1));
        let c = Circuit::constant(8, true);
        assert_eq!(advantage_exact(&c, &g).unwrap().advantage, Dyadic::ZERO);
        let p = hybrid_predictor(&first_bit(8), &g).unwrap().unwrap();
        assert!(p.advantage >= 0.5 / 8.0);
        assert!(hybrid_predictor(&c, &g).unwrap().is_none());
    }

    #[test]
    fn generator_circuits_match_direct_evaluation() {
        let d = build_design(8, 3, 6, 1).unwrap();
        let table: Bits = (0..8).map(|v| (v * 5 + 3) % 7 < 3).collect();
        let g = Prg::Nw(NWGenerator::new(d, table).unwrap());
        let mut b = CircuitBuilder::new(8);
        let seed: Vec<u32> = (0..8).map(|i| b.input(i)).collect();
        let outs = g.output_gates(&mut b, &seed, 6).unwrap();
        let circuits: Vec<Circuit> = outs.iter().map(|&o| b.clone().finish(o)).collect();
        for v in 0..256u64 {
            let z = to_bits(v, 8);
            let want = g.generate(&z).unwrap();
            for (j, c) in circuits.iter().enumerate() {
                assert_eq!(c.eval(&z).unwrap(), want[j]);
            }
        }
    }

    #[test]
    fn pseudodet_prg_fallback_and_determinism() {
        let cfg = PseudodetPrgConfig::default();
        let s = SeededSampler::new("prg", 16, 0, 0);
        let x = vec![true; cfg.seed_len(16)];
        let a = pseudodet_prg(&cfg, 16, &x, &s).unwrap();
        assert_eq!(a.len(), 16);
        assert_eq!(
            a,
            pseudodet_prg(&cfg, 16, &x, &SeededSampler::new("prg", 16, 0, 9)).unwrap()
        );
        let strict = PseudodetPrgConfig {
            time_bounds: TimeBoundTable::constant(u64::MAX, 1),
            ..cfg.clone()
        };
        assert!(!strict.advice(3));
        let short = vec![true; strict.seed_len(3)];
        assert_eq!(
            pseudodet_prg(&strict, 3, &short, &s).unwrap(),
            vec![false; 3]
        );
        assert!(pseudodet_prg(&cfg, 16, &x[1..], &s).is_err());
    }
}
