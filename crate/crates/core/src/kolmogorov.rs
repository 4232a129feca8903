//! Brute-force Kt, rKt and rK^t over the toy machine.
//!
//! A [`WitnessTable`] enumerates every (program, a, t) triple allowed by a
//! budget once, runs each with all random branches, and keeps for every output
//! string the cheapest witness. All queries are lookups into that table.

use crate::bits::{ceil_log2, fmt_bits, parse_bits, Bits};
use crate::circuit::{Circuit, CircuitBuilder};
use crate::compile::compile_output_equals;
use crate::dyadic::Dyadic;
use crate::error::{LabError, Result};
use crate::machine::{
    exec_program, feed_random, output_distribution, step, Instr, MachineState, StepEvent,
    ToyProgram,
};
use crate::manifest::LITERAL_OVERHEAD_BITS;
use crate::sampler::SeededSampler;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

/// Longest string the census accepts.
pub const CENSUS_MAX_LEN: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ComplexityBudget {
    pub max_program_bits: u32,
    pub max_aux_bits: u32,
    pub max_log_t: u32,
    /// Success threshold δ as a fraction.
    pub delta_num: u64,
    pub delta_den: u64,
}

impl Default for ComplexityBudget {
    fn default() -> Self {
        ComplexityBudget {
            max_program_bits: 24,
            max_aux_bits: 8,
            max_log_t: 4,
            delta_num: 2,
            delta_den: 3,
        }
    }
}

impl ComplexityBudget {
    pub fn with_delta(mut self, num: u64, den: u64) -> Self {
        self.delta_num = num;
        self.delta_den = den;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_program_bits < 8 || self.max_aux_bits < 1 || self.max_log_t < 1 {
            return Err(LabError::Parameter(
                "every budget cap must be at least 1 (programs at least 8 bits)".into(),
            ));
        }
        if self.max_program_bits > 32 || self.max_aux_bits > 12 || self.max_log_t > 6 {
            return Err(LabError::Budget(
                "budget beyond the brute-force caps (32, 12, 6)".into(),
            ));
        }
        if self.delta_den == 0
            || 2 * self.delta_num <= self.delta_den
            || self.delta_num > self.delta_den
        {
            return Err(LabError::Parameter("delta must lie in (1/2, 1]".into()));
        }
        Ok(())
    }

    pub fn max_t(&self) -> u64 {
        1 << self.max_log_t
    }

    fn max_instrs(&self) -> usize {
        (self.max_program_bits / 8) as usize
    }

    /// Whether `mass / 2^logden` reaches δ.
    fn meets_delta(&self, mass: u128, logden: u32) -> bool {
        mass * self.delta_den as u128 >= (self.delta_num as u128) << logden
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Measure {
    Kt,
    RKt,
    RKPoly,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub program_hex: String,
    pub aux: String,
    pub t: u64,
}

impl Witness {
    pub fn program(&self) -> ToyProgram {
        ToyProgram::from_hex(&self.program_hex).expect("witness programs are valid hex")
    }

    pub fn aux_bits(&self) -> Bits {
        parse_bits(&self.aux).expect("witness aux is a bit string")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub measure: Measure,
    pub x: String,
    /// `None` when no witness exists inside the budget.
    pub value: Option<u64>,
    /// Cheapest cost any triple outside the budget could have.
    pub lower_bound: u64,
    pub witness: Option<Witness>,
    pub exhausted: bool,
}

impl ComplexityReport {
    /// The value, or one less than the certified lower bound when there is no witness
    /// (so `value_or_floor() < s` is exact for thresholds below the bound).
    pub fn value_or_floor(&self) -> u64 {
        self.value.unwrap_or(self.lower_bound)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Entry {
    cost: u32,
    prog: u32,
    aux: u64,
    t: u16,
}

impl Entry {
    fn rank(&self) -> (u32, u32, u64, u16) {
        (self.cost, self.prog, aux_rank(self.aux), self.t)
    }
}

/// Packed bit string: a leading sentinel 1 followed by the bits.
fn pack(x: &[bool]) -> u64 {
    x.iter().fold(1u64, |k, &b| (k << 1) | b as u64)
}

fn unpack(k: u64) -> Bits {
    let len = 63 - k.leading_zeros() as usize;
    (0..len).rev().map(|i| (k >> i) & 1 == 1).collect()
}

fn packed_len(k: u64) -> u32 {
    63 - k.leading_zeros()
}

/// Shortlex rank of a packed string.
fn aux_rank(k: u64) -> u64 {
    k
}

/// Canonical representatives of every behaviour class of one instruction at
/// position `p` of a program of length `len`, in ascending byte order.
fn instr_reps(p: usize, len: usize) -> Vec<u8> {
    let mut v = vec![
        Instr::Halt.encode(),
        Instr::Out(false).encode(),
        Instr::Out(true).encode(),
        Instr::Rnd.encode(),
        Instr::Rdi.encode(),
    ];
    for k in 0..len - p {
        v.push(Instr::Brf(k as u8).encode());
    }
    for k in 0..=len {
        v.push(Instr::Jmp(k as u8).encode());
    }
    v.sort_unstable();
    v
}

/// Every program up to `max_len` instructions with one representative per
/// syntactic behaviour class, in shortlex order of bytes.
fn canonical_programs(max_len: usize) -> Vec<ToyProgram> {
    let mut out = Vec::new();
    for len in 1..=max_len {
        let reps: Vec<Vec<u8>> = (0..len).map(|p| instr_reps(p, len)).collect();
        let mut idx = vec![0usize; len];
        loop {
            out.push(ToyProgram::from_bytes(
                idx.iter().enumerate().map(|(p, &i)| reps[p][i]).collect(),
            ));
            let mut p = len;
            loop {
                if p == 0 {
                    break;
                }
                p -= 1;
                idx[p] += 1;
                if idx[p] < reps[p].len() {
                    break;
                }
                idx[p] = 0;
                if p == 0 {
                    p = usize::MAX;
                    break;
                }
            }
            if p == usize::MAX {
                break;
            }
        }
    }
    out
}

/// For each `t` in `1..=max_t`, the mass of every output after at most `t`
/// steps, as numerators over `2^max_t`.
fn outputs_by_time(
    prog: &ToyProgram,
    a: &[bool],
    max_t: u64,
    zero_tape: bool,
) -> Vec<HashMap<u64, u128>> {
    let mut acc: Vec<HashMap<u64, u128>> = vec![HashMap::new(); max_t as usize];
    let mut out_at: Vec<u64> = Vec::with_capacity(max_t as usize);
    let root = MachineState {
        pc: 0,
        flag: false,
        ipos: 0,
        rpos: 0,
        steps: 0,
    };
    dfs(prog, a, max_t, zero_tape, root, 1, &mut out_at, &mut acc);
    acc
}

#[allow(clippy::too_many_arguments)]
fn dfs(
    prog: &ToyProgram,
    a: &[bool],
    max_t: u64,
    zero_tape: bool,
    mut s: MachineState,
    mut out: u64,
    out_at: &mut Vec<u64>,
    acc: &mut [HashMap<u64, u128>],
) {
    let mark = out_at.len();
    loop {
        if s.steps >= max_t {
            break;
        }
        match step(prog, a, &mut s) {
            StepEvent::Continue => out_at.push(out),
            StepEvent::Output(b) => {
                out = (out << 1) | b as u64;
                out_at.push(out);
            }
            StepEvent::Halted => {
                if out_at.len() < s.steps as usize {
                    out_at.push(out);
                }
                break;
            }
            StepEvent::NeedRandom => {
                if zero_tape {
                    feed_random(&mut s, false);
                    out_at.push(out);
                    continue;
                }
                let mut hi = s;
                feed_random(&mut hi, true);
                feed_random(&mut s, false);
                out_at.push(out);
                let inner = out_at.len();
                dfs(prog, a, max_t, zero_tape, hi, out, out_at, acc);
                out_at.truncate(inner);
            }
        }
    }
    let weight = 1u128 << (max_t as u32 - s.rpos as u32);
    for t in 0..max_t as usize {
        let k = if t < out_at.len() { out_at[t] } else { out };
        *acc[t].entry(k).or_insert(0) += weight;
    }
    out_at.truncate(mark);
}

/// Cheapest witnesses for every string reachable inside a budget.
pub struct WitnessTable {
    budget: ComplexityBudget,
    programs: Vec<ToyProgram>,
    kt: HashMap<u64, Entry>,
    rkt: HashMap<u64, Entry>,
    /// Cheapest |M| + |a| per (string, exact stopping time).
    rk_exact: HashMap<(u64, u16), Entry>,
}

fn better(slot: &mut Option<Entry>, e: Entry) {
    if slot.is_none_or(|old| e.rank() < old.rank()) {
        *slot = Some(e);
    }
}

impl WitnessTable {
    pub fn build(budget: ComplexityBudget) -> Result<WitnessTable> {
        budget.validate()?;
        let programs = canonical_programs(budget.max_instrs());
        let max_t = budget.max_t();
        let mut auxes: Vec<u64> = vec![1];
        for len in 1..=budget.max_aux_bits {
            // strings of this length ending in 1, ascending
            for v in 0..1u64 << (len - 1) {
                auxes.push((1u64 << len) | (v << 1) | 1);
            }
        }
        type Found = (
            Vec<(u64, Entry)>,
            Vec<(u64, Entry)>,
            Vec<((u64, u16), Entry)>,
        );
        let per_program: Vec<Found> = programs
            .par_iter()
            .enumerate()
            .map(|(pi, prog)| {
                let mut kt = Vec::new();
                let mut rkt = Vec::new();
                let mut rk = Vec::new();
                let plen = prog.description_length() as u32;
                let aux_list: &[u64] = if prog.reads_input() {
                    &auxes
                } else {
                    &auxes[..1]
                };
                for &ak in aux_list {
                    let a = unpack(ak);
                    let alen = a.len() as u32;
                    let det = outputs_by_time(prog, &a, max_t, true);
                    let rnd = if prog.uses_randomness() {
                        outputs_by_time(prog, &a, max_t, false)
                    } else {
                        det.clone()
                    };
                    for t in 1..=max_t {
                        let lt = ceil_log2(t);
                        for &k in det[t as usize - 1].keys() {
                            let e = Entry {
                                cost: plen + alen + lt,
                                prog: pi as u32,
                                aux: ak,
                                t: t as u16,
                            };
                            kt.push((k, e));
                        }
                        for (&k, &m) in rnd[t as usize - 1].iter() {
                            if budget.meets_delta(m, max_t as u32) {
                                rkt.push((
                                    k,
                                    Entry {
                                        cost: plen + alen + lt,
                                        prog: pi as u32,
                                        aux: ak,
                                        t: t as u16,
                                    },
                                ));
                                rk.push((
                                    (k, t as u16),
                                    Entry {
                                        cost: plen + alen,
                                        prog: pi as u32,
                                        aux: ak,
                                        t: t as u16,
                                    },
                                ));
                            }
                        }
                    }
                }
                (kt, rkt, rk)
            })
            .collect();
        let mut kt: HashMap<u64, Option<Entry>> = HashMap::new();
        let mut rkt: HashMap<u64, Option<Entry>> = HashMap::new();
        let mut rk_exact: HashMap<(u64, u16), Option<Entry>> = HashMap::new();
        for (a, b, c) in per_program {
            for (k, e) in a {
                better(kt.entry(k).or_default(), e);
            }
            for (k, e) in b {
                better(rkt.entry(k).or_default(), e);
            }
            for (k, e) in c {
                better(rk_exact.entry(k).or_default(), e);
            }
        }
        let flat = |m: HashMap<u64, Option<Entry>>| {
            m.into_iter()
                .filter_map(|(k, v)| v.map(|e| (k, e)))
                .collect()
        };
        Ok(WitnessTable {
            budget,
            programs,
            kt: flat(kt),
            rkt: flat(rkt),
            rk_exact: rk_exact
                .into_iter()
                .filter_map(|(k, v)| v.map(|e| (k, e)))
                .collect(),
        })
    }

    pub fn budget(&self) -> &ComplexityBudget {
        &self.budget
    }

    /// Number of canonical programs searched.
    pub fn program_count(&self) -> usize {
        self.programs.len()
    }

    fn witness(&self, e: &Entry) -> Witness {
        Witness {
            program_hex: self.programs[e.prog as usize].to_hex(),
            aux: fmt_bits(&unpack(e.aux)),
            t: e.t as u64,
        }
    }

    fn lower_bound(&self, x_len: usize, with_time: bool) -> u64 {
        let b = &self.budget;
        let lt = if with_time {
            ceil_log2(x_len.max(1) as u64) as u64
        } else {
            0
        };
        let bigger_program = 8 * (b.max_instrs() as u64 + 1) + lt;
        let longer_aux = 8 + b.max_aux_bits as u64 + 1 + lt;
        let mut lb = bigger_program.min(longer_aux);
        if with_time {
            lb = lb.min(8 + b.max_log_t as u64 + 1);
        }
        lb
    }

    fn report(&self, measure: Measure, x: &[bool], e: Option<&Entry>) -> ComplexityReport {
        ComplexityReport {
            measure,
            x: fmt_bits(x),
            value: e.map(|e| e.cost as u64),
            lower_bound: self.lower_bound(x.len(), measure != Measure::RKPoly),
            witness: e.map(|e| self.witness(e)),
            exhausted: true,
        }
    }

    pub fn kt(&self, x: &[bool]) -> ComplexityReport {
        self.report(Measure::Kt, x, self.kt.get(&pack(x)))
    }

    pub fn rkt(&self, x: &[bool]) -> ComplexityReport {
        self.report(Measure::RKt, x, self.rkt.get(&pack(x)))
    }

    pub fn rk_t(&self, x: &[bool], t: u64) -> Result<ComplexityReport> {
        if t == 0 || t > self.budget.max_t() {
            return Err(LabError::Budget(format!(
                "t = {t} outside 1..={}",
                self.budget.max_t()
            )));
        }
        let k = pack(x);
        let best = (1..=t as u16)
            .filter_map(|tt| self.rk_exact.get(&(k, tt)))
            .min_by_key(|e| e.rank());
        Ok(self.report(Measure::RKPoly, x, best))
    }

    /// Every string with an rKt witness, with its value.
    pub fn rkt_values(&self) -> impl Iterator<Item = (Bits, u64)> + '_ {
        self.rkt.iter().map(|(&k, e)| (unpack(k), e.cost as u64))
    }

    pub fn census(&self, m: usize) -> Result<Census> {
        if m == 0 || m > CENSUS_MAX_LEN {
            return Err(LabError::Budget(format!(
                "census length {m} outside 1..={CENSUS_MAX_LEN}"
            )));
        }
        let mut hist: BTreeMap<u64, u64> = BTreeMap::new();
        let mut witnessed = 0u64;
        for (&k, e) in &self.rkt {
            if packed_len(k) as usize == m {
                *hist.entry(e.cost as u64).or_insert(0) += 1;
                witnessed += 1;
            }
        }
        Ok(Census {
            m,
            histogram: hist,
            unwitnessed: (1u64 << m) - witnessed,
            unwitnessed_lower_bound: self.lower_bound(m, true),
            max_log_t: self.budget.max_log_t,
        })
    }
}

/// Histogram of rKt over all strings of one length.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Census {
    pub m: usize,
    pub histogram: BTreeMap<u64, u64>,
    /// Strings with no witness inside the budget.
    pub unwitnessed: u64,
    pub unwitnessed_lower_bound: u64,
    pub max_log_t: u32,
}

impl Census {
    pub fn total(&self) -> u64 {
        self.histogram.values().sum::<u64>() + self.unwitnessed
    }

    /// |{x : rkt(x) ≤ s}|.
    pub fn at_most(&self, s: u64) -> u64 {
        self.histogram.range(..=s).map(|(_, c)| c).sum()
    }

    /// Number of strings whose rkt is certainly at least `s`.
    pub fn at_least(&self, s: u64) -> u64 {
        let unw = if self.unwitnessed_lower_bound >= s {
            self.unwitnessed
        } else {
            0
        };
        self.histogram.range(s..).map(|(_, c)| c).sum::<u64>() + unw
    }

    /// CSV `value,count`; strings without a witness are listed as `none`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("value,count\n");
        for (v, c) in &self.histogram {
            s += &format!("{v},{c}\n");
        }
        if self.unwitnessed > 0 {
            s += &format!("none,{}\n", self.unwitnessed);
        }
        s
    }
}

static TABLES: OnceLock<Mutex<HashMap<ComplexityBudget, Arc<WitnessTable>>>> = OnceLock::new();

/// Shared, lazily built table for a budget.
pub fn witness_table(budget: &ComplexityBudget) -> Result<Arc<WitnessTable>> {
    budget.validate()?;
    let cache = TABLES.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = cache.lock().unwrap().get(budget) {
        return Ok(t.clone());
    }
    let built = Arc::new(WitnessTable::build(*budget)?);
    Ok(cache
        .lock()
        .unwrap()
        .entry(*budget)
        .or_insert(built)
        .clone())
}

fn check_x(x: &[bool]) -> Result<()> {
    if x.is_empty() {
        return Err(LabError::Parameter("x must be non-empty".into()));
    }
    Ok(())
}

pub fn kt(x: &[bool], b: &ComplexityBudget) -> Result<ComplexityReport> {
    check_x(x)?;
    Ok(witness_table(b)?.kt(x))
}

pub fn rkt(x: &[bool], b: &ComplexityBudget) -> Result<ComplexityReport> {
    check_x(x)?;
    Ok(witness_table(b)?.rkt(x))
}

pub fn rk_t(x: &[bool], t: u64, b: &ComplexityBudget) -> Result<ComplexityReport> {
    check_x(x)?;
    witness_table(b)?.rk_t(x, t)
}

pub fn rkt_census(m: usize, b: &ComplexityBudget) -> Result<Census> {
    witness_table(b)?.census(m)
}

/// Re-run a witness and return the probability it prints `x`.
pub fn replay(w: &Witness, x: &[bool], measure: Measure) -> Result<Dyadic> {
    let prog = w.program();
    let a = w.aux_bits();
    if measure == Measure::Kt {
        let r = exec_program(&prog, &a, w.t, &vec![false; w.t as usize]);
        return Ok(if r.output == x {
            Dyadic::ONE
        } else {
            Dyadic::ZERO
        });
    }
    Ok(output_distribution(&prog, &a, w.t)?.prob(x))
}

/// Literal-print upper bound `8·(|x|+1) + ⌈log(|x|+1)⌉` for Kt.
pub fn literal_print_bound(len: usize) -> u64 {
    8 * (len as u64 + 1) + ceil_log2(len as u64 + 1) as u64
}

/// The unrolled literal printer `[OUT x_1, …, OUT x_n, HALT]`.
pub fn literal_printer(x: &[bool]) -> ToyProgram {
    let mut ins: Vec<Instr> = x.iter().map(|&b| Instr::Out(b)).collect();
    ins.push(Instr::Halt);
    ToyProgram::from_instrs(&ins)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GapAnswer {
    Accept,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GapMode {
    Exact,
    /// Re-run the best witness `reps` times (odd) and reject on a majority reproduction.
    MonteCarlo {
        reps: u32,
    },
}

/// rkt minus the universal-machine overhead, `None` when there is no witness.
pub fn normalized(value: Option<u64>) -> Option<i64> {
    value.map(|v| v as i64 - LITERAL_OVERHEAD_BITS as i64)
}

/// The witness that would make B reject `y`, if any: normalized rkt below 3m/4.
fn rejecting_witness(y: &[bool], b: &ComplexityBudget) -> Result<Option<Witness>> {
    if y.is_empty() || y.len() > CENSUS_MAX_LEN {
        return Err(LabError::Budget(format!(
            "gap length {} outside 1..={CENSUS_MAX_LEN}",
            y.len()
        )));
    }
    let r = rkt(y, b)?;
    let m = y.len() as i64;
    Ok(match normalized(r.value) {
        Some(v) if 4 * v < 3 * m => r.witness,
        _ => None,
    })
}

/// B's decision as a circuit over its randomness: output 1 means ACCEPT.
pub fn gap_mrkt_circuit(y: &[bool], b: &ComplexityBudget, mode: GapMode) -> Result<Circuit> {
    let w = rejecting_witness(y, b)?;
    match (mode, w) {
        (_, None) => Ok(Circuit::constant(0, true)),
        (GapMode::Exact, Some(_)) => Ok(Circuit::constant(0, false)),
        (GapMode::MonteCarlo { reps }, Some(w)) => {
            if reps % 2 == 0 {
                return Err(LabError::Parameter(
                    "Monte Carlo repetitions must be odd".into(),
                ));
            }
            let eq = compile_output_equals(&w.program(), &w.aux_bits(), w.t, y)?;
            let t = w.t as usize;
            let mut cb = CircuitBuilder::new(reps as usize * t);
            let hits: Vec<u32> = (0..reps as usize)
                .map(|j| {
                    let inputs: Vec<u32> = (0..t).map(|i| cb.input(j * t + i)).collect();
                    cb.embed(&eq, &inputs)
                })
                .collect();
            let reproduced = cb.threshold(&hits, reps as usize / 2 + 1);
            let out = cb.not(reproduced);
            Ok(cb.finish(out))
        }
    }
}

/// Gap-MrKtP: REJECT when normalized rkt < m/2, ACCEPT when ≥ 3m/4.
pub fn gap_mrkt(
    y: &[bool],
    b: &ComplexityBudget,
    mode: GapMode,
    sampler: &SeededSampler,
) -> Result<GapAnswer> {
    let c = gap_mrkt_circuit(y, b, mode)?;
    let r = sampler.bits(c.input_arity());
    Ok(if c.eval(&r)? {
        GapAnswer::Accept
    } else {
        GapAnswer::Reject
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromiseInstances {
    pub n: usize,
    pub yes: Vec<String>,
    pub no: Vec<String>,
}

/// YES: normalized rK^t ≤ n^ε; NO: normalized rK^t ≥ n − 1 (no witness counts as NO).
pub fn promise_instances(n: usize, eps: f64, b: &ComplexityBudget) -> Result<PromiseInstances> {
    if n == 0 || n > CENSUS_MAX_LEN {
        return Err(LabError::Budget(format!(
            "n = {n} outside 1..={CENSUS_MAX_LEN}"
        )));
    }
    let table = witness_table(b)?;
    let yes_bound = (n as f64).powf(eps);
    let mut yes = Vec::new();
    let mut no = Vec::new();
    for x in crate::bits::all_strings(n) {
        let r = table.rk_t(&x, b.max_t())?;
        match normalized(r.value) {
            Some(v) if (v as f64) <= yes_bound => yes.push(fmt_bits(&x)),
            Some(v) if v >= n as i64 - 1 => no.push(fmt_bits(&x)),
            None => no.push(fmt_bits(&x)),
            Some(_) => {}
        }
    }
    Ok(PromiseInstances { n, yes, no })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::all_strings;
    use Instr::*;

    fn table() -> Arc<WitnessTable> {
        witness_table(&ComplexityBudget::default()).unwrap()
    }

    #[test]
    fn representatives_cover_every_byte() {
        // every byte at every position behaves like some representative
        for len in 1..=3usize {
            for p in 0..len {
                let reps = instr_reps(p, len);
                for byte in 0..=255u8 {
                    let norm = |i: Instr| match i {
                        Instr::Brf(k) if p + 1 + k as usize >= len => {
                            Instr::Brf((len - 1 - p) as u8)
                        }
                        Instr::Jmp(k) if k as usize >= len => Instr::Jmp(len as u8),
                        other => other,
                    };
                    let want = norm(Instr::decode(byte));
                    let rep = reps
                        .iter()
                        .copied()
                        .find(|&r| norm(Instr::decode(r)) == want)
                        .unwrap();
                    assert!(rep <= byte);
                }
            }
        }
        assert_eq!(canonical_programs(1).len(), instr_reps(0, 1).len());
    }

    #[test]
    fn print_one_bit() {
        let r = table().kt(&[true]);
        assert!(r.value.unwrap() <= 17);
        assert_eq!(r.value, Some(8));
        let w = r.witness.unwrap();
        assert_eq!(replay(&w, &[true], Measure::Kt).unwrap(), Dyadic::ONE);
        assert!(literal_print_bound(1) == 17);
    }

    #[test]
    fn all_zeros_is_cheap() {
        let x = vec![false; 8];
        let r = table().rkt(&x);
        assert_eq!(r.value, Some(20));
        let w = r.witness.unwrap();
        assert_eq!(w.program().instrs(), vec![Out(false), Jmp(0)]);
        let s = SeededSampler::new("gap", 8, 0, 1);
        assert_eq!(
            gap_mrkt(&x, &ComplexityBudget::default(), GapMode::Exact, &s).unwrap(),
            GapAnswer::Reject
        );
    }

    #[test]
    fn three_quarter_witness_is_randomized_only() {
        // Two coins; print 1 unless both are 0 (probability 3/4).
        let p = ToyProgram::from_instrs(&[Rnd, Brf(3), Rnd, Brf(1), Out(false), Out(true)]);
        let d = output_distribution(&p, &[], 8).unwrap();
        assert_eq!(d.prob(&[true]), Dyadic::new(3, 2));
        let b = ComplexityBudget::default();
        assert!(b.meets_delta(3, 2));
        // Under the all-zero tape the same program prints 0, so it is no Kt witness for "1".
        assert_ne!(exec_program(&p, &[], 8, &[false; 8]).output, vec![true]);
    }

    #[test]
    fn order_between_measures() {
        let t = table();
        for len in 1..=8 {
            for x in all_strings(len) {
                let k = t.kt(&x);
                let r = t.rkt(&x);
                let p = t.rk_t(&x, 16).unwrap();
                if let Some(kv) = k.value {
                    assert!(r.value.unwrap() <= kv, "rkt > kt at {}", fmt_bits(&x));
                }
                if let Some(rv) = r.value {
                    assert!(p.value.unwrap() <= rv);
                }
            }
        }
    }

    #[test]
    fn rk_t_is_monotone() {
        let t = table();
        for len in 1..=6 {
            for x in all_strings(len) {
                let mut prev = None::<u64>;
                for tt in 1..=16 {
                    let v = t.rk_t(&x, tt).unwrap().value;
                    if let (Some(p), Some(v)) = (prev, v) {
                        assert!(v <= p);
                    }
                    if prev.is_some() {
                        assert!(v.is_some());
                    }
                    prev = v.or(prev);
                }
            }
        }
    }

    #[test]
    fn witnesses_replay() {
        let t = table();
        for (x, _) in t.rkt_values().collect::<Vec<_>>() {
            if x.is_empty() {
                continue;
            }
            let r = t.rkt(&x);
            let w = r.witness.unwrap();
            let p = replay(&w, &x, Measure::RKt).unwrap();
            assert!(p.cmp_ratio(2, 3) != std::cmp::Ordering::Less);
            let prog = w.program();
            let cost = prog.description_length() + w.aux.len() as u64 + ceil_log2(w.t) as u64;
            assert_eq!(Some(cost), r.value);
        }
    }

    #[test]
    fn census_small() {
        let c = table().census(1).unwrap();
        assert_eq!(c.total(), 2);
        assert_eq!(c.at_most(17), 2);
        assert!(table().census(13).is_err());
    }

    #[test]
    fn counting_bound_for_small_lengths() {
        let b = ComplexityBudget::default();
        for m in 1..=10 {
            let c = table().census(m).unwrap();
            assert_eq!(c.total(), 1 << m);
            for s in 0..=40u64 {
                assert!(
                    c.at_most(s) < (1u64 << (s + 1)) * b.max_log_t as u64,
                    "m={m} s={s} count={}",
                    c.at_most(s)
                );
            }
        }
    }

    #[test]
    fn promise_sets() {
        let b = ComplexityBudget::default();
        let pi = promise_instances(8, 0.5, &b).unwrap();
        assert!(pi.no.len() >= 128);
        for y in &pi.yes {
            assert!(!pi.no.contains(y));
        }
    }

    #[test]
    fn budget_validation() {
        assert!(ComplexityBudget::default()
            .with_delta(1, 2)
            .validate()
            .is_err());
        assert!(ComplexityBudget::default()
            .with_delta(3, 2)
            .validate()
            .is_err());
        assert!(rkt(&[], &ComplexityBudget::default()).is_err());
    }
}
