//! The permanent over a prime field as a downward self-reducible,
//! self-correctable, checkable and paddable language; the padded language
//! built from it; good input lengths; and the universal search that decides it.

use crate::bits::{ceil_log2, floor_log2, from_bits, to_bits, Bits};
use crate::error::{LabError, Result};
use crate::machine::{enumerate_machines, exec_program, ToyProgram};
use crate::primes::{is_prime, next_prime, pow_mod};
use crate::sampler::SeededSampler;
use num_bigint::BigUint;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// Largest dimension the direct evaluator accepts.
pub const MAX_PERM_DIM: usize = 8;

/// Target error exponent for the repeated instance checker.
pub const CHECKER_LOG_ERROR: u32 = 20;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Matrix {
    pub dim: usize,
    pub p: u64,
    /// Row-major, each entry reduced mod p.
    pub entries: Vec<u64>,
}

impl Matrix {
    pub fn new(dim: usize, p: u64, entries: Vec<u64>) -> Result<Matrix> {
        if !is_prime(p) {
            return Err(LabError::Parameter(format!("modulus {p} is not prime")));
        }
        if entries.len() != dim * dim {
            return Err(LabError::InputShape(format!(
                "{} entries for dimension {dim}",
                entries.len()
            )));
        }
        Ok(Matrix {
            dim,
            p,
            entries: entries.into_iter().map(|e| e % p).collect(),
        })
    }

    pub fn identity(dim: usize, p: u64) -> Matrix {
        let entries = (0..dim * dim)
            .map(|k| (k / dim == k % dim) as u64)
            .collect();
        Matrix { dim, p, entries }
    }

    pub fn random<R: Rng>(dim: usize, p: u64, rng: &mut R) -> Matrix {
        Matrix {
            dim,
            p,
            entries: (0..dim * dim).map(|_| rng.gen_range(0..p)).collect(),
        }
    }

    pub fn at(&self, r: usize, c: usize) -> u64 {
        self.entries[r * self.dim + c]
    }

    /// Drop row `r` and column `c`.
    pub fn minor(&self, r: usize, c: usize) -> Matrix {
        let mut entries = Vec::with_capacity((self.dim - 1) * (self.dim - 1));
        for i in (0..self.dim).filter(|&i| i != r) {
            for j in (0..self.dim).filter(|&j| j != c) {
                entries.push(self.at(i, j));
            }
        }
        Matrix {
            dim: self.dim - 1,
            p: self.p,
            entries,
        }
    }

    /// self + t·other.
    pub fn add_scaled(&self, other: &Matrix, t: u64) -> Matrix {
        let p = self.p;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(&a, &b)| (a + t % p * b) % p)
            .collect();
        Matrix {
            dim: self.dim,
            p,
            entries,
        }
    }

    /// Block-diagonal extension with an identity block up to dimension `m`.
    pub fn pad(&self, m: usize) -> Result<Matrix> {
        if m <= self.dim {
            return Err(LabError::Parameter(format!(
                "pad target {m} must exceed dimension {}",
                self.dim
            )));
        }
        let mut out = Matrix::identity(m, self.p);
        for r in 0..self.dim {
            for c in 0..self.dim {
                out.entries[r * m + c] = self.at(r, c);
            }
        }
        Ok(out)
    }

    /// Entry width in bits.
    pub fn entry_bits(&self) -> usize {
        entry_bits(self.p)
    }

    /// Entries MSB-first, row-major.
    pub fn to_bits(&self) -> Bits {
        let w = self.entry_bits();
        self.entries.iter().flat_map(|&e| to_bits(e, w)).collect()
    }

    pub fn parse(text: &str) -> Result<Matrix> {
        let toks: Vec<u64> = text
            .split_whitespace()
            .map(|t| {
                t.parse::<u64>()
                    .map_err(|e| LabError::Parse(format!("matrix token {t:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        if toks.len() < 2 {
            return Err(LabError::Parse(
                "matrix file needs dimension and modulus".into(),
            ));
        }
        let dim = toks[0] as usize;
        if toks.len() != 2 + dim * dim {
            return Err(LabError::Parse(format!(
                "expected {} entries, found {}",
                dim * dim,
                toks.len() - 2
            )));
        }
        Matrix::new(dim, toks[1], toks[2..].to_vec())
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.dim)?;
        writeln!(f, "{}", self.p)?;
        for r in 0..self.dim {
            let row: Vec<String> = (0..self.dim).map(|c| self.at(r, c).to_string()).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

pub fn entry_bits(p: u64) -> usize {
    ceil_log2(p).max(1) as usize
}

/// Smallest prime the language uses at dimension `dim`.
pub fn field_for_dim(dim: usize) -> u64 {
    next_prime(2 * dim as u64 + 2)
}

/// A decision instance: is bit `target_bit` of Perm(A) mod p set?
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PermInstance {
    pub matrix: Matrix,
    pub target_bit: u32,
}

impl PermInstance {
    pub fn new(matrix: Matrix, target_bit: u32) -> Result<PermInstance> {
        if matrix.p <= 2 * matrix.dim as u64 + 2 {
            return Err(LabError::Parameter(format!(
                "modulus {} must exceed 2·{}+2",
                matrix.p, matrix.dim
            )));
        }
        Ok(PermInstance { matrix, target_bit })
    }

    pub fn member(&self) -> Result<bool> {
        Ok(perm_eval(&self.matrix)? >> self.target_bit & 1 == 1)
    }

    pub fn pad(&self, m: usize) -> Result<PermInstance> {
        Ok(PermInstance {
            matrix: self.matrix.pad(m)?,
            target_bit: self.target_bit,
        })
    }
}

/// Perm(A) mod p by Ryser's inclusion–exclusion formula.
pub fn perm_eval(a: &Matrix) -> Result<u64> {
    if !is_prime(a.p) {
        return Err(LabError::Parameter(format!("modulus {} is not prime", a.p)));
    }
    let n = a.dim;
    if n > MAX_PERM_DIM {
        return Err(LabError::Budget(format!(
            "dimension {n} above {MAX_PERM_DIM}"
        )));
    }
    let p = a.p;
    if n == 0 {
        return Ok(1 % p);
    }
    let mut total = 0u64;
    for s in 1u32..1 << n {
        let mut prod = 1u64;
        for r in 0..n {
            let row: u64 = (0..n)
                .filter(|&c| s >> c & 1 == 1)
                .map(|c| a.at(r, c))
                .sum::<u64>()
                % p;
            prod = prod * row % p;
        }
        // sign (−1)^{n − |S|}
        if (n as u32 - s.count_ones()).is_multiple_of(2) {
            total = (total + prod) % p;
        } else {
            total = (total + p - prod) % p;
        }
    }
    Ok(total)
}

/// Query access to a claimed permanent.
pub trait PermOracle {
    fn perm(&mut self, m: &Matrix) -> Result<u64>;
}

impl<F: FnMut(&Matrix) -> Result<u64>> PermOracle for F {
    fn perm(&mut self, m: &Matrix) -> Result<u64> {
        self(m)
    }
}

pub struct HonestOracle;

impl PermOracle for HonestOracle {
    fn perm(&mut self, m: &Matrix) -> Result<u64> {
        perm_eval(m)
    }
}

fn matrix_hash(m: &Matrix, salt: u64) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ salt;
    for &e in m.entries.iter().chain([m.dim as u64, m.p].iter()) {
        for b in e.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100_0000_01b3);
        }
    }
    h ^ h >> 29
}

/// Wrong on a fixed pseudo-random `num/den` fraction of all matrices.
#[derive(Debug, Clone, Copy)]
pub struct NoisyOracle {
    pub num: u64,
    pub den: u64,
    pub salt: u64,
}

impl NoisyOracle {
    pub fn corrupted(&self, m: &Matrix) -> bool {
        matrix_hash(m, self.salt) % self.den < self.num
    }
}

impl PermOracle for NoisyOracle {
    fn perm(&mut self, m: &Matrix) -> Result<u64> {
        let v = perm_eval(m)?;
        if self.corrupted(m) {
            let shift = 1 + matrix_hash(m, !self.salt) % (m.p - 1);
            return Ok((v + shift) % m.p);
        }
        Ok(v)
    }
}

/// Off by one on every query.
pub struct FlippingOracle;

impl PermOracle for FlippingOracle {
    fn perm(&mut self, m: &Matrix) -> Result<u64> {
        Ok((perm_eval(m)? + 1) % m.p)
    }
}

/// First-row expansion with the minors answered by `oracle`.
pub fn perm_dsr(a: &Matrix, oracle: &mut dyn PermOracle) -> Result<u64> {
    if a.dim < 2 {
        return Err(LabError::Parameter(
            "downward reduction needs dimension >= 2".into(),
        ));
    }
    let p = a.p;
    let mut total = 0u64;
    for c in 0..a.dim {
        let v = oracle.perm(&a.minor(0, c))? % p;
        total = (total + a.at(0, c) * v) % p;
    }
    Ok(total)
}

fn inv_mod(a: u64, p: u64) -> u64 {
    pow_mod(a, p - 2, p)
}

/// Value at `x` of the polynomial through `(xs[i], ys[i])`, over GF(p).
pub fn lagrange_eval(xs: &[u64], ys: &[u64], x: u64, p: u64) -> u64 {
    let mut total = 0u64;
    for i in 0..xs.len() {
        let mut num = 1u64;
        let mut den = 1u64;
        for j in 0..xs.len() {
            if i != j {
                num = num * ((x + p - xs[j] % p) % p) % p;
                den = den * ((xs[i] + p - xs[j] % p) % p) % p;
            }
        }
        total = (total + ys[i] % p * num % p * inv_mod(den, p)) % p;
    }
    total
}

/// Random-line self-correction: interpolate Perm(A + tB) at t = 1..=n+1 and
/// read off t = 0; plurality over `trials`.
pub fn perm_selfcorrect(
    a: &Matrix,
    oracle: &mut dyn PermOracle,
    trials: u32,
    sampler: &SeededSampler,
) -> Result<u64> {
    let n = a.dim as u64;
    if a.p <= n + 1 {
        return Err(LabError::Parameter(format!(
            "GF({}) has too few points for degree {n}",
            a.p
        )));
    }
    if trials == 0 {
        return Err(LabError::Parameter("need at least one trial".into()));
    }
    let mut rng = sampler.rng();
    let mut votes: BTreeMap<u64, u32> = BTreeMap::new();
    let xs: Vec<u64> = (1..=n + 1).collect();
    for _ in 0..trials {
        let b = Matrix::random(a.dim, a.p, &mut rng);
        let ys = xs
            .iter()
            .map(|&t| oracle.perm(&a.add_scaled(&b, t)))
            .collect::<Result<Vec<u64>>>()?;
        *votes.entry(lagrange_eval(&xs, &ys, 0, a.p)).or_default() += 1;
    }
    Ok(votes
        .into_iter()
        .max_by_key(|&(v, c)| (c, std::cmp::Reverse(v)))
        .unwrap()
        .0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckOutcome {
    Accept(u64),
    /// The "?" answer.
    Unknown,
}

/// Largest degree met while checking a dimension-`dim` claim.
fn checker_field_ok(dim: usize, p: u64) -> bool {
    (2..=dim).all(|k| (k + (k - 1) * (k - 1) + 2) as u64 <= p)
}

/// Upper bound on one pass's wrong-acceptance probability.
pub fn checker_round_error(dim: usize, p: u64) -> f64 {
    (2..=dim)
        .map(|k| ((k - 1) * (k - 1)) as f64 / p as f64)
        .sum()
}

/// Passes needed to push the error below 2^-CHECKER_LOG_ERROR.
pub fn checker_repetitions(dim: usize, p: u64) -> Result<u32> {
    if !checker_field_ok(dim, p) {
        return Err(LabError::Parameter(format!(
            "GF({p}) too small to check dimension {dim}"
        )));
    }
    let e = checker_round_error(dim, p);
    if e <= 0.0 {
        return Ok(1);
    }
    if e >= 1.0 {
        return Err(LabError::Parameter(format!(
            "per-pass error bound {e:.3} is not below 1"
        )));
    }
    Ok((CHECKER_LOG_ERROR as f64 / -e.log2()).ceil() as u32)
}

/// One pass of the dimension-reducing checker for the claim Perm(A) = claimed.
fn check_pass<R: Rng>(
    a: &Matrix,
    claimed: u64,
    oracle: &mut dyn PermOracle,
    rng: &mut R,
) -> Result<bool> {
    let p = a.p;
    let mut x = a.clone();
    let mut claim = claimed % p;
    loop {
        let k = x.dim;
        if k == 0 {
            return Ok(claim == 1 % p);
        }
        if k == 1 {
            return Ok(claim == x.at(0, 0));
        }
        let minors: Vec<Matrix> = (0..k).map(|c| x.minor(0, c)).collect();
        let vals = minors
            .iter()
            .map(|m| oracle.perm(m).map(|v| v % p))
            .collect::<Result<Vec<u64>>>()?;
        let expansion = (0..k).fold(0u64, |s, c| (s + x.at(0, c) * vals[c]) % p);
        if expansion != claim {
            return Ok(false);
        }
        // curve D(t) of degree k−1 with D(c+1) = minor c
        let nodes: Vec<u64> = (1..=k as u64).collect();
        let curve = |t: u64| -> Matrix {
            let entries = (0..(k - 1) * (k - 1))
                .map(|e| {
                    let ys: Vec<u64> = minors.iter().map(|m| m.entries[e]).collect();
                    lagrange_eval(&nodes, &ys, t, p)
                })
                .collect();
            Matrix {
                dim: k - 1,
                p,
                entries,
            }
        };
        let deg = (k - 1) * (k - 1);
        let pts: Vec<u64> = (k as u64 + 1..=(k + 1 + deg) as u64).collect();
        let gv = pts
            .iter()
            .map(|&t| oracle.perm(&curve(t)).map(|v| v % p))
            .collect::<Result<Vec<u64>>>()?;
        for c in 0..k {
            if lagrange_eval(&pts, &gv, c as u64 + 1, p) != vals[c] {
                return Ok(false);
            }
        }
        let r = rng.gen_range(0..p);
        claim = lagrange_eval(&pts, &gv, r, p);
        x = curve(r);
    }
}

/// Repeated checker: accepts the claim only if every pass accepts.
pub fn perm_check(
    a: &Matrix,
    claimed: u64,
    oracle: &mut dyn PermOracle,
    sampler: &SeededSampler,
) -> Result<CheckOutcome> {
    let reps = checker_repetitions(a.dim, a.p)?;
    let mut rng = sampler.rng();
    for _ in 0..reps {
        if !check_pass(a, claimed, oracle, &mut rng)? {
            return Ok(CheckOutcome::Unknown);
        }
    }
    Ok(CheckOutcome::Accept(claimed % a.p))
}

/// Instance checker for the decision language: asks the oracle, then checks it.
pub fn decide_checked(
    inst: &PermInstance,
    oracle: &mut dyn PermOracle,
    sampler: &SeededSampler,
) -> Result<Option<bool>> {
    let claimed = oracle.perm(&inst.matrix)?;
    Ok(match perm_check(&inst.matrix, claimed, oracle, sampler)? {
        CheckOutcome::Accept(v) => Some(v >> inst.target_bit & 1 == 1),
        CheckOutcome::Unknown => None,
    })
}

// ---------------------------------------------------------------------------
// bit-string encoding of the decision language

/// Layout of a length-`len` string: dimension, modulus, entry width, index width.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitLayout {
    pub dim: usize,
    pub p: u64,
    pub width: usize,
    pub index_bits: usize,
}

impl BitLayout {
    fn for_dim(dim: usize) -> BitLayout {
        let p = field_for_dim(dim);
        let width = entry_bits(p);
        BitLayout {
            dim,
            p,
            width,
            index_bits: ceil_log2(width as u64).max(1) as usize,
        }
    }

    pub fn used(&self) -> usize {
        self.dim * self.dim * self.width + self.index_bits
    }

    /// Largest dimension (≤ MAX_PERM_DIM) whose encoding fits in `len` bits.
    pub fn for_len(len: usize) -> Option<BitLayout> {
        (0..=MAX_PERM_DIM)
            .rev()
            .map(BitLayout::for_dim)
            .find(|l| l.used() <= len)
    }
}

/// Reads a bit string as (matrix, bit index); trailing unused bits are ignored.
pub fn decode_instance(y: &[bool]) -> Option<PermInstance> {
    let l = BitLayout::for_len(y.len())?;
    let entries: Vec<u64> = (0..l.dim * l.dim)
        .map(|e| from_bits(&y[e * l.width..(e + 1) * l.width]) % l.p)
        .collect();
    let at = l.dim * l.dim * l.width;
    let j = from_bits(&y[at..at + l.index_bits]) % l.width as u64;
    Some(PermInstance {
        matrix: Matrix {
            dim: l.dim,
            p: l.p,
            entries,
        },
        target_bit: j as u32,
    })
}

/// The length-`len` string decoding to (m, j); requires the layout to match.
pub fn encode_instance(m: &Matrix, j: u32, len: usize) -> Result<Bits> {
    let l = BitLayout::for_len(len)
        .ok_or_else(|| LabError::Parameter(format!("length {len} holds no instance")))?;
    if l.dim != m.dim || l.p != m.p || j as usize >= l.width {
        return Err(LabError::Parameter(format!(
            "instance does not fit the layout of length {len}"
        )));
    }
    let mut out: Bits = m
        .entries
        .iter()
        .flat_map(|&e| to_bits(e, l.width))
        .collect();
    out.extend(to_bits(j as u64, l.index_bits));
    out.resize(len, false);
    Ok(out)
}

/// Membership of a raw bit string in the decision language.
pub fn hard_member_bits(y: &[bool]) -> bool {
    match decode_instance(y) {
        Some(inst) => inst.member().unwrap_or(false),
        None => false,
    }
}

/// Truth table on k bits of the padded language at the good length whose
/// prefix length is k.
pub fn lk_hard_table(k: usize) -> Result<Bits> {
    if k > 20 {
        return Err(LabError::Budget(format!(
            "truth table on {k} bits is too large"
        )));
    }
    Ok((0..1u64 << k)
        .map(|v| hard_member_bits(&to_bits(v, k)))
        .collect())
}

/// Length framing: |y| with doubled bits, "01", y, then zeros.
pub fn frame_header(len: usize) -> Bits {
    let mut h = Bits::new();
    for b in to_bits(len as u64, (floor_log2(len.max(1) as u64) + 1) as usize) {
        h.push(b);
        h.push(b);
    }
    h.push(false);
    h.push(true);
    h
}

/// The framed encoding of y at total length m.
pub fn pad_bits(y: &[bool], m: usize) -> Result<Bits> {
    let mut out = frame_header(y.len());
    if m <= y.len() || out.len() + y.len() > m {
        return Err(LabError::Parameter(format!(
            "cannot frame {} bits into {m}",
            y.len()
        )));
    }
    out.extend_from_slice(y);
    out.resize(m, false);
    Ok(out)
}

/// Inverse of [`pad_bits`].
pub fn unframe(w: &[bool]) -> Option<Bits> {
    let mut len = 0usize;
    let mut i = 0;
    loop {
        if i + 1 >= w.len() {
            return None;
        }
        match (w[i], w[i + 1]) {
            (false, true) => break,
            (a, b) if a == b => len = len.checked_mul(2)?.checked_add(a as usize)?,
            _ => return None,
        }
        i += 2;
    }
    let start = i + 2;
    if start + len > w.len() {
        return None;
    }
    Some(w[start..start + len].to_vec())
}

/// Re-frames an already framed string to length m.
pub fn repad_bits(w: &[bool], m: usize) -> Result<Bits> {
    let y = unframe(w).ok_or_else(|| LabError::Parse("not a framed string".into()))?;
    pad_bits(&y, m)
}

/// Membership of a framed string.
pub fn framed_member(w: &[bool]) -> bool {
    unframe(w).is_some_and(|y| hard_member_bits(&y))
}

// ---------------------------------------------------------------------------
// good lengths

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeBoundSource {
    Empirical,
    Injected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeBoundTable {
    /// `values[n]` = T(n); lengths past the end reuse the last value.
    pub values: Vec<u64>,
    pub source: TimeBoundSource,
}

impl TimeBoundTable {
    pub fn constant(v: u64, len: usize) -> TimeBoundTable {
        TimeBoundTable {
            values: vec![v.max(1); len.max(1)],
            source: TimeBoundSource::Injected,
        }
    }

    pub fn from_values(values: Vec<u64>, source: TimeBoundSource) -> Result<TimeBoundTable> {
        if values.is_empty() || values.contains(&0) {
            return Err(LabError::Parameter(
                "time bounds must be positive and non-empty".into(),
            ));
        }
        if values.windows(2).any(|w| w[0] > w[1]) {
            return Err(LabError::Parameter(
                "time bounds must be non-decreasing".into(),
            ));
        }
        Ok(TimeBoundTable { values, source })
    }

    pub fn at(&self, n: usize) -> u64 {
        *self
            .values
            .get(n)
            .unwrap_or_else(|| self.values.last().unwrap())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,T\n");
        for (n, v) in self.values.iter().enumerate() {
            s.push_str(&format!("{n},{v}\n"));
        }
        s
    }

    pub fn from_csv(text: &str, source: TimeBoundSource) -> Result<TimeBoundTable> {
        let mut rows: Vec<(usize, u64)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (i == 0 && line.starts_with('n')) {
                continue;
            }
            let (a, b) = line
                .split_once(',')
                .ok_or_else(|| LabError::Parse(format!("bad row {line:?}")))?;
            let n = a
                .trim()
                .parse()
                .map_err(|e| LabError::Parse(format!("row {line:?}: {e}")))?;
            let t = b
                .trim()
                .parse()
                .map_err(|e| LabError::Parse(format!("row {line:?}: {e}")))?;
            rows.push((n, t));
        }
        rows.sort();
        if rows.iter().enumerate().any(|(i, &(n, _))| n != i) {
            return Err(LabError::Parse(
                "T table rows must cover 0..N without gaps".into(),
            ));
        }
        TimeBoundTable::from_values(rows.into_iter().map(|r| r.1).collect(), source)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierarchyParams {
    pub k: u32,
    /// δ as a fraction, 0 < δ < 1/18.
    pub delta_num: u64,
    pub delta_den: u64,
    /// λ as a fraction.
    pub lambda_num: u64,
    pub lambda_den: u64,
}

impl Default for HierarchyParams {
    fn default() -> Self {
        HierarchyParams {
            k: 1,
            delta_num: 1,
            delta_den: 20,
            lambda_num: 1,
            lambda_den: 2,
        }
    }
}

impl HierarchyParams {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(LabError::Parameter("k must be at least 1".into()));
        }
        if self.delta_num == 0 || self.delta_den == 0 || 18 * self.delta_num >= self.delta_den {
            return Err(LabError::Parameter("delta must lie in (0, 1/18)".into()));
        }
        if self.lambda_den == 0 {
            return Err(LabError::Parameter("lambda denominator is zero".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoodLength {
    pub m: u64,
    pub r: u64,
    pub ell: u32,
    pub good: bool,
}

/// 2^ℓ ≥ T^{δ/3k} in integers: 2^{ℓ·3k·den} ≥ T^{num}.
fn power_condition(ell: u32, t: u64, hp: &HierarchyParams) -> bool {
    let lhs_exp = ell as u64 * 3 * hp.k as u64 * hp.delta_den;
    let rhs = BigUint::from(t).pow(hp.delta_num as u32);
    rhs.bits() <= lhs_exp || (rhs.bits() == lhs_exp + 1 && rhs == BigUint::from(1u8) << lhs_exp)
}

/// Every (r, ℓ) with m = r + 2^ℓ meeting all three conditions.
pub fn decompositions(m: u64, t: &TimeBoundTable, hp: &HierarchyParams) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    for ell in 0..64u32 {
        let pw = 1u64 << ell;
        if pw > m {
            break;
        }
        let r = m - pw;
        // T is non-decreasing, so T(r) is the largest bound over 0..=r
        if m > 2 * r && power_condition(ell, t.at(r as usize), hp) {
            out.push((r, ell));
        }
    }
    out
}

pub fn good_length(m: u64, t: &TimeBoundTable, hp: &HierarchyParams) -> GoodLength {
    match decompositions(m, t, hp).first() {
        Some(&(r, ell)) => GoodLength {
            m,
            r,
            ell,
            good: true,
        },
        None => GoodLength {
            m,
            r: 0,
            ell: 0,
            good: false,
        },
    }
}

/// I_m = (i + 2^ℓ(m)) for i = 0..=r(m), each re-verified.
pub fn good_sequence(m: u64, t: &TimeBoundTable, hp: &HierarchyParams) -> Result<Vec<u64>> {
    let g = good_length(m, t, hp);
    if !g.good {
        return Err(LabError::Parameter(format!("{m} is not a good length")));
    }
    let seq: Vec<u64> = (0..=g.r).map(|i| i + (1u64 << g.ell)).collect();
    for (i, &mi) in seq.iter().enumerate() {
        let gi = good_length(mi, t, hp);
        if !gi.good || gi.r != i as u64 || gi.ell != g.ell {
            return Err(LabError::Oracle(format!(
                "member {mi} of I_{m} does not inherit goodness"
            )));
        }
    }
    Ok(seq)
}

/// Membership in the padded language: reject without advice, else the
/// length-r(m) prefix decides. Prefixes whose dimension exceeds `max_dim` reject.
pub fn decide_lk(
    x: &[bool],
    t: &TimeBoundTable,
    hp: &HierarchyParams,
    advice: bool,
    max_dim: usize,
) -> bool {
    if !advice {
        return false;
    }
    let g = good_length(x.len() as u64, t, hp);
    if !g.good {
        return false;
    }
    let y = &x[..g.r as usize];
    match decode_instance(y) {
        Some(inst) if inst.matrix.dim <= max_dim => inst.member().unwrap_or(false),
        _ => false,
    }
}

/// Self-corrector for the padded language at length m = |x|.
///
/// Runs the random-line corrector on the prefix instance; each bit it needs
/// of a same-length query y′ is the majority of `oracle(y′z)` over
/// `pad_votes` random pads z.
pub fn lk_selfcorrect(
    x: &[bool],
    oracle: &mut dyn FnMut(&[bool]) -> bool,
    t: &TimeBoundTable,
    hp: &HierarchyParams,
    trials: u32,
    pad_votes: u32,
    sampler: &SeededSampler,
) -> Result<bool> {
    let g = good_length(x.len() as u64, t, hp);
    if !g.good {
        return Ok(false);
    }
    let r = g.r as usize;
    let m = x.len();
    let Some(inst) = decode_instance(&x[..r]) else {
        return Ok(false);
    };
    let mut rng = sampler.rng();
    let mut vote = |y: &Bits, rng: &mut rand_chacha::ChaCha8Rng| -> bool {
        let mut ones = 0u32;
        let mut q = y.clone();
        for _ in 0..pad_votes {
            q.truncate(r);
            q.extend((r..m).map(|_| rng.gen::<bool>()));
            ones += oracle(&q) as u32;
        }
        2 * ones > pad_votes
    };
    let a = &inst.matrix;
    let w = a.entry_bits();
    let mut read_value = |mat: &Matrix, rng: &mut rand_chacha::ChaCha8Rng| -> Result<u64> {
        let mut v = 0u64;
        for bit in 0..w {
            let y = encode_instance(mat, bit as u32, r)?;
            v |= (vote(&y, rng) as u64) << bit;
        }
        Ok(v % mat.p)
    };
    if a.dim == 0 {
        return Ok(read_value(a, &mut rng)? >> inst.target_bit & 1 == 1);
    }
    let xs: Vec<u64> = (1..=a.dim as u64 + 1).collect();
    let mut votes: BTreeMap<u64, u32> = BTreeMap::new();
    for _ in 0..trials.max(1) {
        let b = Matrix::random(a.dim, a.p, &mut rng);
        let mut ys = Vec::with_capacity(xs.len());
        for &tt in &xs {
            ys.push(read_value(&a.add_scaled(&b, tt), &mut rng)?);
        }
        *votes.entry(lagrange_eval(&xs, &ys, 0, a.p)).or_default() += 1;
    }
    let v = votes
        .into_iter()
        .max_by_key(|&(v, c)| (c, std::cmp::Reverse(v)))
        .unwrap()
        .0;
    Ok(v >> inst.target_bit & 1 == 1)
}

// ---------------------------------------------------------------------------
// universal search

/// Maps description strings to programs: one planted description, the rest
/// through the machine enumeration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Codebook {
    pub planted: Option<(Bits, ToyProgram)>,
}

impl Codebook {
    pub fn program(&self, desc: &[bool]) -> ToyProgram {
        if let Some((d, p)) = &self.planted {
            if d.as_slice() == desc {
                return p.clone();
            }
        }
        enumerate_machines(from_bits(desc))
    }

    /// First stage whose description length equals the planted description's.
    pub fn planted_stage(&self) -> Option<u64> {
        self.planted.as_ref().map(|(d, _)| 1u64 << d.len())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchResult {
    pub answer: Option<bool>,
    pub stage: u64,
    pub description: Option<String>,
}

/// A program as a permanent oracle: input is the matrix encoding, output's
/// first `width` bits (MSB first) are the claimed value, `steps` steps, fresh
/// random tape per query.
pub fn program_oracle<'a, R: Rng>(
    prog: &'a ToyProgram,
    steps: u64,
    rng: &'a mut R,
) -> impl FnMut(&Matrix) -> Result<u64> + 'a {
    move |m: &Matrix| {
        let w = m.entry_bits();
        let tape: Bits = (0..steps.min(64)).map(|_| rng.gen::<bool>()).collect();
        let run = exec_program(prog, &m.to_bits(), steps, &tape);
        let mut out = run.output;
        out.resize(w, false);
        Ok(from_bits(&out[..w]) % m.p)
    }
}

/// Stages 1..=budget; stage s tries every description of length at most
/// ⌊log s⌋ (shortest first, then lexicographic) with
/// the oracle "program restricted to s steps"; first checked answer wins.
pub fn optimal_search(
    inst: &PermInstance,
    budget: u64,
    codebook: &Codebook,
    sampler: &SeededSampler,
) -> Result<SearchResult> {
    checker_repetitions(inst.matrix.dim, inst.matrix.p)?;
    let mut rng = sampler.rng();
    for stage in 1..=budget {
        let max_len = floor_log2(stage) as usize;
        for (len, v) in (0..=max_len).flat_map(|l| (0..1u64 << l).map(move |v| (l, v))) {
            let desc = to_bits(v, len);
            let prog = codebook.program(&desc);
            let check_sampler = sampler.fork("check", stage << 40 | (len as u64) << 32 | v);
            let mut oracle = program_oracle(&prog, stage, &mut rng);
            let claimed = oracle(&inst.matrix)?;
            if let CheckOutcome::Accept(value) =
                perm_check(&inst.matrix, claimed, &mut oracle, &check_sampler)?
            {
                return Ok(SearchResult {
                    answer: Some(value >> inst.target_bit & 1 == 1),
                    stage,
                    description: Some(crate::bits::fmt_bits(&desc)),
                });
            }
        }
    }
    Ok(SearchResult {
        answer: None,
        stage: budget,
        description: None,
    })
}

/// Largest prime below 2^bits that exceeds 4, for 1×1 instances of that width.
pub fn width_prime(bits: u32) -> Option<u64> {
    let hi = 1u64 << bits;
    (5..hi).rev().find(|&v| is_prime(v))
}

/// Empirical T(n): for each width n, the smallest stage s such that, for every
/// i ≤ n, search at width i has answered correctly by stage s in at least a
/// 1 − 1/i fraction of runs; made non-decreasing by a running maximum.
pub fn estimate_t(
    max_n: u32,
    runs: u32,
    codebook: &Codebook,
    budget: u64,
    sampler: &SeededSampler,
) -> Result<TimeBoundTable> {
    let mut values = vec![1u64];
    let mut running = 1u64;
    for n in 1..=max_n {
        let t_n = match width_prime(n) {
            None => 1,
            Some(p) => {
                let mut rng = sampler.fork("instances", n as u64).rng();
                let mut stages: Vec<u64> = Vec::with_capacity(runs as usize);
                for run in 0..runs {
                    let a = Matrix::new(1, p, vec![rng.gen_range(0..p)])?;
                    let inst = PermInstance::new(a, 0)?;
                    let want = inst.member()?;
                    let s = sampler.fork("search", (n as u64) << 32 | run as u64);
                    let res = optimal_search(&inst, budget, codebook, &s)?;
                    stages.push(if res.answer == Some(want) {
                        res.stage
                    } else {
                        u64::MAX
                    });
                }
                stages.sort_unstable();
                // need a (1 − 1/n) fraction correct by the reported stage
                let need = ((runs as u64) * (n as u64 - 1)).div_ceil(n as u64).max(1) as usize;
                stages
                    .get(need - 1)
                    .copied()
                    .unwrap_or(u64::MAX)
                    .min(budget)
            }
        };
        running = running.max(t_n);
        values.push(running);
    }
    TimeBoundTable::from_values(values, TimeBoundSource::Empirical)
}
