//! Primality, prime search over generator outputs, and succinct-prime witnesses.

use crate::bits::{from_bits, to_bits, Bits};
use crate::capp::GenConfig;
use crate::dyadic::Dyadic;
use crate::error::{LabError, Result};
use crate::machine::{copy_printer, exec_program, ToyProgram};
use crate::nw::Prg;
use crate::sampler::SeededSampler;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Largest seed space `find_prime_via_prg` enumerates.
pub const MAX_PRIME_SEED_BITS: usize = 24;

const MR_BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

/// Miller–Rabin with the first twelve primes as bases; exact below 2^64.
pub fn is_prime(v: u64) -> bool {
    if v < 2 {
        return false;
    }
    for &p in &MR_BASES {
        if v.is_multiple_of(p) {
            return v == p;
        }
    }
    let s = (v - 1).trailing_zeros();
    let d = (v - 1) >> s;
    'bases: for &a in &MR_BASES {
        let mut x = pow_mod(a, d, v);
        if x == 1 || x == v - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, v);
            if x == v - 1 {
                continue 'bases;
            }
        }
        return false;
    }
    true
}

/// Smallest prime strictly greater than `v`.
pub fn next_prime(v: u64) -> u64 {
    let mut c = v + 1;
    while !is_prime(c) {
        c += 1;
    }
    c
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuccinctPrime {
    pub seed: Bits,
    pub prime: u64,
    pub n: usize,
    pub generator: Prg,
}

impl SuccinctPrime {
    /// Expand, truncate to n bits, and test primality.
    pub fn verify(&self) -> Result<()> {
        let out = self.generator.generate(&self.seed)?;
        if out.len() < self.n {
            return Err(LabError::Oracle(format!(
                "generator output shorter than {} bits",
                self.n
            )));
        }
        let v = from_bits(&out[..self.n]);
        if v != self.prime || !is_prime(v) {
            return Err(LabError::Oracle(format!(
                "seed expands to {v}, recorded prime {}",
                self.prime
            )));
        }
        Ok(())
    }
}

fn prime_generator(g: &GenConfig, n: usize) -> Result<Prg> {
    if n == 0 || n > 64 {
        return Err(LabError::Parameter(format!("n = {n} outside 1..=64")));
    }
    let prg = g.instantiate(n as u64, n)?;
    if prg.seed_len() > MAX_PRIME_SEED_BITS {
        return Err(LabError::Budget(format!(
            "seed length {} above enumeration cap {MAX_PRIME_SEED_BITS}",
            prg.seed_len()
        )));
    }
    Ok(prg)
}

/// The first seed, in lexicographic order, whose n-bit output is prime.
pub fn find_prime_via_prg(g: &GenConfig, n: usize) -> Result<Option<SuccinctPrime>> {
    let prg = prime_generator(g, n)?;
    let ell = prg.seed_len();
    for v in 0..1u64 << ell {
        let seed = to_bits(v, ell);
        let out = prg.generate(&seed)?;
        let p = from_bits(&out[..n]);
        if is_prime(p) {
            let sp = SuccinctPrime {
                seed,
                prime: p,
                n,
                generator: prg,
            };
            sp.verify()?;
            return Ok(Some(sp));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimeRateReport {
    pub applicable: bool,
    pub trials: u64,
    pub hits: u64,
    pub frequency: f64,
    /// (1/2)·2^{−ℓ}: guess the advice bit and the seed.
    pub predicted: Dyadic,
    /// Binomial standard deviation of `hits` under `predicted`.
    pub sigma: f64,
    pub target: Option<u64>,
}

/// How often a random advice bit plus random seed reproduces the canonical prime.
pub fn random_seed_prime(
    n: usize,
    trials: u64,
    sampler: &SeededSampler,
    g: &GenConfig,
) -> Result<PrimeRateReport> {
    let prg = prime_generator(g, n)?;
    let ell = prg.seed_len();
    let predicted = Dyadic::new(1, ell as u32 + 1);
    let Some(target) = find_prime_via_prg(g, n)? else {
        return Ok(PrimeRateReport {
            applicable: false,
            trials,
            hits: 0,
            frequency: 0.0,
            predicted,
            sigma: 0.0,
            target: None,
        });
    };
    let mut rng = sampler.rng();
    let mut hits = 0u64;
    for _ in 0..trials {
        let advice: bool = rng.gen();
        let seed: Bits = (0..ell).map(|_| rng.gen::<bool>()).collect();
        // wrong advice makes the run output nothing
        if advice && seed == target.seed {
            hits += 1;
        }
    }
    let p = predicted.to_f64();
    Ok(PrimeRateReport {
        applicable: true,
        trials,
        hits,
        frequency: if trials == 0 {
            0.0
        } else {
            hits as f64 / trials as f64
        },
        predicted,
        sigma: (trials as f64 * p * (1.0 - p)).sqrt(),
        target: Some(target.prime),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeWitness {
    pub program: ToyProgram,
    pub aux: Bits,
    /// |M| + |a| in bits.
    pub cost: u64,
    pub steps: u64,
    /// ⌈n^ε⌉-style bound: seed length plus the printer constant.
    pub bound: u64,
}

/// Witness (printer, seed) for an identity-expanded prime; replayed before return.
pub fn rk_poly_prime_witness(sp: &SuccinctPrime) -> Result<PrimeWitness> {
    sp.verify()?;
    if !matches!(sp.generator, Prg::Identity { .. }) {
        return Err(LabError::Budget(
            "only the identity expansion is expressible as a toy printer".into(),
        ));
    }
    let program = copy_printer();
    let aux = sp.seed[..sp.n].to_vec();
    // four steps per copied bit plus the final read past the end
    let steps = 4 * aux.len() as u64 + 2;
    let run = exec_program(&program, &aux, steps, &[]);
    let want = to_bits(sp.prime, sp.n);
    if run.output.len() < sp.n || run.output[..sp.n] != want[..] {
        return Err(LabError::Oracle("printer does not replay the prime".into()));
    }
    let constant = program.description_length();
    Ok(PrimeWitness {
        cost: constant + aux.len() as u64,
        bound: sp.seed.len() as u64 + constant,
        program,
        aux,
        steps,
    })
}
