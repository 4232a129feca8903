//! Where the toy-scale surrogate stops behaving like a hard function.

use derand_core::bits::all_strings;
use derand_core::circuit::CircuitBuilder;
use derand_core::dyadic::Dyadic;
use derand_core::nw::{advantage_exact, NWGenerator, Prg, PseudodetPrgConfig};
use derand_core::sampler::SeededSampler;
use rand::Rng;

/// Exact advantage of every function of two output bits; each has a circuit
/// of at most three gates.
fn two_bit_sweep(g: &NWGenerator, n: usize) -> (Dyadic, (usize, usize, u64)) {
    let ell = g.seed_len();
    let outs: Vec<Vec<bool>> = all_strings(ell).map(|z| g.generate(&z).unwrap()).collect();
    let mut worst = (Dyadic::ZERO, (0, 0, 0));
    for i in 0..n {
        for j in i + 1..n {
            let mut counts = [0u128; 4];
            for o in &outs {
                counts[(o[i] as usize) << 1 | o[j] as usize] += 1;
            }
            for f in 0..16u64 {
                let hit: u128 = (0..4).filter(|c| f >> c & 1 == 1).map(|c| counts[c]).sum();
                let uniform = (f.count_ones() as u128) << (ell - 2);
                let adv = Dyadic::new(hit.abs_diff(uniform), ell as u32);
                if adv > worst.0 {
                    worst = (adv, (i, j, f));
                }
            }
        }
    }
    worst
}

#[test]
fn pseudodet_outputs_fool_small_circuits() {
    let cfg = PseudodetPrgConfig::default();
    let n = 16;
    assert!(cfg.advice(n));
    let g = cfg.generator(n).unwrap();
    let (worst, (i, j, f)) = two_bit_sweep(&g, n as usize);
    // random circuits of at most 8 gates over all 16 output bits
    let prg = Prg::Nw(g);
    let mut r = SeededSampler::new("pipelines-fool", n, 0, 0).rng();
    let mut worst_random = Dyadic::ZERO;
    for _ in 0..300 {
        let mut b = CircuitBuilder::new(n as usize);
        let mut nodes: Vec<u32> = (0..n as usize).map(|i| b.input(i)).collect();
        let mut last = nodes[0];
        for _ in 0..r.gen_range(1..=8) {
            let x = nodes[r.gen_range(0..nodes.len())];
            let y = nodes[r.gen_range(0..nodes.len())];
            last = match r.gen_range(0..4) {
                0 => b.and(x, y),
                1 => b.or(x, y),
                2 => b.xor(x, y),
                _ => b.not(x),
            };
            nodes.push(last);
        }
        worst_random = worst_random.max(advantage_exact(&b.finish(last), &prg).unwrap().advantage);
    }
    println!("two-bit worst {worst} at bits ({i}, {j}) table {f:04b}; random 8-gate worst {worst_random}");
    assert!(
        worst.cmp_ratio(1, 4).is_le(),
        "function {f:04b} of bits {i}, {j} has advantage {worst}"
    );
    assert!(
        worst_random.cmp_ratio(1, 4).is_le(),
        "a random 8-gate circuit has advantage {worst_random}"
    );
}
