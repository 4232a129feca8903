//! Machine-to-circuit compilation.
//!
//! The circuit reads the random tape `y` (one input per step of the clock) and
//! outputs 1 iff the machine's first output bit is 1. Deterministic stretches
//! are simulated at compile time; each RND becomes a multiplexer on the tape
//! bit it would read, and identical machine configurations share a gate.

use crate::circuit::{Circuit, CircuitBuilder};
use crate::error::{LabError, Result};
use crate::machine::{feed_random, step, MachineState, StepEvent, ToyProgram, MAX_EXACT_STEPS};
use std::collections::HashMap;

/// Gate-count constant: compiled size stays within `K · t · ⌈log2 t⌉` (plus the
/// inputs and two constants) for the machines exercised in tests.
pub const COMPILE_SIZE_K: u64 = 16;

pub fn compile_size_bound(t: u64) -> u64 {
    let lg = crate::bits::ceil_log2(t).max(1) as u64;
    COMPILE_SIZE_K * t * lg + t + 2
}

struct Compiler<'a> {
    prog: &'a ToyProgram,
    a: &'a [bool],
    t: u64,
    b: CircuitBuilder,
    memo: HashMap<(u64, usize, bool, usize, usize), u32>,
}

impl Compiler<'_> {
    fn from(&mut self, mut s: MachineState) -> u32 {
        let key = (s.steps, s.pc, s.flag, s.ipos.min(self.a.len()), s.rpos);
        if let Some(&g) = self.memo.get(&key) {
            return g;
        }
        let g = loop {
            if s.steps >= self.t {
                break self.b.constant(false);
            }
            match step(self.prog, self.a, &mut s) {
                StepEvent::Continue => {}
                StepEvent::Output(bit) => break self.b.constant(bit),
                StepEvent::Halted => break self.b.constant(false),
                StepEvent::NeedRandom => {
                    let sel = self.b.input(s.rpos);
                    let (mut hi, mut lo) = (s, s);
                    feed_random(&mut hi, true);
                    feed_random(&mut lo, false);
                    let ghi = self.from(hi);
                    let glo = self.from(lo);
                    break self.b.mux(sel, ghi, glo);
                }
            }
        };
        self.memo.insert(key, g);
        g
    }
}

/// Circuit over `t` random bits accepting exactly the tapes on which
/// `exec_program(m, a, t, y)` accepts.
pub fn compile_machine_to_circuit(m: &ToyProgram, a: &[bool], t: u64) -> Result<Circuit> {
    if t > MAX_EXACT_STEPS {
        return Err(LabError::Budget(format!(
            "clock {t} exceeds compile cap {MAX_EXACT_STEPS}"
        )));
    }
    let mut c = Compiler {
        prog: m,
        a,
        t,
        b: CircuitBuilder::new(t as usize),
        memo: HashMap::new(),
    };
    let root = MachineState {
        pc: 0,
        flag: false,
        ipos: 0,
        rpos: 0,
        steps: 0,
    };
    let out = c.from(root);
    Ok(c.b.finish(out))
}

struct EqCompiler<'a> {
    prog: &'a ToyProgram,
    a: &'a [bool],
    t: u64,
    target: &'a [bool],
    b: CircuitBuilder,
    memo: HashMap<(u64, usize, bool, usize, usize, usize), u32>,
}

impl EqCompiler<'_> {
    fn from(&mut self, mut s: MachineState, mut matched: usize) -> u32 {
        let key = (
            s.steps,
            s.pc,
            s.flag,
            s.ipos.min(self.a.len()),
            s.rpos,
            matched,
        );
        if let Some(&g) = self.memo.get(&key) {
            return g;
        }
        let g = loop {
            if s.steps >= self.t {
                break self.b.constant(matched == self.target.len());
            }
            match step(self.prog, self.a, &mut s) {
                StepEvent::Continue => {}
                StepEvent::Output(bit) => {
                    if matched < self.target.len() && self.target[matched] == bit {
                        matched += 1;
                    } else {
                        break self.b.constant(false);
                    }
                }
                StepEvent::Halted => break self.b.constant(matched == self.target.len()),
                StepEvent::NeedRandom => {
                    let sel = self.b.input(s.rpos);
                    let (mut hi, mut lo) = (s, s);
                    feed_random(&mut hi, true);
                    feed_random(&mut lo, false);
                    let ghi = self.from(hi, matched);
                    let glo = self.from(lo, matched);
                    break self.b.mux(sel, ghi, glo);
                }
            }
        };
        self.memo.insert(key, g);
        g
    }
}

/// Circuit over `t` random bits accepting exactly the tapes on which the
/// machine's output after at most `t` steps equals `target`.
pub fn compile_output_equals(
    m: &ToyProgram,
    a: &[bool],
    t: u64,
    target: &[bool],
) -> Result<Circuit> {
    if t > MAX_EXACT_STEPS {
        return Err(LabError::Budget(format!(
            "clock {t} exceeds compile cap {MAX_EXACT_STEPS}"
        )));
    }
    let mut c = EqCompiler {
        prog: m,
        a,
        t,
        target,
        b: CircuitBuilder::new(t as usize),
        memo: HashMap::new(),
    };
    let root = MachineState {
        pc: 0,
        flag: false,
        ipos: 0,
        rpos: 0,
        steps: 0,
    };
    let out = c.from(root, 0);
    Ok(c.b.finish(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::to_bits;
    use crate::machine::{exec_program, output_distribution, Instr::*};
    use proptest::prelude::*;

    fn accept_mass(c: &Circuit) -> (u64, u64) {
        let n = c.input_arity();
        let hits = (0..1u64 << n)
            .filter(|&v| c.eval(&to_bits(v, n)).unwrap())
            .count() as u64;
        (hits, 1 << n)
    }

    #[test]
    fn always_accept_and_coin() {
        let acc = ToyProgram::from_instrs(&[Out(true), Halt]);
        let c = compile_machine_to_circuit(&acc, &[], 4).unwrap();
        assert_eq!(accept_mass(&c), (16, 16));
        let coin = ToyProgram::from_instrs(&[Rnd, Brf(2), Out(false), Halt, Out(true), Halt]);
        let c = compile_machine_to_circuit(&coin, &[], 4).unwrap();
        assert_eq!(accept_mass(&c), (8, 16));
    }

    #[test]
    fn long_clock_stays_small() {
        let p = ToyProgram::from_instrs(&[Rnd, Brf(1), Jmp(0), Out(true)]);
        let c = compile_machine_to_circuit(&p, &[], 1024).unwrap();
        assert!(c.size() as u64 <= compile_size_bound(1024));
        assert!(c.support().len() <= 1024);
    }

    pub(crate) fn arb_program(max_len: usize) -> impl Strategy<Value = ToyProgram> {
        proptest::collection::vec(any::<u8>(), 1..=max_len).prop_map(ToyProgram::from_bytes)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn compiler_is_sound(p in arb_program(8), a in proptest::collection::vec(any::<bool>(), 0..4), t in 1u64..=10) {
            let c = compile_machine_to_circuit(&p, &a, t).unwrap();
            prop_assert_eq!(c.input_arity() as u64, t);
            prop_assert!(c.size() as u64 <= compile_size_bound(t));
            let mut hits = 0u128;
            for v in 0..1u64 << t {
                let y = to_bits(v, t as usize);
                let want = exec_program(&p, &a, t, &y).accepts();
                prop_assert_eq!(c.eval(&y).unwrap(), want);
                hits += want as u128;
            }
            let d = output_distribution(&p, &a, t).unwrap();
            prop_assert_eq!(d.acceptance(), crate::dyadic::Dyadic::new(hits, t as u32));
        }

        #[test]
        fn equality_compiler_is_sound(p in arb_program(6), t in 1u64..=8, target in proptest::collection::vec(any::<bool>(), 0..4)) {
            let c = compile_output_equals(&p, &[], t, &target).unwrap();
            for v in 0..1u64 << t {
                let y = to_bits(v, t as usize);
                prop_assert_eq!(c.eval(&y).unwrap(), exec_program(&p, &[], t, &y).output == target);
            }
        }
    }
}
