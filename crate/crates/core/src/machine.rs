//! The toy probabilistic machine.
//!
//! A program is a sequence of 8-bit instructions. The low three bits select the
//! opcode and the high five bits are the operand. The machine has a program
//! counter, a one-bit flag, a read-once input `a`, a read-once random tape and
//! an append-only output. Every byte decodes to some instruction (opcode 7 is
//! HALT), so every byte string is a program.

use crate::bits::{fmt_bits, Bits};
use crate::dyadic::Dyadic;
use crate::error::{LabError, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

pub const OP_HALT: u8 = 0;
pub const OP_OUT0: u8 = 1;
pub const OP_OUT1: u8 = 2;
pub const OP_RND: u8 = 3;
pub const OP_RDI: u8 = 4;
pub const OP_BRF: u8 = 5;
pub const OP_JMP: u8 = 6;

/// Largest step budget `output_distribution` and the compiler accept.
pub const MAX_EXACT_STEPS: u64 = 1 << 12;
/// Largest number of random bits a single exact path may consume.
pub const MAX_EXACT_RANDOM_BITS: u32 = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Instr {
    Halt,
    Out(bool),
    Rnd,
    Rdi,
    /// Skip `k` instructions when the flag is set.
    Brf(u8),
    /// Absolute jump.
    Jmp(u8),
}

impl Instr {
    pub fn decode(byte: u8) -> Instr {
        let operand = byte >> 3;
        match byte & 7 {
            OP_OUT0 => Instr::Out(false),
            OP_OUT1 => Instr::Out(true),
            OP_RND => Instr::Rnd,
            OP_RDI => Instr::Rdi,
            OP_BRF => Instr::Brf(operand),
            OP_JMP => Instr::Jmp(operand),
            _ => Instr::Halt,
        }
    }

    /// Smallest byte decoding to this instruction.
    pub fn encode(self) -> u8 {
        match self {
            Instr::Halt => OP_HALT,
            Instr::Out(false) => OP_OUT0,
            Instr::Out(true) => OP_OUT1,
            Instr::Rnd => OP_RND,
            Instr::Rdi => OP_RDI,
            Instr::Brf(k) => (k.min(31) << 3) | OP_BRF,
            Instr::Jmp(k) => (k.min(31) << 3) | OP_JMP,
        }
    }
}

impl fmt::Display for Instr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instr::Halt => write!(f, "HALT"),
            Instr::Out(b) => write!(f, "OUT{}", *b as u8),
            Instr::Rnd => write!(f, "RND"),
            Instr::Rdi => write!(f, "RDI"),
            Instr::Brf(k) => write!(f, "BRF+{k}"),
            Instr::Jmp(k) => write!(f, "JMP {k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ToyProgram {
    code: Vec<u8>,
}

impl ToyProgram {
    /// The empty byte string is read as the one-instruction HALT program.
    pub fn from_bytes(code: Vec<u8>) -> ToyProgram {
        if code.is_empty() {
            ToyProgram {
                code: vec![OP_HALT],
            }
        } else {
            ToyProgram { code }
        }
    }

    pub fn from_instrs(instrs: &[Instr]) -> ToyProgram {
        ToyProgram::from_bytes(instrs.iter().map(|i| i.encode()).collect())
    }

    pub fn bytes(&self) -> &[u8] {
        &self.code
    }

    pub fn len(&self) -> usize {
        self.code.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn instr(&self, pc: usize) -> Instr {
        Instr::decode(self.code[pc])
    }

    pub fn instrs(&self) -> Vec<Instr> {
        self.code.iter().map(|&b| Instr::decode(b)).collect()
    }

    /// |M| in bits.
    pub fn description_length(&self) -> u64 {
        8 * self.code.len() as u64
    }

    pub fn to_hex(&self) -> String {
        self.code.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_hex(s: &str) -> Result<ToyProgram> {
        let s = s.trim();
        if !s.len().is_multiple_of(2) {
            return Err(LabError::Parse(format!("odd-length hex program {s:?}")));
        }
        let code = (0..s.len())
            .step_by(2)
            .map(|i| {
                u8::from_str_radix(&s[i..i + 2], 16)
                    .map_err(|e| LabError::Parse(format!("bad hex {s:?}: {e}")))
            })
            .collect::<Result<Vec<u8>>>()?;
        Ok(ToyProgram::from_bytes(code))
    }

    /// Whether an RND instruction occurs anywhere in the program.
    pub fn uses_randomness(&self) -> bool {
        self.instrs().contains(&Instr::Rnd)
    }

    pub fn reads_input(&self) -> bool {
        self.instrs().contains(&Instr::Rdi)
    }
}

impl fmt::Display for ToyProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.instrs().iter().map(|i| i.to_string()).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// Parse a program file: one hex program per line, blank lines and `#` comments skipped.
pub fn parse_program_file(text: &str) -> Result<Vec<ToyProgram>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(ToyProgram::from_hex)
        .collect()
}

pub fn write_program_file(progs: &[ToyProgram]) -> String {
    progs.iter().map(|p| p.to_hex() + "\n").collect()
}

/// The `i`-th machine: the minimal big-endian bytes of `i`, with `i = 0` the HALT program.
pub fn enumerate_machines(i: u64) -> ToyProgram {
    let bytes = i.to_be_bytes();
    let first = bytes.iter().position(|&b| b != 0).unwrap_or(7);
    ToyProgram::from_bytes(bytes[first..].to_vec())
}

/// Inverse of `enumerate_machines` on its image.
pub fn machine_index(p: &ToyProgram) -> Option<u64> {
    let code = p.bytes();
    if code.len() > 8 || (code.len() > 1 && code[0] == 0) {
        return None;
    }
    Some(code.iter().fold(0u64, |acc, &b| (acc << 8) | b as u64))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunResult {
    pub output: Bits,
    pub steps_used: u64,
    pub random_bits_consumed: u64,
    pub halted: bool,
}

impl RunResult {
    /// Decision convention: accept iff the first output bit is 1.
    pub fn accepts(&self) -> bool {
        self.output.first() == Some(&true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) struct MachineState {
    pub pc: usize,
    pub flag: bool,
    pub ipos: usize,
    pub rpos: usize,
    pub steps: u64,
}

pub(crate) enum StepEvent {
    Continue,
    Output(bool),
    NeedRandom,
    Halted,
}

/// Execute one instruction unless it is RND, which the caller resolves.
#[inline]
pub(crate) fn step(p: &ToyProgram, a: &[bool], s: &mut MachineState) -> StepEvent {
    if s.pc >= p.code.len() {
        return StepEvent::Halted;
    }
    let ins = Instr::decode(p.code[s.pc]);
    match ins {
        Instr::Rnd => return StepEvent::NeedRandom,
        Instr::Halt => {
            s.steps += 1;
            return StepEvent::Halted;
        }
        _ => {}
    }
    s.steps += 1;
    match ins {
        Instr::Out(b) => {
            s.pc += 1;
            StepEvent::Output(b)
        }
        Instr::Rdi => {
            s.flag = a.get(s.ipos).copied().unwrap_or(false);
            s.ipos += 1;
            s.pc += 1;
            StepEvent::Continue
        }
        Instr::Brf(k) => {
            s.pc += if s.flag { 1 + k as usize } else { 1 };
            StepEvent::Continue
        }
        Instr::Jmp(k) => {
            s.pc = k as usize;
            StepEvent::Continue
        }
        Instr::Halt | Instr::Rnd => unreachable!(),
    }
}

/// Resolve a pending RND with bit `b`.
#[inline]
pub(crate) fn feed_random(s: &mut MachineState, b: bool) {
    s.flag = b;
    s.rpos += 1;
    s.pc += 1;
    s.steps += 1;
}

/// Run `m` on input `a` for at most `t` steps reading random bits from `tape`.
/// Reads past the end of `a` or `tape` yield 0.
/// Copies the input to the output, four steps per bit.
pub fn copy_printer() -> ToyProgram {
    ToyProgram::from_instrs(&[
        Instr::Rdi,
        Instr::Brf(2),
        Instr::Out(false),
        Instr::Jmp(0),
        Instr::Out(true),
        Instr::Jmp(0),
    ])
}

pub fn exec_program(m: &ToyProgram, a: &[bool], t: u64, tape: &[bool]) -> RunResult {
    let mut s = MachineState {
        pc: 0,
        flag: false,
        ipos: 0,
        rpos: 0,
        steps: 0,
    };
    let mut output = Vec::new();
    let mut halted = false;
    while s.steps < t {
        match step(m, a, &mut s) {
            StepEvent::Continue => {}
            StepEvent::Output(b) => output.push(b),
            StepEvent::NeedRandom => {
                let b = tape.get(s.rpos).copied().unwrap_or(false);
                feed_random(&mut s, b);
            }
            StepEvent::Halted => {
                halted = true;
                break;
            }
        }
    }
    if !halted && s.pc >= m.code.len() {
        halted = true;
    }
    RunResult {
        output,
        steps_used: s.steps,
        random_bits_consumed: s.rpos as u64,
        halted,
    }
}

/// Exact distribution of the output of `m` on `a` after at most `t` steps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputDistribution {
    pub entries: BTreeMap<String, Dyadic>,
}

impl OutputDistribution {
    pub fn prob(&self, x: &[bool]) -> Dyadic {
        self.entries
            .get(&fmt_bits(x))
            .copied()
            .unwrap_or(Dyadic::ZERO)
    }

    pub fn total(&self) -> Dyadic {
        Dyadic::sum(self.entries.values().copied())
    }

    /// Mass on outputs starting with 1.
    pub fn acceptance(&self) -> Dyadic {
        Dyadic::sum(
            self.entries
                .iter()
                .filter(|(k, _)| k.starts_with('1'))
                .map(|(_, v)| *v),
        )
    }

    /// The output with the largest mass, ties broken lexicographically.
    pub fn mode(&self) -> Option<(&str, Dyadic)> {
        let mut best: Option<(&str, Dyadic)> = None;
        for (k, &v) in &self.entries {
            if best.is_none_or(|(_, bv)| v > bv) {
                best = Some((k.as_str(), v));
            }
        }
        best
    }
}

/// Depth-first enumeration of every random branch.
pub fn output_distribution(m: &ToyProgram, a: &[bool], t: u64) -> Result<OutputDistribution> {
    if t > MAX_EXACT_STEPS {
        return Err(LabError::Budget(format!(
            "t = {t} exceeds exact cap {MAX_EXACT_STEPS}"
        )));
    }
    let mut leaves: BTreeMap<Bits, u128> = BTreeMap::new();
    let root = MachineState {
        pc: 0,
        flag: false,
        ipos: 0,
        rpos: 0,
        steps: 0,
    };
    let mut stack = vec![(root, Vec::new())];
    while let Some((mut s, mut out)) = stack.pop() {
        loop {
            if s.steps >= t {
                break;
            }
            match step(m, a, &mut s) {
                StepEvent::Continue => {}
                StepEvent::Output(b) => out.push(b),
                StepEvent::Halted => break,
                StepEvent::NeedRandom => {
                    if s.rpos as u32 >= MAX_EXACT_RANDOM_BITS {
                        return Err(LabError::Budget(format!(
                            "more than {MAX_EXACT_RANDOM_BITS} random bits on one path"
                        )));
                    }
                    let mut other = s;
                    feed_random(&mut other, true);
                    stack.push((other, out.clone()));
                    feed_random(&mut s, false);
                }
            }
        }
        *leaves.entry(out).or_insert(0) += 1u128 << (MAX_EXACT_RANDOM_BITS - s.rpos as u32);
    }
    let entries = leaves
        .into_iter()
        .map(|(k, w)| (fmt_bits(&k), Dyadic::new(w, MAX_EXACT_RANDOM_BITS)))
        .collect();
    Ok(OutputDistribution { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::parse_bits;
    use Instr::*;

    fn coin() -> ToyProgram {
        ToyProgram::from_instrs(&[Rnd, Brf(2), Out(false), Halt, Out(true), Halt])
    }

    #[test]
    fn print_one() {
        let p = ToyProgram::from_instrs(&[Out(true), Halt]);
        let r = exec_program(&p, &[], 4, &[false; 4]);
        assert_eq!(r.output, vec![true]);
        assert!(r.halted);
        assert_eq!(r.steps_used, 2);
        let d = output_distribution(&p, &[], 4).unwrap();
        assert_eq!(d.prob(&[true]), Dyadic::ONE);
    }

    #[test]
    fn single_branch() {
        let r = exec_program(&coin(), &[], 6, &parse_bits("100000").unwrap());
        assert_eq!(r.output, vec![true]);
        assert_eq!(r.random_bits_consumed, 1);
        let d = output_distribution(&coin(), &[], 6).unwrap();
        assert_eq!(d.entries.len(), 2);
        assert_eq!(d.prob(&[false]), Dyadic::new(1, 1));
        assert_eq!(d.prob(&[true]), Dyadic::new(1, 1));
    }

    #[test]
    fn self_loop_truncates() {
        let p = ToyProgram::from_instrs(&[Jmp(0)]);
        let r = exec_program(&p, &[], 5, &[false; 5]);
        assert!(!r.halted);
        assert_eq!(r.steps_used, 5);
    }

    #[test]
    fn running_off_the_end_halts_for_free() {
        let p = ToyProgram::from_instrs(&[Out(true)]);
        let r = exec_program(&p, &[], 1, &[]);
        assert!(r.halted);
        assert_eq!(r.steps_used, 1);
    }

    #[test]
    fn input_reads_past_end_are_zero() {
        // Copy loop: RDI; BRF+2; OUT0; JMP 0; OUT1; JMP 0
        let p = ToyProgram::from_instrs(&[Rdi, Brf(2), Out(false), Jmp(0), Out(true), Jmp(0)]);
        let r = exec_program(&p, &parse_bits("1").unwrap(), 8, &[]);
        assert_eq!(r.output, parse_bits("10").unwrap());
    }

    #[test]
    fn decode_every_byte() {
        for b in 0..=255u8 {
            let i = Instr::decode(b);
            assert_eq!(Instr::decode(i.encode()), i);
        }
        assert_eq!(Instr::decode(7), Halt);
        assert_eq!(Instr::decode(0xff), Halt);
    }

    #[test]
    fn enumeration() {
        assert_eq!(enumerate_machines(0).instrs(), vec![Halt]);
        assert_eq!(enumerate_machines(0).description_length(), 8);
        for i in 0..10_000u64 {
            assert_eq!(machine_index(&enumerate_machines(i)), Some(i));
        }
        let mut seen = std::collections::HashSet::new();
        for i in 0..1u64 << 16 {
            assert!(seen.insert(enumerate_machines(i)));
        }
    }

    #[test]
    fn hex_file() {
        let progs = vec![coin(), enumerate_machines(0x0102)];
        let text = write_program_file(&progs);
        assert_eq!(parse_program_file(&text).unwrap(), progs);
        assert!(ToyProgram::from_hex("abc").is_err());
    }
}
