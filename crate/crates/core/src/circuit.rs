//! Gate-list Boolean circuits and their netlist text form.
//!
//! Netlist layout:
//! ```text
//! inputs 2
//! g2 = AND2 g0 g1
//! output g2
//! ```
//! Gates `g0..g{n-1}` are the inputs and are not written out. Lines starting
//! with `#` and blank lines are ignored, which is how a netlist is padded to an
//! exact byte length.

use crate::error::{LabError, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gate {
    Input(u32),
    Const(bool),
    Not(u32),
    And(u32, u32),
    Or(u32, u32),
    Xor(u32, u32),
}

impl Gate {
    fn operands(&self) -> Vec<u32> {
        match *self {
            Gate::Input(_) | Gate::Const(_) => vec![],
            Gate::Not(a) => vec![a],
            Gate::And(a, b) | Gate::Or(a, b) | Gate::Xor(a, b) => vec![a, b],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Circuit {
    input_arity: usize,
    gates: Vec<Gate>,
    output: usize,
}

impl Circuit {
    /// Checks topological order, input placement and the output index.
    pub fn new(input_arity: usize, gates: Vec<Gate>, output: usize) -> Result<Circuit> {
        if gates.len() < input_arity {
            return Err(LabError::Parameter("fewer gates than inputs".into()));
        }
        for (k, g) in gates.iter().enumerate() {
            match *g {
                Gate::Input(i) => {
                    if k >= input_arity || i as usize != k {
                        return Err(LabError::Parameter(format!("gate {k}: misplaced INPUT")));
                    }
                }
                _ if k < input_arity => {
                    return Err(LabError::Parameter(format!("gate {k} must be INPUT")));
                }
                _ => {
                    if g.operands().iter().any(|&o| o as usize >= k) {
                        return Err(LabError::Parameter(format!(
                            "gate {k}: operand not earlier"
                        )));
                    }
                }
            }
        }
        if output >= gates.len() {
            return Err(LabError::Parameter(format!(
                "output g{output} does not exist"
            )));
        }
        Ok(Circuit {
            input_arity,
            gates,
            output,
        })
    }

    pub fn constant(input_arity: usize, v: bool) -> Circuit {
        let mut b = CircuitBuilder::new(input_arity);
        let c = b.constant(v);
        b.finish(c)
    }

    pub fn input_arity(&self) -> usize {
        self.input_arity
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn output(&self) -> usize {
        self.output
    }

    /// Number of gates, inputs included.
    pub fn size(&self) -> usize {
        self.gates.len()
    }

    pub fn description_length(&self) -> u64 {
        8 * self.to_netlist().len() as u64
    }

    pub fn eval(&self, x: &[bool]) -> Result<bool> {
        if x.len() != self.input_arity {
            return Err(LabError::InputShape(format!(
                "circuit takes {} inputs, got {}",
                self.input_arity,
                x.len()
            )));
        }
        let mut v = vec![false; self.gates.len()];
        for (k, g) in self.gates.iter().enumerate() {
            v[k] = match *g {
                Gate::Input(i) => x[i as usize],
                Gate::Const(c) => c,
                Gate::Not(a) => !v[a as usize],
                Gate::And(a, b) => v[a as usize] & v[b as usize],
                Gate::Or(a, b) => v[a as usize] | v[b as usize],
                Gate::Xor(a, b) => v[a as usize] ^ v[b as usize],
            };
        }
        Ok(v[self.output])
    }

    /// 64 evaluations at once; `words[i]` holds input `i` across the 64 lanes.
    pub fn eval_words(&self, words: &[u64], buf: &mut Vec<u64>) -> u64 {
        debug_assert_eq!(words.len(), self.input_arity);
        buf.clear();
        buf.reserve(self.gates.len());
        for g in &self.gates {
            let w = match *g {
                Gate::Input(i) => words[i as usize],
                Gate::Const(c) => {
                    if c {
                        !0
                    } else {
                        0
                    }
                }
                Gate::Not(a) => !buf[a as usize],
                Gate::And(a, b) => buf[a as usize] & buf[b as usize],
                Gate::Or(a, b) => buf[a as usize] | buf[b as usize],
                Gate::Xor(a, b) => buf[a as usize] ^ buf[b as usize],
            };
            buf.push(w);
        }
        buf[self.output]
    }

    /// Inputs the output actually depends on syntactically, ascending.
    pub fn support(&self) -> Vec<usize> {
        let mut live = vec![false; self.gates.len()];
        live[self.output] = true;
        let mut out = BTreeSet::new();
        for k in (0..self.gates.len()).rev() {
            if !live[k] {
                continue;
            }
            match self.gates[k] {
                Gate::Input(i) => {
                    out.insert(i as usize);
                }
                g => {
                    for o in g.operands() {
                        live[o as usize] = true;
                    }
                }
            }
        }
        out.into_iter().collect()
    }

    pub fn to_netlist(&self) -> String {
        let mut s = String::new();
        writeln!(s, "inputs {}", self.input_arity).unwrap();
        for (k, g) in self.gates.iter().enumerate().skip(self.input_arity) {
            let body = match *g {
                Gate::Input(_) => unreachable!(),
                Gate::Const(false) => "CONST0".to_string(),
                Gate::Const(true) => "CONST1".to_string(),
                Gate::Not(a) => format!("NOT g{a}"),
                Gate::And(a, b) => format!("AND2 g{a} g{b}"),
                Gate::Or(a, b) => format!("OR2 g{a} g{b}"),
                Gate::Xor(a, b) => format!("XOR2 g{a} g{b}"),
            };
            writeln!(s, "g{k} = {body}").unwrap();
        }
        writeln!(s, "output g{}", self.output).unwrap();
        s
    }

    /// The netlist padded with a trailing comment to exactly `bytes` bytes.
    pub fn to_padded_netlist(&self, bytes: usize) -> Result<String> {
        let mut s = self.to_netlist();
        if s.len() > bytes {
            return Err(LabError::Budget(format!(
                "netlist is {} bytes, bound is {bytes}",
                s.len()
            )));
        }
        match bytes - s.len() {
            0 => {}
            1 => s.push('\n'),
            k => {
                s.push('#');
                s.extend(std::iter::repeat_n('.', k - 2));
                s.push('\n');
            }
        }
        Ok(s)
    }

    pub fn from_netlist(text: &str) -> Result<Circuit> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| LabError::Parse("empty netlist".into()))?;
        let n: usize = header
            .strip_prefix("inputs ")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| LabError::Parse(format!("bad header {header:?}")))?;
        let mut gates: Vec<Gate> = (0..n as u32).map(Gate::Input).collect();
        let gate_ref = |tok: &str| -> Result<u32> {
            tok.strip_prefix('g')
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| LabError::Parse(format!("bad gate reference {tok:?}")))
        };
        for line in lines {
            if let Some(rest) = line.strip_prefix("output ") {
                let out = gate_ref(rest.trim())? as usize;
                return Circuit::new(n, gates, out);
            }
            let (lhs, rhs) = line
                .split_once('=')
                .ok_or_else(|| LabError::Parse(format!("bad line {line:?}")))?;
            let k = gate_ref(lhs.trim())? as usize;
            if k != gates.len() {
                return Err(LabError::Parse(format!("gate g{k} out of order")));
            }
            let toks: Vec<&str> = rhs.split_whitespace().collect();
            let g = match toks.as_slice() {
                ["CONST0"] => Gate::Const(false),
                ["CONST1"] => Gate::Const(true),
                ["NOT", a] => Gate::Not(gate_ref(a)?),
                ["AND2" | "AND", a, b] => Gate::And(gate_ref(a)?, gate_ref(b)?),
                ["OR2" | "OR", a, b] => Gate::Or(gate_ref(a)?, gate_ref(b)?),
                ["XOR2" | "XOR", a, b] => Gate::Xor(gate_ref(a)?, gate_ref(b)?),
                _ => return Err(LabError::Parse(format!("bad gate {rhs:?}"))),
            };
            gates.push(g);
        }
        Err(LabError::Parse("missing output line".into()))
    }
}

/// Incremental construction with structural hashing and constant folding.
#[derive(Debug, Clone)]
pub struct CircuitBuilder {
    arity: usize,
    gates: Vec<Gate>,
    memo: HashMap<Gate, u32>,
}

impl CircuitBuilder {
    pub fn new(arity: usize) -> CircuitBuilder {
        let gates: Vec<Gate> = (0..arity as u32).map(Gate::Input).collect();
        let memo = gates
            .iter()
            .enumerate()
            .map(|(k, &g)| (g, k as u32))
            .collect();
        CircuitBuilder { arity, gates, memo }
    }

    fn push(&mut self, g: Gate) -> u32 {
        if let Some(&k) = self.memo.get(&g) {
            return k;
        }
        let k = self.gates.len() as u32;
        self.gates.push(g);
        self.memo.insert(g, k);
        k
    }

    fn as_const(&self, a: u32) -> Option<bool> {
        match self.gates[a as usize] {
            Gate::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn input(&self, i: usize) -> u32 {
        assert!(i < self.arity);
        i as u32
    }

    pub fn constant(&mut self, v: bool) -> u32 {
        self.push(Gate::Const(v))
    }

    pub fn not(&mut self, a: u32) -> u32 {
        match self.gates[a as usize] {
            Gate::Const(c) => self.constant(!c),
            Gate::Not(b) => b,
            _ => self.push(Gate::Not(a)),
        }
    }

    pub fn and(&mut self, a: u32, b: u32) -> u32 {
        match (self.as_const(a), self.as_const(b)) {
            (Some(false), _) | (_, Some(false)) => self.constant(false),
            (Some(true), _) => b,
            (_, Some(true)) => a,
            _ if a == b => a,
            _ => self.push(Gate::And(a.min(b), a.max(b))),
        }
    }

    pub fn or(&mut self, a: u32, b: u32) -> u32 {
        match (self.as_const(a), self.as_const(b)) {
            (Some(true), _) | (_, Some(true)) => self.constant(true),
            (Some(false), _) => b,
            (_, Some(false)) => a,
            _ if a == b => a,
            _ => self.push(Gate::Or(a.min(b), a.max(b))),
        }
    }

    pub fn xor(&mut self, a: u32, b: u32) -> u32 {
        match (self.as_const(a), self.as_const(b)) {
            (Some(x), Some(y)) => self.constant(x ^ y),
            (Some(false), _) => b,
            (_, Some(false)) => a,
            (Some(true), _) => self.not(b),
            (_, Some(true)) => self.not(a),
            _ if a == b => self.constant(false),
            _ => self.push(Gate::Xor(a.min(b), a.max(b))),
        }
    }

    /// `sel ? hi : lo`
    pub fn mux(&mut self, sel: u32, hi: u32, lo: u32) -> u32 {
        if hi == lo {
            return hi;
        }
        match (self.as_const(hi), self.as_const(lo)) {
            (Some(true), Some(false)) => return sel,
            (Some(false), Some(true)) => return self.not(sel),
            _ => {}
        }
        let t = self.and(sel, hi);
        let ns = self.not(sel);
        let f = self.and(ns, lo);
        self.or(t, f)
    }

    /// Copy `c` in, wiring its input `i` to our gate `inputs[i]`; returns its output.
    pub fn embed(&mut self, c: &Circuit, inputs: &[u32]) -> u32 {
        assert_eq!(inputs.len(), c.input_arity());
        let mut map: Vec<u32> = Vec::with_capacity(c.size());
        for g in c.gates() {
            let k = match *g {
                Gate::Input(i) => inputs[i as usize],
                Gate::Const(v) => self.constant(v),
                Gate::Not(a) => self.not(map[a as usize]),
                Gate::And(a, b) => self.and(map[a as usize], map[b as usize]),
                Gate::Or(a, b) => self.or(map[a as usize], map[b as usize]),
                Gate::Xor(a, b) => self.xor(map[a as usize], map[b as usize]),
            };
            map.push(k);
        }
        map[c.output()]
    }

    /// 1 iff at least `k` of `xs` are 1.
    pub fn threshold(&mut self, xs: &[u32], k: usize) -> u32 {
        // at_least[j] = at least j of the inputs seen so far are set
        let mut at_least: Vec<u32> = vec![self.constant(true)];
        at_least.extend((0..k).map(|_| self.constant(false)));
        for &x in xs {
            for j in (1..=k).rev() {
                let carry = self.and(x, at_least[j - 1]);
                at_least[j] = self.or(at_least[j], carry);
            }
        }
        at_least[k]
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn finish(self, output: u32) -> Circuit {
        Circuit::new(self.arity, self.gates, output as usize).expect("builder keeps invariants")
    }
}

/// Circuit computing the Boolean function with the given truth table
/// (entry `v` is the value on the input whose big-endian reading is `v`).
pub fn truth_table_circuit(arity: usize, table: &[bool]) -> Circuit {
    assert_eq!(table.len(), 1 << arity);
    let mut b = CircuitBuilder::new(arity);
    // Shannon expansion, last input innermost.
    let mut layer: Vec<u32> = table.iter().map(|&v| b.constant(v)).collect();
    for i in (0..arity).rev() {
        let sel = b.input(i);
        layer = layer
            .chunks(2)
            .map(|pair| b.mux(sel, pair[1], pair[0]))
            .collect();
    }
    let out = layer[0];
    b.finish(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn and2() -> Circuit {
        let mut b = CircuitBuilder::new(2);
        let g = b.and(0, 1);
        b.finish(g)
    }

    #[test]
    fn eval_examples() {
        assert!(Circuit::constant(0, true).eval(&[]).unwrap());
        let mut b = CircuitBuilder::new(1);
        let g = b.not(0);
        assert!(!b.finish(g).eval(&[true]).unwrap());
        assert!(and2().eval(&[true, true]).unwrap());
        assert!(!and2().eval(&[true, false]).unwrap());
        assert!(matches!(and2().eval(&[true]), Err(LabError::InputShape(_))));
    }

    #[test]
    fn rejects_bad_topology() {
        let gates = vec![Gate::Input(0), Gate::And(0, 2), Gate::Const(true)];
        assert!(Circuit::new(1, gates, 1).is_err());
        assert!(Circuit::new(1, vec![Gate::Input(0)], 3).is_err());
    }

    #[test]
    fn netlist_text() {
        let c = and2();
        let text = c.to_netlist();
        assert_eq!(text, "inputs 2\ng2 = AND2 g0 g1\noutput g2\n");
        assert_eq!(Circuit::from_netlist(&text).unwrap(), c);
        assert_eq!(c.description_length(), 8 * text.len() as u64);
        for extra in 0..5 {
            let padded = c.to_padded_netlist(text.len() + extra).unwrap();
            assert_eq!(padded.len(), text.len() + extra);
            assert_eq!(Circuit::from_netlist(&padded).unwrap(), c);
        }
        assert!(c.to_padded_netlist(3).is_err());
    }

    #[test]
    fn truth_tables() {
        let table = [false, true, true, false, true, false, false, true];
        let c = truth_table_circuit(3, &table);
        for v in 0..8usize {
            let x: Vec<bool> = (0..3).map(|i| (v >> (2 - i)) & 1 == 1).collect();
            assert_eq!(c.eval(&x).unwrap(), table[v]);
        }
    }

    #[test]
    fn embed_and_threshold() {
        let inner = and2();
        let mut b = CircuitBuilder::new(3);
        let e = b.embed(&inner, &[2, 0]);
        let maj = b.threshold(&[0, 1, 2], 2);
        let out = b.xor(e, maj);
        let c = b.finish(out);
        for v in 0..8usize {
            let x: Vec<bool> = (0..3).map(|i| (v >> i) & 1 == 1).collect();
            let count = x.iter().filter(|&&q| q).count();
            assert_eq!(c.eval(&x).unwrap(), (x[2] && x[0]) ^ (count >= 2));
        }
    }

    pub(crate) fn arb_circuit(
        max_arity: usize,
        max_gates: usize,
    ) -> impl Strategy<Value = Circuit> {
        (
            1..=max_arity,
            proptest::collection::vec((0u8..6, any::<u32>(), any::<u32>()), 1..max_gates),
        )
            .prop_map(|(n, ops)| {
                let mut b = CircuitBuilder::new(n);
                let mut last = 0u32;
                for (op, x, y) in ops {
                    let len = b.len() as u32;
                    let (x, y) = (x % len, y % len);
                    last = match op {
                        0 => b.not(x),
                        1 => b.and(x, y),
                        2 => b.or(x, y),
                        3 => b.xor(x, y),
                        4 => b.constant(x % 2 == 0),
                        _ => b.mux(x, y, last),
                    };
                }
                b.finish(last)
            })
    }

    proptest! {
        #[test]
        fn netlist_roundtrip_is_bit_exact(c in arb_circuit(6, 30)) {
            let text = c.to_netlist();
            let back = Circuit::from_netlist(&text).unwrap();
            prop_assert_eq!(&back, &c);
            prop_assert_eq!(back.to_netlist(), text);
        }

        #[test]
        fn word_eval_matches_scalar(c in arb_circuit(6, 30), seed in any::<u64>()) {
            let words: Vec<u64> = (0..c.input_arity() as u64)
                .map(|i| seed.rotate_left(i as u32 * 7) ^ (i.wrapping_mul(0x9e3779b97f4a7c15)))
                .collect();
            let mut buf = Vec::new();
            let out = c.eval_words(&words, &mut buf);
            for lane in 0..64 {
                let x: Vec<bool> = words.iter().map(|w| (w >> lane) & 1 == 1).collect();
                prop_assert_eq!((out >> lane) & 1 == 1, c.eval(&x).unwrap());
            }
        }
    }
}
