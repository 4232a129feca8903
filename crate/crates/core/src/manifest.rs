//! Constants of the toy machine model that other modules and reports refer to.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const MANIFEST_VERSION: &str = "toy-machine/1";

/// Bits of the copy-loop literal printer `[RDI, BRF+2, OUT0, JMP 0, OUT1, JMP 0]`;
/// gap thresholds are measured above this overhead.
pub const LITERAL_OVERHEAD_BITS: u64 = 48;

/// The random-line corrector needs corruption at most 1/(8(d+1)); for bit
/// lengths m ≥ 16 and dimension d < m this holds once corruption is ≤ 1/m².
pub const SELFCORRECT_B: u32 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineManifest {
    pub version: String,
    pub instruction_bits: u32,
    pub opcode_bits: u32,
    pub operand_bits: u32,
    pub opcodes: BTreeMap<String, u8>,
    pub max_exact_steps: u64,
    pub max_exact_random_bits: u32,
    pub compile_size_k: u64,
    pub literal_overhead_bits: u64,
    /// C′ and c₀ of the truth-table prefix printer bound.
    pub prefix_printer_c_prime: u64,
    pub prefix_printer_c0: u64,
    /// Exponent C of the n·(log n)^C CAPP size bound.
    pub capp_size_log_exponent: u32,
    /// Corruption the padded-language corrector tolerates is 1/m^a with a = 2b.
    pub selfcorrect_b: u32,
    /// The instance checker repeats until its error is below 2^-this.
    pub checker_log_error: u32,
}

impl Default for MachineManifest {
    fn default() -> Self {
        use crate::machine::*;
        let opcodes = [
            ("HALT", OP_HALT),
            ("OUT0", OP_OUT0),
            ("OUT1", OP_OUT1),
            ("RND", OP_RND),
            ("RDI", OP_RDI),
            ("BRF", OP_BRF),
            ("JMP", OP_JMP),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        MachineManifest {
            version: MANIFEST_VERSION.to_string(),
            instruction_bits: 8,
            opcode_bits: 3,
            operand_bits: 5,
            opcodes,
            max_exact_steps: MAX_EXACT_STEPS,
            max_exact_random_bits: MAX_EXACT_RANDOM_BITS,
            compile_size_k: crate::compile::COMPILE_SIZE_K,
            literal_overhead_bits: LITERAL_OVERHEAD_BITS,
            prefix_printer_c_prime: crate::rktconstruct::FACT51_C_PRIME,
            prefix_printer_c0: crate::rktconstruct::FACT51_C0,
            capp_size_log_exponent: crate::capp::DEFAULT_SIZE_LOG_EXPONENT,
            selfcorrect_b: SELFCORRECT_B,
            checker_log_error: crate::structured::CHECKER_LOG_ERROR,
        }
    }
}

impl MachineManifest {
    pub fn from_json(text: &str) -> crate::Result<MachineManifest> {
        serde_json::from_str(text).map_err(|e| crate::LabError::Parse(format!("manifest: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap()
    }
}
