//! Bit strings as `Vec<bool>`, written most-significant (leftmost) first.

use crate::error::{LabError, Result};

pub type Bits = Vec<bool>;

pub fn parse_bits(s: &str) -> Result<Bits> {
    s.trim()
        .chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(LabError::Parse(format!("not a bit: {other:?}"))),
        })
        .collect()
}

pub fn fmt_bits(b: &[bool]) -> String {
    b.iter().map(|&x| if x { '1' } else { '0' }).collect()
}

/// The `len`-bit big-endian encoding of `v`.
pub fn to_bits(v: u64, len: usize) -> Bits {
    (0..len)
        .rev()
        .map(|i| i < 64 && (v >> i) & 1 == 1)
        .collect()
}

pub fn from_bits(b: &[bool]) -> u64 {
    b.iter().fold(0u64, |acc, &x| (acc << 1) | x as u64)
}

/// All strings of length `len` in lexicographic order.
pub fn all_strings(len: usize) -> impl Iterator<Item = Bits> {
    (0..1u64 << len).map(move |v| to_bits(v, len))
}

/// ⌈log2 v⌉ with the convention ⌈log2 1⌉ = ⌈log2 0⌉ = 0.
pub fn ceil_log2(v: u64) -> u32 {
    if v <= 1 {
        0
    } else {
        64 - (v - 1).leading_zeros()
    }
}

pub fn floor_log2(v: u64) -> u32 {
    assert!(v > 0);
    63 - v.leading_zeros()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        for v in 0..64 {
            assert_eq!(from_bits(&to_bits(v, 6)), v);
        }
        assert_eq!(fmt_bits(&parse_bits("0110").unwrap()), "0110");
        assert!(parse_bits("01x").is_err());
    }

    #[test]
    fn logs() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(3), 2);
        assert_eq!(ceil_log2(16), 4);
        assert_eq!(ceil_log2(17), 5);
        assert_eq!(floor_log2(1), 0);
        assert_eq!(floor_log2(7), 2);
        assert_eq!(floor_log2(8), 3);
    }
}
