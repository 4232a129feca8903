//! Exact dyadic rationals `num / 2^logden`.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dyadic {
    pub num: u128,
    pub logden: u32,
}

impl Dyadic {
    pub const ZERO: Dyadic = Dyadic { num: 0, logden: 0 };
    pub const ONE: Dyadic = Dyadic { num: 1, logden: 0 };

    pub fn new(num: u128, logden: u32) -> Dyadic {
        assert!(logden <= 120, "dyadic denominator too large");
        Dyadic { num, logden }.normalized()
    }

    fn normalized(mut self) -> Dyadic {
        if self.num == 0 {
            return Dyadic::ZERO;
        }
        let tz = self.num.trailing_zeros().min(self.logden);
        self.num >>= tz;
        self.logden -= tz;
        self
    }

    /// Numerator over the common denominator `2^logden` (which must be at least ours).
    pub fn scaled_num(&self, logden: u32) -> u128 {
        debug_assert!(logden >= self.logden);
        self.num << (logden - self.logden)
    }

    pub fn add(self, other: Dyadic) -> Dyadic {
        let l = self.logden.max(other.logden);
        Dyadic::new(self.scaled_num(l) + other.scaled_num(l), l)
    }

    pub fn half(self) -> Dyadic {
        Dyadic::new(self.num, self.logden + 1)
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / 2f64.powi(self.logden as i32)
    }

    /// Exact test of |self − other| ≤ p/q.
    pub fn within(self, other: Dyadic, p: u128, q: u128) -> bool {
        let l = self.logden.max(other.logden);
        let (a, b) = (self.scaled_num(l), other.scaled_num(l));
        let diff = a.abs_diff(b);
        diff * q <= p << l
    }

    /// Exact comparison against the rational p/q.
    pub fn cmp_ratio(self, p: u128, q: u128) -> Ordering {
        (self.num * q).cmp(&(p << self.logden))
    }

    /// Sum with exact addition; order of summands never matters.
    pub fn sum<I: IntoIterator<Item = Dyadic>>(it: I) -> Dyadic {
        it.into_iter().fold(Dyadic::ZERO, Dyadic::add)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let l = self.logden.max(other.logden);
        self.scaled_num(l).cmp(&other.scaled_num(l))
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.logden == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/2^{}", self.num, self.logden)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn basics() {
        let q = Dyadic::new(2, 3);
        assert_eq!(q, Dyadic::new(1, 2));
        assert_eq!(q.add(q).add(Dyadic::new(1, 1)), Dyadic::ONE);
        assert!(Dyadic::new(1, 1).within(Dyadic::new(5, 4), 1, 4));
        assert!(!Dyadic::new(1, 1).within(Dyadic::new(3, 4), 1, 4));
        assert_eq!(Dyadic::new(1, 1).cmp_ratio(1, 2), Ordering::Equal);
        assert_eq!(Dyadic::new(3, 3).cmp_ratio(1, 3), Ordering::Greater);
    }

    proptest! {
        #[test]
        fn addition_is_order_free(xs in proptest::collection::vec((0u128..1000, 0u32..20), 0..12)) {
            let ds: Vec<Dyadic> = xs.iter().map(|&(n, l)| Dyadic::new(n, l)).collect();
            let fwd = Dyadic::sum(ds.iter().copied());
            let rev = Dyadic::sum(ds.iter().rev().copied());
            prop_assert_eq!(fwd, rev);
            let f: f64 = ds.iter().map(|d| d.to_f64()).sum();
            prop_assert!((fwd.to_f64() - f).abs() < 1e-6);
        }
    }
}
