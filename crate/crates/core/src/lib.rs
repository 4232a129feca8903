//! Toy-scale laboratory for pseudodeterministic constructions.
//!
//! Everything runs on a fixed toy probabilistic machine (see [`machine`]) and
//! gate-list circuits (see [`circuit`]); exact dyadic arithmetic makes every
//! probabilistic quantity checkable bit for bit.

pub mod bits;
pub mod capp;
pub mod circuit;
pub mod compile;
pub mod diag;
pub mod dyadic;
pub mod error;
pub mod kolmogorov;
pub mod machine;
pub mod manifest;
pub mod nw;
pub mod primes;
pub mod rktconstruct;
pub mod sampler;
pub mod structured;

pub use error::{LabError, Result};
