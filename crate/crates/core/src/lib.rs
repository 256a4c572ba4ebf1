//! Computable counterpart of the classification of countable structures by
//! algebraic behaviour of their automorphism groups.
//!
//! The crate has three layers:
//!
//! * [`signature`], [`perm`] and [`structure`] give finite signatures, the
//!   parameter-freeze language, finite-support permutations, windows of
//!   countable structures and the logic action on them;
//! * [`algebraicity`] semi-decides membership in algebraic closures and high
//!   algebraicity, producing replayable certificates;
//! * [`measures`] builds quasi-invariant samplers over a fibered parameter
//!   space with exactly computable Radon-Nikodym cocycles, and [`separation`]
//!   builds trees of permutation prefixes whose leaf translates of a compact
//!   cylinder-described set are certified pairwise disjoint.
//!
//! The `quasirand` binary exposes all of it behind JSON-reporting subcommands.

pub mod algebraicity;
pub mod error;
pub mod measures;
pub mod perm;
pub mod report;
pub mod separation;
pub mod signature;
pub mod structure;

pub use error::Error;

/// Library version embedded into every CLI report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
