//! Saturated fractions of two-factor `I × J` designs under the simple-effect
//! model `μ_ij = μ + α_i + β_j`.
//!
//! A fraction with `I + J − 1` points is saturated exactly when its points,
//! read as edges of the complete bipartite graph `K_{I,J}`, form a spanning
//! tree. This crate certifies saturation (by cycle detection and, as an
//! independent check, by an exact integer determinant), counts and enumerates
//! saturated fractions, samples them uniformly, and runs fixed-margin Markov
//! chains over binary tables using the circuit basis of `K_{I,J}`.
//!
//! All level indices exposed by this crate are 1-based.

pub mod cycles;
pub mod design;
mod error;
pub mod format;
pub mod linalg;
pub mod markov;
pub mod saturation;
mod unionfind;

pub use cycles::{KCycle, OaPair};
pub use design::{BinaryTable, DesignSize, Fraction, Margins, Point};
pub use error::{Error, Result};
pub use linalg::ModelMatrix;
pub use markov::{Circuit, MarkovChain, MarkovMove};

/// Default upper bound on the number of objects an exhaustive routine is
/// allowed to produce.
pub const DEFAULT_CAP: u64 = 10_000_000;
