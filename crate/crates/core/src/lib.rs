//! Non-negative and combined sparse coding over overcomplete dictionaries.
//!
//! A signal is modelled as `y = X a + D b` where the coefficients `a` of the
//! block `X` are constrained non-negative and `b` is unconstrained. The
//! crate provides greedy (OMP, NN-OMP, COMB-OMP) and convex (BP, NN-BP,
//! COMB-BP) solvers, coherence-based recovery thresholds, a brute-force
//! minimum-l0 oracle, a Monte-Carlo benchmark engine and a patchwise image
//! restoration pipeline for saturation noise.

pub mod bench;
pub mod bounds;
pub mod cli;
pub mod convex;
pub mod dictgen;
pub mod error;
pub mod greedy;
pub mod imaging;
pub mod linalg;
mod lp;
pub mod oracle;

pub use dictgen::{CoherenceProfile, CombinedDictionary, Dictionary};
pub use error::{Error, Result};
pub use greedy::{SparseSolution, Termination};
