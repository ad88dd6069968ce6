//! Numerical laboratory for symmetric decreasing rearrangements.
//!
//! Sets and non-negative functions sampled on uniform grids (and on weighted
//! radial manifolds `(0, ∞) × Σ`) are rearranged into their centered,
//! radially non-increasing counterparts, and the classical rearrangement,
//! isoperimetric, co-area and elliptic comparison inequalities are checked
//! numerically with explicit slack and tolerance bookkeeping.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // negated comparisons also reject NaN

pub mod error;
pub mod grid;
pub mod inequality;
pub mod io;
pub mod manifold;
pub mod pde;
pub mod perimeter;
pub mod rearrange;
pub mod report;
pub mod samples;
pub mod suite;

pub use error::{Error, Result};
pub use grid::{Grid, RegionMask, ScalarField};
pub use report::{CheckResult, VerificationReport};
pub use suite::{run_suite, Suite, SuiteConfig};
