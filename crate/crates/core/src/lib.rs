//! Workbench for long-range percolation under truncation.
//!
//! The crate is organized around the objects the experiments consume:
//!
//! * [`kernel`]: connection-probability kernels `x ↦ p_x`, truncation,
//!   layer normalization and the split-domination check.
//! * [`percolation`]: seeded configuration sampling on finite boxes,
//!   disjoint-set cluster analysis, reach estimates and the `φ(S)` functional.
//! * [`dispersion`]: exact laws of signed coefficient sums and the cosine
//!   moments that bound their point masses.
//! * [`treepaths`]: the ternary spin-tree walk, its exact level sums and
//!   predictability estimates.
//! * [`pathmeasure`]: the three self-avoiding path-measure families and
//!   their intersection estimators.
//! * [`overlap`]: weighted overlaps, second-moment estimates, the exact
//!   Paley–Zygmund verifier and the planar cutset obstruction.
//! * [`potts`]: the Fortuin–Kasteleyn bridge to the Potts model.
//! * [`config`], [`report`], [`experiment`]: experiment orchestration used by
//!   the command-line front end.

pub mod config;
pub mod dispersion;
pub mod experiment;
pub mod kernel;
pub mod lattice;
pub mod overlap;
pub mod pathmeasure;
pub mod percolation;
pub mod potts;
pub mod report;
pub mod rng;
pub mod stats;
pub mod treepaths;
pub mod trials;
pub mod unionfind;

pub use kernel::{EdgeKernel, Kernel, KernelFamily, Norm, SymmetryClass, TruncatedKernel};
pub use stats::EstimateWithCI;
