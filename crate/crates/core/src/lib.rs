//! Kernel and ensemble learning toolkit.
//!
//! Two families of methods built on a shared data model:
//!
//! * **Kernel methods** — Gram matrix construction and feature-space
//!   centering ([`kernel`]), kernel PCA ([`kpca`]), a kernelized
//!   hinge+ridge classifier ([`svm`]), and LAGO rare-target ranking
//!   ([`lago`]).
//! * **Ensemble methods** — AdaBoost, bagging and random forests
//!   ([`ensemble`]), and variable selection by short evolutionary runs
//!   in parallel universes combined by majority vote ([`select`]).
//!
//! Every stochastic routine takes an explicit 64-bit seed and derives
//! per-task streams through [`data::SeedTree`], so results are
//! reproducible regardless of thread count.

pub mod data;
pub mod ensemble;
pub mod error;
pub mod kernel;
pub mod kpca;
pub mod lago;
pub mod metrics;
pub mod select;
pub mod svm;
pub mod synth;

pub use data::{Dataset, Response, SeedTree, SplitSpec};
pub use error::{Error, Result};
pub use kernel::{GramMatrix, KernelSpec};
