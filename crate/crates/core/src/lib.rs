//! Multiview twin parametric-margin support vector machine.
//!
//! The crate trains a two-view binary classifier by solving two structured
//! dual quadratic programs, one per class. Each dual has `4·m` variables for
//! a class of size `m`, laid out as `(β1 | β2 | α1 | α2)`, and is solved by a
//! projected-gradient method or by exact cyclic coordinate descent.
//!
//! Module map:
//!
//! - [`kernel`]: kernel functions and bias-augmented Gram matrices.
//! - [`qp`]: the structured QP, its feasible-set projection and both solvers.
//! - [`model`]: dual assembly, training, hyperplane evaluation, duality gap.
//! - [`preprocess`]: feature scaling and PCA (view-B synthesis).
//! - [`data`]: datasets, manifests, CSV loading, splits, synthetic generators.
//! - [`eval`]: metrics, cross-validated grid search, benchmark runs.
//! - [`stats`]: average ranks, Friedman, Nemenyi, win-tie-loss.
//! - [`persist`]: versioned JSON model files.

pub mod data;
pub mod error;
pub mod eval;
pub mod kernel;
pub mod model;
pub mod persist;
pub mod preprocess;
pub mod qp;
pub(crate) mod serde_matrix;
pub mod stats;

pub use error::{MvtpmError, Result};
pub use kernel::{KernelKind, KernelSpec};
pub use model::{Hyperparams, MvTpmModel, ViewSplit};
pub use qp::{QpSolution, SolverKind, SolverOptions, StructuredQp};
