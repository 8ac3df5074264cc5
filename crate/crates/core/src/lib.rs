//! Bounds on quantities that depend on an *untrained* L2-regularized model.
//!
//! For problems of the form
//!
//! ```text
//! w*_C = argmin_w  ½‖w‖² + C Σᵢ ℓ(yᵢ, φ(xᵢ)ᵀw)
//! ```
//!
//! any vector `w̃` (a suboptimal model, a model trained at another `C`, a
//! model trained with a different loss) pins `w*_C` inside a ball whose
//! center and radius are cheap to compute. Inner products `θᵀw*_C` are then
//! bounded analytically, which is enough to certify validation errors,
//! coefficients, log-odds and Lasso residuals without solving for `w*_C`.
//!
//! The crate is organised as:
//!
//! - [`dataset`]: LIBSVM parsing, splits, kernels and Gram matrices.
//! - [`geometry`]: feature-space vectors, certifying balls, two-ball lenses.
//! - [`loss`]: logistic and hinge losses, gradient sums, decision values.
//! - [`trainer`]: high-precision solvers (Newton, dual coordinate descent,
//!   Lasso coordinate descent).
//! - [`bounds`]: balls from suboptimal models, C-parametrized bound curves,
//!   validation-error bounds and sign-stability ranges.
//! - [`selection`]: pruned grid search, ε-approximate validation paths,
//!   fast leave-one-out CV and logistic inference from an SVM.
//! - [`lasso`]: dual-ball bounds, residual bounds and safe screening.

pub mod bounds;
pub mod dataset;
pub mod error;
pub mod geometry;
pub mod lasso;
pub mod loss;
pub mod selection;
pub mod trainer;

pub use error::{Error, Result};
