//! Implicit general solutions of the Hamilton–Jacobi family
//! `u_t + λ|∇u|² = 0` through the hodograph transformation.
//!
//! * [`expr`]: expression language for `Φ` and initial data, with exact
//!   gradients and Hessians.
//! * [`hj`]: the PDE family, the implicit solution, Hessian and rank.
//! * [`hodograph`]: pointwise transform and inverse, grid conjugates.
//! * [`solver`]: Newton/multistart branch finding and caustic sweeps.
//! * [`oracles`]: independent references for validation.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod expr;
pub mod field;
pub mod hj;
pub mod hodograph;
pub mod linalg;
pub mod oracles;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use expr::{ExprError, Expression, JetValue};
pub use field::{Builtin, FnField, ScalarField, SharedField};
pub use hj::{
    pde_residual_numeric, plane_wave_eval, rank_classify, BranchResult, HessianOutcome, HjSetup, ImplicitSolution,
    PlaneWaveSolution,
};
pub use linalg::DenseMatrix;
pub use scalar::Scalar;
pub use solver::{
    multistart_branches, newton_solve, select_branch, sweep_grid, BranchPolicy, BranchSet, SolveOptions, SweepTable,
};

pub type Setup = hj::HjSetup<f64>;
pub type Solution = hj::ImplicitSolution<f64>;
pub type Branch = hj::BranchResult<f64>;
pub type Branches = solver::BranchSet<f64>;
pub type Options = solver::SolveOptions<f64>;
pub type Grid = hodograph::GridSpec<f64>;
pub type Field = hodograph::GridField<f64>;
pub type Jet = expr::JetValue<f64>;
pub type Matrix = linalg::DenseMatrix<f64>;
pub type PlaneWave = hj::PlaneWaveSolution<f64>;
