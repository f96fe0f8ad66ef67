//! Method-of-lines discretizations of the Black-Scholes equation on a
//! truncated domain `[0, S]` with a linear boundary condition at `s = S`.
//!
//! [`grid`] builds uniform and sinh-stretched meshes, [`operator`] assembles
//! the tridiagonal semidiscrete operator `M` for five advection stencils and
//! two boundary treatments, [`stability`] measures `||e^{tM}||_inf` and
//! `||phi(dt M)^n||_inf` against closed-form inclusions, [`timestepper`]
//! integrates with the theta method, and [`experiments`] drives the sweeps
//! and acceptance checks. Numerical code is generic over `f32` and `f64`.

pub mod analytic;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod grid;
pub mod linalg;
pub mod operator;
pub mod scalar;
pub mod stability;
pub mod table;
pub mod timestepper;

pub use error::{Error, Result};
pub use grid::{Grid, GridKind};
pub use operator::{
    assemble, check_stability_condition, BoundaryData, BoundaryTreatment, ConditionVerdict,
    DiscreteOperator, ModelParams, SchemeKind,
};
pub use scalar::Real;
pub use timestepper::{solve, ThetaConfig};

pub type Grid64 = Grid<f64>;
pub type Grid32 = Grid<f32>;
pub type Operator64 = DiscreteOperator<f64>;
pub type Operator32 = DiscreteOperator<f32>;
pub type ModelParams64 = ModelParams<f64>;
pub type ModelParams32 = ModelParams<f32>;
