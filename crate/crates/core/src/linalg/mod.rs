//! Dense and tridiagonal linear algebra.

mod dense;
mod expm;
mod tridiagonal;

pub use dense::{norm_inf_vec, DenseLu, DenseMatrix};
pub use expm::{expm, matrix_power_norms, power_norms_until_overflow};
pub use tridiagonal::{
    solve_tridiagonal, TridiagonalFactorization, TridiagonalMatrix, TridiagonalSystem,
};
