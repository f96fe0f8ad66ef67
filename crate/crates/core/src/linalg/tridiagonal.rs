use crate::error::{Error, Result};
use crate::scalar::Real;

use super::dense::DenseMatrix;

/// Tridiagonal matrix stored by diagonals. `lower[i]` is the entry at
/// `(i, i-1)` and `upper[i]` the entry at `(i, i+1)`; `lower[0]` and
/// `upper[n-1]` are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalMatrix<T> {
    pub lower: Vec<T>,
    pub diag: Vec<T>,
    pub upper: Vec<T>,
}

/// A tridiagonal matrix together with a right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSystem<T> {
    pub matrix: TridiagonalMatrix<T>,
    pub rhs: Vec<T>,
}

impl<T: Real> TridiagonalMatrix<T> {
    pub fn new(lower: Vec<T>, diag: Vec<T>, upper: Vec<T>) -> Result<Self> {
        let n = diag.len();
        for len in [lower.len(), upper.len()] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: len,
                });
            }
        }
        if n == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        let mut m = Self { lower, diag, upper };
        m.lower[0] = T::zero();
        m.upper[n - 1] = T::zero();
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(x.len(), n);
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * x[i];
                if i > 0 {
                    acc += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    acc += self.upper[i] * x[i + 1];
                }
                acc
            })
            .collect()
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let n = self.dim();
        let mut out = DenseMatrix::zeros(n, n);
        for i in 0..n {
            out[(i, i)] = self.diag[i];
            if i > 0 {
                out[(i, i - 1)] = self.lower[i];
            }
            if i + 1 < n {
                out[(i, i + 1)] = self.upper[i];
            }
        }
        out
    }

    pub fn norm_inf(&self) -> T {
        (0..self.dim())
            .map(|i| self.row_offdiag_abs(i) + self.diag[i].abs())
            .fold(T::zero(), T::max)
    }

    /// Logarithmic maximum norm `max_i (x_ii + sum_{j != i} |x_ij|)`.
    pub fn log_norm_inf(&self) -> T {
        (0..self.dim())
            .map(|i| self.diag[i] + self.row_offdiag_abs(i))
            .fold(T::neg_infinity(), T::max)
    }

    fn row_offdiag_abs(&self, i: usize) -> T {
        let n = self.dim();
        let mut acc = T::zero();
        if i > 0 {
            acc += self.lower[i].abs();
        }
        if i + 1 < n {
            acc += self.upper[i].abs();
        }
        acc
    }

    /// Strict row-wise diagonal dominance with zero tolerance.
    pub fn is_strictly_diagonally_dominant(&self) -> bool {
        (0..self.dim()).all(|i| self.diag[i].abs() > self.row_offdiag_abs(i))
    }

    /// Factors the matrix: plain elimination when strictly diagonally
    /// dominant, partial pivoting otherwise.
    pub fn factor(&self) -> Result<TridiagonalFactorization<T>> {
        if self.is_strictly_diagonally_dominant() {
            Ok(self.factor_thomas())
        } else {
            self.factor_pivoted()
        }
    }

    fn factor_thomas(&self) -> TridiagonalFactorization<T> {
        let n = self.dim();
        let mut c = vec![T::zero(); n];
        let mut denom = vec![T::zero(); n];
        denom[0] = self.diag[0];
        for i in 0..n {
            if i > 0 {
                denom[i] = self.diag[i] - self.lower[i] * c[i - 1];
            }
            if i + 1 < n {
                c[i] = self.upper[i] / denom[i];
            }
        }
        TridiagonalFactorization::Thomas {
            lower: self.lower.clone(),
            c,
            denom,
        }
    }

    /// Gaussian elimination with partial pivoting restricted to the band
    /// (pivoting creates a single extra superdiagonal).
    fn factor_pivoted(&self) -> Result<TridiagonalFactorization<T>> {
        let n = self.dim();
        let mut d = self.diag.clone();
        let mut dl: Vec<T> = (0..n.saturating_sub(1))
            .map(|i| self.lower[i + 1])
            .collect();
        let mut du: Vec<T> = (0..n.saturating_sub(1)).map(|i| self.upper[i]).collect();
        let mut du2 = vec![T::zero(); n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] != T::zero() {
                    let f = dl[i] / d[i];
                    dl[i] = f;
                    d[i + 1] -= f * du[i];
                }
            } else {
                let f = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = f;
                let tmp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = tmp - f * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -f * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        if let Some(row) = d.iter().position(|x| *x == T::zero()) {
            return Err(Error::Singular { row });
        }
        Ok(TridiagonalFactorization::Pivoted {
            dl,
            d,
            du,
            du2,
            swapped,
        })
    }
}

/// Reusable factorization of a tridiagonal matrix.
#[derive(Debug, Clone)]
pub enum TridiagonalFactorization<T> {
    Thomas {
        lower: Vec<T>,
        c: Vec<T>,
        denom: Vec<T>,
    },
    Pivoted {
        dl: Vec<T>,
        d: Vec<T>,
        du: Vec<T>,
        du2: Vec<T>,
        swapped: Vec<bool>,
    },
}

impl<T: Real> TridiagonalFactorization<T> {
    pub fn is_pivoted(&self) -> bool {
        matches!(self, Self::Pivoted { .. })
    }

    pub fn solve(&self, rhs: &[T]) -> Vec<T> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        match self {
            Self::Thomas { lower, c, denom } => {
                let n = denom.len();
                assert_eq!(b.len(), n);
                b[0] /= denom[0];
                for i in 1..n {
                    b[i] = (b[i] - lower[i] * b[i - 1]) / denom[i];
                }
                for i in (0..n - 1).rev() {
                    let next = b[i + 1];
                    b[i] -= c[i] * next;
                }
            }
            Self::Pivoted {
                dl,
                d,
                du,
                du2,
                swapped,
            } => {
                let n = d.len();
                assert_eq!(b.len(), n);
                for i in 0..n - 1 {
                    if swapped[i] {
                        let tmp = b[i];
                        b[i] = b[i + 1];
                        b[i + 1] = tmp - dl[i] * b[i];
                    } else {
                        let bi = b[i];
                        b[i + 1] -= dl[i] * bi;
                    }
                }
                b[n - 1] /= d[n - 1];
                if n > 1 {
                    b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
                }
                for i in (0..n.saturating_sub(2)).rev() {
                    b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
                }
            }
        }
    }
}

/// Solves a tridiagonal system; see [`TridiagonalMatrix::factor`].
pub fn solve_tridiagonal<T: Real>(sys: &TridiagonalSystem<T>) -> Result<Vec<T>> {
    if sys.rhs.len() != sys.matrix.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.matrix.dim(),
            found: sys.rhs.len(),
        });
    }
    Ok(sys.matrix.factor()?.solve(&sys.rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dense::{norm_inf_vec, DenseLu};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn sys(l: Vec<f64>, d: Vec<f64>, u: Vec<f64>, rhs: Vec<f64>) -> TridiagonalSystem<f64> {
        TridiagonalSystem {
            matrix: TridiagonalMatrix::new(l, d, u).unwrap(),
            rhs,
        }
    }

    #[test]
    fn identity_system() {
        let s = sys(
            vec![0.0; 3],
            vec![1.0; 3],
            vec![0.0; 3],
            vec![1.0, 2.0, 3.0],
        );
        assert_eq!(solve_tridiagonal(&s).unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn two_by_two() {
        let s = sys(
            vec![0.0, 1.0],
            vec![2.0, 2.0],
            vec![1.0, 0.0],
            vec![3.0, 3.0],
        );
        let x = solve_tridiagonal(&s).unwrap();
        assert_relative_eq!(x[0], 1.0, max_relative = 1e-15);
        assert_relative_eq!(x[1], 1.0, max_relative = 1e-15);
    }

    #[test]
    fn pivoting_fallback_handles_zero_diagonal() {
        // [[0,1,0],[1,0,1],[0,1,1]] is invertible but has zero diagonal entries.
        let s = sys(
            vec![0.0, 1.0, 1.0],
            vec![0.0, 0.0, 1.0],
            vec![1.0, 1.0, 0.0],
            vec![1.0, 2.0, 3.0],
        );
        assert!(!s.matrix.is_strictly_diagonally_dominant());
        let f = s.matrix.factor().unwrap();
        assert!(f.is_pivoted());
        let x = f.solve(&s.rhs);
        let r = s.matrix.mul_vec(&x);
        for (a, b) in r.iter().zip(&s.rhs) {
            assert_relative_eq!(a, b, max_relative = 1e-14);
        }
    }

    #[test]
    fn singular_is_reported() {
        let s = sys(
            vec![0.0, 1.0],
            vec![1.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
        );
        assert!(matches!(solve_tridiagonal(&s), Err(Error::Singular { .. })));
    }

    #[test]
    fn single_unknown() {
        let s = sys(vec![0.0], vec![4.0], vec![0.0], vec![2.0]);
        assert_eq!(solve_tridiagonal(&s).unwrap(), vec![0.5]);
        let s = sys(vec![0.0], vec![0.0], vec![0.0], vec![2.0]);
        assert!(solve_tridiagonal(&s).is_err());
    }

    #[test]
    fn log_norm_of_tridiagonal() {
        let t = TridiagonalMatrix::new(vec![0.0, 1.0], vec![-2.0, -2.0], vec![1.0, 0.0]).unwrap();
        assert_eq!(t.log_norm_inf(), -1.0);
    }

    fn residual_ok(m: &TridiagonalMatrix<f64>, x: &[f64], b: &[f64]) -> bool {
        let r: Vec<f64> = m.mul_vec(x).iter().zip(b).map(|(a, c)| a - c).collect();
        norm_inf_vec(&r) <= 1e-10 * (m.norm_inf() * norm_inf_vec(x) + norm_inf_vec(b))
    }

    proptest! {
        #[test]
        fn matches_dense_lu_on_dominant_systems(
            n in 1usize..200,
            seed in proptest::collection::vec(-1.0f64..1.0, 600),
        ) {
            let l: Vec<f64> = (0..n).map(|i| seed[i % 600]).collect();
            let u: Vec<f64> = (0..n).map(|i| seed[(i + 200) % 600]).collect();
            let d: Vec<f64> = (0..n)
                .map(|i| l[i].abs() + u[i].abs() + 0.5 + seed[(i + 400) % 600].abs())
                .collect();
            let b: Vec<f64> = (0..n).map(|i| seed[(3 * i + 1) % 600]).collect();
            let m = TridiagonalMatrix::new(l, d, u).unwrap();
            let x = m.factor().unwrap().solve(&b);
            let y = DenseLu::factor(&m.to_dense()).unwrap().solve(&b);
            for (a, c) in x.iter().zip(&y) {
                prop_assert!((a - c).abs() <= 1e-10 * (1.0 + c.abs()));
            }
            prop_assert!(residual_ok(&m, &x, &b));
        }

        #[test]
        fn pivoted_path_has_small_residual(
            n in 2usize..60,
            seed in proptest::collection::vec(-1.0f64..1.0, 180),
        ) {
            let l: Vec<f64> = (0..n).map(|i| 2.0 + seed[i % 180]).collect();
            let u: Vec<f64> = (0..n).map(|i| 2.0 + seed[(i + 60) % 180]).collect();
            let d: Vec<f64> = (0..n).map(|i| seed[(i + 120) % 180]).collect();
            let b: Vec<f64> = (0..n).map(|i| seed[(7 * i) % 180]).collect();
            let m = TridiagonalMatrix::new(l, d, u).unwrap();
            if let Ok(f) = m.factor() {
                prop_assert!(f.is_pivoted());
                let x = f.solve(&b);
                prop_assert!(residual_ok(&m, &x, &b));
            }
        }
    }
}
