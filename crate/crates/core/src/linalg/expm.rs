//! Matrix exponential by scaling and squaring with diagonal Padé approximants.
//!
//! Degree and scaling are chosen from `||X^k||_1^(1/k)` rather than `||X||_1`
//! alone, with a backward-error correction that prevents over-scaling of
//! non-normal matrices (Al-Mohy and Higham, 2009). Powers of `X` are
//! computed exactly, so their norms are exact as well.

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::dense::{DenseLu, DenseMatrix};

const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.53939833006323e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068e0;
const THETA_13: f64 = 4.25;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Largest number of squarings accepted before reporting overflow.
const MAX_SQUARINGS: i32 = 1100;

/// `e^X` for a square matrix `X`.
pub fn expm<T: Real>(x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if !x.is_square() {
        return Err(Error::NotSquare {
            rows: x.rows(),
            cols: x.cols(),
        });
    }
    if !x.is_finite() {
        return Err(Error::Overflow("non-finite matrix entries".into()));
    }
    let n = x.rows();
    let norm = to_f(x.norm_one());
    if !norm.is_finite() {
        return Err(Error::Overflow("matrix norm is not representable".into()));
    }
    if norm == 0.0 {
        return Ok(DenseMatrix::identity(n));
    }

    let x2 = x.matmul(x);
    let x4 = x2.matmul(&x2);
    let x6 = x4.matmul(&x2);
    let d4 = to_f(x4.norm_one()).powf(0.25);
    let d6 = to_f(x6.norm_one()).powf(1.0 / 6.0);
    let eta1 = d4.max(d6);
    if eta1 <= THETA_3 && ell(x, norm, 3) == 0 {
        return pade_low(x, &[&x2], &B3);
    }
    if eta1 <= THETA_5 && ell(x, norm, 5) == 0 {
        return pade_low(x, &[&x2, &x4], &B5);
    }
    let d8 = to_f(x4.matmul(&x4).norm_one()).powf(0.125);
    let eta3 = d6.max(d8);
    if eta3 <= THETA_7 && ell(x, norm, 7) == 0 {
        return pade_low(x, &[&x2, &x4, &x6], &B7);
    }
    if eta3 <= THETA_9 && ell(x, norm, 9) == 0 {
        let x8 = x4.matmul(&x4);
        return pade_low(x, &[&x2, &x4, &x6, &x8], &B9);
    }
    let d10 = to_f(x4.matmul(&x6).norm_one()).powf(0.1);
    let eta5 = eta3.min(d8.max(d10));
    let mut s = if eta5 > THETA_13 {
        (eta5 / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    if s > MAX_SQUARINGS {
        return Err(Error::Overflow(format!(
            "norm {norm:e} beyond the scaling range"
        )));
    }
    s += ell(
        &x.scaled(T::lit(2.0f64.powi(-s))),
        norm * 2.0f64.powi(-s),
        13,
    ) as i32;
    if s > MAX_SQUARINGS {
        return Err(Error::Overflow(format!(
            "norm {norm:e} beyond the scaling range"
        )));
    }
    let c = 2.0f64.powi(-s);
    let mut r = pade13(
        &x.scaled(T::lit(c)),
        &x2.scaled(T::lit(c * c)),
        &x4.scaled(T::lit(c.powi(4))),
        &x6.scaled(T::lit(c.powi(6))),
        n,
    )?;
    for _ in 0..s {
        r = r.matmul(&r);
    }
    if !r.is_finite() {
        return Err(Error::Overflow(
            "exponential overflowed while squaring".into(),
        ));
    }
    Ok(r)
}

fn to_f<T: Real>(v: T) -> f64 {
    v.to_f64().unwrap_or(f64::INFINITY)
}

/// Extra squarings needed so that the degree-`m` approximant's backward
/// error stays at unit roundoff: `max(ceil(log2(alpha / u) / (2m)), 0)` with
/// `alpha = |c_{2m+1}| || |X|^{2m+1} ||_1 / ||X||_1`.
fn ell<T: Real>(x: &DenseMatrix<T>, norm: f64, m: usize) -> u32 {
    let n = x.rows();
    // || |X|^k ||_1 = || (|X|^T)^k 1 ||_inf.
    let mut v = vec![1.0f64; n];
    for _ in 0..(2 * m + 1) {
        let mut next = vec![0.0f64; n];
        for (i, vi) in v.iter().enumerate() {
            for (j, out) in next.iter_mut().enumerate() {
                *out += to_f(x[(i, j)].abs()) * vi;
            }
        }
        v = next;
    }
    let power_norm = v.iter().fold(0.0f64, |a, b| a.max(*b));
    let alpha = error_coefficient(m) * power_norm / norm;
    let u = to_f(T::epsilon()) / 2.0;
    let l = ((alpha / u).log2() / (2 * m) as f64).ceil();
    if l.is_finite() && l > 0.0 {
        l as u32
    } else {
        0
    }
}

/// `(m!)^2 / ((2m)! (2m + 1)!)`, the leading error coefficient of the
/// degree-`m` diagonal Padé approximant.
fn error_coefficient(m: usize) -> f64 {
    let mut c = 1.0f64;
    for k in 1..=m {
        // (m!)^2 / (2m)! = prod k / (m + k)
        c *= k as f64 / (m + k) as f64;
    }
    for k in 1..=(2 * m + 1) {
        c /= k as f64;
    }
    c
}

fn combine<T: Real>(
    terms: &[(f64, &DenseMatrix<T>)],
    n: usize,
    identity_coeff: f64,
) -> DenseMatrix<T> {
    let mut out = DenseMatrix::identity(n).scaled(T::lit(identity_coeff));
    for (c, m) in terms {
        out = out.add_scaled(T::lit(*c), m);
    }
    out
}

fn solve_pade<T: Real>(u: DenseMatrix<T>, v: DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    let q = v.add_scaled(-T::one(), &u);
    let p = v.add_scaled(T::one(), &u);
    Ok(DenseLu::factor(&q)?.solve_matrix(&p))
}

fn pade_low<T: Real>(
    x: &DenseMatrix<T>,
    even_powers: &[&DenseMatrix<T>],
    b: &[f64],
) -> Result<DenseMatrix<T>> {
    let n = x.rows();
    // U = X (b1 I + b3 X^2 + ...), V = b0 I + b2 X^2 + ...
    let odd_terms: Vec<(f64, &DenseMatrix<T>)> = even_powers
        .iter()
        .enumerate()
        .map(|(k, p)| (b[2 * k + 3], *p))
        .collect();
    let even_terms: Vec<(f64, &DenseMatrix<T>)> = even_powers
        .iter()
        .enumerate()
        .map(|(k, p)| (b[2 * k + 2], *p))
        .collect();
    let u = x.matmul(&combine(&odd_terms, n, b[1]));
    let v = combine(&even_terms, n, b[0]);
    solve_pade(u, v)
}

fn pade13<T: Real>(
    x: &DenseMatrix<T>,
    x2: &DenseMatrix<T>,
    x4: &DenseMatrix<T>,
    x6: &DenseMatrix<T>,
    n: usize,
) -> Result<DenseMatrix<T>> {
    let b = &B13;
    let inner_u = combine(&[(b[13], x6), (b[11], x4), (b[9], x2)], n, 0.0);
    let u = x.matmul(
        &x6.matmul(&inner_u)
            .add_scaled(T::lit(b[7]), x6)
            .add_scaled(T::lit(b[5]), x4)
            .add_scaled(T::lit(b[3]), x2)
            .add_scaled(T::one(), &DenseMatrix::identity(n).scaled(T::lit(b[1]))),
    );
    let inner_v = combine(&[(b[12], x6), (b[10], x4), (b[8], x2)], n, 0.0);
    let v = x6
        .matmul(&inner_v)
        .add_scaled(T::lit(b[6]), x6)
        .add_scaled(T::lit(b[4]), x4)
        .add_scaled(T::lit(b[2]), x2)
        .add_scaled(T::one(), &DenseMatrix::identity(n).scaled(T::lit(b[0])));
    solve_pade(u, v)
}

/// `||X^n||_inf` for `n = 0..=n_max`, by repeated multiplication `P <- P X`.
pub fn matrix_power_norms<T: Real>(x: &DenseMatrix<T>, n_max: usize) -> Result<Vec<T>> {
    let (norms, overflowed) = power_norms_until_overflow(x, n_max)?;
    if overflowed {
        return Err(Error::Overflow(format!(
            "matrix power {} is not finite",
            norms.len()
        )));
    }
    Ok(norms)
}

/// Like [`matrix_power_norms`] but stops at the first non-finite power and
/// reports whether that happened instead of failing.
pub fn power_norms_until_overflow<T: Real>(
    x: &DenseMatrix<T>,
    n_max: usize,
) -> Result<(Vec<T>, bool)> {
    if !x.is_square() {
        return Err(Error::NotSquare {
            rows: x.rows(),
            cols: x.cols(),
        });
    }
    let mut norms = Vec::with_capacity(n_max + 1);
    let mut p = DenseMatrix::identity(x.rows());
    norms.push(p.norm_inf());
    for _ in 0..n_max {
        p = p.matmul(x);
        let nrm = p.norm_inf();
        if !nrm.is_finite() {
            return Ok((norms, true));
        }
        norms.push(nrm);
    }
    Ok((norms, false))
}
