//! Closed forms for the boundary block and numerical verification of the
//! semidiscrete and fully discrete stability inclusions.

use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::linalg::{expm, power_norms_until_overflow, DenseLu, DenseMatrix, TridiagonalMatrix};
use crate::operator::{
    check_stability_condition, BoundaryTreatment, ConditionVerdict, DiscreteOperator, SchemeKind,
};
use crate::scalar::Real;
use crate::table::{fmt_real, CsvTable};

pub(crate) const STABILITY_HEADER: [&str; 6] = ["m", "t_or_n", "norm", "lower", "upper", "verdict"];

/// Relative slack applied to both ends of an inclusion.
pub const INCLUSION_SLACK: f64 = 1e-8;

/// Absolute tolerance for the vanishing lower-left block of `e^{tM}`.
pub const BLOCK_TOLERANCE: f64 = 1e-10;

fn boundary_quantities<T: Real>(grid: &Grid<T>) -> (T, T, T) {
    let m = grid.m();
    (grid.cap(), grid.s(m + 1), grid.last_width())
}

/// `e^{tC}` from its closed form.
pub fn exp_tc_closed_form<T: Real>(grid: &Grid<T>, r: T, t: T) -> DenseMatrix<T> {
    let (cap, sm1, h) = boundary_quantities(grid);
    let e = (-r * t).exp();
    let mut out = DenseMatrix::zeros(2, 2);
    out[(0, 0)] = (cap * e - sm1) / h;
    out[(0, 1)] = sm1 * (T::one() - e) / h;
    out[(1, 0)] = cap * (e - T::one()) / h;
    out[(1, 1)] = (cap - sm1 * e) / h;
    out
}

/// `||e^{tC}||_inf = e^{-rt} + (1 - e^{-rt}) 2S/h_{m+2}`.
pub fn norm_exp_tc<T: Real>(grid: &Grid<T>, r: T, t: T) -> T {
    let (cap, _, h) = boundary_quantities(grid);
    let e = (-r * t).exp();
    e + (T::one() - e) * T::lit(2.0) * cap / h
}

/// Lower and upper bounds on `||e^{tM}||_inf`:
/// `e^{-rt} + (1 - e^{-rt}) 2S/h` and `e^{-rt} + (1 + 3e^{-rt}) 2S/h`.
pub fn theoretical_inclusion<T: Real>(grid: &Grid<T>, r: T, t: T) -> (T, T) {
    let (cap, _, h) = boundary_quantities(grid);
    let e = (-r * t).exp();
    let ratio = T::lit(2.0) * cap / h;
    (
        e + (T::one() - e) * ratio,
        e + (T::one() + T::lit(3.0) * e) * ratio,
    )
}

/// `phi(z) = (1 + (1 - theta) z) / (1 - theta z)`.
pub fn stability_function<T: Real>(theta: T, z: T) -> T {
    (T::one() + (T::one() - theta) * z) / (T::one() - theta * z)
}

fn check_theta<T: Real>(theta: T, dt: T) -> Result<()> {
    if !(theta >= T::lit(0.5) && theta <= T::one()) {
        return Err(invalid("theta", "must lie in [1/2, 1]"));
    }
    if !(dt > T::zero()) {
        return Err(invalid("dt", "time step must be positive"));
    }
    Ok(())
}

/// `||phi(dt C)^n||_inf = x^n + (1 - x^n) 2S/h_{m+2}` with `x = phi(-r dt)`.
pub fn phi_power_norm_c<T: Real>(grid: &Grid<T>, r: T, theta: T, dt: T, n: usize) -> Result<T> {
    check_theta(theta, dt)?;
    let (cap, _, h) = boundary_quantities(grid);
    let x = stability_function(theta, -r * dt);
    let xn = x.powi(n as i32);
    Ok(xn + (T::one() - xn) * T::lit(2.0) * cap / h)
}

/// `phi(dt X) = (I - theta dt X)^{-1} (I + (1 - theta) dt X)`.
pub fn phi_matrix<T: Real>(x: &DenseMatrix<T>, theta: T, dt: T) -> Result<DenseMatrix<T>> {
    check_theta(theta, dt)?;
    let n = x.rows();
    let id = DenseMatrix::identity(n);
    let lhs = id.add_scaled(-theta * dt, x);
    let rhs = id.add_scaled((T::one() - theta) * dt, x);
    Ok(DenseLu::factor(&lhs)?.solve_matrix(&rhs))
}

/// Whether a sample of a report lies inside its bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleVerdict {
    Inside,
    Outside,
    /// The sufficient condition fails, so no inclusion is asserted.
    Unverifiable,
}

impl SampleVerdict {
    pub fn label(self) -> &'static str {
        match self {
            SampleVerdict::Inside => "inside",
            SampleVerdict::Outside => "outside",
            SampleVerdict::Unverifiable => "unverifiable",
        }
    }
}

/// One measured norm with its theoretical bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityRecord<T> {
    pub m: usize,
    /// Time `t` for `e^{tM}`, step count `n` for `phi(dt M)^n`.
    pub t_or_n: T,
    pub norm: T,
    pub lower: T,
    pub upper: T,
    pub verdict: SampleVerdict,
    /// Largest absolute entry of the lower-left block, where measured.
    pub block_residual: Option<T>,
}

/// Measured norms against an inclusion for one operator.
#[derive(Debug, Clone)]
pub struct StabilityReport<T> {
    pub scheme: SchemeKind,
    pub treatment: BoundaryTreatment,
    pub r: T,
    pub sigma: T,
    pub cap: T,
    pub grid: String,
    pub condition: ConditionVerdict,
    /// Measured `max_n ||phi(dt A)^n||_inf` for discrete reports.
    pub k_estimate: Option<T>,
    pub records: Vec<StabilityRecord<T>>,
}

impl<T: Real> StabilityReport<T> {
    /// `true` when the condition holds and every record is inside.
    pub fn all_inside(&self) -> bool {
        self.condition.holds()
            && self
                .records
                .iter()
                .all(|r| r.verdict == SampleVerdict::Inside)
    }

    /// Largest lower-left block residual over all records.
    pub fn max_block_residual(&self) -> Option<T> {
        self.records
            .iter()
            .filter_map(|r| r.block_residual)
            .reduce(T::max)
    }

    /// CSV with columns `m,t_or_n,norm,lower,upper,verdict`.
    pub fn to_csv(&self) -> String {
        let mut out = CsvTable::new(&STABILITY_HEADER);
        self.append_csv_rows(&mut out);
        out.finish()
    }

    pub(crate) fn append_csv_rows(&self, out: &mut CsvTable) {
        for r in &self.records {
            out.push([
                r.m.to_string(),
                fmt_real(r.t_or_n),
                fmt_real(r.norm),
                fmt_real(r.lower),
                fmt_real(r.upper),
                r.verdict.label().to_string(),
            ]);
        }
    }
}

/// Places `norm` against `[lower, upper]` widened by [`INCLUSION_SLACK`].
/// Without the sufficient condition nothing is asserted.
pub fn classify_sample<T: Real>(holds: bool, norm: T, lower: T, upper: T) -> SampleVerdict {
    if !holds {
        return SampleVerdict::Unverifiable;
    }
    let slack = T::lit(INCLUSION_SLACK);
    if norm >= lower * (T::one() - slack) && norm <= upper * (T::one() + slack) {
        SampleVerdict::Inside
    } else {
        SampleVerdict::Outside
    }
}

fn lower_left_residual<T: Real>(x: &DenseMatrix<T>, m: usize) -> T {
    let mut worst = T::zero();
    for i in m..m + 2 {
        for j in 0..m {
            worst = worst.max(x[(i, j)].abs());
        }
    }
    worst
}

fn empty_report<T: Real>(
    op: &DiscreteOperator<T>,
    condition: ConditionVerdict,
) -> StabilityReport<T> {
    let p = op.params();
    StabilityReport {
        scheme: op.scheme(),
        treatment: op.treatment(),
        r: p.r,
        sigma: p.sigma,
        cap: op.grid().cap(),
        grid: op.grid().describe(),
        condition,
        k_estimate: None,
        records: Vec::new(),
    }
}

/// Visits `e^{tM}` for each sample in order. Non-negative integer samples
/// reuse the powers of `e^M`; other samples get their own exponential.
pub fn visit_exp_tm<T: Real>(
    op: &DiscreteOperator<T>,
    t_samples: &[T],
    mut visit: impl FnMut(T, &DenseMatrix<T>) -> Result<()>,
) -> Result<()> {
    if t_samples
        .iter()
        .any(|t| !(*t >= T::zero()) || !t.is_finite())
    {
        return Err(invalid("t", "sample times must be finite and non-negative"));
    }
    let m_dense = op.to_dense();
    let mut e: Option<DenseMatrix<T>> = None;
    // Current power e^{kM} and its exponent.
    let mut power = DenseMatrix::identity(op.dim());
    let mut k = 0usize;
    for &t in t_samples {
        match t.to_usize().filter(|_| t.fract() == T::zero()) {
            Some(target) => {
                if target < k {
                    power = DenseMatrix::identity(op.dim());
                    k = 0;
                }
                if target > k && e.is_none() {
                    e = Some(expm(&m_dense)?);
                }
                while k < target {
                    power = power.matmul(e.as_ref().expect("exponential computed"));
                    k += 1;
                }
                visit(t, &power)?;
            }
            None => visit(t, &expm(&m_dense.scaled(t))?)?,
        }
    }
    Ok(())
}

/// `e^{tM}` at each sample; see [`visit_exp_tm`].
pub fn exp_tm_samples<T: Real>(
    op: &DiscreteOperator<T>,
    t_samples: &[T],
) -> Result<Vec<DenseMatrix<T>>> {
    let mut out = Vec::with_capacity(t_samples.len());
    visit_exp_tm(op, t_samples, |_, x| {
        out.push(x.clone());
        Ok(())
    })?;
    Ok(out)
}

/// Measures `||e^{tM}||_inf` at each sample against the semidiscrete
/// inclusion and records the lower-left block residual.
///
/// LBC2 operators are rejected. When the sufficient condition fails the
/// report is still produced, with every record marked unverifiable.
pub fn verify_semidiscrete_inclusion<T: Real>(
    op: &DiscreteOperator<T>,
    t_samples: &[T],
) -> Result<StabilityReport<T>> {
    let condition = check_stability_condition(op)?;
    let holds = condition.holds();
    let mut report = empty_report(op, condition);
    let m = op.m();
    let r = op.params().r;
    let grid = op.grid();
    let records = &mut report.records;
    visit_exp_tm(op, t_samples, |t, x| {
        let norm = x.norm_inf();
        if !norm.is_finite() {
            return Err(Error::Overflow(format!("||e^(tM)|| at t = {t}")));
        }
        let (lower, upper) = theoretical_inclusion(grid, r, t);
        records.push(StabilityRecord {
            m,
            t_or_n: t,
            norm,
            lower,
            upper,
            verdict: classify_sample(holds, norm, lower, upper),
            block_residual: Some(lower_left_residual(x, m)),
        });
        Ok(())
    })?;
    Ok(report)
}

/// Result of a sweep of `||e^{tM}||_inf` over `t = 0, 1, ..., t_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult<T> {
    pub norms: Vec<T>,
    pub max_norm: T,
    pub argmax: usize,
    /// A power of `e^M` overflowed; `norms` stops before it.
    pub overflowed: bool,
}

/// `max_t ||e^{tM}||_inf` over the integer times `0..=t_max`, computed as
/// norms of powers of `e^M`.
pub fn max_norm_sweep<T: Real>(op: &DiscreteOperator<T>, t_max: usize) -> Result<SweepResult<T>> {
    let e = match expm(&op.to_dense()) {
        Ok(e) => e,
        Err(Error::Overflow(_)) => {
            return Ok(SweepResult {
                norms: vec![T::one()],
                max_norm: T::infinity(),
                argmax: 1,
                overflowed: true,
            })
        }
        Err(err) => return Err(err),
    };
    let (norms, overflowed) = power_norms_until_overflow(&e, t_max)?;
    let (argmax, max_norm) =
        norms
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, T::neg_infinity()),
                |acc, (k, v)| if v > acc.1 { (k, v) } else { acc },
            );
    Ok(SweepResult {
        max_norm: if overflowed { T::infinity() } else { max_norm },
        argmax: if overflowed { norms.len() } else { argmax },
        norms,
        overflowed,
    })
}

/// `2S / h_{m+2}`, the predicted large-time size of `||e^{tM}||_inf`.
pub fn boundary_ratio<T: Real>(grid: &Grid<T>) -> T {
    T::lit(2.0) * grid.cap() / grid.last_width()
}

/// `max_{0 <= n <= n_max} ||phi(dt A)^n||_inf`.
pub fn measure_k<T: Real>(op: &DiscreteOperator<T>, theta: T, dt: T, n_max: usize) -> Result<T> {
    let a = op.block_a().to_dense();
    let phi = phi_matrix(&a, theta, dt)?;
    let (norms, overflowed) = power_norms_until_overflow(&phi, n_max)?;
    if overflowed {
        return Err(Error::Overflow("powers of phi(dt A)".into()));
    }
    Ok(norms.into_iter().fold(T::zero(), T::max))
}

/// Measures `||phi(dt M)^n||_inf` for `n = 0..=n_max` against
/// `x^n + (1 - x^n) 2S/h <= . <= K + 4(K + 1) S/h`. `K` is measured when not
/// supplied.
pub fn verify_discrete_inclusion<T: Real>(
    op: &DiscreteOperator<T>,
    theta: T,
    dt: T,
    n_max: usize,
    k_estimate: Option<T>,
) -> Result<StabilityReport<T>> {
    let condition = check_stability_condition(op)?;
    let holds = condition.holds();
    let k = match k_estimate {
        Some(k) => k,
        None => measure_k(op, theta, dt, n_max)?,
    };
    let mut report = empty_report(op, condition);
    report.k_estimate = Some(k);
    let grid = op.grid();
    let (cap, _, h) = boundary_quantities(grid);
    let upper = k + T::lit(4.0) * (k + T::one()) * cap / h;
    let phi = phi_matrix(&op.to_dense(), theta, dt)?;
    let m = op.m();
    let mut p = DenseMatrix::identity(op.dim());
    for n in 0..=n_max {
        if n > 0 {
            p = p.matmul(&phi);
        }
        let norm = p.norm_inf();
        if !norm.is_finite() {
            return Err(Error::Overflow(format!("||phi(dt M)^n|| at n = {n}")));
        }
        let lower = phi_power_norm_c(grid, op.params().r, theta, dt, n)?;
        report.records.push(StabilityRecord {
            m,
            t_or_n: T::from_usize_lossy(n),
            norm,
            lower,
            upper,
            verdict: classify_sample(holds, norm, lower, upper),
            block_residual: Some(lower_left_residual(&p, m)),
        });
    }
    Ok(report)
}

/// `|X^{-1} e_m|_inf` and the bound `1 / (-x_mm - |x_{m,m-1}|)` for a
/// tridiagonal `X`; the bound is `None` when its denominator is not positive.
pub fn inverse_last_column<T: Real>(x: &TridiagonalMatrix<T>) -> Result<(T, Option<T>)> {
    let n = x.dim();
    if n == 0 {
        return Err(invalid("A", "empty matrix"));
    }
    let mut e = vec![T::zero(); n];
    e[n - 1] = T::one();
    let v = x.factor()?.solve(&e);
    let measured = v.iter().fold(T::zero(), |a, y| a.max(y.abs()));
    let denom = -x.diag[n - 1]
        - if n > 1 {
            x.lower[n - 1].abs()
        } else {
            T::zero()
        };
    Ok((
        measured,
        if denom > T::zero() {
            Some(T::one() / denom)
        } else {
            None
        },
    ))
}
