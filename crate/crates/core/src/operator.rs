//! Semidiscrete operator `U' = M U + b(t)` for the Black–Scholes equation
//! with the linear boundary condition `u_ss(S, t) = 0`.
//!
//! Unknowns are `u(s_1), ..., u(s_{m+2})`. Rows `1..=m` come from one of the
//! five advection-diffusion schemes; the last two rows carry the boundary
//! discretization. Row indices below are 1-based, matching the grid.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::linalg::{DenseMatrix, TridiagonalMatrix};
use crate::scalar::Real;
use crate::table::{fmt_real, CsvTable};

/// Market and contract parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams<T> {
    pub r: T,
    pub sigma: T,
    pub cap: T,
    pub strike: T,
    pub maturity: T,
}

impl<T: Real> ModelParams<T> {
    pub fn new(r: T, sigma: T, cap: T, strike: T, maturity: T) -> Result<Self> {
        let p = Self {
            r,
            sigma,
            cap,
            strike,
            maturity,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > T::zero()) || !self.r.is_finite() {
            return Err(invalid("r", "rate must be positive"));
        }
        if !(self.sigma >= T::zero()) || !self.sigma.is_finite() {
            return Err(invalid("sigma", "volatility must be non-negative"));
        }
        if !(self.maturity > T::zero()) || !self.maturity.is_finite() {
            return Err(invalid("T", "maturity must be positive"));
        }
        if !(self.strike > T::zero() && self.strike < self.cap) || !self.cap.is_finite() {
            return Err(invalid("E", "strike must lie strictly inside (0, S)"));
        }
        Ok(())
    }
}

/// Discretization of the advection term on the interior rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    Forward,
    CentralA,
    CentralB,
    MixedA,
    MixedB,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 5] = [
        SchemeKind::Forward,
        SchemeKind::CentralA,
        SchemeKind::CentralB,
        SchemeKind::MixedA,
        SchemeKind::MixedB,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Forward => "forward",
            SchemeKind::CentralA => "central-a",
            SchemeKind::CentralB => "central-b",
            SchemeKind::MixedA => "mixed-a",
            SchemeKind::MixedB => "mixed-b",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "forward" => Ok(SchemeKind::Forward),
            "centrala" => Ok(SchemeKind::CentralA),
            "centralb" => Ok(SchemeKind::CentralB),
            "mixeda" => Ok(SchemeKind::MixedA),
            "mixedb" => Ok(SchemeKind::MixedB),
            _ => Err(invalid("scheme", format!("unknown scheme `{s}`"))),
        }
    }
}

/// Treatment of the linear boundary condition.
///
/// `Lbc1` puts the boundary row `[-rS/h_{m+2}, r s_{m+1}/h_{m+2}]` at both
/// `s_{m+1}` and `s_{m+2}`. `Lbc2` extends the interior scheme to `j = m+1`
/// and keeps the boundary row only at `s_{m+2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTreatment {
    Lbc1,
    Lbc2,
}

impl BoundaryTreatment {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryTreatment::Lbc1 => "lbc1",
            BoundaryTreatment::Lbc2 => "lbc2",
        }
    }
}

impl fmt::Display for BoundaryTreatment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for BoundaryTreatment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lbc1" | "1" => Ok(BoundaryTreatment::Lbc1),
            "lbc2" | "2" => Ok(BoundaryTreatment::Lbc2),
            _ => Err(invalid("treatment", format!("unknown treatment `{s}`"))),
        }
    }
}

/// Which central scheme a mixed discretization falls back from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MixedVariant {
    A,
    B,
}

/// Stencil actually used on a row of `M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StencilChoice {
    Forward,
    CentralA,
    CentralB,
    Boundary,
}

impl StencilChoice {
    pub fn name(self) -> &'static str {
        match self {
            StencilChoice::Forward => "forward",
            StencilChoice::CentralA => "central-a",
            StencilChoice::CentralB => "central-b",
            StencilChoice::Boundary => "boundary",
        }
    }
}

/// Dirichlet datum `g0(t) = u(0, t)`.
#[derive(Clone, Default)]
pub enum BoundaryData<T> {
    #[default]
    Zero,
    Function(Arc<dyn Fn(T) -> T + Send + Sync>),
}

impl<T: Real> BoundaryData<T> {
    pub fn constant(value: T) -> Self {
        BoundaryData::Function(Arc::new(move |_| value))
    }

    pub fn eval(&self, t: T) -> T {
        match self {
            BoundaryData::Zero => T::zero(),
            BoundaryData::Function(f) => f(t),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, BoundaryData::Zero)
    }
}

impl<T> fmt::Debug for BoundaryData<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryData::Zero => f.write_str("Zero"),
            BoundaryData::Function(_) => f.write_str("Function(..)"),
        }
    }
}

/// Row coefficients: `beta` multiplies `u_{j-1}`, `alpha` `u_j`, `gamma` `u_{j+1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients<T> {
    pub beta: T,
    pub alpha: T,
    pub gamma: T,
}

impl<T: Real> Coefficients<T> {
    pub fn sum(&self) -> T {
        self.beta + self.alpha + self.gamma
    }
}

struct Local<T> {
    s: T,
    h: T,
    hp: T,
    big_h: T,
    diff: T,
}

fn local<T: Real>(grid: &Grid<T>, params: &ModelParams<T>, j: usize) -> Result<Local<T>> {
    let hi = grid.m() + 1;
    if j < 1 || j > hi {
        return Err(Error::IndexOutOfRange {
            index: j,
            lo: 1,
            hi,
        });
    }
    let s = grid.s(j);
    Ok(Local {
        s,
        h: grid.h(j),
        hp: grid.h(j + 1),
        big_h: grid.big_h(j),
        diff: params.sigma * params.sigma * s * s,
    })
}

/// First-order forward advection with central diffusion, `1 <= j <= m+1`.
pub fn coefficients_forward<T: Real>(
    grid: &Grid<T>,
    params: &ModelParams<T>,
    j: usize,
) -> Result<Coefficients<T>> {
    let Local {
        s,
        h,
        hp,
        big_h,
        diff,
    } = local(grid, params, j)?;
    let r = params.r;
    Ok(Coefficients {
        beta: diff / (h * big_h),
        alpha: -r - r * s / hp - diff / (h * hp),
        gamma: r * s / hp + diff / (hp * big_h),
    })
}

/// Central advection `(u_{j+1} - u_{j-1}) / H_j`.
pub fn coefficients_central_a<T: Real>(
    grid: &Grid<T>,
    params: &ModelParams<T>,
    j: usize,
) -> Result<Coefficients<T>> {
    let Local {
        s,
        h,
        hp,
        big_h,
        diff,
    } = local(grid, params, j)?;
    let r = params.r;
    Ok(Coefficients {
        beta: -r * s / big_h + diff / (h * big_h),
        alpha: -r - diff / (h * hp),
        gamma: r * s / big_h + diff / (hp * big_h),
    })
}

/// Three-point central advection that is second order on any grid.
pub fn coefficients_central_b<T: Real>(
    grid: &Grid<T>,
    params: &ModelParams<T>,
    j: usize,
) -> Result<Coefficients<T>> {
    let Local {
        s,
        h,
        hp,
        big_h,
        diff,
    } = local(grid, params, j)?;
    let r = params.r;
    Ok(Coefficients {
        beta: -r * s * hp / (h * big_h) + diff / (h * big_h),
        alpha: -r + r * s * (hp - h) / (h * hp) - diff / (h * hp),
        gamma: r * s * h / (hp * big_h) + diff / (hp * big_h),
    })
}

/// Whether the central scheme of `variant` is admissible at `j`:
/// `0 < r <= (s_j/h_j) sigma^2` for A and `0 < r <= (s_j/h_{j+1}) sigma^2` for B.
pub fn central_admissible<T: Real>(
    grid: &Grid<T>,
    params: &ModelParams<T>,
    j: usize,
    variant: MixedVariant,
) -> Result<bool> {
    let l = local(grid, params, j)?;
    let width = match variant {
        MixedVariant::A => l.h,
        MixedVariant::B => l.hp,
    };
    let sig2 = params.sigma * params.sigma;
    Ok(params.r > T::zero() && params.r <= l.s / width * sig2)
}

/// Coefficients of the mixed scheme at `j` and the stencil that was chosen.
pub fn mixed_select<T: Real>(
    grid: &Grid<T>,
    params: &ModelParams<T>,
    j: usize,
    variant: MixedVariant,
) -> Result<(Coefficients<T>, StencilChoice)> {
    if central_admissible(grid, params, j, variant)? {
        match variant {
            MixedVariant::A => Ok((
                coefficients_central_a(grid, params, j)?,
                StencilChoice::CentralA,
            )),
            MixedVariant::B => Ok((
                coefficients_central_b(grid, params, j)?,
                StencilChoice::CentralB,
            )),
        }
    } else {
        Ok((
            coefficients_forward(grid, params, j)?,
            StencilChoice::Forward,
        ))
    }
}

/// Interior coefficients of `scheme` at `j`.
pub fn scheme_coefficients<T: Real>(
    grid: &Grid<T>,
    params: &ModelParams<T>,
    scheme: SchemeKind,
    j: usize,
) -> Result<(Coefficients<T>, StencilChoice)> {
    match scheme {
        SchemeKind::Forward => Ok((
            coefficients_forward(grid, params, j)?,
            StencilChoice::Forward,
        )),
        SchemeKind::CentralA => Ok((
            coefficients_central_a(grid, params, j)?,
            StencilChoice::CentralA,
        )),
        SchemeKind::CentralB => Ok((
            coefficients_central_b(grid, params, j)?,
            StencilChoice::CentralB,
        )),
        SchemeKind::MixedA => mixed_select(grid, params, j, MixedVariant::A),
        SchemeKind::MixedB => mixed_select(grid, params, j, MixedVariant::B),
    }
}

/// Number of `j = 1..=m` at which a mixed scheme uses the forward stencil.
pub fn forward_count<T: Real>(
    grid: &Grid<T>,
    params: &ModelParams<T>,
    variant: MixedVariant,
) -> Result<usize> {
    let mut count = 0usize;
    for j in 1..=grid.m() {
        if !central_admissible(grid, params, j, variant)? {
            count += 1;
        }
    }
    Ok(count)
}

/// Fraction of `j = 1..=m` at which a mixed scheme uses the forward stencil.
pub fn forward_fraction<T: Real>(
    grid: &Grid<T>,
    params: &ModelParams<T>,
    variant: MixedVariant,
) -> Result<f64> {
    Ok(forward_count(grid, params, variant)? as f64 / grid.m() as f64)
}

/// Assembled tridiagonal `M` with its source term and provenance.
#[derive(Debug, Clone)]
pub struct DiscreteOperator<T> {
    matrix: TridiagonalMatrix<T>,
    beta1: T,
    choices: Vec<StencilChoice>,
    grid: Grid<T>,
    params: ModelParams<T>,
    scheme: SchemeKind,
    treatment: BoundaryTreatment,
    boundary: BoundaryData<T>,
}

/// Builds `M` for `scheme` and `treatment` on `grid`.
///
/// `params.cap` must agree with the grid's domain cap.
pub fn assemble<T: Real>(
    grid: &Grid<T>,
    params: &ModelParams<T>,
    scheme: SchemeKind,
    treatment: BoundaryTreatment,
    boundary: BoundaryData<T>,
) -> Result<DiscreteOperator<T>> {
    params.validate()?;
    let cap = grid.cap();
    let tol = T::lit(1e-12) * cap;
    if (params.cap - cap).abs() > tol {
        return Err(invalid("S", "model cap differs from the grid cap"));
    }
    let m = grid.m();
    let n = m + 2;
    let mut lower = vec![T::zero(); n];
    let mut diag = vec![T::zero(); n];
    let mut upper = vec![T::zero(); n];
    let mut choices = Vec::with_capacity(n);
    let mut beta1 = T::zero();

    let interior_rows = match treatment {
        BoundaryTreatment::Lbc1 => m,
        BoundaryTreatment::Lbc2 => m + 1,
    };
    for j in 1..=interior_rows {
        let (c, choice) = scheme_coefficients(grid, params, scheme, j)?;
        let i = j - 1;
        if j == 1 {
            beta1 = c.beta;
        } else {
            lower[i] = c.beta;
        }
        diag[i] = c.alpha;
        upper[i] = c.gamma;
        choices.push(choice);
    }

    let r = params.r;
    let hl = grid.last_width();
    let c_first = -r * cap / hl;
    let c_second = r * grid.s(m + 1) / hl;
    if treatment == BoundaryTreatment::Lbc1 {
        // Row m+1 carries the boundary row with a zero coupling to u_m.
        diag[m] = c_first;
        upper[m] = c_second;
        choices.push(StencilChoice::Boundary);
    }
    lower[m + 1] = c_first;
    diag[m + 1] = c_second;
    choices.push(StencilChoice::Boundary);

    let matrix = TridiagonalMatrix::new(lower, diag, upper)?;
    Ok(DiscreteOperator {
        matrix,
        beta1,
        choices,
        grid: grid.clone(),
        params: *params,
        scheme,
        treatment,
        boundary,
    })
}

impl<T: Real> DiscreteOperator<T> {
    pub fn m(&self) -> usize {
        self.grid.m()
    }

    /// Number of unknowns, `m + 2`.
    pub fn dim(&self) -> usize {
        self.grid.m() + 2
    }

    pub fn matrix(&self) -> &TridiagonalMatrix<T> {
        &self.matrix
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn params(&self) -> &ModelParams<T> {
        &self.params
    }

    pub fn scheme(&self) -> SchemeKind {
        self.scheme
    }

    pub fn treatment(&self) -> BoundaryTreatment {
        self.treatment
    }

    pub fn boundary(&self) -> &BoundaryData<T> {
        &self.boundary
    }

    /// Copy of the operator with a different Dirichlet datum.
    pub fn with_boundary(&self, boundary: BoundaryData<T>) -> Self {
        Self {
            boundary,
            ..self.clone()
        }
    }

    /// Weight of `g0(t)` in the first component of `b(t)`.
    pub fn beta1(&self) -> T {
        self.beta1
    }

    /// Stencil used on rows `1..=m+2`.
    pub fn choices(&self) -> &[StencilChoice] {
        &self.choices
    }

    /// `(beta_j, alpha_j, gamma_j)` as stored in row `j` of `M`, `1 <= j <= m+2`.
    /// Row 1 reports `beta_1`, which lives in `b(t)` rather than in `M`.
    pub fn row(&self, j: usize) -> Result<Coefficients<T>> {
        let n = self.dim();
        if j < 1 || j > n {
            return Err(Error::IndexOutOfRange {
                index: j,
                lo: 1,
                hi: n,
            });
        }
        let i = j - 1;
        Ok(Coefficients {
            beta: if j == 1 {
                self.beta1
            } else {
                self.matrix.lower[i]
            },
            alpha: self.matrix.diag[i],
            gamma: self.matrix.upper[i],
        })
    }

    /// `M x`.
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        self.matrix.mul_vec(x)
    }

    /// `b(t)`: zero except `b_1 = beta_1 g0(t)`.
    pub fn source(&self, t: T) -> Vec<T> {
        let mut b = vec![T::zero(); self.dim()];
        b[0] = self.beta1 * self.boundary.eval(t);
        b
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        self.matrix.to_dense()
    }

    /// Upper-left `m x m` block `A`.
    pub fn block_a(&self) -> TridiagonalMatrix<T> {
        let m = self.m();
        let mut lower = self.matrix.lower[..m].to_vec();
        let diag = self.matrix.diag[..m].to_vec();
        let mut upper = self.matrix.upper[..m].to_vec();
        lower[0] = T::zero();
        upper[m - 1] = T::zero();
        TridiagonalMatrix::new(lower, diag, upper).expect("consistent lengths")
    }

    /// Upper-right `m x 2` block `B`.
    pub fn block_b(&self) -> DenseMatrix<T> {
        self.to_dense().block(0, self.m(), self.m(), 2)
    }

    /// Lower-right `2 x 2` block `C`.
    pub fn block_c(&self) -> DenseMatrix<T> {
        let m = self.m();
        self.to_dense().block(m, m, 2, 2)
    }

    /// CSV with columns `j,beta,alpha,gamma,stencil` for rows `1..=m+2`.
    pub fn to_csv(&self) -> String {
        let mut out = CsvTable::new(&["j", "beta", "alpha", "gamma", "stencil"]);
        for j in 1..=self.dim() {
            let c = self.row(j).expect("row in range");
            out.push([
                j.to_string(),
                fmt_real(c.beta),
                fmt_real(c.alpha),
                fmt_real(c.gamma),
                self.choices[j - 1].name().to_string(),
            ]);
        }
        out.finish()
    }

    pub fn describe(&self) -> String {
        format!(
            "{} {} r={} sigma={} on {}",
            self.scheme,
            self.treatment,
            self.params.r,
            self.params.sigma,
            self.grid.describe()
        )
    }
}

/// `max_i (x_ii + sum_{j != i} |x_ij|)`.
pub fn log_norm_inf<T: Real>(x: &DenseMatrix<T>) -> Result<T> {
    if !x.is_square() {
        return Err(Error::NotSquare {
            rows: x.rows(),
            cols: x.cols(),
        });
    }
    let mut best = T::neg_infinity();
    for i in 0..x.rows() {
        let row = x.row(i);
        let off: T = row
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, v)| v.abs())
            .sum();
        best = best.max(row[i] + off);
    }
    Ok(if x.rows() == 0 { T::zero() } else { best })
}

/// A violated part of the sufficient stability condition.
#[derive(Debug, Clone, PartialEq)]
pub enum ConditionClause {
    /// Row `row` of `rI + A` has positive logarithmic-norm contribution.
    LogNorm { row: usize, value: f64 },
    /// `r + alpha_m + |beta_m| + |gamma_m| > 0`.
    LastRow { value: f64 },
    /// A structural invertibility requirement on `rI + A` is violated.
    Invertibility {
        row: usize,
        requirement: &'static str,
    },
}

impl fmt::Display for ConditionClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConditionClause::LogNorm { row, value } => {
                write!(f, "log-norm row {row} = {value:e} > 0")
            }
            ConditionClause::LastRow { value } => {
                write!(f, "r + alpha_m + |beta_m| + |gamma_m| = {value:e} > 0")
            }
            ConditionClause::Invertibility { row, requirement } => {
                write!(f, "invertibility: {requirement} violated at row {row}")
            }
        }
    }
}

/// Outcome of the sufficient stability condition on an LBC1 operator.
#[derive(Debug, Clone, PartialEq)]
pub enum ConditionVerdict {
    Holds,
    Fails(Vec<ConditionClause>),
}

impl ConditionVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, ConditionVerdict::Holds)
    }

    pub fn label(&self) -> &'static str {
        if self.holds() {
            "holds"
        } else {
            "fails"
        }
    }
}

impl fmt::Display for ConditionVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConditionVerdict::Holds => f.write_str("holds"),
            ConditionVerdict::Fails(clauses) => {
                f.write_str("fails: ")?;
                for (k, c) in clauses.iter().enumerate() {
                    if k > 0 {
                        f.write_str("; ")?;
                    }
                    write!(f, "{c}")?;
                }
                Ok(())
            }
        }
    }
}

/// Rounding allowance for a sum of terms of the given magnitudes.
fn slack<T: Real>(terms: &[T]) -> T {
    let scale: T = terms.iter().map(|x| x.abs()).sum();
    T::lit(64.0) * T::epsilon() * scale
}

/// Checks `mu_inf[rI + A] <= 0`, `r + alpha_m + |beta_m| + |gamma_m| <= 0` and
/// invertibility of `rI + A`. Invertibility is certified structurally:
/// `beta_j >= 0` (`2 <= j <= m`), `gamma_j > 0` (`j < m`),
/// `r + alpha_1 + gamma_1 <= 0`, zero row sums of `rI + A` on `2 <= j < m` and
/// `r + alpha_m + beta_m < 0`.
///
/// Non-strict comparisons and the zero-row-sum test allow a rounding slack
/// proportional to the magnitude of the terms involved.
pub fn check_stability_condition<T: Real>(op: &DiscreteOperator<T>) -> Result<ConditionVerdict> {
    if op.treatment() != BoundaryTreatment::Lbc1 {
        return Err(Error::RequiresLbc1);
    }
    let m = op.m();
    let r = op.params().r;
    let a = op.block_a();
    let beta = |j: usize| if j >= 2 { a.lower[j - 1] } else { T::zero() };
    let alpha = |j: usize| a.diag[j - 1];
    let gamma = |j: usize| if j < m { a.upper[j - 1] } else { T::zero() };
    let gamma_m = op.matrix().upper[m - 1];
    let to_f = |x: T| x.to_f64().unwrap_or(f64::NAN);

    let mut failed = Vec::new();

    for j in 1..=m {
        let terms = [r, alpha(j), beta(j), gamma(j)];
        let value = r + alpha(j) + beta(j).abs() + gamma(j).abs();
        if value > slack(&terms) {
            failed.push(ConditionClause::LogNorm {
                row: j,
                value: to_f(value),
            });
        }
    }

    let last = r + alpha(m) + beta(m).abs() + gamma_m.abs();
    if last > slack(&[r, alpha(m), beta(m), gamma_m]) {
        failed.push(ConditionClause::LastRow { value: to_f(last) });
    }

    let mut inv = |row, requirement| {
        failed.push(ConditionClause::Invertibility { row, requirement });
    };
    for j in 2..=m {
        if beta(j) < T::zero() {
            inv(j, "beta_j >= 0");
        }
    }
    for j in 1..m {
        if !(gamma(j) > T::zero()) {
            inv(j, "gamma_j > 0");
        }
    }
    if m >= 2 && r + alpha(1) + gamma(1) > slack(&[r, alpha(1), gamma(1)]) {
        inv(1, "r + alpha_1 + gamma_1 <= 0");
    }
    for j in 2..m {
        let sum = r + alpha(j) + beta(j) + gamma(j);
        if sum.abs() > slack(&[r, alpha(j), beta(j), gamma(j)]) {
            inv(j, "r + alpha_j + beta_j + gamma_j = 0");
        }
    }
    if !(r + alpha(m) + beta(m) < T::zero()) {
        inv(m, "r + alpha_m + beta_m < 0");
    }

    Ok(if failed.is_empty() {
        ConditionVerdict::Holds
    } else {
        ConditionVerdict::Fails(failed)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params(r: f64, sigma: f64, cap: f64) -> ModelParams<f64> {
        ModelParams::new(r, sigma, cap, 100.0, 1.0).unwrap()
    }

    fn sinh(cap: f64, m: usize) -> Grid<f64> {
        Grid::sinh(100.0, 20.0, cap, m).unwrap()
    }

    #[test]
    fn forward_with_zero_volatility() {
        let g = sinh(400.0, 30);
        let p = params(0.2, 0.0, 400.0);
        for j in 1..=30 {
            let c = coefficients_forward(&g, &p, j).unwrap();
            assert_eq!(c.beta, 0.0);
            assert_relative_eq!(c.gamma, 0.2 * g.s(j) / g.h(j + 1), max_relative = 1e-15);
            assert_relative_eq!(c.alpha, -0.2 - c.gamma, max_relative = 1e-15);
        }
    }

    #[test]
    fn uniform_pure_diffusion_stencil() {
        let g = Grid::uniform(400.0, 98).unwrap();
        let p = ModelParams {
            r: 0.0,
            sigma: 0.3,
            cap: 400.0,
            strike: 100.0,
            maturity: 1.0,
        };
        for j in [1, 50, 99] {
            let c = coefficients_forward(&g, &p, j).unwrap();
            let d = 0.09 * g.s(j) * g.s(j) / 16.0;
            assert_relative_eq!(c.beta, d / 2.0, max_relative = 1e-14);
            assert_relative_eq!(c.gamma, d / 2.0, max_relative = 1e-14);
            assert_relative_eq!(c.alpha, -d, max_relative = 1e-14);
            let cb = coefficients_central_b(&g, &p, j).unwrap();
            let ca = coefficients_central_a(&g, &p, j).unwrap();
            assert_relative_eq!(ca.beta, cb.beta, max_relative = 1e-14);
            assert_relative_eq!(ca.alpha, cb.alpha, max_relative = 1e-14);
        }
    }

    #[test]
    fn central_a_downwind_weight_negative_without_diffusion() {
        let g = sinh(400.0, 40);
        let p = params(0.2, 0.0, 400.0);
        for j in 1..=40 {
            assert!(coefficients_central_a(&g, &p, j).unwrap().beta < 0.0);
        }
    }

    #[test]
    fn central_schemes_agree_on_uniform_grid() {
        let g = Grid::uniform(400.0, 60).unwrap();
        let p = params(0.15, 0.25, 400.0);
        let a = assemble(
            &g,
            &p,
            SchemeKind::CentralA,
            BoundaryTreatment::Lbc2,
            BoundaryData::Zero,
        )
        .unwrap();
        let b = assemble(
            &g,
            &p,
            SchemeKind::CentralB,
            BoundaryTreatment::Lbc2,
            BoundaryData::Zero,
        )
        .unwrap();
        let (da, db) = (a.to_dense(), b.to_dense());
        let scale = da.max_abs();
        assert!(da.add_scaled(-1.0, &db).max_abs() <= 1e-13 * scale);
        assert_relative_eq!(a.beta1(), b.beta1(), max_relative = 1e-13);
    }

    #[test]
    fn index_range_is_enforced() {
        let g = sinh(400.0, 10);
        let p = params(0.1, 0.3, 400.0);
        assert!(matches!(
            coefficients_forward(&g, &p, 0),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(coefficients_forward(&g, &p, 11).is_ok());
        assert!(coefficients_central_b(&g, &p, 12).is_err());
    }

    #[test]
    fn mixed_tie_selects_central() {
        // Uniform grid with h = 1: s_j/h_j = j, so r = j sigma^2 exactly at j = 4.
        let g = Grid::uniform(12.0, 10).unwrap();
        let p = ModelParams {
            r: 0.25,
            sigma: 0.25,
            cap: 12.0,
            strike: 6.0,
            maturity: 1.0,
        };
        let (_, at4) = mixed_select(&g, &p, 4, MixedVariant::A).unwrap();
        let (_, at3) = mixed_select(&g, &p, 3, MixedVariant::A).unwrap();
        assert_eq!(at4, StencilChoice::CentralA);
        assert_eq!(at3, StencilChoice::Forward);
    }

    #[test]
    fn mixed_limits() {
        let g = sinh(400.0, 100);
        let p = params(0.2, 0.0, 400.0);
        for v in [MixedVariant::A, MixedVariant::B] {
            assert_eq!(forward_fraction(&g, &p, v).unwrap(), 1.0);
        }
        // With r = 0.1 and sigma = 0.3 only the first node (s_1/h_1 = 1) uses
        // the forward stencil.
        let p = params(0.1, 0.3, 400.0);
        for v in [MixedVariant::A, MixedVariant::B] {
            for j in 2..=100 {
                assert!(central_admissible(&g, &p, j, v).unwrap(), "j={j}");
            }
        }
        assert!(!central_admissible(&g, &p, 1, MixedVariant::A).unwrap());
    }

    #[test]
    fn lbc1_boundary_block() {
        let g = sinh(400.0, 50);
        let p = params(0.2, 0.3, 400.0);
        let op = assemble(
            &g,
            &p,
            SchemeKind::Forward,
            BoundaryTreatment::Lbc1,
            BoundaryData::Zero,
        )
        .unwrap();
        let c = op.block_c();
        let h = g.last_width();
        assert_relative_eq!(c[(0, 0)], -0.2 * 400.0 / h, max_relative = 1e-15);
        assert_relative_eq!(c[(0, 1)], 0.2 * g.s(51) / h, max_relative = 1e-15);
        assert_eq!(c.row(0), c.row(1));
        assert_eq!(op.matrix().lower[50], 0.0);
        let v = c.mul_vec(&[g.s(51), 400.0]);
        assert!(v[0].abs() < 1e-10 && v[1].abs() < 1e-10);
        let w = c.mul_vec(&[1.0, 1.0]);
        assert_relative_eq!(w[0], -0.2, max_relative = 1e-10);
        let b = op.block_b();
        let nonzero: Vec<_> = (0..50)
            .flat_map(|i| (0..2).map(move |k| (i, k)))
            .filter(|&(i, k)| b[(i, k)] != 0.0)
            .collect();
        assert_eq!(nonzero, vec![(49, 0)]);
    }

    #[test]
    fn lbc2_rows() {
        let g = sinh(400.0, 50);
        let p = params(0.2, 0.3, 400.0);
        let op = assemble(
            &g,
            &p,
            SchemeKind::CentralA,
            BoundaryTreatment::Lbc2,
            BoundaryData::Zero,
        )
        .unwrap();
        let row = op.row(51).unwrap();
        let expect = coefficients_central_a(&g, &p, 51).unwrap();
        assert_eq!(row, expect);
        assert_eq!(op.choices()[50], StencilChoice::CentralA);
        assert_eq!(op.choices()[51], StencilChoice::Boundary);
    }

    #[test]
    fn zero_volatility_mixed_lbc2_is_forward_lbc1() {
        let g = sinh(400.0, 80);
        let p = params(0.2, 0.0, 400.0);
        let a = assemble(
            &g,
            &p,
            SchemeKind::MixedA,
            BoundaryTreatment::Lbc2,
            BoundaryData::Zero,
        )
        .unwrap();
        let f = assemble(
            &g,
            &p,
            SchemeKind::Forward,
            BoundaryTreatment::Lbc1,
            BoundaryData::Zero,
        )
        .unwrap();
        assert_eq!(a.to_dense(), f.to_dense());
    }

    #[test]
    fn source_vector() {
        let g = sinh(400.0, 20);
        let p = params(0.1, 0.3, 400.0);
        let op = assemble(
            &g,
            &p,
            SchemeKind::Forward,
            BoundaryTreatment::Lbc1,
            BoundaryData::Zero,
        )
        .unwrap();
        assert!(op.source(0.7).iter().all(|x| *x == 0.0));
        let op = op.with_boundary(BoundaryData::Function(Arc::new(|t: f64| 2.0 * t)));
        let b = op.source(1.5);
        assert_relative_eq!(b[0], 3.0 * op.beta1(), max_relative = 1e-15);
        assert!(b[1..].iter().all(|x| *x == 0.0));
    }

    #[test]
    fn log_norm_examples() {
        assert_eq!(log_norm_inf(&DenseMatrix::<f64>::identity(3)).unwrap(), 1.0);
        assert_eq!(log_norm_inf(&DenseMatrix::<f64>::zeros(3, 3)).unwrap(), 0.0);
        let x = DenseMatrix::from_rows(&[vec![-2.0, 1.0], vec![1.0, -2.0]]).unwrap();
        assert_eq!(log_norm_inf(&x).unwrap(), -1.0);
        assert!(log_norm_inf(&DenseMatrix::<f64>::zeros(2, 3)).is_err());
    }

    #[test]
    fn stability_condition_verdicts() {
        let g = sinh(400.0, 100);
        let lbc1 = BoundaryTreatment::Lbc1;
        for (r, sigma) in [(0.1, 0.3), (0.3, 0.1), (0.2, 0.0)] {
            let p = params(r, sigma, 400.0);
            for scheme in [SchemeKind::Forward, SchemeKind::MixedA, SchemeKind::MixedB] {
                let op = assemble(&g, &p, scheme, lbc1, BoundaryData::Zero).unwrap();
                let v = check_stability_condition(&op).unwrap();
                assert!(v.holds(), "{scheme} r={r} sigma={sigma}: {v}");
            }
        }
        let p = params(0.2, 0.0, 400.0);
        let op = assemble(&g, &p, SchemeKind::CentralA, lbc1, BoundaryData::Zero).unwrap();
        match check_stability_condition(&op).unwrap() {
            ConditionVerdict::Fails(clauses) => assert!(clauses
                .iter()
                .any(|c| matches!(c, ConditionClause::LogNorm { .. }))),
            ConditionVerdict::Holds => panic!("central A without diffusion must fail"),
        }
        // At the first node s_1/h_1 = 1 < r/sigma^2, so the central stencil has a
        // negative beta_1 and row 1 of rI + A violates the condition; every other
        // row satisfies it.
        let p = params(0.1, 0.3, 400.0);
        let op = assemble(&g, &p, SchemeKind::CentralA, lbc1, BoundaryData::Zero).unwrap();
        match check_stability_condition(&op).unwrap() {
            ConditionVerdict::Fails(clauses) => {
                for c in &clauses {
                    match c {
                        ConditionClause::LogNorm { row, .. }
                        | ConditionClause::Invertibility { row, .. } => assert_eq!(*row, 1),
                        ConditionClause::LastRow { .. } => panic!("last row must pass"),
                    }
                }
            }
            ConditionVerdict::Holds => panic!("row 1 is expected to fail"),
        }
        let op = assemble(
            &g,
            &p,
            SchemeKind::CentralA,
            BoundaryTreatment::Lbc2,
            BoundaryData::Zero,
        )
        .unwrap();
        assert_eq!(check_stability_condition(&op), Err(Error::RequiresLbc1));
    }

    #[test]
    fn csv_dump() {
        let g = sinh(400.0, 5);
        let p = params(0.3, 0.1, 400.0);
        let op = assemble(
            &g,
            &p,
            SchemeKind::MixedB,
            BoundaryTreatment::Lbc1,
            BoundaryData::Zero,
        )
        .unwrap();
        let csv = op.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "j,beta,alpha,gamma,stencil");
        assert_eq!(lines.len(), 8);
        assert!(lines[7].ends_with("boundary"));
    }

    #[test]
    fn parses_names() {
        assert_eq!(
            "central-a".parse::<SchemeKind>().unwrap(),
            SchemeKind::CentralA
        );
        assert_eq!("MixedB".parse::<SchemeKind>().unwrap(), SchemeKind::MixedB);
        assert_eq!(
            "LBC2".parse::<BoundaryTreatment>().unwrap(),
            BoundaryTreatment::Lbc2
        );
        assert!("upwind".parse::<SchemeKind>().is_err());
    }

    #[test]
    fn rejects_inconsistent_cap() {
        let g = sinh(400.0, 10);
        let p = params(0.1, 0.3, 2000.0);
        assert!(assemble(
            &g,
            &p,
            SchemeKind::Forward,
            BoundaryTreatment::Lbc1,
            BoundaryData::Zero
        )
        .is_err());
        assert!(ModelParams::new(0.0, 0.3, 400.0, 100.0, 1.0).is_err());
        assert!(ModelParams::new(0.1, -0.3, 400.0, 100.0, 1.0).is_err());
    }

    fn scheme_strategy() -> impl Strategy<Value = SchemeKind> {
        prop::sample::select(SchemeKind::ALL.to_vec())
    }

    fn treatment_strategy() -> impl Strategy<Value = BoundaryTreatment> {
        prop::sample::select(vec![BoundaryTreatment::Lbc1, BoundaryTreatment::Lbc2])
    }

    proptest! {
        #[test]
        fn coefficient_rows_sum_to_minus_r(
            r in 0.01f64..0.5,
            sigma in 0.0f64..0.6,
            m in 2usize..200,
            frac in 0.0f64..1.0,
        ) {
            let g = sinh(400.0, m);
            let p = params(r, sigma, 400.0);
            let j = 1 + ((m as f64) * frac) as usize;
            for c in [
                coefficients_forward(&g, &p, j).unwrap(),
                coefficients_central_a(&g, &p, j).unwrap(),
                coefficients_central_b(&g, &p, j).unwrap(),
            ] {
                let scale = c.beta.abs() + c.alpha.abs() + c.gamma.abs();
                prop_assert!((c.sum() + r).abs() <= 1e-12 * scale);
            }
        }

        #[test]
        fn operator_identities(
            r in 0.01f64..0.5,
            sigma in 0.0f64..0.6,
            m in 1usize..150,
            cap in 200.0f64..2500.0,
            scheme in scheme_strategy(),
            treatment in treatment_strategy(),
            uniform in any::<bool>(),
        ) {
            let g = if uniform { Grid::uniform(cap, m).unwrap() } else { sinh(cap, m) };
            let p = params(r, sigma, cap);
            let op = assemble(&g, &p, scheme, treatment, BoundaryData::Zero).unwrap();
            let n = op.dim();
            let scale = op.matrix().norm_inf();
            // Constants carry the Dirichlet value 1 into the first row.
            let mut ones = op.apply(&vec![1.0; n]);
            ones[0] += op.beta1();
            for v in &ones {
                prop_assert!((v + r).abs() <= 1e-12 * scale);
            }
            let s = g.unknown_nodes().to_vec();
            let ms = op.apply(&s);
            for v in &ms {
                prop_assert!(v.abs() <= 1e-12 * scale * cap);
            }
        }

        #[test]
        fn central_b_equals_a_without_advection(
            sigma in 0.05f64..0.6,
            m in 2usize..100,
            frac in 0.0f64..1.0,
        ) {
            let g = sinh(400.0, m);
            let p = ModelParams { r: 0.0, sigma, cap: 400.0, strike: 100.0, maturity: 1.0 };
            let j = 1 + ((m as f64) * frac) as usize;
            let a = coefficients_central_a(&g, &p, j).unwrap();
            let b = coefficients_central_b(&g, &p, j).unwrap();
            prop_assert!((a.beta - b.beta).abs() <= 1e-12 * a.beta.abs());
            prop_assert!((a.alpha - b.alpha).abs() <= 1e-12 * a.alpha.abs());
            prop_assert!((a.gamma - b.gamma).abs() <= 1e-12 * a.gamma.abs());
        }

        #[test]
        fn forward_always_satisfies_condition(
            r in 0.01f64..0.5,
            sigma in 0.0f64..0.6,
            m in 2usize..150,
            uniform in any::<bool>(),
        ) {
            let g = if uniform { Grid::uniform(400.0, m).unwrap() } else { sinh(400.0, m) };
            let p = params(r, sigma, 400.0);
            let op = assemble(&g, &p, SchemeKind::Forward, BoundaryTreatment::Lbc1, BoundaryData::Zero)
                .unwrap();
            let v = check_stability_condition(&op).unwrap();
            prop_assert!(v.holds(), "{}", v);
        }

        #[test]
        fn mixed_equals_parent_when_uniformly_decided(
            sigma in 0.3f64..0.6,
            m in 5usize..120,
        ) {
            // r tiny: central admissible everywhere; sigma = 0: forward everywhere.
            let g = sinh(400.0, m);
            let central = params(1e-3, sigma, 400.0);
            let a = assemble(&g, &central, SchemeKind::MixedA, BoundaryTreatment::Lbc1, BoundaryData::Zero).unwrap();
            let ca = assemble(&g, &central, SchemeKind::CentralA, BoundaryTreatment::Lbc1, BoundaryData::Zero).unwrap();
            prop_assert_eq!(a.to_dense(), ca.to_dense());
            let flat = params(0.1, 0.0, 400.0);
            let a = assemble(&g, &flat, SchemeKind::MixedA, BoundaryTreatment::Lbc1, BoundaryData::Zero).unwrap();
            let f = assemble(&g, &flat, SchemeKind::Forward, BoundaryTreatment::Lbc1, BoundaryData::Zero).unwrap();
            prop_assert_eq!(a.to_dense(), f.to_dense());
        }
    }
}
