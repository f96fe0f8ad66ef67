//! Theta-method integration of `U' = M U + b(t)` with optional implicit-Euler
//! startup substeps.

use std::time::{Duration, Instant};

use crate::error::{invalid, Error, Result};
use crate::fit::observed_order;
use crate::linalg::{expm, norm_inf_vec, TridiagonalFactorization, TridiagonalMatrix};
use crate::operator::DiscreteOperator;
use crate::scalar::Real;
use crate::table::{fmt_real, CsvTable};

/// Errors below this level are indistinguishable from rounding.
pub const DEGENERATE_ERROR: f64 = 1e-12;

/// Theta-method settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaConfig<T> {
    pub theta: T,
    /// Nominal number of steps `N`; the step size is `T / N`.
    pub steps: usize,
    /// The first step is replaced by this many implicit-Euler substeps of
    /// size `dt / rannacher_substeps`. Zero disables the startup.
    pub rannacher_substeps: usize,
}

impl<T: Real> ThetaConfig<T> {
    pub fn new(theta: T, steps: usize, rannacher_substeps: usize) -> Result<Self> {
        let c = Self {
            theta,
            steps,
            rannacher_substeps,
        };
        c.validate()?;
        Ok(c)
    }

    /// Crank–Nicolson with two startup substeps.
    pub fn crank_nicolson(steps: usize) -> Result<Self> {
        Self::new(T::lit(0.5), steps, 2)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta >= T::lit(0.5) && self.theta <= T::one()) {
            return Err(invalid("theta", "must lie in [1/2, 1]"));
        }
        if self.steps < 1 {
            return Err(invalid("steps", "at least one step is required"));
        }
        Ok(())
    }
}

fn implicit_matrix<T: Real>(
    op: &DiscreteOperator<T>,
    theta: T,
    dt: T,
) -> Result<TridiagonalMatrix<T>> {
    let m = op.matrix();
    let c = -theta * dt;
    TridiagonalMatrix::new(
        m.lower.iter().map(|x| c * *x).collect(),
        m.diag.iter().map(|x| T::one() + c * *x).collect(),
        m.upper.iter().map(|x| c * *x).collect(),
    )
}

fn explicit_rhs<T: Real>(
    op: &DiscreteOperator<T>,
    u_prev: &[T],
    b_prev: &[T],
    b_next: &[T],
    theta: T,
    dt: T,
) -> Vec<T> {
    let mu = op.apply(u_prev);
    let w = (T::one() - theta) * dt;
    let v = theta * dt;
    u_prev
        .iter()
        .zip(&mu)
        .zip(b_prev.iter().zip(b_next))
        .map(|((u, mu), (bp, bn))| *u + w * (*mu + *bp) + v * *bn)
        .collect()
}

fn check_lengths<T>(op: &DiscreteOperator<T>, vs: &[&[T]]) -> Result<()>
where
    T: Real,
{
    for v in vs {
        if v.len() != op.dim() {
            return Err(Error::DimensionMismatch {
                expected: op.dim(),
                found: v.len(),
            });
        }
    }
    Ok(())
}

/// One theta step: solves
/// `(I - theta dt M) U_n = U_{n-1} + (1 - theta) dt (M U_{n-1} + b_{n-1}) + theta dt b_n`.
pub fn theta_step<T: Real>(
    op: &DiscreteOperator<T>,
    u_prev: &[T],
    b_prev: &[T],
    b_next: &[T],
    theta: T,
    dt: T,
) -> Result<Vec<T>> {
    ThetaStepper::new(op, theta, dt)?.step_with_sources(u_prev, b_prev, b_next)
}

/// Theta steps of a fixed size sharing one factorization of `I - theta dt M`.
#[derive(Debug)]
pub struct ThetaStepper<'a, T> {
    op: &'a DiscreteOperator<T>,
    theta: T,
    dt: T,
    factorization: TridiagonalFactorization<T>,
}

impl<'a, T: Real> ThetaStepper<'a, T> {
    pub fn new(op: &'a DiscreteOperator<T>, theta: T, dt: T) -> Result<Self> {
        if !(theta >= T::lit(0.5) && theta <= T::one()) {
            return Err(invalid("theta", "must lie in [1/2, 1]"));
        }
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(invalid("dt", "time step must be positive"));
        }
        let factorization = implicit_matrix(op, theta, dt)?.factor()?;
        Ok(Self {
            op,
            theta,
            dt,
            factorization,
        })
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn step_with_sources(&self, u_prev: &[T], b_prev: &[T], b_next: &[T]) -> Result<Vec<T>> {
        check_lengths(self.op, &[u_prev, b_prev, b_next])?;
        let mut rhs = explicit_rhs(self.op, u_prev, b_prev, b_next, self.theta, self.dt);
        self.factorization.solve_in_place(&mut rhs);
        Ok(rhs)
    }

    /// Advances from time `t` to `t + dt` with the operator's own source.
    pub fn step(&self, u_prev: &[T], t: T) -> Result<Vec<T>> {
        let b_prev = self.op.source(t);
        let b_next = self.op.source(t + self.dt);
        self.step_with_sources(u_prev, &b_prev, &b_next)
    }
}

/// Fully discrete solution at the final time.
#[derive(Debug, Clone)]
pub struct SolveResult<T> {
    pub values: Vec<T>,
    /// `||U_n||_inf` after each nominal step, starting with `n = 0`.
    pub trace: Vec<T>,
    pub dt: T,
    pub steps: usize,
    pub rannacher_substeps: usize,
    pub final_time: T,
    pub elapsed: Duration,
}

impl<T: Real> SolveResult<T> {
    /// `U_N - reference`.
    pub fn error_against(&self, reference: &[T]) -> Result<Vec<T>> {
        if reference.len() != self.values.len() {
            return Err(Error::DimensionMismatch {
                expected: self.values.len(),
                found: reference.len(),
            });
        }
        Ok(self
            .values
            .iter()
            .zip(reference)
            .map(|(u, r)| *u - *r)
            .collect())
    }

    pub fn max_error(&self, reference: &[T]) -> Result<T> {
        Ok(norm_inf_vec(&self.error_against(reference)?))
    }
}

/// Integrates from `t = 0` to `maturity` starting at `initial`.
pub fn solve<T: Real>(
    op: &DiscreteOperator<T>,
    initial: &[T],
    config: &ThetaConfig<T>,
    maturity: T,
) -> Result<SolveResult<T>> {
    config.validate()?;
    check_lengths(op, &[initial])?;
    if !(maturity > T::zero()) || !maturity.is_finite() {
        return Err(invalid("T", "maturity must be positive"));
    }
    let started = Instant::now();
    let dt = maturity / T::from_usize_lossy(config.steps);
    let mut u = initial.to_vec();
    let mut trace = Vec::with_capacity(config.steps + 1);
    trace.push(norm_inf_vec(&u));

    let mut first = 0;
    if config.rannacher_substeps > 0 {
        let k = config.rannacher_substeps;
        let sub = ThetaStepper::new(op, T::one(), dt / T::from_usize_lossy(k))?;
        for i in 0..k {
            u = sub.step(&u, sub.dt() * T::from_usize_lossy(i))?;
        }
        trace.push(norm_inf_vec(&u));
        first = 1;
    }
    let stepper = ThetaStepper::new(op, config.theta, dt)?;
    for n in first..config.steps {
        u = stepper.step(&u, dt * T::from_usize_lossy(n))?;
        trace.push(norm_inf_vec(&u));
    }
    Ok(SolveResult {
        values: u,
        trace,
        dt,
        steps: config.steps,
        rannacher_substeps: config.rannacher_substeps,
        final_time: maturity,
        elapsed: started.elapsed(),
    })
}

/// `e^{T M} U_0`, the exact semidiscrete solution when `b = 0`.
pub fn exact_semidiscrete<T: Real>(
    op: &DiscreteOperator<T>,
    initial: &[T],
    maturity: T,
) -> Result<Vec<T>> {
    if !op.boundary().is_zero() {
        return Err(Error::RequiresZeroSource);
    }
    check_lengths(op, &[initial])?;
    Ok(expm(&op.to_dense().scaled(maturity))?.mul_vec(initial))
}

/// Errors and fitted order of a time-step refinement study.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeOrderFit {
    pub steps: Vec<usize>,
    pub dts: Vec<f64>,
    pub errors: Vec<f64>,
    pub order: f64,
}

/// Fits `p` in `||U_N - e^{TM} U_0||_inf ~ C dt^p` over `n_list`. The exact
/// semidiscrete solution isolates the temporal error, so the operator must
/// have a zero Dirichlet datum.
pub fn measure_time_order<T: Real>(
    op: &DiscreteOperator<T>,
    initial: &[T],
    theta: T,
    rannacher_substeps: usize,
    n_list: &[usize],
    maturity: T,
) -> Result<TimeOrderFit> {
    if n_list.len() < 3 {
        return Err(invalid("steps", "at least three step counts are required"));
    }
    let reference = exact_semidiscrete(op, initial, maturity)?;
    let mut errors = Vec::with_capacity(n_list.len());
    let mut dts = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let cfg = ThetaConfig::new(theta, n, rannacher_substeps)?;
        let res = solve(op, initial, &cfg, maturity)?;
        errors.push(res.max_error(&reference)?.to_f64().unwrap_or(f64::NAN));
        dts.push(res.dt.to_f64().unwrap_or(f64::NAN));
    }
    if errors.iter().all(|e| *e < DEGENERATE_ERROR) {
        return Err(Error::DegenerateFit {
            threshold: DEGENERATE_ERROR,
        });
    }
    let order = observed_order(&dts, &errors)?;
    Ok(TimeOrderFit {
        steps: n_list.to_vec(),
        dts,
        errors,
        order,
    })
}

/// CSV with columns `s_j,U_j,analytic_j,error_j` for the unknown nodes.
pub fn snapshot_csv<T: Real>(nodes: &[T], values: &[T], analytic: &[T]) -> String {
    let mut out = CsvTable::new(&["s_j", "U_j", "analytic_j", "error_j"]);
    for ((s, u), a) in nodes.iter().zip(values).zip(analytic) {
        out.push([fmt_real(*s), fmt_real(*u), fmt_real(*a), fmt_real(*u - *a)]);
    }
    out.finish()
}
