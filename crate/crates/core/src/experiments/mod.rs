//! Stability sweeps, convergence studies and stencil-fraction tables as CSV,
//! plus the acceptance checks.
//!
//! Independent `(scheme, treatment, m)` cases run on the rayon pool; results
//! are collected in preset order, so every CSV is byte-deterministic.

pub mod acceptance;
pub mod presets;

use rayon::prelude::*;

pub use presets::ExperimentPreset;

use crate::analytic::{call_price, payoff_vector, CallOption};
use crate::error::{Error, Result};
use crate::fit::observed_order;
use crate::grid::Grid;
use crate::operator::{
    assemble, check_stability_condition, forward_count, BoundaryData, BoundaryTreatment,
    DiscreteOperator, MixedVariant, SchemeKind,
};
use crate::stability::{
    boundary_ratio, classify_sample, max_norm_sweep, theoretical_inclusion, SampleVerdict,
};
use crate::table::{fmt_real, CsvTable};
use crate::timestepper::{snapshot_csv, solve, ThetaConfig};

/// Sinh grid of a preset.
pub fn preset_grid(p: &ExperimentPreset, m: usize) -> Result<Grid<f64>> {
    Grid::sinh(p.strike, p.clustering, p.cap, m)
}

/// Operator of a preset with a zero Dirichlet datum (the call has `u(0, t) = 0`).
pub fn preset_operator(
    p: &ExperimentPreset,
    scheme: SchemeKind,
    treatment: BoundaryTreatment,
    m: usize,
) -> Result<DiscreteOperator<f64>> {
    assemble(
        &preset_grid(p, m)?,
        &p.model()?,
        scheme,
        treatment,
        BoundaryData::Zero,
    )
}

/// `holds` / `fails` for LBC1 operators, `n/a` for LBC2.
pub fn condition_label(op: &DiscreteOperator<f64>) -> Result<&'static str> {
    match check_stability_condition(op) {
        Ok(v) => Ok(v.label()),
        Err(Error::RequiresLbc1) => Ok("n/a"),
        Err(e) => Err(e),
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_real).unwrap_or_default()
}

/// One `(scheme, treatment, m)` row of a stability sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRow {
    pub scheme: SchemeKind,
    pub treatment: BoundaryTreatment,
    pub m: usize,
    /// `max_t ||e^{tM}||_inf` over `t = 0, 1, ..., t_max`; infinite on overflow.
    pub max_norm: f64,
    pub argmax_t: usize,
    /// `2S / h_{m+2}`.
    pub boundary_ratio: f64,
    pub condition: &'static str,
    /// Inclusion verdict over all sampled `t`; `n/a` for LBC2.
    pub inclusion: &'static str,
    pub overflowed: bool,
}

impl StabilityRow {
    pub fn ratio(&self) -> f64 {
        self.max_norm / self.boundary_ratio
    }
}

pub const STABILITY_COLUMNS: [&str; 10] = [
    "scheme",
    "treatment",
    "m",
    "max_norm",
    "argmax_t",
    "boundary_ratio",
    "norm_over_ratio",
    "condition",
    "inclusion",
    "overflow",
];

/// Sweeps one operator.
pub fn stability_case(op: &DiscreteOperator<f64>, t_max: usize) -> Result<StabilityRow> {
    let sweep = max_norm_sweep(op, t_max)?;
    let condition = condition_label(op)?;
    let inclusion = if op.treatment() == BoundaryTreatment::Lbc2 {
        "n/a"
    } else if sweep.overflowed {
        if condition == "holds" {
            "outside"
        } else {
            "unverifiable"
        }
    } else {
        let holds = condition == "holds";
        let verdicts = sweep.norms.iter().enumerate().map(|(t, norm)| {
            let (lo, hi) = theoretical_inclusion(op.grid(), op.params().r, t as f64);
            classify_sample(holds, *norm, lo, hi)
        });
        let mut label = "inside";
        for v in verdicts {
            match v {
                SampleVerdict::Outside => {
                    label = "outside";
                    break;
                }
                SampleVerdict::Unverifiable => label = "unverifiable",
                SampleVerdict::Inside => {}
            }
        }
        label
    };
    Ok(StabilityRow {
        scheme: op.scheme(),
        treatment: op.treatment(),
        m: op.m(),
        max_norm: sweep.max_norm,
        argmax_t: sweep.argmax,
        boundary_ratio: boundary_ratio(op.grid()),
        condition,
        inclusion,
        overflowed: sweep.overflowed,
    })
}

/// `max_t ||e^{tM}||_inf` per `(scheme, treatment, m)`.
pub fn run_stability(p: &ExperimentPreset) -> Result<Vec<StabilityRow>> {
    p.validate()?;
    let jobs: Vec<_> = p
        .cases()
        .into_iter()
        .flat_map(|(s, t)| p.m_list.iter().map(move |m| (s, t, *m)))
        .collect();
    jobs.par_iter()
        .map(|(s, t, m)| stability_case(&preset_operator(p, *s, *t, *m)?, p.t_max))
        .collect()
}

pub fn stability_csv(rows: &[StabilityRow]) -> String {
    let mut out = CsvTable::new(&STABILITY_COLUMNS);
    for r in rows {
        out.push([
            r.scheme.name().to_string(),
            r.treatment.name().to_string(),
            r.m.to_string(),
            fmt_real(r.max_norm),
            r.argmax_t.to_string(),
            fmt_real(r.boundary_ratio),
            fmt_real(r.ratio()),
            r.condition.to_string(),
            r.inclusion.to_string(),
            r.overflowed.to_string(),
        ]);
    }
    out.finish()
}

/// Final-time error of one convergence case.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub scheme: SchemeKind,
    pub treatment: BoundaryTreatment,
    pub m: usize,
    /// `max_j |u(s_j, T) - U_{N,j}|`.
    pub error: f64,
    pub condition: &'static str,
    pub in_window: bool,
    /// Order fitted over the window for this `(scheme, treatment)`.
    pub order: Option<f64>,
}

pub const CONVERGENCE_COLUMNS: [&str; 7] = [
    "scheme",
    "treatment",
    "m",
    "error",
    "condition",
    "in_window",
    "order",
];

/// `||u(T) - U_N||_inf` at the unknown nodes for the call.
pub fn convergence_error(p: &ExperimentPreset, op: &DiscreteOperator<f64>) -> Result<f64> {
    let option = CallOption::new(p.strike, p.r, p.sigma)?;
    let init = payoff_vector(op.grid(), p.strike);
    let cfg = ThetaConfig::new(p.theta, p.steps, p.rannacher_substeps)?;
    let res = solve(op, &init, &cfg, p.maturity)?;
    let exact: Vec<f64> = op
        .grid()
        .unknown_nodes()
        .iter()
        .map(|s| call_price(*s, p.maturity, &option))
        .collect();
    let err = res.max_error(&exact)?;
    if !err.is_finite() {
        return Err(Error::Overflow(format!("solution for {}", op.describe())));
    }
    Ok(err)
}

/// Errors per `(scheme, treatment, m)` and orders fitted on `m <= fit_m_max`.
pub fn run_convergence(p: &ExperimentPreset) -> Result<Vec<ConvergenceRow>> {
    p.validate()?;
    let jobs: Vec<_> = p
        .cases()
        .into_iter()
        .flat_map(|(s, t)| p.m_list.iter().map(move |m| (s, t, *m)))
        .collect();
    let mut rows: Vec<ConvergenceRow> = jobs
        .par_iter()
        .map(|(s, t, m)| {
            let op = preset_operator(p, *s, *t, *m)?;
            Ok(ConvergenceRow {
                scheme: *s,
                treatment: *t,
                m: *m,
                error: convergence_error(p, &op)?,
                condition: condition_label(&op)?,
                in_window: *m <= p.fit_m_max,
                order: None,
            })
        })
        .collect::<Result<_>>()?;
    for (s, t) in p.cases() {
        let (h, e): (Vec<f64>, Vec<f64>) = rows
            .iter()
            .filter(|r| r.scheme == s && r.treatment == t && r.in_window)
            .map(|r| (1.0 / r.m as f64, r.error))
            .unzip();
        let order = if h.len() >= 2 {
            Some(observed_order(&h, &e)?)
        } else {
            None
        };
        for r in rows
            .iter_mut()
            .filter(|r| r.scheme == s && r.treatment == t)
        {
            r.order = order;
        }
    }
    Ok(rows)
}

/// Fitted order of each `(scheme, treatment)` in preset order.
pub fn fitted_orders(rows: &[ConvergenceRow]) -> Vec<(SchemeKind, BoundaryTreatment, Option<f64>)> {
    let mut out: Vec<(SchemeKind, BoundaryTreatment, Option<f64>)> = Vec::new();
    for r in rows {
        if !out
            .iter()
            .any(|(s, t, _)| *s == r.scheme && *t == r.treatment)
        {
            out.push((r.scheme, r.treatment, r.order));
        }
    }
    out
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut out = CsvTable::new(&CONVERGENCE_COLUMNS);
    for r in rows {
        out.push([
            r.scheme.name().to_string(),
            r.treatment.name().to_string(),
            r.m.to_string(),
            fmt_real(r.error),
            r.condition.to_string(),
            r.in_window.to_string(),
            fmt_opt(r.order),
        ]);
    }
    out.finish()
}

/// Share of grid points at which Mixed A and Mixed B fall back to Forward.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionRow {
    pub m: usize,
    /// Percentages in `[0, 100]`.
    pub mixed_a: f64,
    pub mixed_b: f64,
    pub condition_a: &'static str,
    pub condition_b: &'static str,
}

pub const FRACTION_COLUMNS: [&str; 5] = [
    "m",
    "forward_pct_mixed_a",
    "forward_pct_mixed_b",
    "condition_mixed_a",
    "condition_mixed_b",
];

pub fn run_fractions(p: &ExperimentPreset) -> Result<Vec<FractionRow>> {
    p.validate()?;
    let model = p.model()?;
    p.m_list
        .par_iter()
        .map(|m| {
            let percent = |count: usize| 100.0 * count as f64 / *m as f64;
            let grid = preset_grid(p, *m)?;
            let cond = |scheme| -> Result<&'static str> {
                let op = assemble(
                    &grid,
                    &model,
                    scheme,
                    BoundaryTreatment::Lbc1,
                    BoundaryData::Zero,
                )?;
                condition_label(&op)
            };
            Ok(FractionRow {
                m: *m,
                mixed_a: percent(forward_count(&grid, &model, MixedVariant::A)?),
                mixed_b: percent(forward_count(&grid, &model, MixedVariant::B)?),
                condition_a: cond(SchemeKind::MixedA)?,
                condition_b: cond(SchemeKind::MixedB)?,
            })
        })
        .collect()
}

pub fn fractions_csv(rows: &[FractionRow]) -> String {
    let mut out = CsvTable::new(&FRACTION_COLUMNS);
    for r in rows {
        out.push([
            r.m.to_string(),
            fmt_real(r.mixed_a),
            fmt_real(r.mixed_b),
            r.condition_a.to_string(),
            r.condition_b.to_string(),
        ]);
    }
    out.finish()
}

/// Paired LBC1/LBC2 errors for one scheme and `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct LbcComparisonRow {
    pub scheme: SchemeKind,
    pub m: usize,
    pub error_lbc1: f64,
    pub error_lbc2: f64,
    pub condition_lbc1: &'static str,
}

impl LbcComparisonRow {
    /// `error_lbc1 / error_lbc2`.
    pub fn ratio(&self) -> f64 {
        self.error_lbc1 / self.error_lbc2
    }
}

pub const LBC_COLUMNS: [&str; 6] = [
    "scheme",
    "m",
    "error_lbc1",
    "error_lbc2",
    "ratio",
    "condition_lbc1",
];

/// Errors under both treatments; the preset's treatment list is ignored.
pub fn run_lbc_comparison(p: &ExperimentPreset) -> Result<Vec<LbcComparisonRow>> {
    p.validate()?;
    let jobs: Vec<_> = p
        .schemes
        .iter()
        .flat_map(|s| p.m_list.iter().map(move |m| (*s, *m)))
        .collect();
    jobs.par_iter()
        .map(|(s, m)| {
            let op1 = preset_operator(p, *s, BoundaryTreatment::Lbc1, *m)?;
            let op2 = preset_operator(p, *s, BoundaryTreatment::Lbc2, *m)?;
            Ok(LbcComparisonRow {
                scheme: *s,
                m: *m,
                error_lbc1: convergence_error(p, &op1)?,
                error_lbc2: convergence_error(p, &op2)?,
                condition_lbc1: condition_label(&op1)?,
            })
        })
        .collect()
}

pub fn lbc_comparison_csv(rows: &[LbcComparisonRow]) -> String {
    let mut out = CsvTable::new(&LBC_COLUMNS);
    for r in rows {
        out.push([
            r.scheme.name().to_string(),
            r.m.to_string(),
            fmt_real(r.error_lbc1),
            fmt_real(r.error_lbc2),
            fmt_real(r.ratio()),
            r.condition_lbc1.to_string(),
        ]);
    }
    out.finish()
}

/// Prices the call at `T` with the first scheme, treatment and `m` of the
/// preset; CSV columns `s_j,U_j,analytic_j,error_j`.
pub fn price(p: &ExperimentPreset) -> Result<String> {
    p.validate()?;
    let op = preset_operator(p, p.schemes[0], p.treatments[0], p.m_list[0])?;
    let option = CallOption::new(p.strike, p.r, p.sigma)?;
    let init = payoff_vector(op.grid(), p.strike);
    let cfg = ThetaConfig::new(p.theta, p.steps, p.rannacher_substeps)?;
    let res = solve(&op, &init, &cfg, p.maturity)?;
    let nodes = op.grid().unknown_nodes();
    let exact: Vec<f64> = nodes
        .iter()
        .map(|s| call_price(*s, p.maturity, &option))
        .collect();
    Ok(snapshot_csv(nodes, &res.values, &exact))
}
