//! The eleven acceptance checks. Each returns a pass/fail outcome with a
//! one-line summary of what was measured; errors count as failures.

use std::fmt;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::presets::{ExperimentPreset, CLUSTERING, CONVERGENCE_CAP, MATURITY, STRIKE};
use super::{preset_operator, run_convergence, run_fractions, stability_case};
use crate::analytic::{call_gamma, call_price, eta_estimate, kappa, truncation_errors, CallOption};
use crate::error::{invalid, Result};
use crate::grid::Grid;
use crate::linalg::{expm, norm_inf_vec};
use crate::operator::{
    assemble, BoundaryData, BoundaryTreatment, DiscreteOperator, ModelParams, SchemeKind,
};
use crate::stability::{
    exp_tc_closed_form, norm_exp_tc, verify_discrete_inclusion, verify_semidiscrete_inclusion,
    BLOCK_TOLERANCE,
};
use crate::timestepper::measure_time_order;

/// `(r, sigma)` pairs of the stability sweeps.
pub const RATE_VOL_PAIRS: [(f64, f64); 3] = [(0.1, 0.3), (0.3, 0.1), (0.2, 0.0)];

/// Seed of the randomized closed-form cases.
pub const CLOSED_FORM_SEED: u64 = 0x5e_edc1_05ed;

pub const CRITERIA: [(u8, &str); 11] = [
    (1, "closed-form exponential of the boundary block"),
    (2, "semidiscrete inclusion"),
    (3, "large-time norm proportional to 2S/h"),
    (4, "vanishing lower-left block"),
    (5, "operator identities"),
    (6, "forward-stencil fractions"),
    (7, "LBC2 instability signature"),
    (8, "spatial convergence orders"),
    (9, "fully discrete inclusion"),
    (10, "temporal convergence orders"),
    (11, "boundary truncation bound"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:>2} {} ({:.1} s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

/// Runs criterion `id`.
pub fn run_criterion(id: u8) -> Result<CriterionOutcome> {
    let name = CRITERIA
        .iter()
        .find(|(k, _)| *k == id)
        .map(|(_, n)| *n)
        .ok_or_else(|| invalid("criterion", format!("no criterion {id}")))?;
    let started = Instant::now();
    let result = match id {
        1 => closed_form_exactness(),
        2 => semidiscrete_inclusion(),
        3 => proportionality(),
        4 => lower_left_block(),
        5 => operator_identities(),
        6 => fractions(),
        7 => lbc2_signature(),
        8 => spatial_orders(),
        9 => discrete_inclusion(),
        10 => time_orders(),
        _ => truncation_bound(),
    };
    let elapsed = started.elapsed();
    let (passed, detail) = match result {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    Ok(CriterionOutcome {
        id,
        name,
        passed,
        detail,
        elapsed,
    })
}

/// Runs every criterion in order.
pub fn run_all() -> Vec<CriterionOutcome> {
    CRITERIA
        .iter()
        .map(|(id, _)| run_criterion(*id).expect("known criterion"))
        .collect()
}

type Check = Result<(bool, String)>;

fn stability_op(
    scheme: SchemeKind,
    treatment: BoundaryTreatment,
    r: f64,
    sigma: f64,
    m: usize,
) -> Result<DiscreteOperator<f64>> {
    let p = ExperimentPreset::stability(r, sigma, treatment, false);
    preset_operator(&p, scheme, treatment, m)
}

fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

fn closed_form_exactness() -> Check {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(CLOSED_FORM_SEED);
    let mut worst_entry = 0.0f64;
    let mut worst_norm = 0.0f64;
    for case in 0..50 {
        let r: f64 = rng.gen_range(0.05..=0.5);
        let cap: f64 = rng.gen_range(100.0..=2000.0);
        let m: usize = rng.gen_range(20..=200);
        let t: f64 = rng.gen_range(0.0..=MATURITY);
        let grid = if case % 2 == 0 {
            Grid::uniform(cap, m)?
        } else {
            Grid::sinh(cap / 4.0, cap / 20.0, cap, m)?
        };
        let params = ModelParams::new(r, 0.2, cap, cap / 4.0, 1.0)?;
        let op = assemble(
            &grid,
            &params,
            SchemeKind::Forward,
            BoundaryTreatment::Lbc1,
            BoundaryData::Zero,
        )?;
        let e = expm(&op.block_c().scaled(t))?;
        let exact = exp_tc_closed_form(&grid, r, t);
        for i in 0..2 {
            for j in 0..2 {
                worst_entry = worst_entry.max(rel_err(e[(i, j)], exact[(i, j)]));
            }
        }
        worst_norm = worst_norm.max(rel_err(e.norm_inf(), norm_exp_tc(&grid, r, t)));
    }
    let secs = started.elapsed().as_secs_f64();
    Ok((
        worst_entry <= 1e-10 && worst_norm <= 1e-10 && secs < 10.0,
        format!("50 cases with t in [0, {MATURITY}], max entry rel err {worst_entry:.2e}, max norm rel err {worst_norm:.2e}, {secs:.2} s"),
    ))
}

const INCLUSION_SCHEMES: [SchemeKind; 3] =
    [SchemeKind::Forward, SchemeKind::MixedA, SchemeKind::MixedB];
const INCLUSION_M: [usize; 4] = [50, 100, 200, 400];

fn semidiscrete_inclusion() -> Check {
    let jobs: Vec<(SchemeKind, (f64, f64), usize)> = INCLUSION_SCHEMES
        .iter()
        .flat_map(|s| {
            RATE_VOL_PAIRS
                .iter()
                .flat_map(move |p| INCLUSION_M.iter().map(move |m| (*s, *p, *m)))
        })
        .collect();
    let t: Vec<f64> = (0..=100).map(f64::from).collect();
    let failures: Vec<String> = jobs
        .par_iter()
        .map(|(s, (r, sigma), m)| -> Result<Option<String>> {
            let op = stability_op(*s, BoundaryTreatment::Lbc1, *r, *sigma, *m)?;
            let rep = verify_semidiscrete_inclusion(&op, &t)?;
            Ok(if rep.all_inside() {
                None
            } else {
                Some(format!(
                    "{s} r={r} sigma={sigma} m={m}: condition {}",
                    rep.condition
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    Ok((
        failures.is_empty(),
        if failures.is_empty() {
            format!("{} operators x 101 times inside", jobs.len())
        } else {
            failures.join("; ")
        },
    ))
}

fn proportionality() -> Check {
    let mut parts = Vec::new();
    let mut ok = true;
    for (r, sigma) in RATE_VOL_PAIRS {
        for m in [200, 400] {
            let op = stability_op(SchemeKind::Forward, BoundaryTreatment::Lbc1, r, sigma, m)?;
            let ratio = stability_case(&op, 100)?.ratio();
            ok &= (0.9..=1.1).contains(&ratio);
            parts.push(format!("({r},{sigma},{m}) {ratio:.4}"));
        }
    }
    Ok((ok, format!("max norm / (2S/h): {}", parts.join(", "))))
}

fn lower_left_block() -> Check {
    let mut worst = 0.0f64;
    for scheme in SchemeKind::ALL {
        for (r, sigma) in RATE_VOL_PAIRS {
            let op = stability_op(scheme, BoundaryTreatment::Lbc1, r, sigma, 100)?;
            let rep = verify_semidiscrete_inclusion(&op, &[0.5, 1.0, 10.0])?;
            worst = worst.max(rep.max_block_residual().unwrap_or(f64::INFINITY));
        }
    }
    Ok((
        worst <= BLOCK_TOLERANCE,
        format!("max |lower-left entry| {worst:.2e} over 15 operators at t = 0.5, 1, 10"),
    ))
}

/// Largest relative residual of `M 1 + beta_1 e_1 = -r 1` and `M s = 0`.
pub fn identity_residuals(op: &DiscreteOperator<f64>) -> (f64, f64) {
    let n = op.dim();
    let r = op.params().r;
    let scale = op.matrix().norm_inf();
    let ones = vec![1.0; n];
    let mut m1 = op.apply(&ones);
    m1[0] += op.beta1();
    let row_sum = m1.iter().map(|v| (v + r).abs()).fold(0.0, f64::max) / (scale + r);
    let s = op.grid().unknown_nodes();
    let ms = norm_inf_vec(&op.apply(s)) / (scale * norm_inf_vec(s));
    (row_sum, ms)
}

fn operator_identities() -> Check {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (r, sigma) in RATE_VOL_PAIRS {
        let params = ModelParams::new(r, sigma, 400.0, STRIKE, 1.0)?;
        for grid in [
            Grid::uniform(400.0, 100)?,
            Grid::sinh(STRIKE, CLUSTERING, 400.0, 100)?,
        ] {
            for scheme in SchemeKind::ALL {
                for treatment in [BoundaryTreatment::Lbc1, BoundaryTreatment::Lbc2] {
                    let op = assemble(&grid, &params, scheme, treatment, BoundaryData::Zero)?;
                    let (a, b) = identity_residuals(&op);
                    worst = worst.max(a).max(b);
                    count += 1;
                }
            }
        }
    }
    Ok((
        worst <= 1e-10,
        format!("{count} operators, max relative residual {worst:.2e}"),
    ))
}

fn fractions() -> Check {
    let started = Instant::now();
    let expected = [
        (100, "57.0", "58.0"),
        (215, "9.8", "11.2"),
        (1000, "2.7", "2.7"),
        (10000, "0.3", "0.3"),
    ];
    let mut p = ExperimentPreset::fractions();
    p.m_list = expected.iter().map(|e| e.0).collect();
    let rows = run_fractions(&p)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for (row, (m, a, b)) in rows.iter().zip(expected) {
        let got_a = format!("{:.1}", row.mixed_a);
        let got_b = format!("{:.1}", row.mixed_b);
        ok &= got_a == a && got_b == b;
        parts.push(format!("m={m} {got_a}/{got_b}"));
    }
    let secs = started.elapsed().as_secs_f64();
    Ok((
        ok && secs < 5.0,
        format!("{} ({secs:.2} s)", parts.join(", ")),
    ))
}

fn lbc2_signature() -> Check {
    let targets = [
        (SchemeKind::CentralA, 100, 2.5e3),
        (SchemeKind::CentralA, 200, 9.8e3),
        (SchemeKind::CentralB, 100, 1.5e5),
        (SchemeKind::CentralB, 200, 5.8e5),
    ];
    let rows = targets
        .par_iter()
        .map(|(s, m, _)| {
            stability_case(
                &stability_op(*s, BoundaryTreatment::Lbc2, 0.2, 0.0, *m)?,
                100,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut ok = true;
    let mut parts = Vec::new();
    for (row, (s, m, target)) in rows.iter().zip(targets) {
        ok &= (row.max_norm / target - 1.0).abs() <= 0.2;
        parts.push(format!(
            "{s} m={m} {:.4e} (target {target:.1e})",
            row.max_norm
        ));
    }
    Ok((ok, parts.join(", ")))
}

/// `(r, sigma, scheme, expected order, tolerance)` for the spatial study.
pub const SPATIAL_ORDER_TARGETS: [(f64, f64, SchemeKind, f64, f64); 8] = [
    (0.1, 0.3, SchemeKind::CentralA, 2.0, 0.2),
    (0.1, 0.3, SchemeKind::CentralB, 2.0, 0.2),
    (0.1, 0.3, SchemeKind::MixedA, 2.0, 0.2),
    (0.1, 0.3, SchemeKind::MixedB, 2.0, 0.2),
    (0.1, 0.3, SchemeKind::Forward, 1.0, 0.15),
    (0.3, 0.1, SchemeKind::Forward, 0.9, 0.15),
    (0.3, 0.1, SchemeKind::CentralA, 2.0, 0.2),
    (0.3, 0.1, SchemeKind::CentralB, 1.9, 0.2),
];

fn spatial_orders() -> Check {
    let mut ok = true;
    let mut parts = Vec::new();
    for (r, sigma) in [(0.1, 0.3), (0.3, 0.1)] {
        let mut p = ExperimentPreset::convergence(r, sigma, BoundaryTreatment::Lbc1, false);
        p.schemes = SPATIAL_ORDER_TARGETS
            .iter()
            .filter(|t| t.0 == r && t.1 == sigma)
            .map(|t| t.2)
            .collect();
        let rows = run_convergence(&p)?;
        for (_, _, scheme, expected, tol) in SPATIAL_ORDER_TARGETS
            .iter()
            .filter(|t| t.0 == r && t.1 == sigma)
        {
            let order = rows
                .iter()
                .find(|row| row.scheme == *scheme)
                .and_then(|row| row.order)
                .unwrap_or(f64::NAN);
            ok &= (order - expected).abs() <= *tol;
            parts.push(format!(
                "({r},{sigma}) {scheme} {order:.3} (want {expected}±{tol})"
            ));
        }
    }
    Ok((ok, parts.join(", ")))
}

fn discrete_inclusion() -> Check {
    let mut ok = true;
    let mut parts = Vec::new();
    for (r, sigma) in RATE_VOL_PAIRS {
        let op = stability_op(SchemeKind::Forward, BoundaryTreatment::Lbc1, r, sigma, 100)?;
        for theta in [0.5, 1.0] {
            let rep = verify_discrete_inclusion(&op, theta, 0.05, 100, None)?;
            let k = rep.k_estimate.unwrap_or(f64::NAN);
            ok &= rep.all_inside();
            if theta == 1.0 {
                ok &= (k - 1.0).abs() <= 1e-10;
            }
            parts.push(format!(
                "({r},{sigma}) theta={theta} K={k:.12} {}",
                if rep.all_inside() {
                    "inside"
                } else {
                    "outside"
                }
            ));
        }
    }
    Ok((ok, parts.join(", ")))
}

/// Step counts of the temporal study.
pub const TIME_ORDER_STEPS: [usize; 5] = [10, 20, 40, 80, 160];

/// Smooth initial data for the temporal study: the call at `t = 0.1` on the
/// sinh grid with `S = 400`, `m = 100`, Mixed A, LBC1, integrated to `T = 1`.
pub fn time_order_study(theta: f64) -> Result<f64> {
    let (r, sigma) = (0.1, 0.3);
    let op = stability_op(SchemeKind::MixedA, BoundaryTreatment::Lbc1, r, sigma, 100)?;
    let option = CallOption::new(STRIKE, r, sigma)?;
    let init: Vec<f64> = op
        .grid()
        .unknown_nodes()
        .iter()
        .map(|s| call_price(*s, 0.1, &option))
        .collect();
    Ok(measure_time_order(&op, &init, theta, 0, &TIME_ORDER_STEPS, 1.0)?.order)
}

fn time_orders() -> Check {
    let p1 = time_order_study(1.0)?;
    let p2 = time_order_study(0.5)?;
    Ok((
        (p1 - 1.0).abs() <= 0.2 && (p2 - 2.0).abs() <= 0.2,
        format!("theta=1 order {p1:.3}, theta=1/2 order {p2:.3}"),
    ))
}

/// Checks `(8S/h) |delta_R(t)|_inf <= kappa eta(t)` for the call with
/// `h* = h_{m+2}`. The detail also reports the bound enlarged by
/// `(8S/h)(sigma^2 S^2 / 2 + r S h / 2) |u_ss(S, t)|`, the contribution of the
/// call's nonzero curvature at `s = S` that the bound leaves out.
fn truncation_bound() -> Check {
    let mut failures = Vec::new();
    let mut corrected_ok = true;
    let mut count = 0;
    for (r, sigma) in [(0.1, 0.3), (0.3, 0.1)] {
        let option = CallOption::new(STRIKE, r, sigma)?;
        let p = ExperimentPreset::convergence(r, sigma, BoundaryTreatment::Lbc1, false);
        for m in [200, 400] {
            let op = preset_operator(&p, SchemeKind::Forward, BoundaryTreatment::Lbc1, m)?;
            let h = op.grid().last_width();
            let cap = CONVERGENCE_CAP;
            let k = kappa(r, sigma, cap, h);
            for t in [1.0, 2.5, 5.0] {
                let (_, tail) = truncation_errors(&op, &option, t);
                let lhs = 8.0 * cap / h * norm_inf_vec(&tail);
                let rhs = k * eta_estimate(cap, h, t, &option, 16);
                let curvature = 8.0 * cap / h
                    * (0.5 * sigma * sigma * cap * cap + 0.5 * r * cap * h)
                    * call_gamma(cap, t, &option).abs();
                corrected_ok &= lhs <= rhs + curvature;
                if lhs > rhs {
                    failures.push(format!(
                        "(r={r},sigma={sigma},m={m},t={t}) {lhs:.3e} > {rhs:.3e}"
                    ));
                }
                count += 1;
            }
        }
    }
    let corrected = if corrected_ok { "holds" } else { "fails" };
    Ok((
        failures.is_empty(),
        if failures.is_empty() {
            format!("{count} cases hold; bound with the u_ss(S,t) term {corrected}")
        } else {
            format!(
                "{} of {count} cases violate: {}; bound with the u_ss(S,t) term {corrected}",
                failures.len(),
                failures.join(", ")
            )
        },
    ))
}
