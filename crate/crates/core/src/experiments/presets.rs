//! Parameter bundles for the stability sweeps, convergence studies and
//! stencil-fraction tables.

use crate::error::{invalid, Result};
use crate::operator::{BoundaryTreatment, ModelParams, SchemeKind};

/// The `m` sequence used for convergence studies and fraction tables:
/// 19 values equally spaced on a log scale between `10^2` and `10^4`.
pub const TABLE_M_LIST: [usize; 19] = [
    100, 129, 167, 215, 278, 359, 464, 599, 774, 1000, 1292, 1668, 2154, 2783, 3594, 4642, 5995,
    7743, 10000,
];

/// Largest `m` of the desk-scale convergence list.
pub const DESK_CONVERGENCE_M_MAX: usize = 2154;

/// Largest `m` for which dense exponentials are computed at desk scale.
pub const DESK_DENSE_M_MAX: usize = 400;

pub const STRIKE: f64 = 100.0;
pub const CLUSTERING: f64 = 20.0;
pub const STABILITY_CAP: f64 = 400.0;
pub const CONVERGENCE_CAP: f64 = 2000.0;
pub const MATURITY: f64 = 5.0;

/// Time horizon of the stability sweeps, `t = 0, 1, ..., 100`.
pub const SWEEP_T_MAX: usize = 100;

/// Named parameter bundle for one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPreset {
    pub name: String,
    pub r: f64,
    pub sigma: f64,
    pub strike: f64,
    pub clustering: f64,
    pub cap: f64,
    pub m_list: Vec<usize>,
    pub schemes: Vec<SchemeKind>,
    pub treatments: Vec<BoundaryTreatment>,
    pub theta: f64,
    pub steps: usize,
    pub rannacher_substeps: usize,
    pub maturity: f64,
    /// Largest sample time of a stability sweep.
    pub t_max: usize,
    /// Orders are fitted over `m <= fit_m_max`.
    pub fit_m_max: usize,
}

impl ExperimentPreset {
    /// Figure-style stability sweep on the sinh grid with `S = 400`,
    /// `m = 50, 100, 200, 400` (paper scale: `m = 50, 100, ..., 1000`).
    pub fn stability(r: f64, sigma: f64, treatment: BoundaryTreatment, paper_scale: bool) -> Self {
        let m_list = if paper_scale {
            std::iter::once(50)
                .chain((1..=10).map(|k| 100 * k))
                .collect()
        } else {
            vec![50, 100, 200, 400]
        };
        Self {
            name: format!("stability-{}", treatment.name()),
            r,
            sigma,
            strike: STRIKE,
            clustering: CLUSTERING,
            cap: STABILITY_CAP,
            m_list,
            schemes: SchemeKind::ALL.to_vec(),
            treatments: vec![treatment],
            theta: 0.5,
            steps: 0,
            rannacher_substeps: 0,
            maturity: MATURITY,
            t_max: SWEEP_T_MAX,
            fit_m_max: 0,
        }
    }

    /// Spatial convergence study with `S = 2000`, `T = 5`, Crank-Nicolson with
    /// two implicit-Euler startup substeps. Desk scale truncates the `m` list
    /// at 2154 and uses `N = 4000`; paper scale uses the full list and
    /// `N = 10^4`.
    pub fn convergence(
        r: f64,
        sigma: f64,
        treatment: BoundaryTreatment,
        paper_scale: bool,
    ) -> Self {
        let (m_list, steps): (Vec<usize>, usize) = if paper_scale {
            (TABLE_M_LIST.to_vec(), 10_000)
        } else {
            (
                TABLE_M_LIST
                    .iter()
                    .copied()
                    .filter(|m| *m <= DESK_CONVERGENCE_M_MAX)
                    .collect(),
                4000,
            )
        };
        let fit_m_max = if paper_scale {
            5000
        } else {
            DESK_CONVERGENCE_M_MAX
        };
        Self {
            name: format!("convergence-{}", treatment.name()),
            r,
            sigma,
            strike: STRIKE,
            clustering: CLUSTERING,
            cap: CONVERGENCE_CAP,
            m_list,
            schemes: SchemeKind::ALL.to_vec(),
            treatments: vec![treatment],
            theta: 0.5,
            steps,
            rannacher_substeps: 2,
            maturity: MATURITY,
            t_max: 0,
            fit_m_max,
        }
    }

    /// Convergence study under both treatments.
    pub fn lbc_comparison(r: f64, sigma: f64, paper_scale: bool) -> Self {
        let mut p = Self::convergence(r, sigma, BoundaryTreatment::Lbc1, paper_scale);
        p.name = "lbc-compare".into();
        p.treatments = vec![BoundaryTreatment::Lbc1, BoundaryTreatment::Lbc2];
        p
    }

    /// Forward-stencil fractions of the mixed schemes, `r = 0.3`,
    /// `sigma = 0.1`, `S = 2000`, full `m` list.
    pub fn fractions() -> Self {
        Self {
            name: "fractions".into(),
            r: 0.3,
            sigma: 0.1,
            strike: STRIKE,
            clustering: CLUSTERING,
            cap: CONVERGENCE_CAP,
            m_list: TABLE_M_LIST.to_vec(),
            schemes: vec![SchemeKind::MixedA, SchemeKind::MixedB],
            treatments: vec![BoundaryTreatment::Lbc1],
            theta: 0.5,
            steps: 0,
            rannacher_substeps: 0,
            maturity: MATURITY,
            t_max: 0,
            fit_m_max: 0,
        }
    }

    pub fn model(&self) -> Result<ModelParams<f64>> {
        ModelParams::new(self.r, self.sigma, self.cap, self.strike, self.maturity)
    }

    pub fn validate(&self) -> Result<()> {
        self.model()?;
        if !(self.clustering > 0.0) || !self.clustering.is_finite() {
            return Err(invalid("c", "clustering must be positive"));
        }
        if self.m_list.is_empty() {
            return Err(invalid("m-list", "at least one m is required"));
        }
        if self.m_list.iter().any(|m| *m < 2) {
            return Err(invalid("m-list", "every m must be at least 2"));
        }
        if self.schemes.is_empty() || self.treatments.is_empty() {
            return Err(invalid(
                "scheme",
                "at least one scheme and treatment are required",
            ));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(invalid("theta", "must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Every `(scheme, treatment)` pair in preset order.
    pub fn cases(&self) -> Vec<(SchemeKind, BoundaryTreatment)> {
        self.schemes
            .iter()
            .flat_map(|s| self.treatments.iter().map(move |t| (*s, *t)))
            .collect()
    }
}
