//! Spatial grids on `[0, S]`.
//!
//! Nodes are indexed `s_0 = 0 < s_1 < ... < s_{m+2} = S`; the unknowns of the
//! semidiscrete system live at `s_1..s_{m+2}`. Mesh widths follow the usual
//! convention `h_j = s_j - s_{j-1}` for `1 <= j <= m+2`.

use crate::table::{fmt_real, CsvTable};

use crate::error::{invalid, Result};
use crate::scalar::Real;

/// How a grid was generated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridKind<T> {
    Uniform,
    /// `s = E + c sinh(xi)` on a uniform `xi` grid with spacing `dxi`.
    Sinh {
        strike: T,
        clustering: T,
        dxi: T,
    },
}

/// Immutable spatial mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    nodes: Vec<T>,
    widths: Vec<T>,
    m: usize,
    kind: GridKind<T>,
}

/// Inverse hyperbolic sine, evaluated on `|x|` and mirrored so that the
/// negative branch has no cancellation.
pub(crate) fn asinh_symmetric<T: Real>(x: T) -> T {
    let ax = x.abs();
    let v = (ax + (ax * ax + T::one()).sqrt()).ln();
    if x < T::zero() {
        -v
    } else {
        v
    }
}

impl<T: Real> Grid<T> {
    /// Uniform grid with `h_j = S/(m+2)`.
    pub fn uniform(cap: T, m: usize) -> Result<Self> {
        if !(cap > T::zero()) || !cap.is_finite() {
            return Err(invalid("S", "domain cap must be positive and finite"));
        }
        if m < 1 {
            return Err(invalid("m", "interior dimension must be at least 1"));
        }
        let n = m + 2;
        let h = cap / T::from_usize_lossy(n);
        let nodes = (0..=n)
            .map(|j| {
                if j == n {
                    cap
                } else {
                    h * T::from_usize_lossy(j)
                }
            })
            .collect();
        Ok(Self::from_nodes(nodes, m, GridKind::Uniform))
    }

    /// Grid clustered around `strike` through `s = E + c sinh(xi)`.
    pub fn sinh(strike: T, clustering: T, cap: T, m: usize) -> Result<Self> {
        if !(cap > T::zero()) || !cap.is_finite() {
            return Err(invalid("S", "domain cap must be positive and finite"));
        }
        if !(strike > T::zero() && strike < cap) {
            return Err(invalid("E", "strike must lie strictly inside (0, S)"));
        }
        if !(clustering > T::zero()) || !clustering.is_finite() {
            return Err(invalid("c", "clustering parameter must be positive"));
        }
        if m < 1 {
            return Err(invalid("m", "interior dimension must be at least 1"));
        }
        let n = m + 2;
        let a = asinh_symmetric(-strike / clustering);
        let b = asinh_symmetric((cap - strike) / clustering);
        let dxi = (b - a) / T::from_usize_lossy(n);
        let mut nodes: Vec<T> = (0..=n)
            .map(|j| strike + clustering * (a + T::from_usize_lossy(j) * dxi).sinh())
            .collect();
        nodes[0] = T::zero();
        nodes[n] = cap;
        let kind = GridKind::Sinh {
            strike,
            clustering,
            dxi,
        };
        let grid = Self::from_nodes(nodes, m, kind);
        if grid.widths.iter().any(|h| !(*h > T::zero())) {
            return Err(invalid("m", "grid is not strictly increasing"));
        }
        Ok(grid)
    }

    fn from_nodes(nodes: Vec<T>, m: usize, kind: GridKind<T>) -> Self {
        let widths = nodes.windows(2).map(|w| w[1] - w[0]).collect();
        Self {
            nodes,
            widths,
            m,
            kind,
        }
    }

    /// Interior-block dimension; the system has `m + 2` unknowns.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn unknowns(&self) -> usize {
        self.m + 2
    }

    pub fn cap(&self) -> T {
        self.nodes[self.m + 2]
    }

    pub fn kind(&self) -> GridKind<T> {
        self.kind
    }

    /// All nodes `s_0..=s_{m+2}`.
    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    /// Nodes carrying unknowns, `s_1..=s_{m+2}`.
    pub fn unknown_nodes(&self) -> &[T] {
        &self.nodes[1..]
    }

    /// `s_j` for `0 <= j <= m+2`.
    #[inline]
    pub fn s(&self, j: usize) -> T {
        self.nodes[j]
    }

    /// `h_j` for `1 <= j <= m+2`.
    #[inline]
    pub fn h(&self, j: usize) -> T {
        debug_assert!(j >= 1 && j <= self.m + 2);
        self.widths[j - 1]
    }

    /// `H_j = h_j + h_{j+1}` for `1 <= j <= m+1`.
    #[inline]
    pub fn big_h(&self, j: usize) -> T {
        self.h(j) + self.h(j + 1)
    }

    /// Mesh widths `h_1..=h_{m+2}`.
    pub fn widths(&self) -> &[T] {
        &self.widths
    }

    /// Last mesh width `h_{m+2} = S - s_{m+1}`.
    pub fn last_width(&self) -> T {
        self.h(self.m + 2)
    }

    /// `max_j |h_{j+1} - h_j| / dxi^2`, the constant `c_2` of a smooth grid.
    /// Uniform grids report the unscaled maximum (zero up to rounding).
    pub fn smoothness_constant(&self) -> T {
        let max_jump = self
            .widths
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .fold(T::zero(), T::max);
        match self.kind {
            GridKind::Sinh { dxi, .. } => max_jump / (dxi * dxi),
            GridKind::Uniform => max_jump,
        }
    }

    /// Short human-readable identification, used as operator provenance.
    pub fn describe(&self) -> String {
        match self.kind {
            GridKind::Uniform => format!("uniform(S={}, m={})", self.cap(), self.m),
            GridKind::Sinh {
                strike, clustering, ..
            } => format!(
                "sinh(E={}, c={}, S={}, m={})",
                strike,
                clustering,
                self.cap(),
                self.m
            ),
        }
    }

    /// CSV with columns `j,s_j,h_j`; `h_0` is left empty.
    pub fn to_csv(&self) -> String {
        let mut out = CsvTable::new(&["j", "s_j", "h_j"]);
        for (j, s) in self.nodes.iter().enumerate() {
            let h = if j == 0 {
                String::new()
            } else {
                fmt_real(self.h(j))
            };
            out.push([j.to_string(), fmt_real(*s), h]);
        }
        out.finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sinh_endpoints_are_exact() {
        let g = Grid::sinh(100.0, 20.0, 400.0, 50).unwrap();
        assert_eq!(g.s(0), 0.0);
        assert_eq!(g.s(52), 400.0);
        assert!(g.widths().iter().all(|h| *h > 0.0));
        assert_eq!(g.nodes().len(), 53);
    }

    #[test]
    fn sinh_widths_near_strike_match_clustering() {
        let g = Grid::<f64>::sinh(100.0, 20.0, 400.0, 2000).unwrap();
        let GridKind::Sinh { dxi, .. } = g.kind() else {
            unreachable!()
        };
        let j = (1..=g.m() + 2)
            .min_by(|&a, &b| {
                (g.s(a) - 100.0)
                    .abs()
                    .partial_cmp(&(g.s(b) - 100.0).abs())
                    .unwrap()
            })
            .unwrap();
        let ratio = g.h(j) / (20.0 * dxi);
        assert!((ratio - 1.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn smoothness_scales_with_dxi_squared() {
        let c100 = Grid::<f64>::sinh(100.0, 20.0, 400.0, 100)
            .unwrap()
            .smoothness_constant();
        let c200 = Grid::<f64>::sinh(100.0, 20.0, 400.0, 200)
            .unwrap()
            .smoothness_constant();
        // The raw jump shrinks by ~4 when m doubles; the normalized constant stays put.
        assert!((c200 / c100 - 1.0).abs() < 0.05, "{c100} {c200}");
        let bounded = (1..=20)
            .map(|k| {
                Grid::sinh(100.0, 20.0, 400.0, 50 * k)
                    .unwrap()
                    .smoothness_constant()
            })
            .fold(0.0f64, f64::max);
        assert!(bounded < 1.2 * c100.max(c200));
    }

    #[test]
    fn uniform_grid_arithmetic() {
        let g = Grid::<f64>::uniform(400.0, 98).unwrap();
        assert!(g.widths().iter().all(|h| (h - 4.0).abs() < 1e-12));
        assert_eq!(g.s(50), 200.0);
        assert_eq!(g.s(100), 400.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(Grid::uniform(1.0, 0).is_err());
        assert!(Grid::uniform(-1.0, 5).is_err());
        assert!(Grid::sinh(0.0, 20.0, 400.0, 10).is_err());
        assert!(Grid::sinh(400.0, 20.0, 400.0, 10).is_err());
        assert!(Grid::sinh(100.0, 0.0, 400.0, 10).is_err());
        assert!(Grid::sinh(100.0, 20.0, 400.0, 0).is_err());
    }

    #[test]
    fn widths_sum_to_cap() {
        for m in [1, 7, 100, 1000] {
            let g = Grid::sinh(100.0, 20.0, 2000.0, m).unwrap();
            let total: f64 = g.widths().iter().sum();
            assert_relative_eq!(total, 2000.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn asinh_matches_std() {
        for x in [-50.0, -5.0, -1e-3, 0.0, 2.0, 95.0] {
            assert_relative_eq!(asinh_symmetric(x), f64::asinh(x), max_relative = 1e-14);
        }
    }

    #[test]
    fn deterministic_reconstruction() {
        let a = Grid::sinh(100.0, 20.0, 400.0, 123).unwrap();
        let b = Grid::sinh(100.0, 20.0, 400.0, 123).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let g = Grid::uniform(4.0f64, 2).unwrap();
        let csv = g.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "j,s_j,h_j");
        assert_eq!(lines.len(), 6);
        assert!(lines[1].ends_with(','));
    }

    #[test]
    fn works_in_single_precision() {
        let g = Grid::<f32>::sinh(100.0, 20.0, 400.0, 50).unwrap();
        assert_eq!(g.s(52), 400.0);
        assert!(g.widths().iter().all(|h| *h > 0.0));
    }
}
