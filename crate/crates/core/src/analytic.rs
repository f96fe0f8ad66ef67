//! Closed-form European call values and spatial truncation-error diagnostics.
//!
//! Time is the forward variable of the PDE: `t` is the time to maturity, the
//! option is worth its payoff at `t = 0`.

use crate::error::{invalid, Result};
use crate::grid::Grid;
use crate::operator::DiscreteOperator;
use crate::scalar::Real;

/// European call on a non-dividend asset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CallOption<T> {
    pub strike: T,
    pub r: T,
    pub sigma: T,
}

impl<T: Real> CallOption<T> {
    pub fn new(strike: T, r: T, sigma: T) -> Result<Self> {
        if !(strike > T::zero()) {
            return Err(invalid("E", "strike must be positive"));
        }
        if !(sigma >= T::zero()) {
            return Err(invalid("sigma", "volatility must be non-negative"));
        }
        Ok(Self { strike, r, sigma })
    }
}

/// Standard normal distribution function.
pub fn norm_cdf<T: Real>(x: T) -> T {
    T::lit(0.5) * (-x * T::FRAC_1_SQRT_2()).erfc()
}

/// Standard normal density.
pub fn norm_pdf<T: Real>(x: T) -> T {
    (-T::lit(0.5) * x * x).exp() / (T::TAU()).sqrt()
}

struct D<T> {
    d1: T,
    d2: T,
    vol: T,
}

fn d_terms<T: Real>(s: T, t: T, o: &CallOption<T>) -> D<T> {
    let vol = o.sigma * t.sqrt();
    let d1 = ((s / o.strike).ln() + (o.r + T::lit(0.5) * o.sigma * o.sigma) * t) / vol;
    D {
        d1,
        d2: d1 - vol,
        vol,
    }
}

fn degenerate<T: Real>(s: T, t: T, o: &CallOption<T>) -> bool {
    t <= T::zero() || o.sigma == T::zero() || s <= T::zero()
}

/// `max(0, s - E)`.
pub fn payoff<T: Real>(s: T, strike: T) -> T {
    (s - strike).max(T::zero())
}

/// Payoff at the unknown nodes `s_1..=s_{m+2}`.
pub fn payoff_vector<T: Real>(grid: &Grid<T>, strike: T) -> Vec<T> {
    grid.unknown_nodes()
        .iter()
        .map(|s| payoff(*s, strike))
        .collect()
}

/// Call value; zero volatility gives the deterministic limit `max(0, s - E e^{-rt})`.
pub fn call_price<T: Real>(s: T, t: T, o: &CallOption<T>) -> T {
    if t <= T::zero() {
        return payoff(s, o.strike);
    }
    let disc = o.strike * (-o.r * t).exp();
    if s <= T::zero() {
        return T::zero();
    }
    if o.sigma == T::zero() {
        return (s - disc).max(T::zero());
    }
    let d = d_terms(s, t, o);
    s * norm_cdf(d.d1) - disc * norm_cdf(d.d2)
}

/// Put value `E e^{-rt} N(-d2) - s N(-d1)`, the call's distance from its
/// asymptote `s - E e^{-rt}`.
pub fn put_price<T: Real>(s: T, t: T, o: &CallOption<T>) -> T {
    if t <= T::zero() {
        return (o.strike - s).max(T::zero());
    }
    let disc = o.strike * (-o.r * t).exp();
    if s <= T::zero() {
        return disc;
    }
    if o.sigma == T::zero() {
        return (disc - s).max(T::zero());
    }
    let d = d_terms(s, t, o);
    disc * norm_cdf(-d.d2) - s * norm_cdf(-d.d1)
}

/// `du/dt` of the call, `sigma s n(d1) / (2 sqrt t) + r E e^{-rt} N(d2)`.
pub fn call_price_time_derivative<T: Real>(s: T, t: T, o: &CallOption<T>) -> T {
    if s <= T::zero() {
        return T::zero();
    }
    let disc = o.strike * (-o.r * t).exp();
    if degenerate(s, t, o) {
        return if s > disc { o.r * disc } else { T::zero() };
    }
    let d = d_terms(s, t, o);
    s * norm_pdf(d.d1) * o.sigma / (T::lit(2.0) * t.sqrt()) + o.r * disc * norm_cdf(d.d2)
}

/// `du/dt` of the put with the same parameters,
/// `sigma s n(d1) / (2 sqrt t) - r E e^{-rt} N(-d2)`.
pub fn put_price_time_derivative<T: Real>(s: T, t: T, o: &CallOption<T>) -> T {
    let disc = o.strike * (-o.r * t).exp();
    if s <= T::zero() {
        return -o.r * disc;
    }
    if degenerate(s, t, o) {
        return if s < disc { -o.r * disc } else { T::zero() };
    }
    let d = d_terms(s, t, o);
    s * norm_pdf(d.d1) * o.sigma / (T::lit(2.0) * t.sqrt()) - o.r * disc * norm_cdf(-d.d2)
}

/// `d^2 u / ds^2 = n(d1) / (s sigma sqrt t)`, zero in the degenerate cases.
pub fn call_gamma<T: Real>(s: T, t: T, o: &CallOption<T>) -> T {
    if degenerate(s, t, o) {
        return T::zero();
    }
    let d = d_terms(s, t, o);
    norm_pdf(d.d1) / (s * d.vol)
}

/// Analytic `d^3 u / ds^3` of the call (identical for the put).
pub fn call_third_derivative<T: Real>(s: T, t: T, o: &CallOption<T>) -> T {
    if degenerate(s, t, o) {
        return T::zero();
    }
    let d = d_terms(s, t, o);
    -norm_pdf(d.d1) / (s * s * d.vol) * (T::one() + d.d1 / d.vol)
}

/// `d^3 u / ds^3` at `s` by the fourth-order central difference
/// `[-f(s+3h) + 8f(s+2h) - 13f(s+h) + 13f(s-h) - 8f(s-2h) + f(s-3h)] / (8h^3)`
/// applied to the put, which has the same third derivative as the call.
pub fn third_derivative_fd<T: Real>(s: T, t: T, o: &CallOption<T>, step: T) -> T {
    let f = |k: f64| put_price(s + T::lit(k) * step, t, o);
    let num = -f(3.0) + T::lit(8.0) * f(2.0) - T::lit(13.0) * f(1.0) + T::lit(13.0) * f(-1.0)
        - T::lit(8.0) * f(-2.0)
        + f(-3.0);
    num / (T::lit(8.0) * step * step * step)
}

/// `eta(t) = max |u_sss(s, t)|` over `s` in `[S - width, S]`, estimated with
/// [`third_derivative_fd`] at step `1e-3 S` on `samples + 1` equally spaced points.
pub fn eta_estimate<T: Real>(cap: T, width: T, t: T, o: &CallOption<T>, samples: usize) -> T {
    let step = T::lit(1e-3) * cap;
    let samples = samples.max(1);
    (0..=samples)
        .map(|k| {
            let s = cap - width + width * T::from_usize_lossy(k) / T::from_usize_lossy(samples);
            third_derivative_fd(s, t, o, step).abs()
        })
        .fold(T::zero(), T::max)
}

/// `kappa = 4 sigma^2 S^3 + 6 r S^2 h*`.
pub fn kappa<T: Real>(r: T, sigma: T, cap: T, h_star: T) -> T {
    T::lit(4.0) * sigma * sigma * cap * cap * cap + T::lit(6.0) * r * cap * cap * h_star
}

/// Spatial truncation error `delta(t) = u_h'(t) - M u_h(t) - b(t)` of the call,
/// split into the interior part (`m` entries) and the boundary part (2 entries).
///
/// The call is written as `(s - E e^{-rt}) + put`. The linear part is
/// reproduced exactly by every stencil, so only the put is propagated through
/// `M`; this avoids cancellation between large nearly linear values. The
/// operator's Dirichlet datum is ignored: the call has `u(0, t) = 0`.
pub fn truncation_errors<T: Real>(
    op: &DiscreteOperator<T>,
    o: &CallOption<T>,
    t: T,
) -> (Vec<T>, Vec<T>) {
    let nodes = op.grid().unknown_nodes();
    let m = op.m();
    let disc = o.strike * (-o.r * t).exp();
    let put: Vec<T> = nodes.iter().map(|s| put_price(*s, t, o)).collect();
    let mp = op.apply(&put);
    let mut delta: Vec<T> = nodes
        .iter()
        .zip(&mp)
        .map(|(s, v)| put_price_time_derivative(*s, t, o) - *v)
        .collect();
    // Row 1 also sees u(0, t): the put contributes beta_1 E e^{-rt} there, while
    // the linear part contributes beta_1 (-E e^{-rt}); together u(0, t) = 0.
    delta[0] -= op.beta1() * disc;
    let tail = delta.split_off(m);
    (delta, tail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{assemble, BoundaryData, BoundaryTreatment, ModelParams, SchemeKind};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn opt() -> CallOption<f64> {
        CallOption::new(100.0, 0.1, 0.3).unwrap()
    }

    #[test]
    fn payoff_examples() {
        assert_eq!(payoff(100.0, 100.0), 0.0);
        assert_eq!(payoff(200.0, 100.0), 100.0);
        let g = Grid::uniform(90.0, 7).unwrap();
        assert!(payoff_vector(&g, 100.0).iter().all(|v| *v == 0.0));
        assert_eq!(payoff_vector(&g, 100.0).len(), 9);
    }

    #[test]
    fn gamma_matches_second_difference() {
        let o = opt();
        for (s, t) in [(80.0, 0.5), (100.0, 1.0), (180.0, 5.0)] {
            let e = 1e-3 * s;
            let fd = (call_price(s + e, t, &o) - 2.0 * call_price(s, t, &o)
                + call_price(s - e, t, &o))
                / (e * e);
            assert_relative_eq!(call_gamma(s, t, &o), fd, max_relative = 1e-5);
        }
        assert_eq!(call_gamma(100.0, 0.0, &o), 0.0);
    }

    #[test]
    fn frozen_reference_value() {
        // Independent 50-digit evaluation of the closed form.
        let v = call_price(100.0, 5.0, &opt());
        assert_relative_eq!(v, 46.034893850666606, max_relative = 1e-13);
    }

    #[test]
    fn boundary_and_asymptote() {
        let o = opt();
        for t in [0.0, 0.5, 5.0] {
            assert_eq!(call_price(0.0, t, &o), 0.0);
        }
        let s = 5000.0;
        let lin = s - 100.0 * (-0.1f64 * 2.0).exp();
        assert_relative_eq!(call_price(s, 2.0, &o), lin, max_relative = 1e-14);
        assert_eq!(call_price(130.0, 0.0, &o), 30.0);
        assert_eq!(call_price(70.0, 0.0, &o), 0.0);
    }

    #[test]
    fn zero_volatility_limit() {
        let o = CallOption::new(100.0, 0.2, 0.0).unwrap();
        let disc = 100.0 * (-0.2f64).exp();
        assert_relative_eq!(
            call_price(150.0, 1.0, &o),
            150.0 - disc,
            max_relative = 1e-15
        );
        assert_eq!(call_price(50.0, 1.0, &o), 0.0);
    }

    #[test]
    fn cdf_symmetry() {
        for x in [-8.0, -2.5, -0.3, 0.0, 0.7, 3.0, 6.0] {
            assert!((norm_cdf(x) + norm_cdf(-x) - 1.0f64).abs() <= 1e-15);
        }
        assert_relative_eq!(norm_cdf(1.0f64), 0.8413447460685429, max_relative = 1e-15);
    }

    #[test]
    fn time_derivative_limits() {
        let o = opt();
        assert_eq!(call_price_time_derivative(0.0, 2.0, &o), 0.0);
        let t = 20.0;
        let expect = 0.1 * 100.0 * (-0.1f64 * t).exp();
        assert_relative_eq!(
            call_price_time_derivative(1e5, t, &o),
            expect,
            max_relative = 1e-8
        );
    }

    #[test]
    fn pde_identity_holds() {
        let o = opt();
        let (s, t) = (120.0, 1.0);
        let h = 1e-2;
        let f = |x: f64| call_price(x, t, &o);
        let us = (f(s + h) - f(s - h)) / (2.0 * h);
        let uss = (f(s + h) - 2.0 * f(s) + f(s - h)) / (h * h);
        let rhs = 0.5 * 0.09 * s * s * uss + 0.1 * s * us - 0.1 * f(s);
        let lhs = call_price_time_derivative(s, t, &o);
        // Second differences of the closed form limit the attainable agreement.
        assert!((lhs - rhs).abs() <= 1e-6, "{lhs} {rhs}");
        let dt = 1e-5;
        let fd_t = (call_price(s, t + dt, &o) - call_price(s, t - dt, &o)) / (2.0 * dt);
        assert!((lhs - fd_t).abs() <= 1e-8, "{lhs} {fd_t}");
    }

    #[test]
    fn third_derivative_oracles_agree() {
        let o = opt();
        for (s, t) in [(90.0, 0.5), (150.0, 1.0), (300.0, 5.0)] {
            let exact = call_third_derivative(s, t, &o);
            let fd = third_derivative_fd(s, t, &o, 0.4);
            assert!(
                (exact - fd).abs() <= 1e-5 * exact.abs().max(1e-8),
                "{exact} {fd}"
            );
        }
    }

    #[test]
    fn truncation_split_matches_direct_evaluation() {
        let g = Grid::sinh(100.0, 20.0, 400.0, 60).unwrap();
        let p = ModelParams::new(0.1, 0.3, 400.0, 100.0, 5.0).unwrap();
        let op = assemble(
            &g,
            &p,
            SchemeKind::CentralA,
            BoundaryTreatment::Lbc1,
            BoundaryData::Zero,
        )
        .unwrap();
        let o = opt();
        let t = 1.0;
        let (dl, dr) = truncation_errors(&op, &o, t);
        assert_eq!((dl.len(), dr.len()), (60, 2));
        let u: Vec<f64> = g
            .unknown_nodes()
            .iter()
            .map(|s| call_price(*s, t, &o))
            .collect();
        let mu = op.apply(&u);
        for (k, s) in g.unknown_nodes().iter().enumerate() {
            let direct = call_price_time_derivative(*s, t, &o) - mu[k];
            let split = if k < 60 { dl[k] } else { dr[k - 60] };
            assert!(
                (direct - split).abs() <= 1e-9 * (1.0 + direct.abs()),
                "k={k} {direct} {split}"
            );
        }
    }

    proptest! {
        #[test]
        fn call_is_monotone_and_convex(
            t in 0.05f64..5.0,
            sigma in 0.05f64..0.6,
            r in 0.0f64..0.3,
        ) {
            let o = CallOption::new(100.0, r, sigma).unwrap();
            let v: Vec<f64> = (0..100).map(|k| call_price(4.0 * k as f64, t, &o)).collect();
            for w in v.windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-12);
            }
            for w in v.windows(3) {
                prop_assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-10);
            }
        }

        #[test]
        fn put_call_parity(s in 1.0f64..500.0, t in 0.01f64..5.0) {
            let o = opt();
            let lhs = call_price(s, t, &o) - put_price(s, t, &o);
            let rhs = s - 100.0 * (-0.1 * t).exp();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * s.max(100.0));
        }
    }
}
