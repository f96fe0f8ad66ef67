//! Least-squares slopes on log–log data.

use crate::error::{invalid, Result};

/// Straight line `y = intercept + slope x` fitted by least squares.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() {
        return Err(invalid("data", "x and y lengths differ"));
    }
    if xs.len() < 2 {
        return Err(invalid("data", "at least two points are needed"));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(invalid("data", "non-finite value"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(invalid("data", "all abscissae coincide"));
    }
    let slope = sxy / sxx;
    Ok(LineFit {
        slope,
        intercept: my - slope * mx,
    })
}

/// Observed order `p` in `error ~ C h^p`, from the slope of `log error`
/// against `log h`.
pub fn observed_order(h: &[f64], errors: &[f64]) -> Result<f64> {
    if errors.iter().any(|e| !(*e > 0.0)) || h.iter().any(|x| !(*x > 0.0)) {
        return Err(invalid("data", "step sizes and errors must be positive"));
    }
    let lx: Vec<f64> = h.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    Ok(fit_line(&lx, &ly)?.slope)
}
