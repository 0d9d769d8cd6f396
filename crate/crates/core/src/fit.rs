//! Least-squares helpers for log-space model fits.

use serde::{Deserialize, Serialize};

/// Ordinary least-squares line `y ≈ intercept + slope·x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    /// `sqrt(SSR/SST)`: fraction of the spread in `y` the line leaves unexplained.
    pub rel_residual: f64,
    /// Largest absolute residual.
    pub max_residual: f64,
}

/// Fits a line; returns `None` for fewer than two points or constant `x`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ssr = 0.0;
    let mut max_residual: f64 = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let r = y - (intercept + slope * x);
        ssr += r * r;
        max_residual = max_residual.max(r.abs());
    }
    let sst: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let rel_residual = if sst > 0.0 {
        (ssr / sst).sqrt()
    } else if ssr == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Some(LineFit {
        intercept,
        slope,
        rel_residual,
        max_residual,
    })
}

/// `ln Γ(n+1)`.
pub fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let f = fit_line(&xs, &ys).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-15 && (f.intercept - 2.0).abs() < 1e-15);
        assert_eq!(f.rel_residual, 0.0);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(fit_line(&[1.0], &[2.0]).is_none());
        assert!(fit_line(&[1.0, 1.0], &[2.0, 3.0]).is_none());
    }
}
