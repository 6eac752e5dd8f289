//! Log-log trend classification for size-indexed evidence.

use serde::{Deserialize, Serialize};

/// Slope threshold separating bounded from growing/decaying sequences.
pub const SLOPE_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    Bounded,
    Growing,
    Decaying,
}

impl Trend {
    pub fn from_slope(slope: f64) -> Self {
        if slope > SLOPE_THRESHOLD {
            Trend::Growing
        } else if slope < -SLOPE_THRESHOLD {
            Trend::Decaying
        } else {
            Trend::Bounded
        }
    }
}

/// Least-squares slope of `ln y` against `ln x` over the points with
/// positive coordinates. `None` with fewer than two usable points.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    linear_slope(&pts)
}

/// Least-squares slope of `y` against `x`.
pub fn linear_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

/// Log-log slope over the upper half of the points (at least two).
pub fn tail_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return None;
    }
    let start = (n / 2).min(n - 2);
    loglog_slope(&xs[start..n], &ys[start..n])
}

/// Classifies the tail of a sequence. All-zero (or empty) tails count as
/// bounded.
pub fn classify_tail(xs: &[f64], ys: &[f64]) -> (Trend, f64) {
    match tail_slope(xs, ys) {
        Some(s) => (Trend::from_slope(s), s),
        None => (Trend::Bounded, 0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slopes_of_powers() {
        let xs: Vec<f64> = (1..=8).map(|j| 2f64.powi(j)).collect();
        let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let inv: Vec<f64> = xs.iter().map(|x| 1.0 / x).collect();
        let flat: Vec<f64> = xs.iter().map(|_| 3.0).collect();
        assert!((loglog_slope(&xs, &sq).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(classify_tail(&xs, &inv).0, Trend::Decaying);
        assert_eq!(classify_tail(&xs, &flat).0, Trend::Bounded);
        assert_eq!(classify_tail(&xs, &sq).0, Trend::Growing);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(loglog_slope(&[1.0], &[1.0]), None);
        assert_eq!(classify_tail(&[1.0, 2.0], &[0.0, 0.0]).0, Trend::Bounded);
    }
}
