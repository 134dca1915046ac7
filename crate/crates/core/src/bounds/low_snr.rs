//! Closed-form low-SNR limit of the Gaussian bound and its `E_b/N₀` curve.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowSnrPoint {
    /// `P/(βN₀)`.
    pub s: f64,
    pub rate_r: f64,
    pub eb_n0_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowSnrCurve {
    pub points: Vec<LowSnrPoint>,
    /// Index of the minimum `E_b/N₀`.
    pub argmin: usize,
}

impl LowSnrCurve {
    pub fn minimum(&self) -> &LowSnrPoint {
        &self.points[self.argmin]
    }
}

/// `(1 + 1/q)·ln(1+q) − 1`, accurate for small `q`.
fn phi(q: f64) -> f64 {
    if q < 1e-3 {
        // Σ (−1)^{n+1} qⁿ / (n(n+1))
        let mut term = q;
        let mut acc = 0.0;
        for n in 1..12 {
            let nf = n as f64;
            acc += term / (nf * (nf + 1.0));
            term *= -q;
        }
        acc
    } else {
        (1.0 + 1.0 / q) * q.ln_1p() - 1.0
    }
}

/// Limit rate `R(s)` in bits for load ratio `β/α`.
pub fn low_snr_rate(beta_over_alpha: f64, s: f64) -> Result<f64> {
    ensure!(s.is_finite() && s > 0.0, InvalidDomain, "s must be positive, got {s}");
    ensure!(
        beta_over_alpha.is_finite() && beta_over_alpha > 0.0,
        InvalidDomain,
        "beta/alpha must be positive, got {beta_over_alpha}"
    );
    let q = s + beta_over_alpha * s * s;
    Ok((phi(q) - phi(s)) / LN_2)
}

/// `E_b/N₀` in dB at `s`, given the limit rate.
fn eb_n0_db(beta_over_alpha: f64, s: f64, r: f64) -> f64 {
    crate::linear_to_db(beta_over_alpha * s / r)
}

pub fn low_snr_curve(beta_over_alpha: f64, s_grid: &[f64]) -> Result<LowSnrCurve> {
    ensure!(!s_grid.is_empty(), InvalidDomain, "s grid is empty");
    let points = s_grid
        .iter()
        .map(|&s| {
            let rate_r = low_snr_rate(beta_over_alpha, s)?;
            Ok(LowSnrPoint { s, rate_r, eb_n0_db: eb_n0_db(beta_over_alpha, s, rate_r) })
        })
        .collect::<Result<Vec<_>>>()?;
    let argmin =
        points.iter().enumerate().min_by(|a, b| a.1.eb_n0_db.total_cmp(&b.1.eb_n0_db)).map(|(i, _)| i).unwrap_or(0);
    Ok(LowSnrCurve { points, argmin })
}

/// `n` log-spaced values on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_matches_direct_formula() {
        for q in [2e-4f64, 5e-4, 9.99e-4, 1.001e-3] {
            let direct = (1.0 + 1.0 / q) * q.ln_1p() - 1.0;
            assert!((phi(q) - direct).abs() < 1e-12, "q={q}");
        }
        let s = 0.7f64;
        let q = s + 2.0 * s * s;
        let want = (1.0 + 1.0 / q) * (1.0 + q).log2() - (1.0 + 1.0 / s) * (1.0 + s).log2();
        assert!((low_snr_rate(2.0, s).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn small_s_quadratic() {
        let s = 1e-3;
        let ratio = low_snr_rate(1.0, s).unwrap() / (s * s / (2.0 * LN_2));
        assert!((ratio - 1.0).abs() < 0.01, "ratio={ratio}");
    }

    #[test]
    fn minimum_is_interior_and_above_shannon_limit() {
        let c = low_snr_curve(1.0, &log_grid(1e-3, 10.0, 200)).unwrap();
        assert!(c.argmin > 0 && c.argmin < 199);
        assert!(c.minimum().rate_r > 0.0);
        assert!(c.points.iter().all(|p| p.eb_n0_db > -1.59));
        assert!(c.points[0].eb_n0_db > c.minimum().eb_n0_db + 10.0);
    }

    #[test]
    fn bad_inputs() {
        assert!(low_snr_rate(1.0, 0.0).is_err());
        assert!(low_snr_rate(0.0, 1.0).is_err());
        assert!(low_snr_curve(1.0, &[]).is_err());
        assert!(low_snr_curve(1.0, &[1.0, -1.0]).is_err());
    }
}
