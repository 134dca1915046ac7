//! Pilot-only baseline: one-shot LMMSE estimation from `T_tr` pilots, then
//! a worst-case-noise Gaussian capacity for the data part of the block.

use std::f64::consts::LOG2_E;

use crate::error::{ensure, Result};
use crate::solver::Geometry;

/// Large-system spectral efficiency per receive dimension of an i.i.d.
/// Rayleigh matrix with load `z` (transmit/receive) and per-stream SNR `x`.
pub fn spectral_efficiency(z: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let sz = z.sqrt();
    let f = ((x * (1.0 + sz).powi(2) + 1.0).sqrt() - (x * (1.0 - sz).powi(2) + 1.0).sqrt()).powi(2);
    z * (1.0 + x - f / 4.0).log2() + (1.0 + x * z - f / 4.0).log2() - f / (4.0 * x) * LOG2_E
}

/// Pilot-based lower bound per transmit antenna at pilot fraction `tau0`.
/// Without an override the fraction maximizing the bound over `[β, 1)` is used.
pub fn hh_bound(geom: &Geometry, power: f64, n0: f64, tau0: Option<f64>) -> Result<f64> {
    match tau0 {
        Some(t) => hh_bound_at(geom, power, n0, t),
        None => Ok(optimal_training(geom, power, n0)?.1),
    }
}

/// `(τ₀*, rate)` maximizing the pilot-based bound over `τ₀ ∈ [β, 1)`.
pub fn optimal_training(geom: &Geometry, power: f64, n0: f64) -> Result<(f64, f64)> {
    let f = |t: f64| hh_bound_at(geom, power, n0, t);
    let at_beta = f(geom.beta)?;
    if geom.beta >= 1.0 - 1e-12 || power == 0.0 {
        return Ok((geom.beta, at_beta));
    }
    // The bound is unimodal in τ₀ (pilot-overhead trade-off): golden section.
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (geom.beta, 1.0 - 1e-12);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > 1e-10 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    let t = 0.5 * (a + b);
    let v = f(t)?;
    Ok(if at_beta >= v { (geom.beta, at_beta) } else { (t, v) })
}

fn hh_bound_at(geom: &Geometry, power: f64, n0: f64, tau0: f64) -> Result<f64> {
    ensure!(geom.alpha.is_finite() && geom.alpha > 0.0, InvalidDomain, "alpha must be positive, got {}", geom.alpha);
    ensure!(
        geom.beta.is_finite() && geom.beta > 0.0 && geom.beta <= 1.0,
        InvalidDomain,
        "beta must lie in (0, 1], got {}",
        geom.beta
    );
    ensure!(power.is_finite() && power >= 0.0, InvalidDomain, "power must be nonnegative, got {power}");
    ensure!(n0.is_finite() && n0 > 0.0, InvalidDomain, "N0 must be positive, got {n0}");
    ensure!((0.0..1.0).contains(&tau0), InvalidDomain, "tau0 must lie in [0, 1), got {tau0}");
    if power == 0.0 {
        return Ok(0.0);
    }
    let xi2 = 1.0 / (1.0 + tau0 * power / (geom.beta * n0));
    let n0_eff = n0 + power * xi2;
    let v = 1.0 - xi2;
    let snr = power * v / (geom.alpha * n0_eff);
    Ok(((1.0 - tau0) * spectral_efficiency(geom.alpha, snr) / geom.alpha).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_power_and_zero_snr() {
        let g = Geometry::new(1.0, 0.5, 0.0).unwrap();
        assert_eq!(hh_bound(&g, 0.0, 1.0, None).unwrap(), 0.0);
        assert_eq!(spectral_efficiency(1.0, 0.0), 0.0);
    }

    #[test]
    fn single_stream_limit_is_awgn() {
        // z → 0: each stream sees a matched filter with no interference.
        let x = 3.0;
        let z = 1e-8;
        assert!((spectral_efficiency(z, x) / z - (1.0 + x).log2()).abs() < 1e-5);
    }

    #[test]
    fn square_closed_form() {
        // z = 1: F = (√(4x+1) − 1)².
        let x = 1.0f64;
        let f = ((4.0 * x + 1.0).sqrt() - 1.0).powi(2);
        let want = 2.0 * (1.0 + x - f / 4.0).log2() - f / (4.0 * x) * LOG2_E;
        assert!((spectral_efficiency(1.0, x) - want).abs() < 1e-15);
    }

    #[test]
    fn tau0_domain() {
        let g = Geometry::new(1.0, 0.5, 0.0).unwrap();
        assert!(hh_bound(&g, 1.0, 1.0, Some(1.0)).is_err());
        assert!(hh_bound(&g, 1.0, 1.0, Some(-0.1)).is_err());
        assert!(hh_bound(&g, 1.0, 0.0, None).is_err());
        let near_one = hh_bound(&g, 10.0, 1.0, Some(1.0 - 1e-12)).unwrap();
        assert!(near_one < 1e-10);
    }

    #[test]
    fn default_uses_best_training_fraction() {
        let g = Geometry::new(1.0, 0.1, 0.0).unwrap();
        let (t, v) = optimal_training(&g, 1.0, 1.0).unwrap();
        assert!(t > 0.1 && t < 1.0);
        assert_eq!(hh_bound(&g, 1.0, 1.0, None).unwrap(), v);
        for k in 0..90 {
            let t0 = 0.1 + 0.01 * k as f64;
            assert!(hh_bound(&g, 1.0, 1.0, Some(t0)).unwrap() <= v + 1e-12);
        }
        // β = 1/2 at unit load: the shortest training is already best.
        let g = Geometry::new(1.0, 0.5, 0.0).unwrap();
        let (t, _) = optimal_training(&g, 4.0, 1.0).unwrap();
        assert_eq!(t, 0.5);
    }

    #[test]
    fn pilot_overhead_tradeoff_is_unimodal() {
        let g = Geometry::new(1.0, 0.1, 0.0).unwrap();
        let vals: Vec<f64> = (1..20).map(|k| hh_bound(&g, 10.0, 1.0, Some(k as f64 * 0.05)).unwrap()).collect();
        let peak = vals.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert!(vals[..=peak].windows(2).all(|w| w[0] <= w[1]));
        assert!(vals[peak..].windows(2).all(|w| w[0] >= w[1]));
    }
}
