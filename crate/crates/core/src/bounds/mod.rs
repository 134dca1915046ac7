//! Rate bounds assembled from the fixed points.
//!
//! [`achievable_rate`] integrates the decoupled-channel mutual information over
//! the stage fraction `τ ∈ [τ₀, 1]` and substage fraction `μ ∈ [0, 1]` on a
//! Gauss–Legendre tensor grid. The remaining functions are the comparison
//! baselines and asymptotic diagnostics.

mod hh;
mod interp;
mod low_snr;
mod sweep;

pub use hh::{hh_bound, optimal_training, spectral_efficiency};
pub use interp::{horizontal_gap_db, MonotoneCubic};
pub use low_snr::{log_grid, low_snr_curve, low_snr_rate, LowSnrCurve, LowSnrPoint};
pub use sweep::{sweep, Quantity, SweepAxis, SweepPlan, Table};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::kernels::{awgn_mutual_info, hyperprior_expect, AwgnChannelSpec, Signaling};
use crate::quadrature::{GaussRule, QuadratureRules};
use crate::solver::{
    decoupled_gain, solve_estimator, solve_lmmse_detector, DetectorOptions, DetectorScan, EstimatorSolution, Geometry,
};

/// Options for [`achievable_rate`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RateOptions {
    pub detector: DetectorOptions,
    /// Force `ξ² = 0` everywhere (perfect receiver CSI ceiling).
    pub perfect_csi: bool,
    /// Keep the per-node integrand table.
    pub keep_samples: bool,
}

/// One node of the rate integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrandSample {
    pub tau: f64,
    pub mu: f64,
    pub xi2: f64,
    pub sigma2: f64,
    pub integrand: f64,
}

/// Lower bound on the rate per transmit antenna, in bits per channel use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateBound {
    pub rate_bits_per_tx: f64,
    pub tau_nodes: usize,
    pub mu_nodes: usize,
    pub integrand_samples: Option<Vec<IntegrandSample>>,
}

/// Mutual information of the decoupled channel at `(ξ², σ²)`, averaged over θ.
pub fn decoupled_mutual_info(
    geom: &Geometry,
    sig: &Signaling,
    est: &EstimatorSolution,
    sigma2: f64,
    hermite: &GaussRule,
) -> Result<f64> {
    let gain = decoupled_gain(geom, est);
    hyperprior_expect(sig, sig.family.theta_dependence(), |theta| {
        awgn_mutual_info(sig, &AwgnChannelSpec::new(gain, sigma2, theta), hermite)
    })
}

fn stage_integral(
    geom: &Geometry,
    sig: &Signaling,
    n0: f64,
    tau: f64,
    rules: &QuadratureRules,
    opts: &RateOptions,
) -> Result<(f64, Vec<IntegrandSample>)> {
    let est = if opts.perfect_csi {
        let s2 = sig.bias_variance();
        EstimatorSolution { tau, xi2: 0.0, sigma_tr2: n0, sigma_c2: n0 + sig.power - s2 }
    } else {
        solve_estimator(geom, sig, n0, tau)?
    };
    let scan = if sig.family.is_gaussian() {
        None
    } else {
        Some(DetectorScan::new(geom, sig, n0, &est, &opts.detector, &rules.hermite)?)
    };
    let mut acc = 0.0;
    let mut samples = Vec::new();
    for (mu, w) in rules.legendre_mu.iter() {
        let det = match &scan {
            Some(scan) => scan.solve(mu),
            None => solve_lmmse_detector(geom, sig, n0, &est, mu, &rules.hermite),
        }
        .map_err(|e| e.at(format!("tau={tau}, mu={mu}")))?;
        let integrand = decoupled_mutual_info(geom, sig, &est, det.sigma2, &rules.hermite)
            .map_err(|e| e.at(format!("tau={tau}, mu={mu}")))?;
        acc += w * integrand;
        if opts.keep_samples {
            samples.push(IntegrandSample { tau, mu, xi2: est.xi2, sigma2: det.sigma2, integrand });
        }
    }
    Ok((acc, samples))
}

/// Large-system lower bound `∫∫ I(x; z | θ) dτ dμ` per transmit antenna.
pub fn achievable_rate(
    geom: &Geometry,
    sig: &Signaling,
    n0: f64,
    rules: &QuadratureRules,
    opts: &RateOptions,
) -> Result<RateBound> {
    geom.validate()?;
    sig.validate()?;
    ensure!(n0.is_finite() && n0 > 0.0, InvalidDomain, "N0 must be positive, got {n0}");
    let tau_rule = rules.legendre_tau.on_interval(geom.tau0, 1.0);
    let stages: Vec<(f64, Vec<IntegrandSample>)> =
        tau_rule.nodes.par_iter().map(|&tau| stage_integral(geom, sig, n0, tau, rules, opts)).collect::<Result<_>>()?;
    // Summed in node order so the result does not depend on the thread count.
    let mut rate = 0.0;
    let mut samples = Vec::new();
    for ((inner, s), w) in stages.into_iter().zip(&tau_rule.weights) {
        rate += w * inner;
        samples.extend(s);
    }
    Ok(RateBound {
        rate_bits_per_tx: rate.max(0.0),
        tau_nodes: tau_rule.len(),
        mu_nodes: rules.legendre_mu.len(),
        integrand_samples: opts.keep_samples.then_some(samples),
    })
}

/// High-SNR slope `Δc_g / Δlog₂(P/N₀)` between two SNR points (dB).
pub fn multiplexing_gain(
    geom: &Geometry,
    sig: &Signaling,
    snr_db_pair: (f64, f64),
    rules: &QuadratureRules,
) -> Result<f64> {
    geom.validate()?;
    sig.validate()?;
    ensure!(geom.alpha <= 1.0, Precondition, "multiplexing gain needs alpha <= 1, got {}", geom.alpha);
    ensure!(
        geom.tau0 <= geom.beta && geom.beta <= 0.5,
        Precondition,
        "multiplexing gain needs tau0 <= beta <= 1/2, got tau0={}, beta={}",
        geom.tau0,
        geom.beta
    );
    ensure!(sig.family.is_gaussian(), Precondition, "multiplexing gain is defined for Gaussian signaling");
    let (lo, hi) = snr_db_pair;
    ensure!(lo != hi, InvalidDomain, "SNR points must differ");
    let rate_at = |snr_db: f64| -> Result<f64> {
        let n0 = sig.power / crate::db_to_linear(snr_db);
        Ok(achievable_rate(geom, sig, n0, rules, &RateOptions::default())
            .map_err(|e| e.at(format!("snr={snr_db} dB")))?
            .rate_bits_per_tx)
    };
    let (r_lo, r_hi) = (rate_at(lo)?, rate_at(hi)?);
    let dlog2 = (hi - lo) / 10.0 * std::f64::consts::LOG2_10;
    Ok((r_hi - r_lo) / dlog2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Family;
    use crate::quadrature::QuadratureConfig;

    fn rules(n: usize) -> QuadratureRules {
        QuadratureRules::new(QuadratureConfig { legendre_nodes_tau: n, legendre_nodes_mu: n, ..Default::default() })
            .unwrap()
    }

    #[test]
    fn vanishing_power_gives_vanishing_rate() {
        let g = Geometry::new(1.0, 0.5, 0.0).unwrap();
        let r = achievable_rate(&g, &Signaling::gaussian(1e-9), 1.0, &rules(8), &RateOptions::default()).unwrap();
        assert!(r.rate_bits_per_tx < 1e-9);
    }

    #[test]
    fn perfect_csi_matches_random_matrix_capacity() {
        // LMMSE-SIC with perfect CSI attains the large-system MIMO capacity.
        let rules = rules(32);
        let opts = RateOptions { perfect_csi: true, ..Default::default() };
        for (alpha, snr) in [(1.0, 4.0), (0.5, 10.0), (2.0, 1.0)] {
            let g = Geometry::new(alpha, 0.5, 0.0).unwrap();
            let r = achievable_rate(&g, &Signaling::gaussian(snr), 1.0, &rules, &opts).unwrap();
            let c = spectral_efficiency(alpha, snr / alpha) / alpha;
            assert!((r.rate_bits_per_tx - c).abs() < 2e-3 * c, "alpha={alpha}: {} vs {c}", r.rate_bits_per_tx);
        }
    }

    #[test]
    fn samples_are_kept_on_request() {
        let g = Geometry::new(1.0, 0.5, 0.2).unwrap();
        let opts = RateOptions { keep_samples: true, ..Default::default() };
        let r = achievable_rate(&g, &Signaling::gaussian(2.0), 1.0, &rules(4), &opts).unwrap();
        let s = r.integrand_samples.unwrap();
        assert_eq!(s.len(), 16);
        assert!(s.iter().all(|x| x.tau >= 0.2 && x.integrand >= 0.0));
        let manual: f64 = {
            let tr = rules(4).legendre_tau.on_interval(0.2, 1.0);
            let mr = rules(4).legendre_mu;
            s.iter().enumerate().map(|(i, x)| tr.weights[i / 4] * mr.weights[i % 4] * x.integrand).sum()
        };
        assert!((manual - r.rate_bits_per_tx).abs() < 1e-14);
    }

    #[test]
    fn multiplexing_gain_preconditions() {
        let q = rules(4);
        let sig = Signaling::gaussian(1.0);
        let g = Geometry::new(2.0, 0.5, 0.0).unwrap();
        assert!(multiplexing_gain(&g, &sig, (40.0, 60.0), &q).is_err());
        let g = Geometry::new(1.0, 0.6, 0.0).unwrap();
        assert!(multiplexing_gain(&g, &sig, (40.0, 60.0), &q).is_err());
        let g = Geometry::new(1.0, 0.5, 0.0).unwrap();
        assert!(multiplexing_gain(&g, &Signaling::qpsk(1.0), (40.0, 60.0), &q).is_err());
    }

    #[test]
    fn qpsk_rate_is_bounded_by_two_bits() {
        let g = Geometry::new(1.0, 0.1, 0.3).unwrap();
        let r = achievable_rate(&g, &Signaling::qpsk(1.0), 1e-3, &rules(8), &RateOptions::default()).unwrap();
        assert!(r.rate_bits_per_tx <= 2.0 * 0.7 + 1e-12);
        assert!(r.rate_bits_per_tx > 1.0);
        let biased = Signaling::biased(Family::QpskBiased, 1.0, 0.2).unwrap();
        let rb = achievable_rate(&g, &biased, 1e-3, &rules(8), &RateOptions::default()).unwrap();
        assert!(rb.rate_bits_per_tx <= 2.0 * 0.7);
    }
}
