//! Finite-size Monte Carlo of the block-fading channel.
//!
//! Each trial draws one coherence block, estimates the channel at stage `t`
//! with the exact LMMSE estimator (past symbols fed back error-free), and
//! detects stream `m` with the SIC LMMSE detector. Trials run in parallel on
//! per-trial RNG streams and are merged in trial order, so results do not
//! depend on the thread count.

mod block;
mod lmmse;
mod stats;

pub use block::{complex_normal, simulate_block, trial_rng, BlockState};
pub use lmmse::{check_error_covariance, lmmse_channel_estimate, lmmse_detect, ChannelEstimate, Detection};
pub use stats::{Moments, Stat};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::kernels::Signaling;
use crate::quadrature::GaussRule;
use crate::solver::{solve_estimator, solve_lmmse_detector, Geometry};

/// Constellation of the training symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PilotConstellation {
    Qpsk,
    Gaussian,
}

/// One Monte Carlo experiment. Indices `stage_t` and `substage_m` are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub m: usize,
    pub n: usize,
    pub tc: usize,
    pub ttr: usize,
    pub stage_t: usize,
    pub substage_m: usize,
    pub signaling: Signaling,
    pub pilots: PilotConstellation,
    pub n0: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            m: 8,
            n: 8,
            tc: 128,
            ttr: 8,
            stage_t: 17,
            substage_m: 3,
            signaling: Signaling::qpsk(1.0),
            pilots: PilotConstellation::Qpsk,
            n0: 1.0,
            trials: 1000,
            seed: 0,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(self.m >= 1 && self.n >= 1, InvalidDomain, "M and N must be positive");
        ensure!(self.tc >= 1, InvalidDomain, "T_c must be positive");
        ensure!(self.ttr < self.tc, InvalidDomain, "T_tr = {} must be below T_c = {}", self.ttr, self.tc);
        ensure!(
            self.stage_t > self.ttr && self.stage_t <= self.tc,
            InvalidDomain,
            "stage t = {} outside (T_tr, T_c] = ({}, {}]",
            self.stage_t,
            self.ttr,
            self.tc
        );
        ensure!(
            self.substage_m >= 1 && self.substage_m <= self.m,
            InvalidDomain,
            "substage m = {} outside [1, M = {}]",
            self.substage_m,
            self.m
        );
        ensure!(self.n0.is_finite() && self.n0 >= 0.0, InvalidDomain, "N0 must be nonnegative, got {}", self.n0);
        ensure!(self.trials >= 1, InvalidDomain, "trials must be at least 1");
        self.signaling.validate()
    }

    /// Large-system ratios with the stage index shifted down by one.
    pub fn geometry(&self) -> Result<Geometry> {
        Geometry::new(self.m as f64 / self.n as f64, self.m as f64 / self.tc as f64, self.ttr as f64 / self.tc as f64)
    }

    pub fn tau(&self) -> f64 {
        (self.stage_t - 1) as f64 / self.tc as f64
    }

    pub fn mu(&self) -> f64 {
        (self.substage_m - 1) as f64 / self.m as f64
    }

    /// Same ratios with `M` replaced by `m`; every size must scale exactly.
    pub fn scaled_to(&self, m: usize) -> Result<Self> {
        let scale = |x: usize, what: &str| -> Result<usize> {
            ensure!(
                (x * m).is_multiple_of(self.m),
                InvalidDomain,
                "{what} = {x} does not scale exactly from M = {} to M = {m}",
                self.m
            );
            Ok(x * m / self.m)
        };
        Ok(Self {
            m,
            n: scale(self.n, "N")?,
            tc: scale(self.tc, "T_c")?,
            ttr: scale(self.ttr, "T_tr")?,
            stage_t: scale(self.stage_t - 1, "t - 1")? + 1,
            substage_m: scale(self.substage_m - 1, "m - 1")? + 1,
            ..*self
        })
    }
}

/// Large-system values at the configuration's ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub xi2: f64,
    pub sigma2: f64,
    pub normalized_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub trials: usize,
    /// `|x − x̂|²/P`; absent for covariance-only runs.
    pub normalized_mse: Option<Stat>,
    /// Mean diagonal of `Ξ_t`.
    pub xi2_empirical: Stat,
    /// Mean `|(Ξ_t)_{ij}|`, `i ≠ j`.
    pub offdiag_abs_mean: Stat,
    /// `M^{3/4}` times `offdiag_abs_mean`.
    pub offdiag_scaled: Stat,
    /// Magnitude of the trial average of the mean off-diagonal entry.
    pub offdiag_mean_magnitude: f64,
    pub prediction: Option<Prediction>,
}

#[derive(Debug, Clone, Copy)]
struct TrialStats {
    se: Option<f64>,
    diag: f64,
    offdiag_abs: f64,
    offdiag: Complex64,
}

fn run_trial(cfg: &McConfig, trial: u64, detect: bool) -> Result<TrialStats> {
    let block = simulate_block(cfg, &mut trial_rng(cfg.seed, trial));
    let est = lmmse_channel_estimate(&block, cfg)?;
    check_error_covariance(&est.xi, 1e-10)?;
    let m = cfg.m;
    let diag = (0..m).map(|i| est.xi[(i, i)].re).sum::<f64>() / m as f64;
    let (mut abs, mut sum) = (0.0, Complex64::new(0.0, 0.0));
    for i in 0..m {
        for j in i + 1..m {
            abs += est.xi[(i, j)].norm();
            sum += est.xi[(i, j)];
        }
    }
    let pairs = (m * (m - 1) / 2).max(1) as f64;
    let se = if detect {
        let d = lmmse_detect(&block, &est, cfg)?;
        let x = block.x[(cfg.substage_m - 1, cfg.stage_t - 1)];
        Some((x - d.x_hat).norm_sqr() / cfg.signaling.power)
    } else {
        None
    };
    Ok(TrialStats { se, diag, offdiag_abs: abs / pairs, offdiag: sum / pairs })
}

fn run(cfg: &McConfig, detect: bool) -> Result<McResult> {
    cfg.validate()?;
    ensure!(cfg.n0 > 0.0, InvalidDomain, "Monte Carlo runs need N0 > 0, got {}", cfg.n0);
    let per_trial: Vec<TrialStats> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|k| run_trial(cfg, k, detect).map_err(|e| e.at(format!("trial {k}"))))
        .collect::<Result<_>>()?;
    let (mut se, mut diag, mut off) = (Moments::default(), Moments::default(), Moments::default());
    let mut off_sum = Complex64::new(0.0, 0.0);
    for s in &per_trial {
        if let Some(v) = s.se {
            se.push(v);
        }
        diag.push(s.diag);
        off.push(s.offdiag_abs);
        off_sum += s.offdiag;
    }
    let scale = (cfg.m as f64).powf(0.75);
    let off_stat = off.stat();
    Ok(McResult {
        trials: cfg.trials,
        normalized_mse: detect.then(|| se.stat()),
        xi2_empirical: diag.stat(),
        offdiag_abs_mean: off_stat,
        offdiag_scaled: Stat { mean: scale * off_stat.mean, stderr: scale * off_stat.stderr },
        offdiag_mean_magnitude: (off_sum / cfg.trials as f64).norm(),
        prediction: Some(predict(cfg)?),
    })
}

/// Large-system prediction at `α = M/N`, `β = M/T_c`, `τ = (t−1)/T_c`,
/// `μ = (m−1)/M`. The detector noise is the LMMSE fixed point for any prior.
pub fn predict(cfg: &McConfig) -> Result<Prediction> {
    let geom = cfg.geometry()?;
    let sig = &cfg.signaling;
    let est = solve_estimator(&geom, sig, cfg.n0, cfg.tau())?;
    let empty = GaussRule { nodes: vec![], weights: vec![] };
    // The LMMSE root itself needs no quadrature; only its free energy does.
    let hermite = if sig.family.is_gaussian() { empty } else { crate::quadrature::gauss_hermite(32)? };
    let det = solve_lmmse_detector(&geom, sig, cfg.n0, &est, cfg.mu(), &hermite)?;
    let v = sig.power - sig.bias_variance();
    let a_s2 = geom.alpha * det.sigma2;
    let nmse = v * a_s2 / ((1.0 - est.xi2) * v + a_s2) / sig.power;
    Ok(Prediction { xi2: est.xi2, sigma2: det.sigma2, normalized_mse: nmse })
}

/// Detection MSE at `(t, m)` together with the `Ξ_t` statistics.
pub fn measure_mse(cfg: &McConfig) -> Result<McResult> {
    run(cfg, true)
}

/// `Ξ_t` statistics only.
pub fn measure_covariance(cfg: &McConfig) -> Result<McResult> {
    run(cfg, false)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub m: usize,
    pub result: McResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingStudy {
    pub rows: Vec<ScalingRow>,
    /// Least-squares slope of `ln offdiag_scaled` against `ln M`.
    pub log_slope: f64,
}

/// Covariance statistics of `base` rescaled to each `M` in `sizes`.
pub fn offdiag_scaling_study(base: &McConfig, sizes: &[usize]) -> Result<ScalingStudy> {
    ensure!(sizes.len() >= 2, InvalidDomain, "scaling study needs at least two sizes");
    let rows = sizes
        .iter()
        .map(|&m| {
            let cfg = base.scaled_to(m)?;
            Ok(ScalingRow { m, result: measure_covariance(&cfg).map_err(|e| e.at(format!("M={m}")))? })
        })
        .collect::<Result<Vec<_>>>()?;
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| ((r.m as f64).ln(), r.result.offdiag_scaled.mean.ln())).collect();
    Ok(ScalingStudy { log_slope: ls_slope(&pts), rows })
}

fn ls_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
