//! Large-system fixed points.
//!
//! Channel estimation reduces to a scalar equation in the per-entry estimation
//! error `ξ²(τ)`; the detector reduces to a scalar equation in the effective
//! noise variance `σ²(τ, μ)`. Both are solved by bisection. When the detector
//! map admits several fixed points (QPSK above unit load), every bracketed root
//! is kept and the one minimizing the free-energy functional is selected.

use std::f64::consts::LOG2_E;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::kernels::{
    awgn_mmse, awgn_mutual_info, hyperprior_expect, kl_gauss, AwgnChannelSpec, Family, Signaling, ThetaDependence,
};
use crate::quadrature::GaussRule;

/// Large-system ratios: `α = M/N`, `β = M/T_c`, `τ₀ = T_tr/T_c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub alpha: f64,
    pub beta: f64,
    pub tau0: f64,
}

impl Geometry {
    pub fn new(alpha: f64, beta: f64, tau0: f64) -> Result<Self> {
        let g = Self { alpha, beta, tau0 };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.alpha.is_finite() && self.alpha > 0.0,
            InvalidDomain,
            "alpha must be positive, got {}",
            self.alpha
        );
        ensure!(self.beta > 0.0 && self.beta <= 1.0, InvalidDomain, "beta must lie in (0, 1], got {}", self.beta);
        ensure!((0.0..1.0).contains(&self.tau0), InvalidDomain, "tau0 must lie in [0, 1), got {}", self.tau0);
        Ok(())
    }
}

/// Channel-estimation fixed point at normalized time `τ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSolution {
    pub tau: f64,
    pub xi2: f64,
    pub sigma_tr2: f64,
    pub sigma_c2: f64,
}

/// One fixed point of the detector equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub sigma2: f64,
    pub free_energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorSolution {
    pub tau: f64,
    pub mu: f64,
    pub sigma2: f64,
    pub candidates: Vec<Candidate>,
    pub selected_index: usize,
}

impl DetectorSolution {
    pub fn selected(&self) -> &Candidate {
        &self.candidates[self.selected_index]
    }
}

/// Tuning of the multi-solution scan used for non-Gaussian priors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorOptions {
    /// Log-spaced scan points on `[N₀, N₀ + upper_factor·P]`.
    pub scan_points: usize,
    pub upper_factor: f64,
    /// Relative bracket width at which refinement stops.
    pub root_tol: f64,
}

impl Default for DetectorOptions {
    fn default() -> Self {
        Self { scan_points: 400, upper_factor: 2.0, root_tol: 1e-10 }
    }
}

const ESTIMATOR_TOL: f64 = 1e-12;
const MAX_BISECTION_STEPS: usize = 400;

/// Bisection for a sign change of `f` on `[lo, hi]`; stops when the bracket is
/// narrower than `rel_tol·|hi|` or cannot shrink further.
fn bisect(mut f: impl FnMut(f64) -> Result<f64>, mut lo: f64, mut hi: f64, rel_tol: f64) -> Result<f64> {
    let mut f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    ensure!(f_lo.signum() != f_hi.signum(), BracketFailure, "no sign change on [{lo}, {hi}]: f = ({f_lo}, {f_hi})");
    for _ in 0..MAX_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= rel_tol * hi.abs().max(f64::MIN_POSITIVE) || mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn check_noise(n0: f64) -> Result<()> {
    ensure!(n0.is_finite() && n0 > 0.0, InvalidDomain, "N0 must be positive, got {n0}");
    Ok(())
}

/// Right-hand side of the ξ² equation after eliminating `σ_tr²` and `σ_c²`.
fn estimator_map(beta: f64, power: f64, s2: f64, n0: f64, tau: f64, u: f64) -> f64 {
    let sigma_tr2 = n0 + power * u;
    let sigma_c2 = n0 + (power - s2) + s2 * u;
    let mut inv = 1.0 + tau * power / (sigma_tr2 * beta);
    if s2 > 0.0 {
        inv += (1.0 - tau) * s2 / (sigma_c2 * beta);
    }
    1.0 / inv
}

/// Solves the coupled channel-estimation equations at time `τ`.
///
/// `P = 0` is accepted as a degenerate input and yields `ξ² = 1`.
pub fn solve_estimator(geom: &Geometry, sig: &Signaling, n0: f64, tau: f64) -> Result<EstimatorSolution> {
    geom.validate()?;
    check_noise(n0)?;
    ensure!(
        sig.power.is_finite() && sig.power >= 0.0,
        InvalidDomain,
        "symbol power must be non-negative, got {}",
        sig.power
    );
    if sig.power > 0.0 {
        sig.validate_bias()?;
    }
    ensure!(tau >= geom.tau0 && tau <= 1.0, InvalidDomain, "tau = {tau} outside [tau0 = {}, 1]", geom.tau0);
    let p = sig.power;
    let s2 = if p > 0.0 { sig.bias_variance() } else { 0.0 };
    let g = |u: f64| estimator_map(geom.beta, p, s2, n0, tau, u);
    // g is increasing with g(0) > 0 and g(1) <= 1, so g(u) − u changes sign on [0, 1].
    let xi2 = if g(1.0) >= 1.0 { 1.0 } else { bisect(|u| Ok(g(u) - u), 0.0, 1.0, ESTIMATOR_TOL)? };
    ensure!(xi2 > 0.0 && xi2 <= 1.0, BracketFailure, "estimator root {xi2} outside (0, 1]");
    Ok(EstimatorSolution { tau, xi2, sigma_tr2: n0 + p * xi2, sigma_c2: n0 + (p - s2) + s2 * xi2 })
}

fn check_mu(mu: f64) -> Result<()> {
    ensure!((0.0..=1.0).contains(&mu), InvalidDomain, "mu must lie in [0, 1], got {mu}");
    Ok(())
}

/// Amplitude of the decoupled channel, `√((1 − ξ²)/α)`.
pub fn decoupled_gain(geom: &Geometry, est: &EstimatorSolution) -> f64 {
    ((1.0 - est.xi2).max(0.0) / geom.alpha).sqrt()
}

/// Selection functional for competing fixed points, in bits.
pub fn free_energy(
    geom: &Geometry,
    sig: &Signaling,
    n0: f64,
    est: &EstimatorSolution,
    mu: f64,
    sigma2: f64,
    hermite: &GaussRule,
) -> Result<f64> {
    check_noise(n0)?;
    check_mu(mu)?;
    ensure!(sigma2 >= n0, InvalidDomain, "sigma2 = {sigma2} below N0 = {n0}");
    let gain = decoupled_gain(geom, est);
    let info = if mu < 1.0 {
        hyperprior_expect(sig, sig.family.theta_dependence(), |theta| {
            awgn_mutual_info(sig, &AwgnChannelSpec::new(gain, sigma2, theta), hermite)
        })?
    } else {
        0.0
    };
    Ok((1.0 - mu) * info + (kl_gauss(n0, sigma2)? + est.xi2 / sigma2 * LOG2_E) / geom.alpha)
}

/// Dispatches on the prior: closed form for Gaussian inputs, multi-solution
/// scan with free-energy selection otherwise.
pub fn solve_detector(
    geom: &Geometry,
    sig: &Signaling,
    n0: f64,
    est: &EstimatorSolution,
    mu: f64,
    opts: &DetectorOptions,
    hermite: &GaussRule,
) -> Result<DetectorSolution> {
    if sig.family.is_gaussian() {
        solve_lmmse_detector(geom, sig, n0, est, mu, hermite)
    } else {
        DetectorScan::new(geom, sig, n0, est, opts, hermite)?.solve(mu)
    }
}

/// Effective noise of the LMMSE detector, valid for any prior: the unique
/// positive root of the Gaussian fixed-point equation.
pub fn solve_lmmse_detector(
    geom: &Geometry,
    sig: &Signaling,
    n0: f64,
    est: &EstimatorSolution,
    mu: f64,
    hermite: &GaussRule,
) -> Result<DetectorSolution> {
    geom.validate()?;
    sig.validate()?;
    check_noise(n0)?;
    check_mu(mu)?;
    let sigma2 = lmmse_quadratic_root(geom, sig, n0, est, mu);
    let fe = free_energy(geom, sig, n0, est, mu, sigma2, hermite)?;
    Ok(DetectorSolution {
        tau: est.tau,
        mu,
        sigma2,
        candidates: vec![Candidate { sigma2, free_energy: fe }],
        selected_index: 0,
    })
}

/// Positive root of `ασ⁴ + (v − αc₀ − (1−μ)vα)σ² − c₀v = 0`,
/// `c₀ = N₀ + Pξ²`, `v = (1 − ξ²)(P − σ_θ²)`.
///
/// Both hyperpriors fix `|θ|² = σ_θ²`, so the expectation over θ is exact here.
fn lmmse_quadratic_root(geom: &Geometry, sig: &Signaling, n0: f64, est: &EstimatorSolution, mu: f64) -> f64 {
    let c0 = n0 + sig.power * est.xi2;
    let v = (1.0 - est.xi2) * (sig.power - sig.bias_variance());
    let k = 1.0 - mu;
    if k == 0.0 || v <= 0.0 {
        return c0;
    }
    let a = geom.alpha;
    let b = v - a * c0 - k * v * a;
    let disc = (b * b + 4.0 * a * c0 * v).sqrt();
    if b <= 0.0 {
        (disc - b) / (2.0 * a)
    } else {
        2.0 * c0 * v / (b + disc)
    }
}

/// Same root as [`solve_lmmse_detector`], found by bisection on the concave
/// map with the expectation over θ taken atom by atom.
pub fn solve_lmmse_detector_bisection(
    geom: &Geometry,
    sig: &Signaling,
    n0: f64,
    est: &EstimatorSolution,
    mu: f64,
) -> Result<f64> {
    geom.validate()?;
    sig.validate()?;
    check_noise(n0)?;
    check_mu(mu)?;
    let c0 = n0 + sig.power * est.xi2;
    let k = (1.0 - mu) * (1.0 - est.xi2);
    if k == 0.0 {
        return Ok(c0);
    }
    // The LMMSE detector treats every prior as Gaussian with matching moments.
    let family = if sig.bias_variance() > 0.0 { Family::GaussianBiased } else { Family::GaussianUnbiased };
    let gauss = Signaling { family, sigma_theta2: sig.bias_variance(), ..*sig };
    let gain = decoupled_gain(geom, est);
    let empty = GaussRule { nodes: vec![], weights: vec![] };
    let map = |s2: f64| -> Result<f64> {
        let m = hyperprior_expect(&gauss, ThetaDependence::MagnitudeOnly, |theta| {
            awgn_mmse(&gauss, &AwgnChannelSpec::new(gain, s2, theta), &empty)
        })?;
        Ok(c0 + k * m - s2)
    };
    bisect(map, c0, c0 + k * sig.power, 1e-14)
}

/// Precomputed scan of the MMSE fixed-point map at one `τ`.
///
/// The expected MMSE on the scan grid does not depend on `μ`, so one scan is
/// shared by every substage of a stage.
pub struct DetectorScan<'a> {
    geom: Geometry,
    sig: Signaling,
    n0: f64,
    est: EstimatorSolution,
    opts: DetectorOptions,
    hermite: &'a GaussRule,
    gain: f64,
    grid: Vec<f64>,
    mmse: Vec<f64>,
}

impl<'a> DetectorScan<'a> {
    pub fn new(
        geom: &Geometry,
        sig: &Signaling,
        n0: f64,
        est: &EstimatorSolution,
        opts: &DetectorOptions,
        hermite: &'a GaussRule,
    ) -> Result<Self> {
        geom.validate()?;
        sig.validate()?;
        check_noise(n0)?;
        ensure!(opts.scan_points >= 2, Degenerate, "scan needs at least 2 points");
        ensure!(opts.upper_factor >= 1.0, Degenerate, "scan upper factor must be >= 1");
        let gain = decoupled_gain(geom, est);
        let lo = n0;
        let hi = n0 + opts.upper_factor * sig.power;
        let n = opts.scan_points;
        let ratio = (hi / lo).ln() / (n - 1) as f64;
        let grid: Vec<f64> = (0..n).map(|i| if i == n - 1 { hi } else { lo * (ratio * i as f64).exp() }).collect();
        let mut scan =
            Self { geom: *geom, sig: *sig, n0, est: *est, opts: *opts, hermite, gain, grid, mmse: Vec::new() };
        scan.mmse = scan.grid.iter().map(|&s2| scan.expected_mmse(s2)).collect::<Result<_>>()?;
        Ok(scan)
    }

    fn expected_mmse(&self, sigma2: f64) -> Result<f64> {
        hyperprior_expect(&self.sig, ThetaDependence::Full, |theta| {
            awgn_mmse(&self.sig, &AwgnChannelSpec::new(self.gain, sigma2, theta), self.hermite)
        })
    }

    fn residual(&self, mu: f64, sigma2: f64, mmse: f64) -> f64 {
        self.n0 + self.sig.power * self.est.xi2 + (1.0 - mu) * (1.0 - self.est.xi2) * mmse - sigma2
    }

    /// All bracketed fixed points at substage `μ`, with free-energy selection.
    pub fn solve(&self, mu: f64) -> Result<DetectorSolution> {
        check_mu(mu)?;
        let c0 = self.n0 + self.sig.power * self.est.xi2;
        let mut roots = Vec::new();
        if (1.0 - mu) * (1.0 - self.est.xi2) == 0.0 {
            roots.push(c0);
        } else {
            let f: Vec<f64> = self.grid.iter().zip(&self.mmse).map(|(&s2, &m)| self.residual(mu, s2, m)).collect();
            for i in 0..f.len() {
                if f[i] == 0.0 {
                    roots.push(self.grid[i]);
                    continue;
                }
                if i + 1 < f.len() && f[i + 1] != 0.0 && f[i].signum() != f[i + 1].signum() {
                    let r = bisect(
                        |s2| Ok(self.residual(mu, s2, self.expected_mmse(s2)?)),
                        self.grid[i],
                        self.grid[i + 1],
                        self.opts.root_tol,
                    )?;
                    roots.push(r);
                }
            }
        }
        if roots.is_empty() {
            return Err(Error::NoSolution(format!(
                "no sign change of the detector map on [{}, {}] at tau={}, mu={mu}",
                self.grid[0],
                self.grid[self.grid.len() - 1],
                self.est.tau
            )));
        }
        let candidates = roots
            .into_iter()
            .map(|sigma2| {
                free_energy(&self.geom, &self.sig, self.n0, &self.est, mu, sigma2, self.hermite)
                    .map(|free_energy| Candidate { sigma2, free_energy })
            })
            .collect::<Result<Vec<_>>>()?;
        let selected_index = candidates
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.free_energy.total_cmp(&b.1.free_energy))
            .map(|(i, _)| i)
            .unwrap_or(0);
        Ok(DetectorSolution {
            tau: self.est.tau,
            mu,
            sigma2: candidates[selected_index].sigma2,
            candidates,
            selected_index,
        })
    }
}
