//! Scalar kernels for the decoupled AWGN channel `z = a·x + w`, `w ~ CN(0, σ²)`.
//!
//! Gaussian inputs use closed forms. QPSK inputs factorize over the real and
//! imaginary dimensions, each a (possibly biased) binary input observed in real
//! Gaussian noise of variance `σ²/2`; those expectations are evaluated with a
//! Gauss–Hermite rule.

use std::f64::consts::{LN_2, LOG2_E};
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::quadrature::GaussRule;

/// Input prior family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    GaussianUnbiased,
    GaussianBiased,
    QpskUnbiased,
    QpskBiased,
}

impl Family {
    pub fn is_gaussian(self) -> bool {
        matches!(self, Family::GaussianUnbiased | Family::GaussianBiased)
    }

    /// How the decoupled-channel quantities of this family depend on θ.
    pub fn theta_dependence(self) -> ThetaDependence {
        if self.is_gaussian() {
            ThetaDependence::MagnitudeOnly
        } else {
            ThetaDependence::Full
        }
    }

    pub fn is_biased(self) -> bool {
        matches!(self, Family::GaussianBiased | Family::QpskBiased)
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::GaussianUnbiased => "gauss",
            Family::GaussianBiased => "gauss-biased",
            Family::QpskUnbiased => "qpsk",
            Family::QpskBiased => "qpsk-biased",
        }
    }
}

/// Distribution of the per-symbol bias θ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hyperprior {
    /// θ = ±σ_θ (real), equiprobable.
    TwoPointReal,
    /// |θ|² = σ_θ² with the phase left free.
    FixedMagnitude,
}

/// Symbol prior: family, power `P` and bias variance `σ_θ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Signaling {
    pub family: Family,
    pub power: f64,
    pub sigma_theta2: f64,
    pub hyperprior: Hyperprior,
}

impl Signaling {
    pub fn new(family: Family, power: f64, sigma_theta2: f64, hyperprior: Hyperprior) -> Result<Self> {
        let sig = Self { family, power, sigma_theta2, hyperprior };
        sig.validate()?;
        Ok(sig)
    }

    pub fn gaussian(power: f64) -> Self {
        Self { family: Family::GaussianUnbiased, power, sigma_theta2: 0.0, hyperprior: Hyperprior::TwoPointReal }
    }

    pub fn qpsk(power: f64) -> Self {
        Self { family: Family::QpskUnbiased, ..Self::gaussian(power) }
    }

    /// Biased variant of `family` with the two-point hyperprior.
    pub fn biased(family: Family, power: f64, sigma_theta2: f64) -> Result<Self> {
        let family = match family {
            Family::GaussianUnbiased | Family::GaussianBiased => Family::GaussianBiased,
            Family::QpskUnbiased | Family::QpskBiased => Family::QpskBiased,
        };
        Self::new(family, power, sigma_theta2, Hyperprior::TwoPointReal)
    }

    pub fn with_power(self, power: f64) -> Self {
        Self { power, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.power.is_finite() && self.power > 0.0,
            InvalidDomain,
            "symbol power must be positive and finite, got {}",
            self.power
        );
        self.validate_bias()
    }

    /// Bias checks alone; lets solvers accept the degenerate `P = 0` signal.
    pub(crate) fn validate_bias(&self) -> Result<()> {
        ensure!(
            self.sigma_theta2.is_finite() && self.sigma_theta2 >= 0.0,
            InvalidDomain,
            "bias variance must be non-negative, got {}",
            self.sigma_theta2
        );
        if !self.family.is_biased() {
            ensure!(
                self.sigma_theta2 == 0.0,
                InvalidDomain,
                "unbiased family {} requires sigma_theta2 = 0, got {}",
                self.family.name(),
                self.sigma_theta2
            );
            return Ok(());
        }
        ensure!(
            self.sigma_theta2 < self.power,
            InvalidDomain,
            "bias variance {} must be below the symbol power {}",
            self.sigma_theta2,
            self.power
        );
        if self.family == Family::QpskBiased {
            match self.hyperprior {
                Hyperprior::TwoPointReal => ensure!(
                    self.sigma_theta2 <= self.power / 2.0,
                    InvalidDomain,
                    "biased QPSK with a real two-point bias needs sigma_theta2 <= P/2, got {} > {}",
                    self.sigma_theta2,
                    self.power / 2.0
                ),
                Hyperprior::FixedMagnitude => {
                    return Err(Error::UnsupportedHyperprior(
                        "biased QPSK depends on the phase of theta; use the two-point hyperprior".into(),
                    ))
                }
            }
        }
        Ok(())
    }

    /// Effective bias variance: zero for unbiased families.
    pub fn bias_variance(&self) -> f64 {
        if self.family.is_biased() {
            self.sigma_theta2
        } else {
            0.0
        }
    }

    /// Support of the hyperprior as `(θ, probability)` atoms.
    pub fn theta_atoms(&self) -> Vec<(Complex64, f64)> {
        let s2 = self.bias_variance();
        if s2 == 0.0 {
            return vec![(Complex64::new(0.0, 0.0), 1.0)];
        }
        let s = s2.sqrt();
        match self.hyperprior {
            Hyperprior::TwoPointReal => {
                vec![(Complex64::new(s, 0.0), 0.5), (Complex64::new(-s, 0.0), 0.5)]
            }
            Hyperprior::FixedMagnitude => vec![(Complex64::new(s, 0.0), 1.0)],
        }
    }
}

/// Parameters of one decoupled AWGN channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AwgnChannelSpec {
    pub gain: f64,
    pub noise_var: f64,
    pub theta: Complex64,
}

impl AwgnChannelSpec {
    pub fn new(gain: f64, noise_var: f64, theta: Complex64) -> Self {
        Self { gain, noise_var, theta }
    }

    pub fn unbiased(gain: f64, noise_var: f64) -> Self {
        Self::new(gain, noise_var, Complex64::new(0.0, 0.0))
    }

    fn validate(&self, sig: &Signaling) -> Result<()> {
        ensure!(
            self.gain.is_finite() && self.gain >= 0.0,
            InvalidDomain,
            "channel gain must be non-negative, got {}",
            self.gain
        );
        ensure!(self.noise_var > 0.0, InvalidDomain, "noise variance must be positive, got {}", self.noise_var);
        ensure!(
            self.theta.norm_sqr() < sig.power,
            InvalidDomain,
            "|theta|^2 = {} must be below P = {}",
            self.theta.norm_sqr(),
            sig.power
        );
        if !sig.family.is_biased() {
            ensure!(
                self.theta.norm_sqr() == 0.0,
                InvalidDomain,
                "unbiased family {} requires theta = 0",
                sig.family.name()
            );
        }
        if sig.family == Family::QpskBiased {
            let amp = (sig.power / 2.0).sqrt();
            ensure!(
                self.theta.re.abs() <= amp && self.theta.im.abs() <= amp,
                InvalidDomain,
                "QPSK bias components must lie within ±sqrt(P/2), got {}",
                self.theta
            );
        }
        Ok(())
    }

    /// `a²(P − |θ|²)/σ²`.
    pub fn snr(&self, sig: &Signaling) -> f64 {
        self.gain * self.gain * (sig.power - self.theta.norm_sqr()) / self.noise_var
    }
}

fn check_rule(rule: &GaussRule) -> Result<()> {
    ensure!(rule.len() >= 2, Degenerate, "Gauss-Hermite rule has {} nodes; at least 2 are required", rule.len());
    Ok(())
}

/// MMSE `E[|x − x̂|² | θ]`.
pub fn awgn_mmse(sig: &Signaling, ch: &AwgnChannelSpec, hermite: &GaussRule) -> Result<f64> {
    sig.validate()?;
    ch.validate(sig)?;
    if sig.family.is_gaussian() {
        let v = sig.power - ch.theta.norm_sqr();
        let a2 = ch.gain * ch.gain;
        return Ok(v * ch.noise_var / (a2 * v + ch.noise_var));
    }
    check_rule(hermite)?;
    let amp = (sig.power / 2.0).sqrt();
    let s2 = ch.noise_var / 2.0;
    Ok(binary_mmse(amp, ch.theta.re, ch.gain, s2, hermite) + binary_mmse(amp, ch.theta.im, ch.gain, s2, hermite))
}

/// Mutual information `I(x; z | θ)` in bits.
pub fn awgn_mutual_info(sig: &Signaling, ch: &AwgnChannelSpec, hermite: &GaussRule) -> Result<f64> {
    sig.validate()?;
    ch.validate(sig)?;
    if sig.family.is_gaussian() {
        return Ok(ch.snr(sig).ln_1p() * LOG2_E);
    }
    check_rule(hermite)?;
    let amp = (sig.power / 2.0).sqrt();
    let s2 = ch.noise_var / 2.0;
    Ok(binary_mutual_info(amp, ch.theta.re, ch.gain, s2, hermite)
        + binary_mutual_info(amp, ch.theta.im, ch.gain, s2, hermite))
}

/// `ln(1 + eᵘ)` without overflow.
fn softplus(u: f64) -> f64 {
    u.max(0.0) + (-u.abs()).exp().ln_1p()
}

/// `1/(1 + eᵘ)`.
fn logistic_neg(u: f64) -> f64 {
    if u >= 0.0 {
        let e = (-u).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + u.exp())
    }
}

/// Prior log-odds `ln(p₊/p₋)` of a binary input ±A with mean `b`.
fn prior_log_odds(amp: f64, bias: f64) -> f64 {
    ((amp + bias) / (amp - bias)).ln()
}

/// Standard normal CDF, accurate deep into both tails.
fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Up to this log-odds spread Gauss–Hermite resolves the logistic step.
const HERMITE_MAX_SPREAD: f64 = 1.0;

/// Panels on `u ≥ 0` for functions decaying like `e^{-u}`.
const TAIL_PANELS: [(f64, f64); 7] =
    [(0.0, 0.5), (0.5, 1.5), (1.5, 3.0), (3.0, 6.0), (6.0, 12.0), (12.0, 24.0), (24.0, 45.0)];

fn tail_rule() -> &'static GaussRule {
    static RULE: OnceLock<GaussRule> = OnceLock::new();
    RULE.get_or_init(|| crate::quadrature::gauss_legendre_unit(12).expect("fixed rule size"))
}

/// `∫ φ_L(l)·(left(−l)·1{l<0} + right(l)·1{l>0}) dl` for `L ~ N(c, ς²)`, where
/// `left` and `right` decay exponentially on `u ≥ 0`.
fn localized_expectation(c: f64, spread: f64, left: impl Fn(f64) -> f64, right: impl Fn(f64) -> f64) -> f64 {
    let rule = tail_rule();
    let mut acc = 0.0;
    for (a, b) in TAIL_PANELS {
        for (t, w) in rule.iter() {
            let u = a + (b - a) * t;
            let wu = w * (b - a) / spread;
            acc += wu * (norm_pdf((u - c) / spread) * right(u) + norm_pdf((-u - c) / spread) * left(u));
        }
    }
    acc
}

/// `E[σ(L)²]`, `σ(l) = 1/(1 + eˡ)`, for `L ~ N(c, ς²)`.
///
/// For wide spreads the step of `σ²` at the origin lies far in a Gaussian
/// tail, so the indicator part is taken exactly and only the smooth
/// remainder is integrated.
fn logistic_sq_mean(c: f64, spread: f64, hermite: &GaussRule) -> f64 {
    if spread <= HERMITE_MAX_SPREAD {
        return hermite.integrate(|g| logistic_neg(c + spread * g).powi(2));
    }
    // σ(l)² − 1 = −σ(−l)(1 + σ(l)) for l < 0.
    let right = |u: f64| logistic_neg(u).powi(2);
    let left = |u: f64| -logistic_neg(u) * (1.0 + logistic_neg(-u));
    (norm_cdf(-c / spread) + localized_expectation(c, spread, left, right)).clamp(0.0, 1.0)
}

/// `E[softplus(−L)]` for `L ~ N(c, ς²)`, split as `E[(−L)⁺] + E[ln(1 + e^{−|L|})]`.
fn softplus_neg_mean(c: f64, spread: f64, hermite: &GaussRule) -> f64 {
    if spread <= HERMITE_MAX_SPREAD {
        return hermite.integrate(|g| softplus(-(c + spread * g)));
    }
    let z = -c / spread;
    let ramp = -c * norm_cdf(z) + spread * norm_pdf(z);
    let k = |u: f64| (-u).exp().ln_1p();
    (ramp.max(0.0) + localized_expectation(c, spread, k, k)).max(0.0)
}

/// Log-odds means for `x = ±A` and their common spread. The posterior
/// log-odds is `L = 2aA·z/s² + λ₀`, Gaussian given `x`.
fn log_odds_moments(amp: f64, bias: f64, gain: f64, s2: f64) -> (f64, f64, f64) {
    let rho = gain * amp / s2.sqrt();
    let lambda0 = prior_log_odds(amp, bias);
    (2.0 * rho * rho + lambda0, -2.0 * rho * rho + lambda0, 2.0 * rho)
}

/// MMSE of a binary input ±A with mean `b`, observed as `a·x + N(0, s²)`.
fn binary_mmse(amp: f64, bias: f64, gain: f64, s2: f64, hermite: &GaussRule) -> f64 {
    if bias.abs() >= amp {
        return 0.0;
    }
    if gain == 0.0 {
        return amp * amp - bias * bias;
    }
    let p_plus = 0.5 * (1.0 + bias / amp);
    // E[x|z] = A·tanh(L/2): the error is 2A·σ(L) for x = +A and 2A·σ(−L) for x = −A.
    let (c_plus, c_minus, spread) = log_odds_moments(amp, bias, gain, s2);
    let e = p_plus * logistic_sq_mean(c_plus, spread, hermite)
        + (1.0 - p_plus) * logistic_sq_mean(-c_minus, spread, hermite);
    4.0 * amp * amp * e
}

/// Mutual information (bits) of the same binary channel.
fn binary_mutual_info(amp: f64, bias: f64, gain: f64, s2: f64, hermite: &GaussRule) -> f64 {
    if bias.abs() >= amp || gain == 0.0 {
        return 0.0;
    }
    let p_plus = 0.5 * (1.0 + bias / amp);
    let p_minus = 1.0 - p_plus;
    let (c_plus, c_minus, spread) = log_odds_moments(amp, bias, gain, s2);
    // I = H(x) − E[−ln p(x|z)], with −ln p(+|z) = softplus(−L), −ln p(−|z) = softplus(L).
    let entropy = -p_plus * p_plus.ln() - p_minus * p_minus.ln();
    let equivocation =
        p_plus * softplus_neg_mean(c_plus, spread, hermite) + p_minus * softplus_neg_mean(-c_minus, spread, hermite);
    ((entropy - equivocation) / LN_2).max(0.0)
}

/// How a function passed to [`hyperprior_expect`] depends on θ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaDependence {
    /// Only through `|θ|²`.
    MagnitudeOnly,
    /// Through θ itself.
    Full,
}

/// `E_θ[f(θ)]` under the signaling's hyperprior.
pub fn hyperprior_expect<F>(sig: &Signaling, dependence: ThetaDependence, mut f: F) -> Result<f64>
where
    F: FnMut(Complex64) -> Result<f64>,
{
    if sig.bias_variance() > 0.0
        && sig.hyperprior == Hyperprior::FixedMagnitude
        && dependence != ThetaDependence::MagnitudeOnly
    {
        return Err(Error::UnsupportedHyperprior(
            "fixed-magnitude hyperprior only supports functions of |theta|^2".into(),
        ));
    }
    let mut acc = 0.0;
    for (theta, p) in sig.theta_atoms() {
        acc += p * f(theta)?;
    }
    Ok(acc)
}

/// `D₂(CN(0, v₁) ‖ CN(0, v₂))` in bits.
pub fn kl_gauss(var1: f64, var2: f64) -> Result<f64> {
    ensure!(var1 > 0.0 && var2 > 0.0, InvalidDomain, "variances must be positive, got ({var1}, {var2})");
    let r = var1 / var2;
    // log₂(1/r) + (r − 1)·log₂e, written to stay accurate near r = 1.
    Ok(((r - 1.0) - (r - 1.0).ln_1p()) * LOG2_E)
}
