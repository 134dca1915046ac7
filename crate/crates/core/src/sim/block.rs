//! One coherence block of `Y = (1/√M)·H·X + W`.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{McConfig, PilotConstellation};
use crate::kernels::{Family, Hyperprior};

/// Per-trial generator: the seed picks the key, the trial index the stream.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// `CN(0, 1)` by Box–Muller, variance 1/2 per real dimension.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    Complex64::from_polar((-u1.ln()).sqrt(), TAU * u2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockState {
    /// `N × M`, unit-variance entries.
    pub h: DMatrix<Complex64>,
    /// `M × T_c`, pilots in the first `T_tr` columns.
    pub x: DMatrix<Complex64>,
    /// `M × T_c` symbol means, zero on pilot columns.
    pub theta: DMatrix<Complex64>,
    /// `N × T_c`.
    pub noise: DMatrix<Complex64>,
    /// `N × T_c`.
    pub y: DMatrix<Complex64>,
}

fn pilot<R: Rng + ?Sized>(rng: &mut R, kind: PilotConstellation, power: f64) -> Complex64 {
    match kind {
        PilotConstellation::Qpsk => {
            let a = (power / 2.0).sqrt();
            let re = if rng.random::<bool>() { a } else { -a };
            let im = if rng.random::<bool>() { a } else { -a };
            Complex64::new(re, im)
        }
        PilotConstellation::Gaussian => power.sqrt() * complex_normal(rng),
    }
}

fn bias<R: Rng + ?Sized>(rng: &mut R, cfg: &McConfig) -> Complex64 {
    let s2 = cfg.signaling.bias_variance();
    if s2 == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    match cfg.signaling.hyperprior {
        Hyperprior::TwoPointReal => {
            let s = s2.sqrt();
            Complex64::new(if rng.random::<bool>() { s } else { -s }, 0.0)
        }
        Hyperprior::FixedMagnitude => Complex64::from_polar(s2.sqrt(), TAU * rng.random::<f64>()),
    }
}

/// Binary ±A with mean `b`.
fn biased_binary<R: Rng + ?Sized>(rng: &mut R, amp: f64, b: f64) -> f64 {
    let p_plus = 0.5 * (1.0 + b / amp);
    if rng.random::<f64>() < p_plus {
        amp
    } else {
        -amp
    }
}

fn data_symbol<R: Rng + ?Sized>(rng: &mut R, cfg: &McConfig, theta: Complex64) -> Complex64 {
    let p = cfg.signaling.power;
    match cfg.signaling.family {
        Family::GaussianUnbiased | Family::GaussianBiased => {
            theta + (p - theta.norm_sqr()).max(0.0).sqrt() * complex_normal(rng)
        }
        Family::QpskUnbiased | Family::QpskBiased => {
            let a = (p / 2.0).sqrt();
            Complex64::new(biased_binary(rng, a, theta.re), biased_binary(rng, a, theta.im))
        }
    }
}

/// Draws `H`, the symbols with their biases, and the noise, in that order.
pub fn simulate_block<R: Rng + ?Sized>(cfg: &McConfig, rng: &mut R) -> BlockState {
    let (m, n, tc) = (cfg.m, cfg.n, cfg.tc);
    let h = DMatrix::from_fn(n, m, |_, _| complex_normal(rng));
    let mut x = DMatrix::zeros(m, tc);
    let mut theta = DMatrix::zeros(m, tc);
    for t in 0..tc {
        for k in 0..m {
            if t < cfg.ttr {
                x[(k, t)] = pilot(rng, cfg.pilots, cfg.signaling.power);
            } else {
                let th = bias(rng, cfg);
                theta[(k, t)] = th;
                x[(k, t)] = data_symbol(rng, cfg, th);
            }
        }
    }
    let sd = cfg.n0.sqrt();
    let noise = DMatrix::from_fn(n, tc, |_, _| sd * complex_normal(rng));
    let scale = Complex64::new(1.0 / (m as f64).sqrt(), 0.0);
    let y = &h * &x * scale + &noise;
    BlockState { h, x, theta, noise, y }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Signaling;

    fn cfg() -> McConfig {
        McConfig { m: 3, n: 2, tc: 6, ttr: 2, stage_t: 4, substage_m: 1, ..McConfig::default() }
    }

    #[test]
    fn noiseless_single_antenna() {
        let c = McConfig { m: 1, n: 1, tc: 1, ttr: 0, stage_t: 1, n0: 0.0, ..cfg() };
        let b = simulate_block(&c, &mut trial_rng(3, 0));
        assert_eq!(b.y, &b.h * &b.x);
    }

    #[test]
    fn same_stream_same_block() {
        let a = simulate_block(&cfg(), &mut trial_rng(11, 5));
        let b = simulate_block(&cfg(), &mut trial_rng(11, 5));
        let c = simulate_block(&cfg(), &mut trial_rng(11, 6));
        assert_eq!(a, b);
        assert_ne!(a.h, c.h);
    }

    #[test]
    fn channel_entries_have_unit_variance() {
        let mut rng = trial_rng(1, 0);
        let n = 100_000;
        let v: Vec<f64> = (0..n).map(|_| complex_normal(&mut rng).norm_sqr()).collect();
        let mean = v.iter().sum::<f64>() / n as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * se, "mean={mean} se={se}");
    }

    #[test]
    fn qpsk_symbols_have_constant_modulus() {
        let c = McConfig { signaling: Signaling::qpsk(2.0), ..cfg() };
        let b = simulate_block(&c, &mut trial_rng(2, 0));
        assert!(b.x.iter().all(|x| (x.norm_sqr() - 2.0).abs() < 1e-12));
        assert!(b.theta.columns(0, 2).iter().all(|t| *t == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn biased_qpsk_symbol_mean() {
        let sig = Signaling::biased(Family::QpskBiased, 1.0, 0.3).unwrap();
        let c = McConfig { signaling: sig, ..cfg() };
        let mut rng = trial_rng(4, 0);
        let th = Complex64::new(0.3f64.sqrt(), 0.0);
        let n = 200_000;
        let mean: Complex64 = (0..n).map(|_| data_symbol(&mut rng, &c, th)).sum::<Complex64>() / n as f64;
        assert!((mean - th).norm() < 0.01, "{mean}");
    }
}
