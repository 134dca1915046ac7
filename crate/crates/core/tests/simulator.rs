//! Statistical checks of the finite-size estimator and detector.

use nalgebra::DMatrix;
use num_complex::Complex64;
use sdbound::sim::*;
use sdbound::*;

fn z(mean: f64, sd: f64, n: usize) -> f64 {
    mean / (sd / (n as f64).sqrt())
}

/// Per-entry sample mean and standard deviation of a stream of real values.
#[derive(Default)]
struct Acc {
    s: f64,
    s2: f64,
    n: usize,
}

impl Acc {
    fn push(&mut self, x: f64) {
        self.s += x;
        self.s2 += x * x;
        self.n += 1;
    }
    fn z(&self) -> f64 {
        let n = self.n as f64;
        let mean = self.s / n;
        z(mean, ((self.s2 / n - mean * mean) * n / (n - 1.0)).sqrt(), self.n)
    }
}

#[test]
fn channel_entries_are_unit_variance() {
    let mut rng = trial_rng(42, 0);
    let mut acc = Acc::default();
    for _ in 0..100_000 {
        acc.push(complex_normal(&mut rng).norm_sqr() - 1.0);
    }
    assert!(acc.z().abs() < 3.0, "z = {}", acc.z());
}

#[test]
fn error_covariance_matches_estimation_error() {
    // Biased data after stage t exercises the virtual-channel columns.
    let sig = Signaling::biased(Family::QpskBiased, 1.0, 0.3).unwrap();
    let cfg = McConfig {
        m: 3,
        n: 4,
        tc: 12,
        ttr: 3,
        stage_t: 6,
        substage_m: 1,
        signaling: sig,
        n0: 0.5,
        ..McConfig::default()
    };
    let m = cfg.m;
    let mut acc: Vec<Acc> = (0..2 * m * m).map(|_| Acc::default()).collect();
    for trial in 0..10_000 {
        let b = simulate_block(&cfg, &mut trial_rng(17, trial));
        let e = lmmse_channel_estimate(&b, &cfg).unwrap();
        let d = &b.h - &e.h_hat;
        let emp = d.adjoint() * &d / Complex64::new(cfg.n as f64, 0.0);
        let diff: DMatrix<Complex64> = emp - &e.xi;
        for (k, v) in diff.iter().enumerate() {
            acc[2 * k].push(v.re);
            acc[2 * k + 1].push(v.im);
        }
    }
    let worst = acc.iter().filter(|a| a.s2 > 0.0).map(|a| a.z().abs()).fold(0.0, f64::max);
    // 18 entry statistics: allow for the multiple comparisons.
    assert!(worst < 3.5, "worst z = {worst}");
}

#[test]
fn estimate_is_orthogonal_to_its_error() {
    let sig = Signaling::biased(Family::QpskBiased, 1.0, 0.3).unwrap();
    let cfg = McConfig {
        m: 3,
        n: 4,
        tc: 12,
        ttr: 3,
        stage_t: 6,
        substage_m: 1,
        signaling: sig,
        n0: 0.5,
        ..McConfig::default()
    };
    let m = cfg.m;
    let mut acc: Vec<Acc> = (0..2 * m * m).map(|_| Acc::default()).collect();
    for trial in 0..10_000 {
        let b = simulate_block(&cfg, &mut trial_rng(23, trial));
        let e = lmmse_channel_estimate(&b, &cfg).unwrap();
        let d = &b.h - &e.h_hat;
        let cross = e.h_hat.adjoint() * &d / Complex64::new(cfg.n as f64, 0.0);
        for (k, v) in cross.iter().enumerate() {
            acc[2 * k].push(v.re);
            acc[2 * k + 1].push(v.im);
        }
    }
    let worst = acc.iter().map(|a| a.z().abs()).fold(0.0, f64::max);
    assert!(worst < 3.5, "worst z = {worst}");
}

/// Stage at the end of the block, so only known symbols enter the estimate
/// and the detector's second-order model is exact given `Ĥ`.
fn last_stage(sig: Signaling, substage: usize) -> McConfig {
    McConfig {
        m: 4,
        n: 4,
        tc: 10,
        ttr: 4,
        stage_t: 10,
        substage_m: substage,
        signaling: sig,
        n0: 0.3,
        ..McConfig::default()
    }
}

#[test]
fn detector_error_is_orthogonal_and_matches_posterior_variance() {
    for (sig, substage) in [(Signaling::gaussian(1.0), 1), (Signaling::qpsk(1.0), 3)] {
        let cfg = last_stage(sig, substage);
        let (mut orth_re, mut orth_im, mut var_gap) = (Acc::default(), Acc::default(), Acc::default());
        for trial in 0..20_000 {
            let b = simulate_block(&cfg, &mut trial_rng(23, trial));
            let e = lmmse_channel_estimate(&b, &cfg).unwrap();
            let d = lmmse_detect(&b, &e, &cfg).unwrap();
            let x = b.x[(substage - 1, cfg.stage_t - 1)];
            let theta = b.theta[(substage - 1, cfg.stage_t - 1)];
            let o = (x - d.x_hat) * (d.x_hat - theta).conj();
            orth_re.push(o.re);
            orth_im.push(o.im);
            var_gap.push((x - d.x_hat).norm_sqr() - d.posterior_var);
        }
        for (name, a) in [("orthogonality re", &orth_re), ("orthogonality im", &orth_im), ("variance", &var_gap)] {
            assert!(a.z().abs() < 3.5, "{}: {name} z = {}", sig.family.name(), a.z());
        }
    }
}

#[test]
fn mse_stays_below_prior_variance() {
    for snr_db in [0.0, 12.0] {
        let cfg = McConfig { n0: 1.0 / db_to_linear(snr_db), trials: 2000, seed: 5, ..McConfig::default() };
        let r = measure_mse(&cfg).unwrap();
        let mse = r.normalized_mse.unwrap();
        assert!(mse.mean <= 1.0 + 5.0 * mse.stderr, "{mse:?}");
    }
}

#[test]
fn qpsk_pilot_diagonal_bias_decays_like_inverse_m() {
    let base = McConfig {
        m: 4,
        n: 4,
        tc: 64,
        ttr: 4,
        stage_t: 9,
        substage_m: 1,
        signaling: Signaling::gaussian(1.0),
        pilots: PilotConstellation::Qpsk,
        n0: 1.0,
        trials: 3000,
        seed: 11,
    };
    let study = offdiag_scaling_study(&base, &[4, 8, 16]).unwrap();
    let scaled: Vec<f64> = study
        .rows
        .iter()
        .map(|r| {
            let d = r.result.xi2_empirical;
            let bias = d.mean - r.result.prediction.unwrap().xi2;
            if r.m == 4 {
                assert!(bias < -3.0 * d.stderr, "no visible bias at M=4: {bias} ± {}", d.stderr);
            }
            r.m as f64 * bias
        })
        .collect();
    for s in &scaled[1..] {
        assert!((0.5..2.0).contains(&(s / scaled[0])), "M·bias not stable: {scaled:?}");
    }
}

#[test]
fn runs_are_reproducible() {
    let cfg = McConfig { trials: 50, seed: 9, ..McConfig::default() };
    let a = measure_mse(&cfg).unwrap();
    let b = measure_mse(&cfg).unwrap();
    assert_eq!(a, b);
    let other = measure_mse(&McConfig { seed: 10, ..cfg }).unwrap();
    assert_ne!(a.normalized_mse, other.normalized_mse);
}
