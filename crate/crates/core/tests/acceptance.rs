//! Acceptance suite: one test per criterion, each writing a PASS/FAIL line
//! to stderr (unbuffered, so it shows up without `--nocapture`).

use std::f64::consts::{LN_2, LOG2_E};
use std::io::Write;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdbound::bounds::horizontal_gap_db;
use sdbound::quadrature::{gauss_hermite, QuadratureConfig};
use sdbound::sim::{measure_mse, offdiag_scaling_study, McConfig, PilotConstellation};
use sdbound::*;

fn verdict(id: &str, ok: bool, detail: impl AsRef<str>, started: Instant) {
    let line = format!(
        "[{}] criterion {id}: {} ({:.1} s)\n",
        if ok { "PASS" } else { "FAIL" },
        detail.as_ref(),
        started.elapsed().as_secs_f64()
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(ok, "criterion {id} failed: {}", detail.as_ref());
}

fn info(id: &str, detail: impl AsRef<str>) {
    let _ = std::io::stderr().write_all(format!("       criterion {id}: {}\n", detail.as_ref()).as_bytes());
}

fn snr_n0(snr_db: f64) -> f64 {
    1.0 / db_to_linear(snr_db)
}

/// Positive root of `a u² + b u + c = 0` with `a > 0`, `c < 0`.
fn positive_root(a: f64, b: f64, c: f64) -> f64 {
    let disc = (b * b - 4.0 * a * c).sqrt();
    if b <= 0.0 {
        (disc - b) / (2.0 * a)
    } else {
        -2.0 * c / (b + disc)
    }
}

#[test]
fn criterion_01_estimator_closed_form() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let beta = rng.random_range(0.01..1.0);
        let tau0 = rng.random_range(0.0..0.9);
        let tau = rng.random_range(tau0..1.0);
        let p = 10f64.powf(rng.random_range(-1.0..2.0));
        let n0 = 10f64.powf(rng.random_range(-2.0..1.0));
        let alpha = rng.random_range(0.1..4.0);
        let geom = Geometry::new(alpha, beta, tau0).unwrap();
        let got = solve_estimator(&geom, &Signaling::gaussian(p), n0, tau).unwrap().xi2;
        let want = positive_root(beta * p, beta * n0 + tau * p - beta * p, -beta * n0);
        worst = worst.max((got - want).abs());
    }
    verdict("1", worst <= 1e-10, format!("max |xi2 - quadratic root| = {worst:.2e} over 100 points"), started);
}

#[test]
fn criterion_02_detector_closed_form() {
    let started = Instant::now();
    let rules = QuadratureRules::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut exact_at_one = true;
    for k in 0..100 {
        let alpha = rng.random_range(0.1..4.0);
        let beta = rng.random_range(0.01..1.0);
        let tau = rng.random_range(0.0..1.0);
        let mu = rng.random_range(0.0..1.0);
        let p = 10f64.powf(rng.random_range(-1.0..2.0));
        let n0 = 10f64.powf(rng.random_range(-2.0..1.0));
        let sig = if k % 2 == 0 {
            Signaling::gaussian(p)
        } else {
            Signaling::biased(Family::GaussianBiased, p, rng.random_range(0.0..0.9) * p).unwrap()
        };
        let geom = Geometry::new(alpha, beta, 0.0).unwrap();
        let est = solve_estimator(&geom, &sig, n0, tau).unwrap();
        let det = solve_detector(&geom, &sig, n0, &est, mu, &DetectorOptions::default(), &rules.hermite).unwrap();
        // σ²(w + ασ²) = c₀(w + ασ²) + (1−μ)wασ², w = (1−ξ²)(P−σ_θ²)
        let c0 = n0 + p * est.xi2;
        let w = (1.0 - est.xi2) * (p - sig.bias_variance());
        let want = positive_root(alpha, w - alpha * c0 - (1.0 - mu) * w * alpha, -c0 * w);
        worst = worst.max((det.sigma2 - want).abs() / want.max(1.0));
        let one = solve_detector(&geom, &sig, n0, &est, 1.0, &DetectorOptions::default(), &rules.hermite).unwrap();
        exact_at_one &= one.sigma2 == c0;
    }
    verdict(
        "2",
        worst <= 1e-10 && exact_at_one,
        format!("max deviation from quadratic root = {worst:.2e}; mu = 1 returns N0 + P xi2 exactly: {exact_at_one}"),
        started,
    );
}

#[test]
fn criterion_03_low_snr_limit() {
    let started = Instant::now();
    let rules = QuadratureRules::default();
    let (alpha, beta) = (1e-3, 1e-3);
    let geom = Geometry::new(alpha, beta, 0.0).unwrap();
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for s in [0.5, 1.0, 2.0, 5.0] {
        let n0 = 1.0 / (s * beta);
        let c_g = achievable_rate(&geom, &Signaling::gaussian(1.0), n0, &rules, &RateOptions::default())
            .unwrap()
            .rate_bits_per_tx;
        let numeric = alpha / beta * c_g;
        let q = s + beta / alpha * s * s;
        let closed = (1.0 + 1.0 / q) * (1.0 + q).log2() - (1.0 + 1.0 / s) * (1.0 + s).log2();
        let rel = (numeric / closed - 1.0).abs();
        worst = worst.max(rel);
        parts.push(format!("s={s}: {rel:.1e}"));
    }
    let s = 1e-3;
    let ratio = low_snr_rate(beta / alpha, s).unwrap() / (beta * s * s / (2.0 * alpha * LN_2));
    verdict(
        "3",
        worst <= 0.01 && (0.99..=1.01).contains(&ratio),
        format!("relative error {}; small-s ratio {ratio:.5}", parts.join(", ")),
        started,
    );
}

#[test]
fn criterion_04_multiplexing_gain() {
    let started = Instant::now();
    let rules = QuadratureRules::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for beta in [0.5, 0.1] {
        let geom = Geometry::new(1.0, beta, 0.0).unwrap();
        let slope = multiplexing_gain(&geom, &Signaling::gaussian(1.0), (40.0, 60.0), &rules).unwrap();
        let target = 1.0 - beta;
        ok &= (slope / target - 1.0).abs() <= 0.05;
        parts.push(format!("beta={beta}: slope {slope:.4} vs {target}"));
    }
    verdict("4", ok, parts.join("; "), started);
}

#[test]
fn criterion_05_ordering_and_hh_gap() {
    let started = Instant::now();
    let rules = QuadratureRules::default();
    let snrs: Vec<f64> = (0..=12).map(f64::from).collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for beta in [0.1, 0.5] {
        let geom = Geometry::new(1.0, beta, 0.0).unwrap();
        let (mut gauss, mut hh, mut hh_fixed) = (Vec::new(), Vec::new(), Vec::new());
        for &snr in &snrs {
            let n0 = snr_n0(snr);
            let g = achievable_rate(&geom, &Signaling::gaussian(1.0), n0, &rules, &RateOptions::default())
                .unwrap()
                .rate_bits_per_tx;
            let q = achievable_rate(&geom, &Signaling::qpsk(1.0), n0, &rules, &RateOptions::default())
                .unwrap()
                .rate_bits_per_tx;
            let h = hh_bound(&geom, 1.0, n0, None).unwrap();
            ok &= g > q && q > 0.0 && g > h;
            gauss.push(g);
            hh.push(h);
            hh_fixed.push(hh_bound(&geom, 1.0, n0, Some(beta)).unwrap());
        }
        let gaps: Vec<f64> = horizontal_gap_db(&snrs, &gauss, &hh, &snrs).unwrap().into_iter().map(|g| g.1).collect();
        let (lo, hi) = gaps.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &g| (a.min(g), b.max(g)));
        ok &= !gaps.is_empty() && lo >= 0.8 && hi <= 2.2;
        parts.push(format!("beta={beta}: gap {lo:.2}..{hi:.2} dB over {} points", gaps.len()));
        let fixed: Vec<f64> =
            horizontal_gap_db(&snrs, &gauss, &hh_fixed, &snrs).unwrap().into_iter().map(|g| g.1).collect();
        let (flo, fhi) = fixed.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &g| (a.min(g), b.max(g)));
        info("5", format!("beta={beta}: with training fixed at tau0 = beta the gap is {flo:.2}..{fhi:.2} dB"));
    }
    verdict("5", ok, format!("gauss > qpsk > 0 and gauss > HH pointwise; {}", parts.join("; ")), started);
}

#[test]
fn criterion_06_bias_monotonicity() {
    let started = Instant::now();
    let rules = QuadratureRules::default();
    let n0 = snr_n0(6.0);
    let mut ok = true;
    let mut parts = Vec::new();
    for beta in [0.1, 0.5] {
        let geom = Geometry::new(1.0, beta, 0.0).unwrap();
        for gaussian in [true, false] {
            let rates: Vec<f64> = (0..=5)
                .map(|k| {
                    let s2 = 0.1 * k as f64;
                    let family = match (gaussian, k > 0) {
                        (true, false) => Family::GaussianUnbiased,
                        (true, true) => Family::GaussianBiased,
                        (false, false) => Family::QpskUnbiased,
                        (false, true) => Family::QpskBiased,
                    };
                    let sig = Signaling::new(family, 1.0, s2, Hyperprior::TwoPointReal).unwrap();
                    achievable_rate(&geom, &sig, n0, &rules, &RateOptions::default()).unwrap().rate_bits_per_tx
                })
                .collect();
            let mono = rates.windows(2).all(|w| w[1] <= w[0]);
            ok &= mono;
            parts.push(format!(
                "beta={beta} {}: {:.4} -> {:.4}{}",
                if gaussian { "gauss" } else { "qpsk" },
                rates[0],
                rates[5],
                if mono { "" } else { " (not monotone)" }
            ));
        }
    }
    verdict("6", ok, parts.join("; "), started);
}

#[test]
fn criterion_07_low_snr_minimum() {
    let started = Instant::now();
    let grid = bounds::log_grid(1e-3, 10.0, 200);
    let curve = low_snr_curve(1.0, &grid).unwrap();
    let min = curve.minimum();
    let above = curve.points.iter().all(|p| p.eb_n0_db > -1.59);
    let diverges = curve.points[0].eb_n0_db > min.eb_n0_db + 10.0
        && curve.points.windows(2).take(curve.argmin).all(|w| w[0].eb_n0_db > w[1].eb_n0_db);
    verdict(
        "7",
        min.rate_r > 0.0 && curve.argmin > 0 && above && diverges,
        format!(
            "minimum {:.3} dB at R = {:.4} (s = {:.3}); {:.1} dB at R = {:.1e}",
            min.eb_n0_db, min.rate_r, min.s, curve.points[0].eb_n0_db, curve.points[0].rate_r
        ),
        started,
    );
}

#[test]
fn criterion_08_finite_size_mse() {
    let started = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for snr in [0.0, 3.0, 6.0, 9.0, 12.0] {
        let cfg = McConfig {
            m: 8,
            n: 8,
            tc: 128,
            ttr: 8,
            stage_t: 17,
            substage_m: 3,
            signaling: Signaling::qpsk(1.0),
            pilots: PilotConstellation::Qpsk,
            n0: snr_n0(snr),
            trials: 5000,
            seed: 7,
        };
        let r = measure_mse(&cfg).unwrap();
        let mse = r.normalized_mse.unwrap();
        let pred = r.prediction.unwrap().normalized_mse;
        let band = (0.1 * pred).max(3.0 * mse.stderr);
        ok &= (mse.mean - pred).abs() <= band;
        parts.push(format!("{snr} dB: {:.4}±{:.4} vs {pred:.4}", mse.mean, mse.stderr));
    }
    verdict("8", ok, parts.join("; "), started);
}

fn covariance_base() -> McConfig {
    McConfig {
        m: 4,
        n: 4,
        tc: 64,
        ttr: 4,
        stage_t: 9,
        substage_m: 1,
        signaling: Signaling::gaussian(1.0),
        pilots: PilotConstellation::Gaussian,
        n0: 1.0,
        trials: 2000,
        seed: 3,
    }
}

#[test]
fn criterion_09a_diagonal_matches_xi2() {
    let started = Instant::now();
    let study = offdiag_scaling_study(&covariance_base(), &[4, 8, 16, 32]).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for row in &study.rows {
        let d = row.result.xi2_empirical;
        let want = row.result.prediction.unwrap().xi2;
        let z = (d.mean - want) / d.stderr;
        ok &= z.abs() <= 3.0;
        parts.push(format!("M={}: {:.5} vs {want:.5} ({z:+.1} se)", row.m, d.mean));
    }
    verdict("9a", ok, parts.join("; "), started);
}

#[test]
fn criterion_09b_offdiag_scaling() {
    let started = Instant::now();
    let study = offdiag_scaling_study(&covariance_base(), &[4, 8, 16, 32]).unwrap();
    let scaled: Vec<String> = study
        .rows
        .iter()
        .map(|r| format!("M={}: {:.4}±{:.4}", r.m, r.result.offdiag_scaled.mean, r.result.offdiag_scaled.stderr))
        .collect();
    let raw_decreasing =
        study.rows.windows(2).all(|w| w[1].result.offdiag_abs_mean.mean < w[0].result.offdiag_abs_mean.mean);
    // Slope noise from the per-point relative standard errors.
    let rel: Vec<f64> =
        study.rows.iter().map(|r| r.result.offdiag_scaled.stderr / r.result.offdiag_scaled.mean).collect();
    let xs: Vec<f64> = study.rows.iter().map(|r| (r.m as f64).ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope_se = xs.iter().zip(&rel).map(|(x, s)| ((x - mx) / sxx * s).powi(2)).sum::<f64>().sqrt();
    info(
        "9b",
        format!(
            "|mean off-diagonal| per M: {}",
            study
                .rows
                .iter()
                .map(|r| format!("{:.1e}", r.result.offdiag_mean_magnitude))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    );
    verdict(
        "9b",
        raw_decreasing && study.log_slope <= 2.0 * slope_se,
        format!(
            "scaled off-diagonal {}; log-log slope {:.3} (noise {:.3}); raw mean decreasing: {raw_decreasing}",
            scaled.join(", "),
            study.log_slope,
            slope_se
        ),
        started,
    );
}

/// Monte Carlo of the complex QPSK channel `z = a x + w`, `w ~ CN(0, σ²)`,
/// using the four-point posterior directly.
fn qpsk_mc(p: f64, gain: f64, noise_var: f64, samples: usize, seed: u64) -> ((f64, f64), (f64, f64)) {
    let a = (p / 2.0).sqrt();
    let points = [Complex64::new(a, a), Complex64::new(-a, a), Complex64::new(a, -a), Complex64::new(-a, -a)];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut se, mut se2, mut mi, mut mi2) = (0.0, 0.0, 0.0, 0.0);
    let sd = (noise_var / 2.0).sqrt();
    for _ in 0..samples {
        let x = points[rng.random_range(0..4)];
        let w = sd * Complex64::new(gauss(&mut rng), gauss(&mut rng));
        let z = gain * x + w;
        let ll: Vec<f64> = points.iter().map(|&c| -(z - gain * c).norm_sqr() / noise_var).collect();
        let mx = ll.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = ll.iter().map(|l| (l - mx).exp()).collect();
        let total: f64 = weights.iter().sum();
        let mean: Complex64 = points.iter().zip(&weights).map(|(c, w)| c * (w / total)).sum();
        let e = (x - mean).norm_sqr();
        // log p(z|x) − log p(z) = ℓ(x) − log( (1/4) Σ exp ℓ(c) )
        let own = -(z - gain * x).norm_sqr() / noise_var;
        let i = (own - mx - (total / 4.0).ln()) * LOG2_E;
        se += e;
        se2 += e * e;
        mi += i;
        mi2 += i * i;
    }
    let n = samples as f64;
    let stat = |s: f64, s2: f64| (s / n, ((s2 / n - (s / n).powi(2)) / (n - 1.0)).sqrt());
    (stat(se, se2), stat(mi, mi2))
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[test]
fn criterion_10_kernel_oracles() {
    let started = Instant::now();
    let cfg = QuadratureConfig::default();
    let hermite = gauss_hermite(cfg.hermite_nodes).unwrap();
    let sig = Signaling::qpsk(1.0);
    let mut ok = true;
    let mut parts = Vec::new();
    // Above ~10 dB the posterior error is carried by events of probability
    // below 1e-7, which 10^7 samples rarely see; the sample standard error is
    // then meaningless, so the grid stops at 10 dB.
    for (k, snr_db) in [-10.0, -5.0, 0.0, 5.0, 10.0].into_iter().enumerate() {
        let noise_var = snr_n0(snr_db);
        let ch = AwgnChannelSpec::unbiased(1.0, noise_var);
        let mmse = awgn_mmse(&sig, &ch, &hermite).unwrap();
        let mi = awgn_mutual_info(&sig, &ch, &hermite).unwrap();
        let ((m_mc, m_se), (i_mc, i_se)) = qpsk_mc(1.0, 1.0, noise_var, cfg.mc_oracle_samples, 100 + k as u64);
        let zm = (mmse - m_mc) / m_se;
        let zi = (mi - i_mc) / i_se;
        ok &= zm.abs() <= 3.0 && zi.abs() <= 3.0;
        parts.push(format!("{snr_db} dB: mmse {zm:+.1} se, mi {zi:+.1} se"));
    }
    // dI/dsnr = MMSE/P in nats per unit of a²P/σ².
    let mut worst = 0.0f64;
    for snr in [0.1, 0.5, 1.0, 3.0, 10.0] {
        let h = 1e-4 * snr;
        let mi_at =
            |s: f64| awgn_mutual_info(&sig, &AwgnChannelSpec::unbiased(s.sqrt(), 1.0), &hermite).unwrap() * LN_2;
        let deriv = (mi_at(snr + h) - mi_at(snr - h)) / (2.0 * h);
        let mmse = awgn_mmse(&sig, &AwgnChannelSpec::unbiased(snr.sqrt(), 1.0), &hermite).unwrap();
        worst = worst.max((deriv - mmse).abs());
    }
    verdict("10", ok && worst <= 1e-3, format!("{}; I-MMSE max deviation {worst:.1e}", parts.join("; ")), started);
}
