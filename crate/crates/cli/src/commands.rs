//! One function per subcommand: resolve the plan, run it, fill a report.

use serde_json::json;

use sdbound::bounds::{self, optimal_training, Quantity, SweepAxis};
use sdbound::sim::PilotConstellation;
use sdbound::solver::DetectorScan;
use sdbound::{
    achievable_rate, db_to_linear, hh_bound, low_snr_curve, measure_mse, multiplexing_gain, offdiag_scaling_study,
    solve_detector, solve_estimator, sweep, DetectorOptions, Family, Geometry, Hyperprior, LowSnrPoint, McConfig,
    QuadratureConfig, QuadratureRules, RateOptions, Signaling, SweepPlan,
};

use crate::args::*;
use crate::output::{Cell, Report};
use crate::CliError;

type Out = Result<Report, CliError>;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn sorted_snr(axis: &Axis, flag: &str) -> Result<Vec<f64>, CliError> {
    if axis.0.is_empty() {
        return Err(invalid(format!("--{flag} is empty")));
    }
    if !axis.is_sorted() {
        return Err(invalid(format!("--{flag} must be strictly increasing")));
    }
    Ok(axis.0.clone())
}

fn nonempty(axis: &Axis, flag: &str) -> Result<Vec<f64>, CliError> {
    if axis.0.is_empty() {
        return Err(invalid(format!("--{flag} is empty")));
    }
    Ok(axis.0.clone())
}

fn hyperprior(h: HyperpriorArg) -> Hyperprior {
    match h {
        HyperpriorArg::TwoPointReal => Hyperprior::TwoPointReal,
        HyperpriorArg::FixedMagnitude => Hyperprior::FixedMagnitude,
    }
}

fn family(kind: SignalingKind, s2: f64) -> Family {
    match (kind, s2 > 0.0) {
        (SignalingKind::Gauss, false) => Family::GaussianUnbiased,
        (SignalingKind::Gauss, true) => Family::GaussianBiased,
        (SignalingKind::Qpsk, false) => Family::QpskUnbiased,
        (SignalingKind::Qpsk, true) => Family::QpskBiased,
    }
}

fn signaling(a: &SignalingArgs) -> Result<Signaling, CliError> {
    Ok(Signaling::new(family(a.signaling, a.sigma_theta2), a.power, a.sigma_theta2, hyperprior(a.hyperprior))?)
}

fn geometry(a: &GeometryArgs) -> Result<Geometry, CliError> {
    Ok(Geometry::new(a.alpha, a.beta, a.tau0)?)
}

fn quadrature(q: &QuadratureArgs) -> (QuadratureConfig, DetectorOptions) {
    let config = QuadratureConfig {
        hermite_nodes: q.hermite_nodes,
        legendre_nodes_tau: q.tau_nodes,
        legendre_nodes_mu: q.mu_nodes,
        ..QuadratureConfig::default()
    };
    (config, DetectorOptions { scan_points: q.scan_points, ..DetectorOptions::default() })
}

fn preset_name(p: Preset) -> String {
    format!("{p:?}").to_lowercase()
}

fn n0(power: f64, snr_db: f64) -> f64 {
    power / db_to_linear(snr_db)
}

pub fn estimator(a: &EstimatorArgs) -> Out {
    let geom = geometry(&a.geometry)?;
    let sig = signaling(&a.signaling)?;
    let snrs = sorted_snr(&a.snr_db, "snr-db")?;
    let taus = nonempty(&a.tau, "tau")?;
    let cfg = json!({ "geometry": geom, "signaling": sig, "snr_db": snrs, "tau": taus });
    let mut r = Report::new("estimator", cfg, vec!["snr_db", "tau", "xi2", "sigma_tr2", "sigma_c2"]);
    for &snr in &snrs {
        for &tau in &taus {
            let e = solve_estimator(&geom, &sig, n0(sig.power, snr), tau)?;
            r.push(vec![snr.into(), tau.into(), e.xi2.into(), e.sigma_tr2.into(), e.sigma_c2.into()]);
        }
    }
    Ok(r)
}

pub fn detector(a: &DetectorArgs) -> Out {
    let geom = geometry(&a.geometry)?;
    let sig = signaling(&a.signaling)?;
    let (quad, opts) = quadrature(&a.quadrature);
    let rules = QuadratureRules::new(quad)?;
    let snrs = sorted_snr(&a.snr_db, "snr-db")?;
    let taus = nonempty(&a.tau, "tau")?;
    let mus = nonempty(&a.mu, "mu")?;
    let cfg = json!({
        "geometry": geom, "signaling": sig, "snr_db": snrs, "tau": taus, "mu": mus,
        "hermite_nodes": quad.hermite_nodes, "detector": opts,
    });
    let mut r = Report::new("detector", cfg, vec!["snr_db", "tau", "mu", "xi2", "sigma2", "free_energy", "candidates"]);
    for &snr in &snrs {
        let n0 = n0(sig.power, snr);
        for &tau in &taus {
            let est = solve_estimator(&geom, &sig, n0, tau)?;
            let scan = if sig.family.is_gaussian() {
                None
            } else {
                Some(DetectorScan::new(&geom, &sig, n0, &est, &opts, &rules.hermite)?)
            };
            for &mu in &mus {
                let det = match &scan {
                    Some(s) => s.solve(mu)?,
                    None => solve_detector(&geom, &sig, n0, &est, mu, &opts, &rules.hermite)?,
                };
                r.push(vec![
                    snr.into(),
                    tau.into(),
                    mu.into(),
                    est.xi2.into(),
                    det.sigma2.into(),
                    det.selected().free_energy.into(),
                    det.candidates.len().into(),
                ]);
            }
        }
    }
    Ok(r)
}

pub fn rate(a: &RateArgs) -> Out {
    let geom = geometry(&a.geometry)?;
    let sig = signaling(&a.signaling)?;
    let (quad, detector) = quadrature(&a.quadrature);
    let rules = QuadratureRules::new(quad)?;
    let snrs = sorted_snr(&a.snr_db, "snr-db")?;
    let opts = RateOptions { detector, perfect_csi: a.perfect_csi, keep_samples: false };
    let cfg = json!({
        "geometry": geom, "signaling": sig, "snr_db": snrs, "quadrature": quad,
        "detector": detector, "perfect_csi": a.perfect_csi,
    });
    let mut r = Report::new("rate", cfg, vec!["snr_db", "rate_bits_per_tx"]);
    for &snr in &snrs {
        let b = achievable_rate(&geom, &sig, n0(sig.power, snr), &rules, &opts)?;
        r.push(vec![snr.into(), b.rate_bits_per_tx.into()]);
    }
    Ok(r)
}

pub fn hh(a: &HhArgs) -> Out {
    let geom = Geometry::new(a.alpha, a.beta, 0.0)?;
    let snrs = sorted_snr(&a.snr_db, "snr-db")?;
    let cfg = json!({ "alpha": a.alpha, "beta": a.beta, "power": a.power, "snr_db": snrs, "hh_tau0": a.hh_tau0 });
    let mut r = Report::new("hh", cfg, vec!["snr_db", "tau0", "rate_bits_per_tx"]);
    for &snr in &snrs {
        let n0 = n0(a.power, snr);
        let (t, v) = match a.hh_tau0 {
            Some(t) => (t, hh_bound(&geom, a.power, n0, Some(t))?),
            None => optimal_training(&geom, a.power, n0)?,
        };
        r.push(vec![snr.into(), t.into(), v.into()]);
    }
    Ok(r)
}

pub fn lowsnr(a: &LowSnrArgs) -> Out {
    let preset_ratios = match a.preset {
        None => None,
        Some(Preset::Fig5) => Some(vec![0.1, 0.5]),
        Some(p) => return Err(invalid(format!("preset {} is not a lowsnr preset (use fig5)", preset_name(p)))),
    };
    let ratios = match &a.beta_over_alpha {
        Some(axis) => nonempty(axis, "beta-over-alpha")?,
        None => preset_ratios.unwrap_or_else(|| vec![1.0]),
    };
    let (lo, hi, n) = (a.s_min.unwrap_or(1e-3), a.s_max.unwrap_or(10.0), a.points.unwrap_or(200));
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(invalid(format!("need 0 < s-min < s-max, got {lo} and {hi}")));
    }
    if n < 2 {
        return Err(invalid("--points must be at least 2"));
    }
    let grid = bounds::log_grid(lo, hi, n);
    let cfg = json!({ "preset": a.preset.map(preset_name), "beta_over_alpha": ratios, "s_min": lo, "s_max": hi, "points": n });
    let mut r = Report::new("lowsnr", cfg, vec!["kind", "beta_over_alpha", "s", "rate_r", "eb_n0_db"]);
    for &k in &ratios {
        let curve = low_snr_curve(k, &grid)?;
        let row =
            |kind: &str, p: &LowSnrPoint| vec![kind.into(), k.into(), p.s.into(), p.rate_r.into(), p.eb_n0_db.into()];
        for p in &curve.points {
            r.push(row("point", p));
        }
        r.push(row("argmin", curve.minimum()));
    }
    Ok(r)
}

pub fn gain(a: &GainArgs) -> Out {
    let geom = geometry(&a.geometry)?;
    let (quad, _) = quadrature(&a.quadrature);
    let rules = QuadratureRules::new(quad)?;
    let [lo, hi] = a.snr_pair.0[..] else {
        return Err(invalid("--snr-pair needs exactly two values"));
    };
    let sig = Signaling::gaussian(a.power);
    let cfg = json!({ "geometry": geom, "power": a.power, "snr_pair_db": [lo, hi], "quadrature": quad });
    let slope = multiplexing_gain(&geom, &sig, (lo, hi), &rules)?;
    let mut r = Report::new("gain", cfg, vec!["alpha", "beta", "snr_lo_db", "snr_hi_db", "slope", "full_gain"]);
    r.push(vec![geom.alpha.into(), geom.beta.into(), lo.into(), hi.into(), slope.into(), (1.0 - geom.beta).into()]);
    Ok(r)
}

struct SweepPreset {
    axis: AxisArg,
    values: Vec<f64>,
    betas: Vec<f64>,
    quantities: Vec<QuantityArg>,
}

fn sweep_preset(p: Preset) -> Result<SweepPreset, CliError> {
    Ok(match p {
        // Bias variance 0..0.5P at 6 dB.
        Preset::Fig2 => SweepPreset {
            axis: AxisArg::SigmaTheta2,
            values: (0..=10).map(|k| 0.05 * k as f64).collect(),
            betas: vec![0.1, 0.5],
            quantities: vec![QuantityArg::RateGauss, QuantityArg::RateQpsk],
        },
        Preset::Fig3 => SweepPreset {
            axis: AxisArg::SnrDb,
            values: (0..=12).map(f64::from).collect(),
            betas: vec![0.1, 0.5],
            quantities: vec![QuantityArg::RateGauss, QuantityArg::RateQpsk, QuantityArg::Hh],
        },
        other => {
            return Err(invalid(format!("preset {} is not a sweep preset (use fig2 or fig3)", preset_name(other))));
        }
    })
}

pub fn sweep_cmd(a: &SweepArgs) -> Out {
    let preset = a.preset.map(sweep_preset).transpose()?;
    let axis = a.axis.or(preset.as_ref().map(|p| p.axis)).unwrap_or(AxisArg::SnrDb);
    let values = match (&a.values, &preset) {
        (Some(v), _) => v.0.clone(),
        (None, Some(p)) => p.values.clone(),
        (None, None) => return Err(invalid("--values is required without --preset")),
    };
    if axis == AxisArg::SnrDb && !Axis(values.clone()).is_sorted() {
        return Err(invalid("--values must be strictly increasing on the snr-db axis"));
    }
    let betas = match (&a.beta, &preset) {
        (Some(b), _) => nonempty(b, "beta")?,
        (None, Some(p)) => p.betas.clone(),
        (None, None) => vec![0.5],
    };
    let quantities: Vec<Quantity> = a
        .quantities
        .clone()
        .or(preset.as_ref().map(|p| p.quantities.clone()))
        .unwrap_or_else(|| vec![QuantityArg::RateGauss])
        .into_iter()
        .map(|q| match q {
            QuantityArg::RateGauss => Quantity::RateGaussian,
            QuantityArg::RateQpsk => Quantity::RateQpsk,
            QuantityArg::Hh => Quantity::HhBound,
            QuantityArg::PerfectCsi => Quantity::PerfectCsi,
        })
        .collect();
    let (quadrature, detector) = quadrature(&a.quadrature);
    let base = SweepPlan {
        alpha: a.alpha.unwrap_or(1.0),
        beta: betas[0],
        tau0: a.tau0.unwrap_or(0.0),
        sigma_theta2: a.sigma_theta2.unwrap_or(0.0),
        snr_db: a.snr_db.unwrap_or(6.0),
        hyperprior: hyperprior(a.hyperprior),
        hh_tau0: a.hh_tau0,
        axis: match axis {
            AxisArg::SigmaTheta2 => SweepAxis::SigmaTheta2,
            AxisArg::SnrDb => SweepAxis::SnrDb,
            AxisArg::Beta => SweepAxis::Beta,
        },
        values,
        quantities,
        quadrature,
        detector,
    };
    // The beta axis carries β itself, so there is one block only.
    let blocks: Vec<f64> = if axis == AxisArg::Beta { vec![base.beta] } else { betas };
    let plans: Vec<SweepPlan> = blocks.iter().map(|&beta| SweepPlan { beta, ..base.clone() }).collect();
    let cfg = json!({ "preset": a.preset.map(preset_name), "plans": plans });
    // The beta axis already carries β; other axes get a leading β column.
    let prefix = axis != AxisArg::Beta;
    let mut columns: Vec<&'static str> = if prefix { vec!["beta"] } else { Vec::new() };
    columns.push(match axis {
        AxisArg::SigmaTheta2 => "sigma_theta2",
        AxisArg::SnrDb => "snr_db",
        AxisArg::Beta => "beta",
    });
    columns.extend(base.quantities.iter().map(|q| q.column()));
    let mut r = Report::new("sweep", cfg, columns);
    for plan in &plans {
        for row in sweep(plan)?.rows {
            let lead = prefix.then(|| Cell::from(plan.beta));
            r.push(lead.into_iter().chain(row.into_iter().map(Cell::from)).collect());
        }
    }
    Ok(r)
}

fn pilots(p: PilotArg) -> PilotConstellation {
    match p {
        PilotArg::Qpsk => PilotConstellation::Qpsk,
        PilotArg::Gaussian => PilotConstellation::Gaussian,
    }
}

fn stages(axis: &Axis) -> Result<Vec<usize>, CliError> {
    axis.0
        .iter()
        .map(|&t| {
            if t >= 1.0 && t.fract() == 0.0 {
                Ok(t as usize)
            } else {
                Err(invalid(format!("stage index {t} is not a positive integer")))
            }
        })
        .collect()
}

pub fn simulate(a: &SimulateArgs) -> Out {
    let fig6 = match a.preset {
        None => false,
        Some(Preset::Fig6) => true,
        Some(p) => return Err(invalid(format!("preset {} is not a simulate preset (use fig6)", preset_name(p)))),
    };
    let m = a.m.unwrap_or(8);
    let t_axis = a.t.clone().unwrap_or_else(|| Axis(if fig6 { vec![17.0, 81.0] } else { vec![17.0] }));
    let ts = stages(&t_axis)?;
    let snrs =
        sorted_snr(&a.snr_db.clone().unwrap_or_else(|| Axis((0..=4).map(|k| 3.0 * k as f64).collect())), "snr-db")?;
    let kind = a.signaling.unwrap_or(SignalingKind::Qpsk);
    let s2 = a.sigma_theta2.unwrap_or(0.0);
    let base = McConfig {
        m,
        n: a.n.unwrap_or(8),
        tc: a.tc.unwrap_or(128),
        ttr: a.ttr.unwrap_or(m),
        stage_t: ts.first().copied().unwrap_or(1),
        substage_m: a.substage.unwrap_or(3),
        signaling: Signaling::new(family(kind, s2), 1.0, s2, Hyperprior::TwoPointReal)?,
        pilots: pilots(a.pilots.unwrap_or(PilotArg::Qpsk)),
        n0: 1.0,
        trials: a.trials.unwrap_or(if fig6 { 5000 } else { 2000 }),
        seed: a.seed.unwrap_or(7),
    };
    let cfg = json!({ "preset": a.preset.map(preset_name), "base": base, "t": ts, "snr_db": snrs });
    let mut r = Report::new(
        "simulate",
        cfg,
        vec![
            "t",
            "snr_db",
            "trials",
            "nmse",
            "nmse_stderr",
            "nmse_pred",
            "xi2",
            "xi2_stderr",
            "xi2_pred",
            "offdiag_abs_mean",
            "offdiag_abs_stderr",
            "offdiag_scaled",
        ],
    );
    for &t in &ts {
        for &snr in &snrs {
            let c = McConfig { stage_t: t, n0: 1.0 / db_to_linear(snr), ..base };
            let res = measure_mse(&c)?;
            let mse = res.normalized_mse.expect("detection requested");
            let pred = res.prediction.expect("prediction computed");
            r.push(vec![
                t.into(),
                snr.into(),
                res.trials.into(),
                mse.mean.into(),
                mse.stderr.into(),
                pred.normalized_mse.into(),
                res.xi2_empirical.mean.into(),
                res.xi2_empirical.stderr.into(),
                pred.xi2.into(),
                res.offdiag_abs_mean.mean.into(),
                res.offdiag_abs_mean.stderr.into(),
                res.offdiag_scaled.mean.into(),
            ]);
        }
    }
    Ok(r)
}

pub fn offdiag(a: &OffdiagArgs) -> Out {
    let sizes = stages(&a.sizes)?;
    if sizes.len() < 2 {
        return Err(invalid("--sizes needs at least two values"));
    }
    let m = sizes[0];
    let base = McConfig {
        m,
        n: a.n,
        tc: a.tc,
        ttr: a.ttr.unwrap_or(m),
        stage_t: a.t,
        substage_m: a.substage,
        signaling: Signaling::new(family(a.signaling, 0.0), 1.0, 0.0, Hyperprior::TwoPointReal)?,
        pilots: pilots(a.pilots),
        n0: 1.0 / db_to_linear(a.snr_db),
        trials: a.trials,
        seed: a.seed,
    };
    let cfg = json!({ "base": base, "sizes": sizes });
    let study = offdiag_scaling_study(&base, &sizes)?;
    let mut r = Report::new(
        "offdiag",
        cfg,
        vec![
            "kind",
            "m",
            "xi2",
            "xi2_stderr",
            "xi2_pred",
            "offdiag_abs_mean",
            "offdiag_abs_stderr",
            "offdiag_scaled",
            "offdiag_scaled_stderr",
            "offdiag_mean_magnitude",
            "log_slope",
        ],
    );
    for row in &study.rows {
        let res = &row.result;
        r.push(vec![
            "size".into(),
            row.m.into(),
            res.xi2_empirical.mean.into(),
            res.xi2_empirical.stderr.into(),
            res.prediction.map_or(Cell::Empty, |p| p.xi2.into()),
            res.offdiag_abs_mean.mean.into(),
            res.offdiag_abs_mean.stderr.into(),
            res.offdiag_scaled.mean.into(),
            res.offdiag_scaled.stderr.into(),
            res.offdiag_mean_magnitude.into(),
            Cell::Empty,
        ]);
    }
    let mut fit = vec![Cell::Empty; 11];
    fit[0] = "fit".into();
    fit[10] = study.log_slope.into();
    r.push(fit);
    Ok(r)
}
