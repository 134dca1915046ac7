//! Row-per-point tables over one swept parameter.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{achievable_rate, hh_bound, low_snr_rate, RateOptions};
use crate::error::{ensure, Result};
use crate::kernels::{Family, Hyperprior, Signaling};
use crate::quadrature::{QuadratureConfig, QuadratureRules};
use crate::solver::{DetectorOptions, Geometry};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    /// Bias variance, in units of `P`.
    SigmaTheta2,
    SnrDb,
    Beta,
    /// Closed-form low-SNR curve over `s`; the quantity list is ignored.
    LowSnr {
        beta_over_alpha: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    RateGaussian,
    RateQpsk,
    HhBound,
    /// Gaussian signaling with `ξ² = 0`.
    PerfectCsi,
}

impl Quantity {
    pub fn column(self) -> &'static str {
        match self {
            Quantity::RateGaussian => "rate_gauss",
            Quantity::RateQpsk => "rate_qpsk",
            Quantity::HhBound => "hh_bound",
            Quantity::PerfectCsi => "rate_perfect_csi",
        }
    }
}

/// Fixed parameters plus one swept axis. `P = 1` throughout; SNR is `P/N₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub alpha: f64,
    pub beta: f64,
    pub tau0: f64,
    pub sigma_theta2: f64,
    pub snr_db: f64,
    pub hyperprior: Hyperprior,
    /// Pilot fraction of the HH curve; `None` picks the best one.
    #[serde(default)]
    pub hh_tau0: Option<f64>,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub quantities: Vec<Quantity>,
    pub quadrature: QuadratureConfig,
    pub detector: DetectorOptions,
}

impl Default for SweepPlan {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.5,
            tau0: 0.0,
            sigma_theta2: 0.0,
            snr_db: 6.0,
            hyperprior: Hyperprior::TwoPointReal,
            hh_tau0: None,
            axis: SweepAxis::SnrDb,
            values: Vec::new(),
            quantities: vec![Quantity::RateGaussian],
            quadrature: QuadratureConfig::default(),
            detector: DetectorOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

fn axis_column(axis: SweepAxis) -> &'static str {
    match axis {
        SweepAxis::SigmaTheta2 => "sigma_theta2",
        SweepAxis::SnrDb => "snr_db",
        SweepAxis::Beta => "beta",
        SweepAxis::LowSnr { .. } => "s",
    }
}

fn signaling(gaussian: bool, s2: f64, hyperprior: Hyperprior) -> Result<Signaling> {
    let family = match (gaussian, s2 > 0.0) {
        (true, false) => Family::GaussianUnbiased,
        (true, true) => Family::GaussianBiased,
        (false, false) => Family::QpskUnbiased,
        (false, true) => Family::QpskBiased,
    };
    Signaling::new(family, 1.0, s2, hyperprior)
}

fn row(plan: &SweepPlan, rules: &QuadratureRules, value: f64) -> Result<Vec<f64>> {
    let (mut beta, mut s2, mut snr_db) = (plan.beta, plan.sigma_theta2, plan.snr_db);
    match plan.axis {
        SweepAxis::SigmaTheta2 => s2 = value,
        SweepAxis::SnrDb => snr_db = value,
        SweepAxis::Beta => beta = value,
        SweepAxis::LowSnr { beta_over_alpha } => {
            let r = low_snr_rate(beta_over_alpha, value)?;
            return Ok(vec![value, r, crate::linear_to_db(beta_over_alpha * value / r)]);
        }
    }
    let geom = Geometry::new(plan.alpha, beta, plan.tau0)?;
    let n0 = 1.0 / crate::db_to_linear(snr_db);
    let opts = RateOptions { detector: plan.detector, ..Default::default() };
    let mut out = vec![value];
    for q in &plan.quantities {
        let v = match q {
            Quantity::RateGaussian => {
                achievable_rate(&geom, &signaling(true, s2, plan.hyperprior)?, n0, rules, &opts)?.rate_bits_per_tx
            }
            Quantity::RateQpsk => {
                achievable_rate(&geom, &signaling(false, s2, plan.hyperprior)?, n0, rules, &opts)?.rate_bits_per_tx
            }
            Quantity::HhBound => hh_bound(&geom, 1.0, n0, plan.hh_tau0)?,
            Quantity::PerfectCsi => {
                let o = RateOptions { perfect_csi: true, ..opts };
                achievable_rate(&geom, &Signaling::gaussian(1.0), n0, rules, &o)?.rate_bits_per_tx
            }
        };
        out.push(v);
    }
    Ok(out)
}

/// Evaluate every row of `plan`. Rows are independent and computed in
/// parallel; output order follows `plan.values`.
pub fn sweep(plan: &SweepPlan) -> Result<Table> {
    ensure!(plan.values.iter().all(|v| v.is_finite()), InvalidDomain, "sweep values must be finite");
    let columns: Vec<String> = match plan.axis {
        SweepAxis::LowSnr { .. } => vec!["s".into(), "rate_r".into(), "eb_n0_db".into()],
        axis => std::iter::once(axis_column(axis))
            .chain(plan.quantities.iter().map(|q| q.column()))
            .map(String::from)
            .collect(),
    };
    if plan.values.is_empty() {
        return Ok(Table { columns, rows: Vec::new() });
    }
    let rules = QuadratureRules::new(plan.quadrature)?;
    let rows = plan
        .values
        .par_iter()
        .enumerate()
        .map(|(i, &v)| row(plan, &rules, v).map_err(|e| e.at(format!("row {i} ({}={v})", axis_column(plan.axis)))))
        .collect::<Result<Vec<_>>>()?;
    Ok(Table { columns, rows })
}
