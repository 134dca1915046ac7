use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::output::Format;

/// Comma-separated values or an inclusive `start:stop:step` range.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis(pub Vec<f64>);

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Axis(Vec::new()));
        }
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("not a number: {t:?}"));
        let values = if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            let [a, b, step] = parts[..] else {
                return Err(format!("range must be start:stop:step, got {s:?}"));
            };
            let (a, b, step) = (num(a)?, num(b)?, num(step)?);
            if !(step > 0.0 && step.is_finite() && a.is_finite() && b.is_finite()) || b < a {
                return Err(format!("range {s:?} needs start <= stop and a positive step"));
            }
            let count = ((b - a) / step + 1e-9).floor() as usize + 1;
            (0..count).map(|k| a + k as f64 * step).collect()
        } else {
            s.split(',').map(num).collect::<Result<Vec<_>, _>>()?
        };
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(format!("value {v} is not finite"));
        }
        Ok(Axis(values))
    }
}

impl Axis {
    pub fn is_sorted(&self) -> bool {
        self.0.windows(2).all(|w| w[0] < w[1])
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "sdbound",
    version,
    about = "Achievable-rate bounds and finite-size simulation for noncoherent MIMO successive decoding"
)]
pub struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, env = "SDBOUND_THREADS", default_value_t = 0)]
    pub threads: usize,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Output file (standard output when absent).
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Channel-estimation error ξ²(τ) and the two effective noise levels.
    Estimator(EstimatorArgs),
    /// Detector noise σ²(τ, μ) with every fixed-point candidate.
    Detector(DetectorArgs),
    /// Large-system achievable rate per transmit antenna.
    Rate(RateArgs),
    /// Pilot-only large-system baseline.
    Hh(HhArgs),
    /// Closed-form low-SNR limit and its E_b/N0 curve.
    Lowsnr(LowSnrArgs),
    /// High-SNR slope of the Gaussian bound.
    Gain(GainArgs),
    /// Rate table over one parameter axis.
    Sweep(SweepArgs),
    /// Monte Carlo of the LMMSE receiver against the large-system prediction.
    Simulate(SimulateArgs),
    /// Error-covariance statistics over growing system sizes.
    Offdiag(OffdiagArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SignalingKind {
    Gauss,
    Qpsk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HyperpriorArg {
    TwoPointReal,
    FixedMagnitude,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PilotArg {
    Qpsk,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Fig2,
    Fig3,
    Fig5,
    Fig6,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AxisArg {
    SigmaTheta2,
    SnrDb,
    Beta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QuantityArg {
    RateGauss,
    RateQpsk,
    Hh,
    PerfectCsi,
}

#[derive(Debug, Clone, Args)]
pub struct GeometryArgs {
    /// M/N.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// M/T_c.
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    /// T_tr/T_c.
    #[arg(long, default_value_t = 0.0)]
    pub tau0: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SignalingArgs {
    #[arg(long, value_enum, default_value_t = SignalingKind::Gauss)]
    pub signaling: SignalingKind,
    /// Symbol power P.
    #[arg(long, default_value_t = 1.0)]
    pub power: f64,
    /// Bias variance, same units as P; nonzero selects the biased family.
    #[arg(long, default_value_t = 0.0)]
    pub sigma_theta2: f64,
    #[arg(long, value_enum, default_value_t = HyperpriorArg::TwoPointReal)]
    pub hyperprior: HyperpriorArg,
}

#[derive(Debug, Clone, Args)]
pub struct QuadratureArgs {
    #[arg(long, default_value_t = 96)]
    pub hermite_nodes: usize,
    #[arg(long, default_value_t = 32)]
    pub tau_nodes: usize,
    #[arg(long, default_value_t = 32)]
    pub mu_nodes: usize,
    /// Scan density of the multi-solution detector search.
    #[arg(long, default_value_t = 400)]
    pub scan_points: usize,
}

#[derive(Debug, Clone, Args)]
pub struct EstimatorArgs {
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[command(flatten)]
    pub signaling: SignalingArgs,
    #[arg(long, default_value = "6")]
    pub snr_db: Axis,
    /// Stage positions τ = t/T_c.
    #[arg(long, default_value = "0.25,0.5,0.75,1")]
    pub tau: Axis,
}

#[derive(Debug, Clone, Args)]
pub struct DetectorArgs {
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[command(flatten)]
    pub signaling: SignalingArgs,
    #[command(flatten)]
    pub quadrature: QuadratureArgs,
    #[arg(long, default_value = "6")]
    pub snr_db: Axis,
    #[arg(long, default_value = "0.5")]
    pub tau: Axis,
    /// Substage positions μ = m/M.
    #[arg(long, default_value = "0,0.5,1")]
    pub mu: Axis,
}

#[derive(Debug, Clone, Args)]
pub struct RateArgs {
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[command(flatten)]
    pub signaling: SignalingArgs,
    #[command(flatten)]
    pub quadrature: QuadratureArgs,
    #[arg(long, default_value = "6")]
    pub snr_db: Axis,
    /// Force ξ² = 0 (genie channel knowledge).
    #[arg(long)]
    pub perfect_csi: bool,
}

#[derive(Debug, Clone, Args)]
pub struct HhArgs {
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub power: f64,
    #[arg(long, default_value = "0:12:1")]
    pub snr_db: Axis,
    /// Pilot fraction; the rate-maximizing one in [β, 1) when absent.
    #[arg(long)]
    pub hh_tau0: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct LowSnrArgs {
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// One curve per value.
    #[arg(long)]
    pub beta_over_alpha: Option<Axis>,
    #[arg(long)]
    pub s_min: Option<f64>,
    #[arg(long)]
    pub s_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct GainArgs {
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[arg(long, default_value_t = 1.0)]
    pub power: f64,
    #[command(flatten)]
    pub quadrature: QuadratureArgs,
    /// Two SNR points in dB.
    #[arg(long, default_value = "40,60")]
    pub snr_pair: Axis,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long, value_enum)]
    pub axis: Option<AxisArg>,
    #[arg(long)]
    pub values: Option<Axis>,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub quantities: Option<Vec<QuantityArg>>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// One table block per value (ignored by the beta axis).
    #[arg(long)]
    pub beta: Option<Axis>,
    #[arg(long)]
    pub tau0: Option<f64>,
    /// Fixed SNR for the non-SNR axes.
    #[arg(long)]
    pub snr_db: Option<f64>,
    /// Fixed bias variance (P = 1) for the non-bias axes.
    #[arg(long)]
    pub sigma_theta2: Option<f64>,
    #[arg(long, value_enum, default_value_t = HyperpriorArg::TwoPointReal)]
    pub hyperprior: HyperpriorArg,
    #[arg(long)]
    pub hh_tau0: Option<f64>,
    #[command(flatten)]
    pub quadrature: QuadratureArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub tc: Option<usize>,
    /// Pilot columns; defaults to M.
    #[arg(long)]
    pub ttr: Option<usize>,
    /// Stage indices (1-based), one block of rows each.
    #[arg(long)]
    pub t: Option<Axis>,
    #[arg(long)]
    pub substage: Option<usize>,
    #[arg(long, value_enum)]
    pub signaling: Option<SignalingKind>,
    #[arg(long)]
    pub sigma_theta2: Option<f64>,
    #[arg(long, value_enum)]
    pub pilots: Option<PilotArg>,
    #[arg(long)]
    pub snr_db: Option<Axis>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct OffdiagArgs {
    /// Transmit-antenna counts; the first is the base configuration.
    #[arg(long, default_value = "4,8,16,32")]
    pub sizes: Axis,
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[arg(long, default_value_t = 64)]
    pub tc: usize,
    #[arg(long)]
    pub ttr: Option<usize>,
    #[arg(long, default_value_t = 9)]
    pub t: usize,
    #[arg(long, default_value_t = 1)]
    pub substage: usize,
    #[arg(long, value_enum, default_value_t = SignalingKind::Gauss)]
    pub signaling: SignalingKind,
    #[arg(long, value_enum, default_value_t = PilotArg::Gaussian)]
    pub pilots: PilotArg,
    #[arg(long, default_value_t = 0.0)]
    pub snr_db: f64,
    #[arg(long, default_value_t = 2000)]
    pub trials: usize,
    #[arg(long, default_value_t = 3)]
    pub seed: u64,
}
