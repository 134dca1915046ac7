//! Achievable-rate lower bounds for successive-decoding receivers on
//! Rayleigh block-fading MIMO channels without channel state information.
//!
//! The crate has two halves. The large-system half evaluates scalar
//! fixed-point equations and integrates the resulting decoupled AWGN
//! mutual informations ([`solver`], [`bounds`]). The finite-size half
//! simulates the LMMSE channel estimator and the LMMSE detector with
//! successive interference cancellation ([`sim`]) so the asymptotic
//! predictions can be checked against real matrices.

pub mod bounds;
pub mod error;
pub mod kernels;
pub mod quadrature;
pub mod sim;
pub mod solver;

pub use bounds::{
    achievable_rate, hh_bound, low_snr_curve, low_snr_rate, multiplexing_gain, spectral_efficiency, sweep, LowSnrCurve,
    LowSnrPoint, RateBound, RateOptions, SweepPlan, Table,
};
pub use error::{Error, Result};
pub use kernels::{
    awgn_mmse, awgn_mutual_info, hyperprior_expect, kl_gauss, AwgnChannelSpec, Family, Hyperprior, Signaling,
    ThetaDependence,
};
pub use quadrature::{QuadratureConfig, QuadratureRules};
pub use sim::{measure_covariance, measure_mse, offdiag_scaling_study, McConfig, McResult};
pub use solver::{
    free_energy, solve_detector, solve_estimator, solve_lmmse_detector, DetectorOptions, DetectorSolution,
    EstimatorSolution, Geometry,
};

/// `10^(dB/10)`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `10·log₁₀(x)`.
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
