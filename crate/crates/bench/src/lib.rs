//! Shared fixtures for the benchmarks.

use sdbound::sim::McConfig;
use sdbound::{Geometry, QuadratureConfig, QuadratureRules, Signaling};

/// Unit-load geometry used across the benchmarks.
pub fn unit_load(beta: f64) -> Geometry {
    Geometry::new(1.0, beta, 0.0).expect("valid geometry")
}

/// Quadrature with `n` Gauss–Legendre nodes per axis.
pub fn rules(n: usize) -> QuadratureRules {
    QuadratureRules::new(QuadratureConfig { legendre_nodes_tau: n, legendre_nodes_mu: n, ..Default::default() })
        .expect("valid quadrature")
}

/// The M = N = 8 simulator setting at 6 dB with `trials` trials.
pub fn small_mc(trials: usize) -> McConfig {
    McConfig { signaling: Signaling::qpsk(1.0), n0: 10f64.powf(-0.6), trials, seed: 1, ..McConfig::default() }
}
