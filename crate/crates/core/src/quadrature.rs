//! Gauss–Hermite and Gauss–Legendre rules.
//!
//! Hermite rules use the probabilists' weight, so `Σ wᵢ f(zᵢ)` approximates
//! `E[f(Z)]` for `Z ~ N(0, 1)` and the weights sum to one. Legendre rules are
//! mapped to the unit interval with weights summing to one. Nodes are found by
//! Newton iteration on the three-term recurrences.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

/// Node counts used by the kernels and the rate integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub hermite_nodes: usize,
    pub legendre_nodes_tau: usize,
    pub legendre_nodes_mu: usize,
    /// Sample count for Monte Carlo oracles in tests.
    pub mc_oracle_samples: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { hermite_nodes: 96, legendre_nodes_tau: 32, legendre_nodes_mu: 32, mc_oracle_samples: 10_000_000 }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.hermite_nodes >= 2 && self.legendre_nodes_tau >= 2 && self.legendre_nodes_mu >= 2,
            Degenerate,
            "quadrature node counts must be at least 2, got {:?}",
            self
        );
        ensure!(self.mc_oracle_samples >= 1, Degenerate, "mc_oracle_samples must be positive");
        Ok(())
    }
}

/// A node/weight table.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// `Σ wᵢ f(xᵢ)`.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }

    /// Maps a unit-interval rule onto `[a, b]`, scaling weights by `b − a`.
    pub fn on_interval(&self, a: f64, b: f64) -> GaussRule {
        let len = b - a;
        GaussRule {
            nodes: self.nodes.iter().map(|&x| a + len * x).collect(),
            weights: self.weights.iter().map(|&w| w * len).collect(),
        }
    }
}

/// All rules needed by one rate evaluation.
#[derive(Debug, Clone)]
pub struct QuadratureRules {
    pub config: QuadratureConfig,
    pub hermite: GaussRule,
    pub legendre_tau: GaussRule,
    pub legendre_mu: GaussRule,
}

impl QuadratureRules {
    pub fn new(config: QuadratureConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            hermite: gauss_hermite(config.hermite_nodes)?,
            legendre_tau: gauss_legendre_unit(config.legendre_nodes_tau)?,
            legendre_mu: gauss_legendre_unit(config.legendre_nodes_mu)?,
        })
    }
}

impl Default for QuadratureRules {
    fn default() -> Self {
        Self::new(QuadratureConfig::default()).expect("default quadrature config is valid")
    }
}

const NEWTON_MAX_ITER: usize = 100;

/// Gauss–Hermite rule for the standard normal weight.
pub fn gauss_hermite(n: usize) -> Result<GaussRule> {
    ensure!(n >= 2, Degenerate, "Gauss-Hermite needs at least 2 nodes, got {n}");
    // Orthonormal physicists' recurrence, weight exp(-x²); converted at the end.
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let nf = n as f64;
    let m = n.div_ceil(2);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITER {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let jf = j as f64;
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        ensure!(converged, Degenerate, "Gauss-Hermite Newton iteration did not converge for n={n}");
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let mut nodes: Vec<f64> = x.iter().map(|&v| v * std::f64::consts::SQRT_2).collect();
    let mut weights: Vec<f64> = w.iter().map(|&v| v / sqrt_pi).collect();
    nodes.reverse();
    weights.reverse();
    // Newton from the asymptotic guesses can land on a neighbouring root for very large n.
    let total: f64 = weights.iter().sum();
    ensure!(
        nodes.windows(2).all(|p| p[0] < p[1]) && (total - 1.0).abs() < 1e-10,
        Degenerate,
        "Gauss-Hermite construction lost a root for n={n}"
    );
    Ok(GaussRule { nodes, weights })
}

/// Gauss–Legendre rule on `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> Result<GaussRule> {
    ensure!(n >= 2, Degenerate, "Gauss-Legendre needs at least 2 nodes, got {n}");
    let nf = n as f64;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 0.0;
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITER {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let jf = j as f64;
                let p3 = p2;
                p2 = p1;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 {
                converged = true;
                break;
            }
        }
        ensure!(converged, Degenerate, "Gauss-Legendre Newton iteration did not converge for n={n}");
        // Map [-1, 1] to [0, 1]; z is the positive root, ascending order needs the mirror first.
        let wi = 1.0 / ((1.0 - z * z) * pp * pp);
        nodes[i] = 0.5 * (1.0 - z);
        nodes[n - 1 - i] = 0.5 * (1.0 + z);
        weights[i] = wi;
        weights[n - 1 - i] = wi;
    }
    Ok(GaussRule { nodes, weights })
}
