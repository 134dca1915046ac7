//! Finite-size LMMSE channel estimator and SIC LMMSE detector.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;

use super::{BlockState, McConfig};
use crate::error::{ensure, Error, Result};

/// Estimate of `H` at stage `t` and its normalized error covariance `Ξ_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub h_hat: DMatrix<Complex64>,
    pub xi: DMatrix<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub x_hat: Complex64,
    pub posterior_var: f64,
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn cholesky(a: DMatrix<Complex64>, what: &str) -> Result<Cholesky<Complex64, Dyn>> {
    Cholesky::new(a).ok_or_else(|| Error::Singular(format!("{what} is not positive definite")))
}

/// Uses the known symbols of columns `t' < t` and the known biases of
/// columns `t' > t`, each with the received column `y_{t'}`.
pub fn lmmse_channel_estimate(block: &BlockState, cfg: &McConfig) -> Result<ChannelEstimate> {
    ensure!(cfg.n0 > 0.0, InvalidDomain, "channel estimation needs N0 > 0, got {}", cfg.n0);
    let (m, n, t) = (cfg.m, cfg.n, cfg.stage_t - 1);
    let mf = m as f64;
    let p = cfg.signaling.power;
    // Weighted Gram matrix and cross-correlation, accumulated together.
    let mut gram = DMatrix::<Complex64>::zeros(m, m);
    let mut cross = DMatrix::<Complex64>::zeros(n, m);
    let past = block.x.columns(0, t);
    gram.gemm(c(1.0 / cfg.n0), &past, &past.adjoint(), c(0.0));
    cross.gemm(c(1.0 / cfg.n0), &block.y.columns(0, t), &past.adjoint(), c(0.0));
    for k in t + 1..cfg.tc {
        let th = block.theta.column(k);
        let s2 = th.norm_squared() / mf;
        if s2 == 0.0 {
            continue;
        }
        let w = c(1.0 / (p - s2 + cfg.n0));
        gram.gerc(w, &th, &th, c(1.0));
        cross.gerc(w, &block.y.column(k), &th, c(1.0));
    }
    let mut a = gram / c(mf);
    for i in 0..m {
        a[(i, i)] += c(1.0);
    }
    let xi = cholesky(a, "I + Gram/M")?.inverse();
    let xi = (&xi + xi.adjoint()) * c(0.5);
    let h_hat = cross * &xi / c(mf.sqrt());
    Ok(ChannelEstimate { h_hat, xi })
}

/// LMMSE estimate of `x_{m,t}` after cancelling streams `1..m−1`.
pub fn lmmse_detect(block: &BlockState, est: &ChannelEstimate, cfg: &McConfig) -> Result<Detection> {
    let (m, t, k) = (cfg.m, cfg.stage_t - 1, cfg.substage_m - 1);
    let mf = m as f64;
    let p = cfg.signaling.power;
    let x_t = block.x.column(t);
    let th_t = block.theta.column(t);
    let zeta = (0..m)
        .map(|i| {
            let w = if i < k { x_t[i].norm_sqr() } else { p };
            w * est.xi[(i, i)].re
        })
        .sum::<f64>()
        / mf;
    let mut y_res = block.y.column(t).into_owned();
    if k > 0 {
        y_res -= est.h_hat.columns(0, k) * x_t.rows(0, k) / c(mf.sqrt());
    }
    let h2 = est.h_hat.columns(k, m - k);
    let noise = cfg.n0 + zeta;
    let mut g = h2.adjoint() * h2 / c(mf * noise);
    let mut rhs: DVector<Complex64> = h2.adjoint() * &y_res / c(mf.sqrt() * noise);
    for i in 0..m - k {
        let v = p - th_t[k + i].norm_sqr();
        ensure!(v > 0.0, Singular, "prior covariance of stream {} is singular", k + i + 1);
        g[(i, i)] += c(1.0 / v);
        rhs[i] += th_t[k + i] / v;
    }
    let chol = cholesky(g, "detector precision")?;
    let x_hat = chol.solve(&rhs)[0];
    let mut e0 = DVector::<Complex64>::zeros(m - k);
    e0[0] = c(1.0);
    let posterior_var = chol.solve(&e0)[0].re;
    Ok(Detection { x_hat, posterior_var })
}

/// Hermitian to `tol` with every eigenvalue in `(0, 1 + tol]`.
pub fn check_error_covariance(xi: &DMatrix<Complex64>, tol: f64) -> Result<()> {
    let asym = (xi - xi.adjoint()).iter().fold(0.0f64, |m, z| m.max(z.norm()));
    ensure!(asym <= tol, Singular, "error covariance is not Hermitian (deviation {asym})");
    let eig = nalgebra::SymmetricEigen::new(xi.clone()).eigenvalues;
    for &l in eig.iter() {
        ensure!(l > 0.0 && l <= 1.0 + tol, Singular, "error covariance eigenvalue {l} outside (0, 1]");
    }
    Ok(())
}
