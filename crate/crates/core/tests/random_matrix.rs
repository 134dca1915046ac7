//! Large-system spectral efficiency against finite random matrices.

use nalgebra::{Cholesky, DMatrix};
use sdbound::sim::{complex_normal, trial_rng};
use sdbound::spectral_efficiency;

/// `(1/N) log₂ det(I + (x/M) H Hᴴ)` for one `N × M` draw, through the real
/// `2N × 2M` embedding of `H`.
fn log_det_rate(n: usize, m: usize, x: f64, trial: u64) -> f64 {
    let mut rng = trial_rng(2024, trial);
    let h: Vec<_> = (0..n * m).map(|_| complex_normal(&mut rng)).collect();
    let real = DMatrix::<f64>::from_fn(2 * n, 2 * m, |i, j| {
        let v = h[(i % n) * m + j % m];
        match (i < n, j < m) {
            (true, true) | (false, false) => v.re,
            (true, false) => -v.im,
            (false, true) => v.im,
        }
    });
    let mut g = DMatrix::<f64>::identity(2 * n, 2 * n);
    g.gemm(x / m as f64, &real, &real.transpose(), 1.0);
    let l = Cholesky::new(g).expect("I + PSD").l();
    // The embedding squares the determinant: Σ ln L_ii = ln det of the complex form.
    l.diagonal().iter().map(|d| d.ln()).sum::<f64>() / n as f64 / std::f64::consts::LN_2
}

#[test]
fn square_channel_log_det_matches_limit() {
    let (n, m, x, trials) = (512, 512, 1.0, 200);
    let mc = (0..trials).map(|k| log_det_rate(n, m, x, k)).sum::<f64>() / trials as f64;
    let limit = spectral_efficiency(1.0, x);
    assert!((mc / limit - 1.0).abs() < 0.01, "{mc} vs {limit}");
}

#[test]
fn small_embedding_matches_complex_determinant() {
    let (n, m, x) = (3, 2, 2.0);
    let mut rng = trial_rng(2024, 7);
    let draws: Vec<_> = (0..n * m).map(|_| complex_normal(&mut rng)).collect();
    let h = DMatrix::from_row_slice(n, m, &draws);
    let g = DMatrix::identity(n, n) + &h * h.adjoint() * num_complex::Complex64::new(x / m as f64, 0.0);
    let direct = Cholesky::new(g).unwrap().l().diagonal().iter().map(|d| 2.0 * d.re.ln()).sum::<f64>()
        / n as f64
        / std::f64::consts::LN_2;
    assert!((log_det_rate(n, m, x, 7) - direct).abs() < 1e-12);
}
