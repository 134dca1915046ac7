//! Monotone (Fritsch–Carlson) cubic interpolation and dB-gap readout.

use crate::error::{ensure, Result};

#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    /// `xs` strictly increasing, `ys` monotone.
    pub fn new(xs: &[f64], ys: &[f64]) -> Result<Self> {
        ensure!(xs.len() == ys.len() && xs.len() >= 2, InvalidDomain, "need at least two matching points");
        ensure!(xs.windows(2).all(|w| w[0] < w[1]), InvalidDomain, "abscissae must increase");
        let n = xs.len();
        let d: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])).collect();
        let mut m = vec![0.0; n];
        m[0] = d[0];
        m[n - 1] = d[n - 2];
        for i in 1..n - 1 {
            m[i] = if d[i - 1] * d[i] <= 0.0 { 0.0 } else { (d[i - 1] + d[i]) / 2.0 };
        }
        for i in 0..n - 1 {
            if d[i] == 0.0 {
                m[i] = 0.0;
                m[i + 1] = 0.0;
                continue;
            }
            let a = m[i] / d[i];
            let b = m[i + 1] / d[i];
            let r = a * a + b * b;
            if r > 9.0 {
                let t = 3.0 / r.sqrt();
                m[i] = t * a * d[i];
                m[i + 1] = t * b * d[i];
            }
        }
        Ok(Self { xs: xs.to_vec(), ys: ys.to_vec(), slopes: m })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let i = match self.xs.partition_point(|&v| v <= x) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.ys[i]
            + (t3 - 2.0 * t2 + t) * h * self.slopes[i]
            + (-2.0 * t3 + 3.0 * t2) * self.ys[i + 1]
            + (t3 - t2) * h * self.slopes[i + 1]
    }

    /// Solve `f(x) = y` within the data range, or `None` if `y` is outside it.
    pub fn inverse(&self, y: f64) -> Option<f64> {
        let n = self.xs.len();
        let increasing = self.ys[n - 1] >= self.ys[0];
        let (lo_y, hi_y) = if increasing { (self.ys[0], self.ys[n - 1]) } else { (self.ys[n - 1], self.ys[0]) };
        if !(lo_y..=hi_y).contains(&y) {
            return None;
        }
        let seg = (0..n - 1).find(|&i| {
            let (a, b) = (self.ys[i], self.ys[i + 1]);
            a.min(b) <= y && y <= a.max(b)
        })?;
        let (mut lo, mut hi) = (self.xs[seg], self.xs[seg + 1]);
        let sign = if increasing { 1.0 } else { -1.0 };
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if sign * (self.eval(mid) - y) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }
}

/// Horizontal distance in dB from curve `upper` to curve `lower`: for each
/// `snr` in `at_db`, the extra SNR `lower` needs to reach `upper(snr)`.
/// Points whose target rate falls outside the `lower` data are skipped.
pub fn horizontal_gap_db(snr_db: &[f64], upper: &[f64], lower: &[f64], at_db: &[f64]) -> Result<Vec<(f64, f64)>> {
    let up = MonotoneCubic::new(snr_db, upper)?;
    let lo = MonotoneCubic::new(snr_db, lower)?;
    Ok(at_db
        .iter()
        .filter_map(|&x| {
            let target = up.eval(x);
            lo.inverse(target).map(|x_lo| (x, x_lo - x))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_data_and_lines() {
        let xs = [0.0, 1.0, 2.0, 4.0];
        let ys = [1.0, 3.0, 5.0, 9.0];
        let c = MonotoneCubic::new(&xs, &ys).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((c.eval(*x) - y).abs() < 1e-14);
        }
        assert!((c.eval(3.0) - 7.0).abs() < 1e-12);
        assert!((c.inverse(6.0).unwrap() - 2.5).abs() < 1e-10);
        assert!(c.inverse(10.0).is_none());
    }

    #[test]
    fn stays_monotone_on_steps() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let ys = [0.0, 0.0, 1.0, 1.0, 1.0];
        let c = MonotoneCubic::new(&xs, &ys).unwrap();
        let mut prev = -1.0;
        for k in 0..=400 {
            let v = c.eval(k as f64 / 100.0);
            assert!(v >= prev - 1e-15 && (-1e-15..=1.0 + 1e-15).contains(&v));
            prev = v;
        }
    }

    #[test]
    fn shifted_curve_gap() {
        let xs: Vec<f64> = (0..=12).map(f64::from).collect();
        let f = |x: f64| (1.0 + 10f64.powf(x / 10.0)).log2();
        let upper: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        let lower: Vec<f64> = xs.iter().map(|&x| f(x - 1.5)).collect();
        let gaps = horizontal_gap_db(&xs, &upper, &lower, &[2.0, 6.0, 10.0]).unwrap();
        assert_eq!(gaps.len(), 3);
        for (_, g) in gaps {
            assert!((g - 1.5).abs() < 5e-3, "gap={g}");
        }
    }
}
