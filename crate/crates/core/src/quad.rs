//! Quadrature rules on uniform grids plus Gauss nodes.

use std::ops::{Add, Mul};

use serde::{Deserialize, Serialize};

/// Uniform grid `start + i*step`, `i = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    pub start: f64,
    pub step: f64,
    pub n: usize,
}

impl UniformGrid {
    /// `n` points from `lo` to `hi` inclusive.
    pub fn spanning(lo: f64, hi: f64, n: usize) -> Self {
        assert!(n >= 2, "a grid needs at least two points");
        Self { start: lo, step: (hi - lo) / (n - 1) as f64, n }
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    pub fn end(&self) -> f64 {
        self.x(self.n - 1)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }
}

/// Composite Simpson rule. Even point counts close with a 3/8 panel.
pub fn simpson<T>(values: &[T], h: f64) -> T
where
    T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
{
    let n = values.len();
    match n {
        0 | 1 => T::default(),
        2 => (values[0] + values[1]) * (0.5 * h),
        3 => (values[0] + values[1] * 4.0 + values[2]) * (h / 3.0),
        _ => {
            let (m, tail) = if n % 2 == 1 { (n, None) } else { (n - 3, Some(n - 4)) };
            let mut acc = values[0] + values[m - 1];
            for (i, &v) in values.iter().enumerate().take(m - 1).skip(1) {
                acc = acc + v * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            let mut total = acc * (h / 3.0);
            if let Some(j) = tail {
                let w = values[j] + values[j + 1] * 3.0 + values[j + 2] * 3.0 + values[j + 3];
                total = total + w * (3.0 * h / 8.0);
            }
            total
        }
    }
}

/// Composite trapezoid rule.
pub fn trapezoid<T>(values: &[T], h: f64) -> T
where
    T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
{
    let n = values.len();
    if n < 2 {
        return T::default();
    }
    let mut acc = (values[0] + values[n - 1]) * 0.5;
    for &v in &values[1..n - 1] {
        acc = acc + v;
    }
    acc * h
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Composite Gauss–Legendre nodes over [a, b] with `panels` equal panels.
pub fn composite_gauss_legendre(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (xs, ws) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut x = Vec::with_capacity(panels * order);
    let mut w = Vec::with_capacity(panels * order);
    for k in 0..panels {
        let mid = a + (k as f64 + 0.5) * h;
        for (xi, wi) in xs.iter().zip(&ws) {
            x.push(mid + 0.5 * h * xi);
            w.push(0.5 * h * wi);
        }
    }
    (x, w)
}

/// Gauss–Chebyshev (first kind) nodes `cos((2k-1)π/2n)`; the weight is `π/n` for each.
pub fn chebyshev_nodes(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|k| ((2 * k - 1) as f64 * std::f64::consts::PI / (2 * n) as f64).cos())
        .collect()
}
