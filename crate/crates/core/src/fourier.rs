//! Angular discrete Fourier transform on the rings of a polar grid.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::geometry::PolarGrid;

#[derive(Clone)]
pub struct AngularFft {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for AngularFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AngularFft").field("n", &self.n).finish()
    }
}

impl AngularFft {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { n, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Signed wavenumber of FFT bin `k`.
    #[inline]
    pub fn wavenumber(&self, k: usize) -> i64 {
        if k <= self.n / 2 {
            k as i64
        } else {
            k as i64 - self.n as i64
        }
    }

    /// Transforms every ring; output layout is `[k * n_r + j]`.
    pub fn forward_rings(&self, grid: &PolarGrid, values: &[f64]) -> Vec<Complex64> {
        self.forward_columns(values, grid.n_r())
    }

    /// Inverse of [`forward_rings`](Self::forward_rings), keeping the real part.
    pub fn inverse_rings(&self, grid: &PolarGrid, spec: &[Complex64]) -> Vec<f64> {
        self.inverse_columns(spec, grid.n_r())
    }

    /// Like [`forward_rings`](Self::forward_rings) for any row-major
    /// `(angle, column)` array with `n_r` columns.
    pub fn forward_columns(&self, values: &[f64], n_r: usize) -> Vec<Complex64> {
        let n_theta = self.n;
        let mut spec = vec![Complex64::new(0.0, 0.0); n_theta * n_r];
        let mut buf = vec![Complex64::new(0.0, 0.0); n_theta];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.forward.get_inplace_scratch_len()];
        for j in 0..n_r {
            for (i, b) in buf.iter_mut().enumerate() {
                *b = Complex64::new(values[i * n_r + j], 0.0);
            }
            self.forward.process_with_scratch(&mut buf, &mut scratch);
            for (k, b) in buf.iter().enumerate() {
                spec[k * n_r + j] = *b;
            }
        }
        spec
    }

    pub fn inverse_columns(&self, spec: &[Complex64], n_r: usize) -> Vec<f64> {
        let n_theta = self.n;
        let mut values = vec![0.0; n_theta * n_r];
        let mut buf = vec![Complex64::new(0.0, 0.0); n_theta];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.inverse.get_inplace_scratch_len()];
        let inv = 1.0 / n_theta as f64;
        for j in 0..n_r {
            for (k, b) in buf.iter_mut().enumerate() {
                *b = spec[k * n_r + j];
            }
            self.inverse.process_with_scratch(&mut buf, &mut scratch);
            for (i, b) in buf.iter().enumerate() {
                values[i * n_r + j] = b.re * inv;
            }
        }
        values
    }

    /// Transform of a single ring / boundary trace.
    pub fn forward_trace(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    pub fn inverse_trace(&self, spec: &[Complex64]) -> Vec<f64> {
        let mut buf = spec.to_vec();
        self.inverse.process(&mut buf);
        let inv = 1.0 / self.n as f64;
        buf.iter().map(|b| b.re * inv).collect()
    }

    /// Multiplier of `d/dtheta` for bin `k`; the Nyquist bin is dropped.
    #[inline]
    pub fn derivative_factor(&self, k: usize) -> Complex64 {
        if 2 * k == self.n {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, self.wavenumber(k) as f64)
        }
    }

    /// Whether bin `k` survives two-thirds truncation.
    #[inline]
    pub fn keeps(&self, k: usize) -> bool {
        3 * self.wavenumber(k).unsigned_abs() as usize <= self.n
    }

    /// `d/dtheta` of every ring of a field.
    pub fn d_theta(&self, grid: &PolarGrid, values: &[f64]) -> Vec<f64> {
        self.d_theta_columns(values, grid.n_r())
    }

    pub fn d_theta_columns(&self, values: &[f64], n_r: usize) -> Vec<f64> {
        let mut spec = self.forward_columns(values, n_r);
        for k in 0..self.n {
            let f = self.derivative_factor(k);
            for s in &mut spec[k * n_r..(k + 1) * n_r] {
                *s *= f;
            }
        }
        self.inverse_columns(&spec, n_r)
    }

    /// `d/dtheta` of a single periodic trace.
    pub fn d_theta_trace(&self, values: &[f64]) -> Vec<f64> {
        let mut spec = self.forward_trace(values);
        for (k, s) in spec.iter_mut().enumerate() {
            *s *= self.derivative_factor(k);
        }
        self.inverse_trace(&spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, ScalarField};

    #[test]
    fn derivative_of_trig_is_exact() {
        let g = build_grid(1.0, 32, 4).unwrap();
        let f = ScalarField::from_fn(&g, |r, t| r * (3.0 * t).sin() + (5.0 * t).cos());
        let fft = AngularFft::new(32);
        let d = fft.d_theta(&g, f.values());
        for (i, &t) in g.thetas().iter().enumerate() {
            for (j, &r) in g.radii().iter().enumerate() {
                let exact = 3.0 * r * (3.0 * t).cos() - 5.0 * (5.0 * t).sin();
                assert!((d[g.idx(i, j)] - exact).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn round_trip() {
        let g = build_grid(1.0, 16, 5).unwrap();
        let f = ScalarField::from_fn(&g, |r, t| (r * 7.0 + t).sin());
        let fft = AngularFft::new(16);
        let back = fft.inverse_rings(&g, &fft.forward_rings(&g, f.values()));
        for (a, b) in back.iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
