use std::ops::{Mul, Sub};

use crate::error::{Error, Result};

/// LU factorization of a real tridiagonal matrix (Thomas algorithm without pivoting).
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    lower: Vec<f64>,
    /// Modified super-diagonal `c'_i`.
    upper: Vec<f64>,
    /// Reciprocal pivots.
    inv_pivot: Vec<f64>,
}

impl Tridiagonal {
    /// `lower[i]` multiplies `x[i-1]` in row `i` (`lower[0]` unused), `upper[i]`
    /// multiplies `x[i+1]` (`upper[n-1]` unused).
    pub fn factor(lower: &[f64], diag: &[f64], upper: &[f64]) -> Result<Self> {
        let n = diag.len();
        if n == 0 || lower.len() != n || upper.len() != n {
            return Err(Error::InvalidInput("tridiagonal band lengths differ".into()));
        }
        let mut c = vec![0.0; n];
        let mut inv = vec![0.0; n];
        let mut prev_c = 0.0;
        for i in 0..n {
            let l = if i == 0 { 0.0 } else { lower[i] };
            let pivot = diag[i] - l * prev_c;
            if pivot.abs() < 1e-300 || !pivot.is_finite() {
                return Err(Error::InvalidInput(format!("zero pivot in row {i}")));
            }
            inv[i] = 1.0 / pivot;
            c[i] = if i + 1 < n { upper[i] * inv[i] } else { 0.0 };
            prev_c = c[i];
        }
        let mut lower = lower.to_vec();
        lower[0] = 0.0;
        Ok(Self { lower, upper: c, inv_pivot: inv })
    }

    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivot.is_empty()
    }

    /// Overwrites `rhs` with the solution.
    pub fn solve_in_place<T>(&self, rhs: &mut [T])
    where
        T: Copy + Sub<Output = T> + Mul<f64, Output = T>,
    {
        let n = self.len();
        debug_assert_eq!(rhs.len(), n);
        rhs[0] = rhs[0] * self.inv_pivot[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - rhs[i - 1] * self.lower[i]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] = rhs[i] - rhs[i + 1] * self.upper[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rustfft::num_complex::Complex64;

    fn apply(lower: &[f64], diag: &[f64], upper: &[f64], x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|i| {
                let mut v = diag[i] * x[i];
                if i > 0 {
                    v += lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    v += upper[i] * x[i + 1];
                }
                v
            })
            .collect()
    }

    #[test]
    fn solves_diagonally_dominant_system() {
        let n = 9;
        let lower: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
        let upper: Vec<f64> = (0..n).map(|i| 0.5 - 0.05 * i as f64).collect();
        let diag: Vec<f64> = (0..n).map(|i| -4.0 - i as f64).collect();
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut b = apply(&lower, &diag, &upper, &x);
        Tridiagonal::factor(&lower, &diag, &upper).unwrap().solve_in_place(&mut b);
        for (a, e) in b.iter().zip(&x) {
            assert!((a - e).abs() < 1e-13);
        }
    }

    #[test]
    fn complex_rhs_solves_componentwise() {
        let lower = vec![0.0, 1.0, 1.0];
        let diag = vec![-3.0, -3.0, -3.0];
        let upper = vec![1.0, 1.0, 0.0];
        let t = Tridiagonal::factor(&lower, &diag, &upper).unwrap();
        let mut re = vec![1.0, 2.0, 3.0];
        let mut im = vec![-1.0, 0.5, 0.0];
        let mut z: Vec<Complex64> = re.iter().zip(&im).map(|(a, b)| Complex64::new(*a, *b)).collect();
        t.solve_in_place(&mut re);
        t.solve_in_place(&mut im);
        t.solve_in_place(&mut z);
        for k in 0..3 {
            assert!((z[k].re - re[k]).abs() < 1e-15 && (z[k].im - im[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn singular_is_rejected() {
        assert!(Tridiagonal::factor(&[0.0, 1.0], &[0.0, 1.0], &[1.0, 0.0]).is_err());
    }
}
