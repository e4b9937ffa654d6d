use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{BoundaryTrace, PolarGrid};
use crate::error::{Error, Result};

/// Friction coefficient as a finite Fourier series,
/// `alpha(theta) = constant + sum_k cos[k-1] cos(k theta) + sin[k-1] sin(k theta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FrictionSpec {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl FrictionSpec {
    pub fn constant(alpha: f64) -> Self {
        Self { constant: alpha, ..Default::default() }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let mut a = self.constant;
        for (k, c) in self.cos.iter().enumerate() {
            a += c * ((k + 1) as f64 * theta).cos();
        }
        for (k, s) in self.sin.iter().enumerate() {
            a += s * ((k + 1) as f64 * theta).sin();
        }
        a
    }

    pub fn is_constant(&self) -> bool {
        self.cos.iter().chain(&self.sin).all(|c| *c == 0.0)
    }

    /// Rejects profiles that go negative anywhere on a sampling 8x denser than the grid.
    pub fn validate(&self, n_theta: usize) -> Result<()> {
        let coeffs_ok = std::iter::once(&self.constant)
            .chain(&self.cos)
            .chain(&self.sin)
            .all(|c| c.is_finite());
        if !coeffs_ok {
            return Err(Error::InvalidInput("friction coefficients must be finite".into()));
        }
        let samples = 8 * n_theta.max(8);
        let mut min = f64::INFINITY;
        let mut at = 0.0;
        for k in 0..samples {
            let t = 2.0 * PI * k as f64 / samples as f64;
            let a = self.eval(t);
            if a < min {
                min = a;
                at = t;
            }
        }
        // roundoff allowance so that 1 + cos(theta) passes at theta = pi
        if min < -1e-12 {
            return Err(Error::NegativeFriction { min, theta: at });
        }
        Ok(())
    }
}

/// The friction coefficient sampled on the wall, guaranteed nonnegative.
#[derive(Debug, Clone)]
pub struct FrictionProfile {
    spec: FrictionSpec,
    alpha: BoundaryTrace,
}

impl FrictionProfile {
    pub fn new(grid: &Arc<PolarGrid>, spec: &FrictionSpec) -> Result<Self> {
        spec.validate(grid.n_theta())?;
        let alpha = BoundaryTrace::from_fn(grid, |t| spec.eval(t).max(0.0));
        Ok(Self { spec: spec.clone(), alpha })
    }

    pub fn constant(grid: &Arc<PolarGrid>, alpha: f64) -> Result<Self> {
        Self::new(grid, &FrictionSpec::constant(alpha))
    }

    /// `alpha = 2 kappa`, which forces zero wall vorticity.
    pub fn free_boundary(grid: &Arc<PolarGrid>) -> Self {
        Self::constant(grid, 2.0 * grid.curvature()).expect("2 kappa is nonnegative")
    }

    pub fn alpha(&self) -> &BoundaryTrace {
        &self.alpha
    }

    pub fn spec(&self) -> &FrictionSpec {
        &self.spec
    }

    /// `2 kappa - alpha(theta)`, the factor relating slip velocity to wall vorticity.
    pub fn wall_factor(&self, kappa: f64) -> BoundaryTrace {
        self.alpha.map(|a| 2.0 * kappa - a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_grid;

    #[test]
    fn one_plus_cos_is_accepted() {
        let spec = FrictionSpec { constant: 1.0, cos: vec![1.0], sin: vec![] };
        let g = build_grid(1.0, 16, 8).unwrap();
        let f = FrictionProfile::new(&g, &spec).unwrap();
        assert!((f.alpha().values()[0] - 2.0).abs() < 1e-15);
        assert!(f.alpha().values()[8].abs() < 1e-15);
    }

    #[test]
    fn negative_profile_is_rejected() {
        let spec = FrictionSpec { constant: 0.5, cos: vec![1.0], sin: vec![] };
        assert!(matches!(spec.validate(16), Err(Error::NegativeFriction { .. })));
    }

    #[test]
    fn dip_between_grid_angles_is_caught() {
        // zero at every grid angle, negative halfway between them
        let mut sin = vec![0.0; 16];
        sin[15] = -1.0;
        let spec = FrictionSpec { constant: 0.9, cos: vec![], sin };
        assert!(spec.validate(16).is_err());
    }
}
