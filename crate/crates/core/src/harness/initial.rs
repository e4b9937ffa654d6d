//! Built-in initial vorticity fields.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::emit::load_field;
use crate::error::{Error, Result};
use crate::geometry::{PolarGrid, ScalarField};

fn two() -> f64 {
    2.0
}

fn blob_center() -> [f64; 2] {
    [0.2, 0.1]
}

fn blob_width() -> f64 {
    0.25
}

fn one() -> f64 {
    1.0
}

fn patch_center() -> [f64; 2] {
    [0.3, 0.0]
}

fn patch_gamma() -> f64 {
    0.4
}

fn pair_centers() -> [[f64; 2]; 2] {
    [[-0.3, 0.0], [0.3, 0.0]]
}

fn pair_width() -> f64 {
    0.15
}

fn pair_strengths() -> [f64; 2] {
    [1.0, -1.0]
}

/// Initial vorticity, selected by `name` in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// Constant vorticity, the rigid rotation `u = (omega / 2) x_perp`.
    SolidRotation {
        #[serde(default = "two")]
        omega: f64,
    },
    /// `amplitude exp(-|x - center|^2 / width^2)`
    GaussianBlob {
        #[serde(default = "blob_center")]
        center: [f64; 2],
        #[serde(default = "blob_width")]
        width: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `|x - center|^-gamma`, in `L^p` for `p gamma < 2` but unbounded.
    SingularPatch {
        #[serde(default = "patch_center")]
        center: [f64; 2],
        #[serde(default = "patch_gamma")]
        gamma: f64,
    },
    /// Two Gaussian vortices.
    TwoVortex {
        #[serde(default = "pair_centers")]
        centers: [[f64; 2]; 2],
        #[serde(default = "pair_width")]
        width: f64,
        #[serde(default = "pair_strengths")]
        strengths: [f64; 2],
    },
    /// A field dump written by this crate.
    File { path: PathBuf },
}

impl InitialData {
    pub fn solid_rotation() -> Self {
        Self::SolidRotation { omega: two() }
    }

    pub fn gaussian_blob() -> Self {
        Self::GaussianBlob { center: blob_center(), width: blob_width(), amplitude: one() }
    }

    pub fn singular_patch() -> Self {
        Self::SingularPatch { center: patch_center(), gamma: patch_gamma() }
    }

    pub fn two_vortex() -> Self {
        Self::TwoVortex { centers: pair_centers(), width: pair_width(), strengths: pair_strengths() }
    }

    /// Short label for tables and file names.
    pub fn label(&self) -> &'static str {
        match self {
            Self::SolidRotation { .. } => "solid_rotation",
            Self::GaussianBlob { .. } => "gaussian_blob",
            Self::SingularPatch { .. } => "singular_patch",
            Self::TwoVortex { .. } => "two_vortex",
            Self::File { .. } => "file",
        }
    }

    /// Point samples at the cell centres of `grid`.
    pub fn sample(&self, grid: &Arc<PolarGrid>) -> Result<ScalarField> {
        let inside = |c: &[f64; 2]| c[0].hypot(c[1]) < grid.radius();
        match self {
            Self::SolidRotation { omega } => Ok(ScalarField::constant(grid, *omega)),
            Self::GaussianBlob { center, width, amplitude } => {
                if !(*width > 0.0) {
                    return Err(Error::Config(format!("gaussian_blob width must be positive, got {width}")));
                }
                let [cx, cy] = *center;
                let w2 = width * width;
                Ok(ScalarField::from_cartesian_fn(grid, |x, y| {
                    amplitude * (-((x - cx).powi(2) + (y - cy).powi(2)) / w2).exp()
                }))
            }
            Self::SingularPatch { center, gamma } => {
                if !(*gamma > 0.0 && *gamma < 2.0) {
                    return Err(Error::Config(format!("singular_patch gamma must lie in (0, 2), got {gamma}")));
                }
                if !inside(center) {
                    return Err(Error::Config("singular_patch center must lie inside the disk".into()));
                }
                let [cx, cy] = *center;
                let field = ScalarField::from_cartesian_fn(grid, |x, y| (x - cx).hypot(y - cy).powf(-gamma));
                if !field.is_finite() {
                    return Err(Error::Config("singular_patch center coincides with a cell centre".into()));
                }
                Ok(field)
            }
            Self::TwoVortex { centers, width, strengths } => {
                if !(*width > 0.0) {
                    return Err(Error::Config(format!("two_vortex width must be positive, got {width}")));
                }
                let w2 = width * width;
                Ok(ScalarField::from_cartesian_fn(grid, |x, y| {
                    centers
                        .iter()
                        .zip(strengths)
                        .map(|(c, s)| s * (-((x - c[0]).powi(2) + (y - c[1]).powi(2)) / w2).exp())
                        .sum()
                }))
            }
            Self::File { path } => {
                let field = load_field(path)?;
                if **field.grid() != **grid {
                    return Err(Error::GridMismatch);
                }
                Ok(ScalarField::from_values(grid, field.into_values())?)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_grid;

    #[test]
    fn builtins_sample_finite_fields() {
        let g = build_grid(1.0, 32, 32).unwrap();
        for d in [InitialData::solid_rotation(), InitialData::gaussian_blob(), InitialData::singular_patch(), InitialData::two_vortex()] {
            assert!(d.sample(&g).unwrap().is_finite(), "{}", d.label());
        }
    }

    #[test]
    fn two_vortex_default_is_odd() {
        let g = build_grid(1.0, 32, 16).unwrap();
        let om = InitialData::two_vortex().sample(&g).unwrap();
        assert!(om.integral().abs() < 1e-14);
    }

    #[test]
    fn parses_from_toml_with_defaults() {
        let d: InitialData = toml::from_str("name = \"singular_patch\"\ngamma = 0.3").unwrap();
        assert_eq!(d, InitialData::SingularPatch { center: [0.3, 0.0], gamma: 0.3 });
        assert!(toml::from_str::<InitialData>("name = \"gaussian_blob\"\nsigma = 1.0").is_err());
        assert!(toml::from_str::<InitialData>("name = \"vortex_sheet\"").is_err());
    }

    #[test]
    fn rejects_bad_parameters() {
        let g = build_grid(1.0, 16, 16).unwrap();
        assert!(InitialData::SingularPatch { center: [1.2, 0.0], gamma: 0.4 }.sample(&g).is_err());
        assert!(InitialData::SingularPatch { center: [0.3, 0.0], gamma: 2.5 }.sample(&g).is_err());
        assert!(InitialData::GaussianBlob { center: [0.0, 0.0], width: 0.0, amplitude: 1.0 }.sample(&g).is_err());
    }
}
