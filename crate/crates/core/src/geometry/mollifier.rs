//! Wall cutoff `zeta_n` and the radially symmetric mollifier `eta_n` used to
//! build compatible initial data.

use std::sync::Arc;

use rayon::prelude::*;

use super::{PolarGrid, ScalarField};
use crate::error::{Error, Result};

/// `zeta_n(d)`: 0 for `d <= 1/(n+1)`, 1 for `d >= 1/n`, quintic smoothstep in between.
pub fn cutoff_value(n: usize, d: f64) -> f64 {
    let lo = 1.0 / (n + 1) as f64;
    let hi = 1.0 / n as f64;
    if d <= lo {
        0.0
    } else if d >= hi {
        1.0
    } else {
        let s = (d - lo) / (hi - lo);
        s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
    }
}

pub(crate) fn check_cutoff_resolution(grid: &PolarGrid, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidInput("cutoff index n must be >= 1".into()));
    }
    if 1.0 / n as f64 >= grid.radius() {
        return Err(Error::Resolution(format!(
            "1/n = {} must be smaller than the radius {}",
            1.0 / n as f64,
            grid.radius()
        )));
    }
    let width = 1.0 / (n * (n + 1)) as f64;
    if width < 2.0 * grid.dr() * (1.0 - 1e-12) {
        return Err(Error::Resolution(format!(
            "cutoff transition width {width:.3e} spans fewer than 2 radial cells (dr = {:.3e})",
            grid.dr()
        )));
    }
    Ok(())
}

pub fn boundary_cutoff(grid: &Arc<PolarGrid>, n: usize) -> Result<ScalarField> {
    check_cutoff_resolution(grid, n)?;
    let radius = grid.radius();
    Ok(ScalarField::from_fn(grid, |r, _| cutoff_value(n, radius - r)))
}

#[inline]
fn bump(rho2_n2: f64) -> f64 {
    if rho2_n2 >= 1.0 {
        0.0
    } else {
        let t = 1.0 - rho2_n2;
        t * t * t
    }
}

/// Largest angular offset (in cells) between rings `r` and `rp` that can lie
/// within `support`; `None` when every angle does.
fn angular_window(r: f64, rp: f64, support: f64, dtheta: f64, n_theta: usize) -> Option<usize> {
    let c = (r * r + rp * rp - support * support) / (2.0 * r * rp);
    if c <= -1.0 {
        return None;
    }
    let w = (c.min(1.0).acos() / dtheta).floor() as usize;
    if 2 * w + 1 >= n_theta {
        None
    } else {
        Some(w)
    }
}

/// Discrete convolution with `(1 - (n|x|)^2)^3` on the polar lattice, the
/// field being zero outside the disk.
///
/// The kernel matrix `K(x, y) w_y` is scaled symmetrically, `d_x K(x, y) d_y w_y`,
/// with ring factors `d` chosen so every row sums to one. That makes constants
/// reproduced exactly away from the wall and mass conserved exactly for fields
/// supported further than `1/n` from the wall.
#[derive(Debug, Clone)]
pub struct Mollifier {
    grid: Arc<PolarGrid>,
    n: usize,
    /// Ring factors on the lattice extended past the wall.
    scale: Vec<f64>,
}

impl Mollifier {
    pub fn new(grid: &Arc<PolarGrid>, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("mollifier index n must be >= 1".into()));
        }
        let support = 1.0 / n as f64;
        let dr = grid.dr();
        let cell = dr.max(grid.radius() * grid.dtheta());
        if support < 2.0 * cell * (1.0 - 1e-12) {
            return Err(Error::Resolution(format!(
                "mollifier radius {support:.3e} is below two grid cells ({cell:.3e})"
            )));
        }

        let n_ext = ((grid.radius() + 2.0 * support) / dr).ceil() as usize + 2;
        let radii: Vec<f64> = (0..n_ext).map(|j| (j as f64 + 0.5) * dr).collect();
        let constrained = radii
            .iter()
            .take_while(|&&r| r < grid.radius() + support)
            .count();

        // S[j] = list of (j', sum over angles of K * w_j')
        let n2 = (n * n) as f64;
        let n_theta = grid.n_theta();
        let cos_table: Vec<f64> = (0..n_theta).map(|k| (k as f64 * grid.dtheta()).cos()).collect();
        let rows: Vec<Vec<(usize, f64)>> = (0..n_ext)
            .into_par_iter()
            .map(|j| {
                let r = radii[j];
                let mut row = Vec::new();
                for (jp, &rp) in radii.iter().enumerate() {
                    if (r - rp).abs() >= support {
                        continue;
                    }
                    let w = rp * dr * grid.dtheta();
                    let kernel = |k: usize| bump((r * r + rp * rp - 2.0 * r * rp * cos_table[k]) * n2);
                    let sum = match angular_window(r, rp, support, grid.dtheta(), n_theta) {
                        None => (0..n_theta).map(kernel).sum::<f64>(),
                        Some(wmax) => {
                            kernel(0) + 2.0 * (1..=wmax).map(kernel).sum::<f64>()
                        }
                    };
                    if sum > 0.0 {
                        row.push((jp, sum * w));
                    }
                }
                row
            })
            .collect();

        let mut scale: Vec<f64> = rows
            .iter()
            .map(|row| 1.0 / row.iter().map(|(_, s)| s).sum::<f64>().sqrt())
            .collect();
        let mut converged = false;
        for _ in 0..20_000 {
            let sums: Vec<f64> = (0..constrained)
                .map(|j| scale[j] * rows[j].iter().map(|&(jp, s)| s * scale[jp]).sum::<f64>())
                .collect();
            let err = sums.iter().fold(0.0_f64, |m, s| m.max((s - 1.0).abs()));
            if err < 1e-14 {
                converged = true;
                break;
            }
            for (d, s) in scale.iter_mut().zip(&sums) {
                *d /= s.sqrt();
            }
        }
        if !converged {
            return Err(Error::Resolution("mollifier normalization did not converge".into()));
        }
        Ok(Self { grid: grid.clone(), n, scale })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn support(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn apply(&self, field: &ScalarField) -> Result<ScalarField> {
        let g = &self.grid;
        if **field.grid() != **g {
            return Err(Error::GridMismatch);
        }
        let (n_theta, n_r) = (g.n_theta(), g.n_r());
        let support = self.support();
        let n2 = (self.n * self.n) as f64;
        let dr = g.dr();
        let dtheta = g.dtheta();
        let radii = g.radii();

        // ring-major copy of the input
        let mut rings = vec![0.0; g.len()];
        for i in 0..n_theta {
            for j in 0..n_r {
                rings[j * n_theta + i] = field.at(i, j);
            }
        }
        let cos_table: Vec<f64> = (0..n_theta).map(|k| (k as f64 * dtheta).cos()).collect();

        let out_rings: Vec<Vec<f64>> = (0..n_r)
            .into_par_iter()
            .map(|j| {
                let r = radii[j];
                let mut out = vec![0.0; n_theta];
                for (jp, &rp) in radii.iter().enumerate() {
                    if (r - rp).abs() >= support {
                        continue;
                    }
                    let pre = self.scale[j] * self.scale[jp] * rp * dr * dtheta;
                    let src = &rings[jp * n_theta..(jp + 1) * n_theta];
                    let weight = |k: usize| {
                        pre * bump((r * r + rp * rp - 2.0 * r * rp * cos_table[k]) * n2)
                    };
                    match angular_window(r, rp, support, dtheta, n_theta) {
                        None => {
                            let w: Vec<f64> = (0..n_theta).map(weight).collect();
                            for (i, o) in out.iter_mut().enumerate() {
                                let mut acc = 0.0;
                                for (k, wk) in w.iter().enumerate() {
                                    acc += wk * src[(i + k) % n_theta];
                                }
                                *o += acc;
                            }
                        }
                        Some(wmax) => {
                            let w: Vec<f64> = (0..=wmax).map(weight).collect();
                            for (i, o) in out.iter_mut().enumerate() {
                                let mut acc = w[0] * src[i];
                                for (k, wk) in w.iter().enumerate().skip(1) {
                                    acc += wk
                                        * (src[(i + k) % n_theta] + src[(i + n_theta - k) % n_theta]);
                                }
                                *o += acc;
                            }
                        }
                    }
                }
                out
            })
            .collect();

        let mut values = vec![0.0; g.len()];
        for (j, ring) in out_rings.iter().enumerate() {
            for (i, v) in ring.iter().enumerate() {
                values[g.idx(i, j)] = *v;
            }
        }
        Ok(ScalarField::from_raw(g, values))
    }
}

/// `eta_n * field`; see [`Mollifier`].
pub fn mollify(field: &ScalarField, n: usize) -> Result<ScalarField> {
    Mollifier::new(field.grid(), n)?.apply(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_grid;

    #[test]
    fn cutoff_plateaus_and_midpoint() {
        assert_eq!(cutoff_value(2, 0.5), 1.0);
        assert_eq!(cutoff_value(2, 0.6), 1.0);
        assert_eq!(cutoff_value(2, 0.3), 0.0);
        assert!((cutoff_value(2, 5.0 / 12.0) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn cutoff_is_monotone() {
        let mut prev = 0.0;
        for k in 0..=1000 {
            let v = cutoff_value(3, 0.2 + 0.2 * k as f64 / 1000.0);
            assert!(v >= prev && (0.0..=1.0).contains(&v));
            prev = v;
        }
    }

    #[test]
    fn cutoff_field_regions() {
        let g = build_grid(1.0, 16, 64).unwrap();
        let z = boundary_cutoff(&g, 2).unwrap();
        for (j, &r) in g.radii().iter().enumerate() {
            let d = 1.0 - r;
            let v = z.at(3, j);
            if d > 0.5 {
                assert_eq!(v, 1.0);
            }
            if d < 1.0 / 3.0 {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn cutoff_rejects_unresolved_transition() {
        let g = build_grid(1.0, 16, 16).unwrap();
        // width 1/12 vs 2 dr = 1/8
        assert!(matches!(boundary_cutoff(&g, 3), Err(Error::Resolution(_))));
        assert!(matches!(boundary_cutoff(&g, 1), Err(Error::Resolution(_))));
    }

    #[test]
    fn mollifier_rejects_small_support() {
        let g = build_grid(1.0, 32, 32).unwrap();
        assert!(matches!(Mollifier::new(&g, 20), Err(Error::Resolution(_))));
    }

    #[test]
    fn constant_reproduced_away_from_wall() {
        let g = build_grid(1.0, 64, 64).unwrap();
        let c = 3.7;
        let m = mollify(&ScalarField::constant(&g, c), 4).unwrap();
        for (j, &r) in g.radii().iter().enumerate() {
            for i in 0..g.n_theta() {
                if r <= 1.0 - 0.25 {
                    assert!((m.at(i, j) - c).abs() < 1e-10 * c, "r={r} got {}", m.at(i, j));
                } else {
                    assert!(m.at(i, j) <= c * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn zero_maps_to_zero() {
        let g = build_grid(1.0, 64, 32).unwrap();
        let m = mollify(&ScalarField::zeros(&g), 4).unwrap();
        assert!(m.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mass_conserved_for_interior_support() {
        let g = build_grid(1.0, 64, 64).unwrap();
        let f = ScalarField::from_cartesian_fn(&g, |x, y| {
            let r2 = (x - 0.1) * (x - 0.1) + y * y;
            if r2 < 0.16 {
                1.0 + x
            } else {
                0.0
            }
        });
        let m = mollify(&f, 4).unwrap();
        let (a, b) = (f.integral(), m.integral());
        assert!(((a - b) / a).abs() < 1e-10, "{a} vs {b}");
        assert!(m.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn half_disk_indicator_converges_off_interface() {
        // indicator of {x > 0}; probe cells near (0.3, 0) and (-0.3, 0)
        let value_at = |n_grid: usize, n: usize, x0: f64| {
            let g = build_grid(1.0, n_grid, n_grid).unwrap();
            let f = ScalarField::from_cartesian_fn(&g, |x, _| if x > 0.0 { 1.0 } else { 0.0 });
            let m = mollify(&f, n).unwrap();
            let j = ((x0.abs() / g.dr()) - 0.5).round() as usize;
            let i = if x0 > 0.0 { 0 } else { g.n_theta() / 2 };
            m.at(i, j)
        };
        let coarse = (value_at(64, 4, 0.3), value_at(64, 4, -0.3));
        let fine = (value_at(128, 8, 0.3), value_at(128, 8, -0.3));
        assert!((1.0 - fine.0) <= (1.0 - coarse.0) + 1e-12);
        assert!(fine.1 <= coarse.1 + 1e-12);
        assert!((1.0 - fine.0).abs() < 1e-10 && fine.1.abs() < 1e-10);
    }
}
