use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{LatticeWindow, PercolationError, Site, SiteLattice};
use crate::field::{Field, FieldSpec};
use crate::geom::{add, dist, norm, Point};
use crate::reachability::{self, Direction, GridConfig, StopRule};
use crate::stats::quantile;

/// Resolution of the local solves used to classify one site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyConfig {
    pub h: f64,
    pub dt: f64,
    #[serde(default)]
    pub stencil: Option<usize>,
    /// Spacing of the sample grid standing in for the ball `B_√d(v)`.
    #[serde(default = "default_spacing")]
    pub sample_spacing: f64,
}

fn default_spacing() -> f64 {
    0.5
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            h: 0.125,
            dt: 0.05,
            stencil: None,
            sample_spacing: default_spacing(),
        }
    }
}

impl ClassifyConfig {
    fn validate(&self) -> Result<(), PercolationError> {
        if !(self.h > 0.0 && self.dt > 0.0 && self.sample_spacing > 0.0) {
            return Err(PercolationError::Parameter(
                "h, dt and sample_spacing must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Offsets of the sample grid inside the ball of radius `√d`.
fn ball_offsets(dim: usize, spacing: f64) -> Vec<Point> {
    let r = (dim as f64).sqrt();
    let m = (r / spacing + 1e-9).floor() as i64;
    let zr = if dim == 3 { m } else { 0 };
    let mut out = Vec::new();
    for k in -zr..=zr {
        for j in -m..=m {
            for i in -m..=m {
                let o = [i as f64 * spacing, j as f64 * spacing, k as f64 * spacing];
                if norm(o) <= r + 1e-9 {
                    out.push(o);
                }
            }
        }
    }
    out
}

/// `max θ(x, y)` over sample pairs of `B_√d(v)`, or `+∞` once some pair
/// exceeds `cap`.
pub fn site_sup_passage(field: &Field, v: Site, cap: f64, cfg: &ClassifyConfig) -> Result<f64, PercolationError> {
    cfg.validate()?;
    if !(cap > 0.0) {
        return Err(PercolationError::Parameter(format!("threshold must be positive, got {cap}")));
    }
    let dim = field.dim();
    let center = [v[0] as f64, v[1] as f64, v[2] as f64];
    let stencil = cfg.stencil.unwrap_or(reachability::default_stencil(dim));
    let sqrt_d = (dim as f64).sqrt();
    let half = sqrt_d + field.bounds().speed_limit() * cap + (stencil as f64 + 1.0) * cfg.h;
    let grid = GridConfig::centered(dim, cfg.h, cfg.dt, center, half).with_stencil(stencil);
    grid.validate()?;
    let pts: Vec<Point> = ball_offsets(dim, cfg.sample_spacing).into_iter().map(|o| add(center, o)).collect();
    let mut velocity = field.sample_grid(grid.node([0, 0, 0]), grid.h, grid.dims());
    let mut sup = 0.0f64;
    for x in &pts {
        let map = reachability::solve(*x, &grid, None, Direction::Forward, velocity, StopRule::Time(cap))?;
        for y in &pts {
            if dist(*x, *y) > 0.0 {
                sup = sup.max(map.time_at(*y));
            }
        }
        if sup > cap {
            return Ok(f64::INFINITY);
        }
        velocity = map.into_velocity();
    }
    Ok(sup)
}

/// Open/closed lattice: `v` is open when every sampled pair of its ball is
/// connected within time `threshold`.
pub fn classify_sites(
    field: &Field,
    window: LatticeWindow,
    threshold: f64,
    cfg: &ClassifyConfig,
) -> Result<SiteLattice, PercolationError> {
    if window.dim != field.dim() {
        return Err(PercolationError::Parameter(format!(
            "window has d = {}, field has d = {}",
            window.dim,
            field.dim()
        )));
    }
    let open = (0..window.len())
        .into_par_iter()
        .map(|i| site_sup_passage(field, window.site(i), threshold, cfg).map(|s| s <= threshold))
        .collect::<Result<Vec<bool>, _>>()?;
    SiteLattice::from_states(window, open)
}

pub fn open_fraction(lattice: &SiteLattice) -> f64 {
    lattice.open_count() as f64 / lattice.window().len().max(1) as f64
}

/// Threshold whose open probability is about `target`: the `target`
/// quantile of site sups over `sites` spread-out sites in each seeded field.
pub fn calibrate_threshold(
    spec: &FieldSpec,
    seeds: &[u64],
    sites: usize,
    target: f64,
    cfg: &ClassifyConfig,
) -> Result<f64, PercolationError> {
    if !(0.0..=1.0).contains(&target) || seeds.is_empty() || sites == 0 {
        return Err(PercolationError::Parameter("need seeds, sites and a target in [0, 1]".into()));
    }
    let cap = 4.0 * (2.0 * (spec.dim as f64).sqrt() + 1.0);
    let jobs: Vec<(u64, usize)> = seeds.iter().flat_map(|s| (0..sites).map(move |i| (*s, i))).collect();
    let sups = jobs
        .into_par_iter()
        .map(|(seed, i)| {
            let field = Field::build(spec, seed).map_err(|e| PercolationError::Parameter(e.to_string()))?;
            site_sup_passage(&field, [3 * i as i64, 0, 0], cap, cfg)
        })
        .collect::<Result<Vec<f64>, _>>()?;
    Ok(quantile(&sups, target))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coarse() -> ClassifyConfig {
        ClassifyConfig {
            h: 0.25,
            dt: 0.1,
            stencil: None,
            sample_spacing: 0.5,
        }
    }

    #[test]
    fn zero_field_all_open_or_closed() {
        let f = Field::zero(2);
        let w = LatticeWindow::cube(2, [0, 0, 0], 1);
        let c = 2.0 * 2f64.sqrt() + 1.0;
        assert_eq!(classify_sites(&f, w, c, &coarse()).unwrap().open_count(), 9);
        assert_eq!(classify_sites(&f, w, 0.1, &coarse()).unwrap().open_count(), 0);
    }

    #[test]
    fn zero_field_sup_is_diameter() {
        let s = site_sup_passage(&Field::zero(2), [0, 0, 0], 10.0, &coarse()).unwrap();
        assert!((s - 2.0 * 2f64.sqrt()).abs() < 1e-9, "{s}");
    }

    #[test]
    fn open_fraction_monotone_in_threshold() {
        let spec = FieldSpec {
            dim: 2,
            amplitude: 0.4,
            ..FieldSpec::default()
        };
        let f = Field::build(&spec, 3).unwrap();
        let w = LatticeWindow::cube(2, [0, 0, 0], 1);
        let mut last = 0.0;
        for c in [2.5, 3.0, 3.5, 4.5] {
            let p = open_fraction(&classify_sites(&f, w, c, &coarse()).unwrap());
            assert!(p >= last);
            last = p;
        }
    }
}
