use rayon::prelude::*;
use serde::Serialize;

use super::directions::DirectionGrid;
use super::edt::hausdorff_masks;
use super::{trial_field, HomogError, TrialFailure};
use crate::field::FieldSpec;
use crate::geom::{dot, norm, scale, sub, Point, ORIGIN};
use crate::reachability::{passage_times, GridConfig, PassageMap};
use crate::seed::derive_seed;
use crate::stats::{mean, std_err};

/// Per-direction estimates of `θ̄` and the passage-time table they came from.
#[derive(Debug, Clone, Serialize)]
pub struct ShapeEstimate {
    pub dim: usize,
    #[serde(skip)]
    pub grid: DirectionGrid,
    pub radii: Vec<f64>,
    /// `E[θ(0, Rv)]` per radius, then per direction.
    pub mean_passage: Vec<Vec<f64>>,
    pub passage_se: Vec<Vec<f64>>,
    /// Plug-in `E[θ(0, Rv)] / R` at the largest radius.
    pub theta_bar: Vec<f64>,
    pub theta_se: Vec<f64>,
    /// `θ(0, R v) / R` at the largest radius, per successful trial.
    #[serde(skip)]
    pub samples: Vec<Vec<f64>>,
    /// Field seed of each entry of `samples`.
    pub sample_seeds: Vec<u64>,
    pub failures: Vec<TrialFailure>,
}

impl ShapeEstimate {
    /// An estimate with given `θ̄` values and no sampling error.
    pub fn from_theta(grid: DirectionGrid, theta_bar: Vec<f64>) -> Self {
        let n = grid.len();
        assert_eq!(theta_bar.len(), n);
        ShapeEstimate {
            dim: grid.dim,
            grid,
            radii: vec![1.0],
            mean_passage: vec![theta_bar.clone()],
            passage_se: vec![vec![0.0; n]],
            theta_se: vec![0.0; n],
            samples: vec![theta_bar.clone()],
            sample_seeds: vec![0],
            theta_bar,
            failures: Vec::new(),
        }
    }

    /// Vertices `v/θ̄(v)` of the polytope `S_1`.
    pub fn vertices(&self) -> Vec<Point> {
        self.grid.dirs.iter().zip(&self.theta_bar).map(|(v, t)| scale(*v, 1.0 / t)).collect()
    }

    /// Homogeneous extension of `θ̄`: the gauge of the polytope `S_1`.
    pub fn gauge(&self, x: Point) -> f64 {
        if norm(x) == 0.0 {
            return 0.0;
        }
        let verts = self.vertices();
        let mut best = f64::INFINITY;
        for face in &self.grid.faces {
            if let Some(g) = cone_gauge(&verts, face, x, self.dim) {
                best = best.min(g);
            }
        }
        best
    }

    /// `max_v p·v/θ̄(v)` over the direction grid.
    pub fn effective_h(&self, p: Point) -> f64 {
        self.grid
            .dirs
            .iter()
            .zip(&self.theta_bar)
            .map(|(v, t)| dot(p, *v) / t)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `sup_{v ∈ S_1} p·v`, evaluated over boundary points of `S_1`
    /// sampled `refine` times finer than the direction grid.
    pub fn support_h(&self, p: Point, refine: usize) -> f64 {
        let verts = self.vertices();
        let mut best = f64::NEG_INFINITY;
        let refine = refine.max(1);
        for face in &self.grid.faces {
            let pts: Vec<Point> = face.iter().map(|i| verts[*i]).collect();
            if pts.len() == 2 {
                for k in 0..=refine {
                    let s = k as f64 / refine as f64;
                    let q = add_scaled(pts[0], pts[1], 1.0 - s, s);
                    best = best.max(dot(p, q));
                }
            } else {
                for a in 0..=refine {
                    for b in 0..=(refine - a) {
                        let (sa, sb) = (a as f64 / refine as f64, b as f64 / refine as f64);
                        let sc = 1.0 - sa - sb;
                        let q = [
                            sa * pts[0][0] + sb * pts[1][0] + sc * pts[2][0],
                            sa * pts[0][1] + sb * pts[1][1] + sc * pts[2][1],
                            sa * pts[0][2] + sb * pts[1][2] + sc * pts[2][2],
                        ];
                        best = best.max(dot(p, q));
                    }
                }
            }
        }
        best
    }

    pub fn shape_set(&self, t: f64) -> ShapeSet<'_> {
        ShapeSet { estimate: self, t }
    }

    /// Pairs `(radius index, direction)` where `E[θ(0,Rv)]/R` increases
    /// between consecutive radii by more than `k` combined standard errors.
    pub fn fekete_violations(&self, k: f64) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for r in 1..self.radii.len() {
            let (r0, r1) = (self.radii[r - 1], self.radii[r]);
            for d in 0..self.grid.len() {
                let a = self.mean_passage[r - 1][d] / r0;
                let b = self.mean_passage[r][d] / r1;
                let se = ((self.passage_se[r - 1][d] / r0).powi(2) + (self.passage_se[r][d] / r1).powi(2)).sqrt();
                if b > a + k * se + 1e-12 {
                    out.push((r, d));
                }
            }
        }
        out
    }

    /// Plug-in estimate from a subset of trials (for resampling).
    pub fn subset_theta(&self, keep: &[usize]) -> Vec<f64> {
        (0..self.grid.len())
            .map(|d| mean(&keep.iter().map(|t| self.samples[*t][d]).collect::<Vec<_>>()))
            .collect()
    }
}

fn add_scaled(a: Point, b: Point, s: f64, t: f64) -> Point {
    [s * a[0] + t * b[0], s * a[1] + t * b[1], s * a[2] + t * b[2]]
}

/// Gauge of `x` for the face spanned by `verts[face]`, if `x` lies in its cone.
fn cone_gauge(verts: &[Point], face: &[usize], x: Point, dim: usize) -> Option<f64> {
    const TOL: f64 = -1e-12;
    if dim == 2 {
        let (p, q) = (verts[face[0]], verts[face[1]]);
        let det = p[0] * q[1] - p[1] * q[0];
        if det.abs() < 1e-300 {
            return None;
        }
        let a = (x[0] * q[1] - x[1] * q[0]) / det;
        let b = (p[0] * x[1] - p[1] * x[0]) / det;
        (a >= TOL * norm(x) && b >= TOL * norm(x)).then_some(a + b)
    } else {
        let (p, q, r) = (verts[face[0]], verts[face[1]], verts[face[2]]);
        let det = triple(p, q, r);
        if det.abs() < 1e-300 {
            return None;
        }
        let a = triple(x, q, r) / det;
        let b = triple(p, x, r) / det;
        let c = triple(p, q, x) / det;
        let tol = TOL * norm(x);
        (a >= tol && b >= tol && c >= tol).then_some(a + b + c)
    }
}

fn triple(a: Point, b: Point, c: Point) -> f64 {
    dot(a, crate::geom::cross(b, c))
}

/// `S_t = {x : θ̄(x) ≤ t} = t·S_1`.
#[derive(Debug, Clone, Copy)]
pub struct ShapeSet<'a> {
    pub estimate: &'a ShapeEstimate,
    pub t: f64,
}

impl ShapeSet<'_> {
    pub fn contains(&self, x: Point) -> bool {
        self.estimate.gauge(x) <= self.t
    }

    /// Boundary point in direction `i` of the grid.
    pub fn vertex(&self, i: usize) -> Point {
        scale(self.estimate.grid.dirs[i], self.t / self.estimate.theta_bar[i])
    }

    pub fn max_radius(&self) -> f64 {
        self.estimate.theta_bar.iter().map(|t| self.t / t).fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: f64) -> Self {
        ShapeSet {
            estimate: self.estimate,
            t: self.t * s,
        }
    }

    /// Euclidean distance from `q` to the set.
    pub fn distance_to(&self, q: Point) -> f64 {
        if self.contains(q) {
            return 0.0;
        }
        let est = self.estimate;
        let verts: Vec<Point> = (0..est.grid.len()).map(|i| self.vertex(i)).collect();
        let mut best = f64::INFINITY;
        for face in &est.grid.faces {
            let d = if face.len() == 2 {
                segment_distance(q, verts[face[0]], verts[face[1]])
            } else {
                triangle_distance(q, verts[face[0]], verts[face[1]], verts[face[2]])
            };
            best = best.min(d);
        }
        best
    }
}

fn segment_distance(q: Point, a: Point, b: Point) -> f64 {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    let s = if len2 > 0.0 { (dot(sub(q, a), ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    norm(sub(q, add_scaled(a, ab, 1.0, s)))
}

fn triangle_distance(q: Point, a: Point, b: Point, c: Point) -> f64 {
    let n = crate::geom::cross(sub(b, a), sub(c, a));
    let nn = dot(n, n);
    if nn > 0.0 {
        let h = dot(sub(q, a), n) / nn;
        let proj = sub(q, scale(n, h));
        let bary = [
            triple(sub(b, proj), sub(c, proj), n),
            triple(sub(c, proj), sub(a, proj), n),
            triple(sub(a, proj), sub(b, proj), n),
        ];
        if bary.iter().all(|w| *w >= 0.0) {
            return h.abs() * nn.sqrt();
        }
    }
    segment_distance(q, a, b)
        .min(segment_distance(q, b, c))
        .min(segment_distance(q, c, a))
}

/// Monte Carlo estimate of `θ̄` on `grid`: every trial draws a field from
/// `spec`, solves once from the origin and records `θ(0, Rv)` for all
/// radii and directions.
pub fn estimate_theta_bar(
    spec: &FieldSpec,
    seed: u64,
    grid: &DirectionGrid,
    radii: &[f64],
    trials: usize,
    proto: &GridConfig,
) -> Result<ShapeEstimate, HomogError> {
    if trials < 2 {
        return Err(HomogError::Parameter("need at least two trials".into()));
    }
    if radii.is_empty() || radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] <= 0.0 {
        return Err(HomogError::Parameter("radii must be positive and increasing".into()));
    }
    if grid.dim != spec.dim {
        return Err(HomogError::Parameter("direction grid and field dimensions differ".into()));
    }
    let targets: Vec<Point> = radii
        .iter()
        .flat_map(|r| grid.dirs.iter().map(move |v| scale(*v, *r)))
        .collect();
    let runs: Vec<(u64, Result<Vec<f64>, HomogError>)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let s = derive_seed(seed, i as u64);
            let out = trial_field(spec, s).and_then(|f| {
                passage_times(&f, ORIGIN, &targets, proto, None)
                    .map(|(ts, _)| ts)
                    .map_err(HomogError::from)
            });
            (s, out)
        })
        .collect();
    let mut ok = Vec::new();
    let mut sample_seeds = Vec::new();
    let mut failures = Vec::new();
    for (s, r) in runs {
        match r {
            Ok(ts) => {
                ok.push(ts);
                sample_seeds.push(s);
            }
            Err(e) => failures.push(TrialFailure { seed: s, error: e.to_string() }),
        }
    }
    if ok.len() < 2 {
        return Err(HomogError::NoTrials(format!("{} of {trials} trials failed", failures.len())));
    }
    let nd = grid.len();
    let mut mean_passage = Vec::new();
    let mut passage_se = Vec::new();
    for ri in 0..radii.len() {
        let mut m = Vec::with_capacity(nd);
        let mut s = Vec::with_capacity(nd);
        for d in 0..nd {
            let xs: Vec<f64> = ok.iter().map(|t| t[ri * nd + d]).collect();
            m.push(mean(&xs));
            s.push(std_err(&xs));
        }
        mean_passage.push(m);
        passage_se.push(s);
    }
    let last = radii.len() - 1;
    let r = radii[last];
    let samples = ok.iter().map(|t| (0..nd).map(|d| t[last * nd + d] / r).collect()).collect();
    Ok(ShapeEstimate {
        dim: spec.dim,
        grid: grid.clone(),
        radii: radii.to_vec(),
        theta_bar: mean_passage[last].iter().map(|m| m / r).collect(),
        theta_se: passage_se[last].iter().map(|s| s / r).collect(),
        mean_passage,
        passage_se,
        samples,
        sample_seeds,
        failures,
    })
}

/// `dist_H(t⁻¹R_t(x₀), S_1)` where `R_t` is the sublevel set `{θ ≤ t}` of a
/// solve whose window contains both sets.
pub fn scaled_hausdorff(map: &PassageMap, est: &ShapeEstimate, t: f64) -> f64 {
    let cfg = map.grid();
    let src = map.source();
    let shape = est.shape_set(t);
    let reach: Vec<bool> = map.times().iter().map(|s| *s <= t).collect();
    let model: Vec<bool> = (0..cfg.len()).map(|i| shape.contains(sub(cfg.point(i), src))).collect();
    hausdorff_masks(&reach, &model, cfg.dims()) * cfg.h / t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round(dim: usize) -> ShapeEstimate {
        let g = DirectionGrid::standard(dim);
        let n = g.len();
        ShapeEstimate::from_theta(g, vec![1.0; n])
    }

    #[test]
    fn gauge_is_homogeneous_and_near_norm() {
        for dim in [2, 3] {
            let est = round(dim);
            for x in [[3.0, -1.0, 0.5], [0.1, 0.2, -0.7], [-2.0, 0.0, 1.0]] {
                let mut x = x;
                if dim == 2 {
                    x[2] = 0.0;
                }
                let g = est.gauge(x);
                assert!(g >= norm(x) - 1e-12 && g <= norm(x) * 1.02, "{dim} {x:?} {g}");
                assert!((est.gauge(scale(x, 2.5)) - 2.5 * g).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn scaling_identities() {
        let g = DirectionGrid::circle(16);
        let theta: Vec<f64> = (0..16).map(|k| 1.0 + 0.2 * ((k as f64) * 0.7).sin().abs()).collect();
        let est = ShapeEstimate::from_theta(g, theta);
        let p = [0.3, -0.8, 0.0];
        assert_eq!(est.effective_h(scale(p, 2.0)), 2.0 * est.effective_h(p));
        assert!((est.effective_h(p) - est.support_h(p, 8)).abs() < 1e-12);
        let s1 = est.shape_set(1.0);
        let s2 = est.shape_set(2.0);
        for i in 0..16 {
            assert_eq!(s2.vertex(i), scale(s1.vertex(i), 2.0));
        }
    }

    #[test]
    fn distance_to_the_unit_shape() {
        let est = round(2);
        let s = est.shape_set(1.0);
        assert_eq!(s.distance_to([0.2, 0.1, 0.0]), 0.0);
        let d = s.distance_to([3.0, 0.0, 0.0]);
        assert!((d - 2.0).abs() < 1e-9);
        let est3 = round(3);
        let d3 = est3.shape_set(1.0).distance_to([0.0, 0.0, 4.0]);
        assert!((d3 - 3.0).abs() < 0.02, "{d3}");
    }
}
