use std::collections::VecDeque;

use serde::Serialize;

use super::clusters::{clusters, label_components};
use super::sets::{boundary_masks, cl_of};
use super::{PercolationError, Site, SiteLattice};
use crate::geom::{add, dot, norm, scale, sub, Point, ORIGIN};
use crate::skeleton::{LegKind, SkeletonPath};

const EPS: f64 = 1e-9;

fn site_point(s: Site) -> Point {
    [s[0] as f64, s[1] as f64, s[2] as f64]
}

/// Sites whose closed unit cube meets the segment `x → y`, with the
/// arclength interval of the intersection, ordered by entry then site.
pub fn segment_sites(x: Point, y: Point, dim: usize) -> Vec<(Site, f64, f64)> {
    let d = sub(y, x);
    let len = norm(d);
    let u = if len > 0.0 { scale(d, 1.0 / len) } else { ORIGIN };
    let mut lo = [0i64; 3];
    let mut hi = [0i64; 3];
    for i in 0..dim {
        lo[i] = (x[i].min(y[i]) - 0.5).floor() as i64;
        hi[i] = (x[i].max(y[i]) + 0.5).ceil() as i64;
    }
    let mut out = Vec::new();
    for k in lo[2]..=hi[2] {
        for j in lo[1]..=hi[1] {
            for i in lo[0]..=hi[0] {
                let v = [i, j, k];
                let mut a = 0.0f64;
                let mut b = len;
                for ax in 0..dim {
                    let c0 = v[ax] as f64 - 0.5;
                    let c1 = v[ax] as f64 + 0.5;
                    if u[ax].abs() < 1e-15 {
                        if x[ax] < c0 - EPS || x[ax] > c1 + EPS {
                            b = -1.0;
                        }
                    } else {
                        let t0 = (c0 - x[ax]) / u[ax];
                        let t1 = (c1 - x[ax]) / u[ax];
                        a = a.max(t0.min(t1));
                        b = b.min(t0.max(t1));
                    }
                }
                if a <= b + EPS {
                    out.push((v, a, b.max(a)));
                }
            }
        }
    }
    out.sort_by(|p, q| p.1.total_cmp(&q.1).then(p.0.cmp(&q.0)));
    out
}

/// Counting data for a detour skeleton between two points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SkeletonBound {
    /// Sites whose cubes meet the segment.
    pub a: usize,
    /// Closed sites joined to those by closed paths.
    pub cl_a: usize,
    /// `2^d(1 + |x − y|) + |cl(A)| + (3^d + 2)|cl(A)|`.
    pub bound: f64,
}

pub fn skeleton_bound(lattice: &SiteLattice, x: Point, y: Point) -> Result<SkeletonBound, PercolationError> {
    let d = lattice.dim();
    let a: Vec<Site> = segment_sites(x, y, d).into_iter().map(|e| e.0).collect();
    let cl = cl_of(lattice, &a)?;
    let len = norm(sub(y, x));
    let cl_a = cl.len() as f64;
    Ok(SkeletonBound {
        a: a.len(),
        cl_a: cl.len(),
        bound: 2f64.powi(d as i32) * (1.0 + len) + cl_a + (3f64.powi(d as i32) + 2.0) * cl_a,
    })
}

/// Open sites whose cube contains `p`.
fn covering_sites(lattice: &SiteLattice, p: Point) -> Vec<Site> {
    let d = lattice.dim();
    let mut choices: Vec<Vec<i64>> = vec![vec![0]; 3];
    for i in 0..d {
        let lo = (p[i] - 0.5 - EPS).ceil() as i64;
        let hi = (p[i] + 0.5 + EPS).floor() as i64;
        choices[i] = (lo..=hi).collect();
    }
    let mut out = Vec::new();
    for &k in &choices[2] {
        for &j in &choices[1] {
            for &i in &choices[0] {
                out.push([i, j, k]);
            }
        }
    }
    out.retain(|s| lattice.is_open(*s));
    out
}

/// Waypoints from `x` to `y` that stay near the open cluster containing
/// both, walking around obstructing components along their outer boundary.
///
/// Each iteration either finishes, steps `√d` along the segment, or detours:
/// it moves to the last good point before the obstruction, walks the outer
/// boundary of the obstructing component of `window ∖ C` to the boundary site
/// leaving the segment furthest along, and rejoins the segment there.
pub fn detour_skeleton(lattice: &SiteLattice, x: Point, y: Point) -> Result<SkeletonPath, PercolationError> {
    let w = *lattice.window();
    let dim = w.dim;
    let dec = clusters(lattice);
    let xs: Vec<u32> = covering_sites(lattice, x).iter().map(|s| dec.labels[w.index(*s)]).collect();
    let ys: Vec<u32> = covering_sites(lattice, y).iter().map(|s| dec.labels[w.index(*s)]).collect();
    let cluster = xs
        .iter()
        .filter(|l| ys.contains(l))
        .min()
        .copied()
        .ok_or(PercolationError::DifferentClusters)?;
    let in_c = dec.mask(cluster);
    let rest: Vec<bool> = in_c.iter().map(|b| !b).collect();
    let comps = label_components(&w, &rest);

    let len = norm(sub(y, x));
    let u = if len > 0.0 { scale(sub(y, x), 1.0 / len) } else { ORIGIN };
    let at = |s: f64| -> Point {
        if s >= len {
            y
        } else {
            add(x, scale(u, s))
        }
    };
    let a = segment_sites(x, y, dim);
    let is_c = |s: Site| w.index_of(s).map(|i| in_c[i]).unwrap_or(false);
    let sqrt_d = (dim as f64).sqrt();
    let mut path = SkeletonPath::new(dim, x);
    let mut s_i = 0.0f64;
    loop {
        if len - s_i <= sqrt_d + EPS {
            if len - s_i > 0.0 || path.steps() == 0 {
                path.push(y, LegKind::Finish);
            }
            break;
        }
        let s_z = s_i + sqrt_d;
        let x_t = a
            .iter()
            .filter(|e| is_c(e.0) && e.1 <= s_z + EPS && e.2 >= s_i - EPS)
            .map(|e| e.2.min(s_z))
            .fold(f64::NEG_INFINITY, f64::max);
        if x_t >= s_z - EPS {
            path.push(at(s_z), LegKind::Straight);
            s_i = s_z;
            continue;
        }
        if !x_t.is_finite() {
            return Err(PercolationError::DifferentClusters);
        }
        if x_t > s_i + EPS {
            path.push(at(x_t), LegKind::Entry);
        }
        let blocker = a
            .iter()
            .find(|e| !is_c(e.0) && e.1 <= x_t + EPS && e.2 > x_t + EPS)
            .map(|e| e.0)
            .ok_or_else(|| PercolationError::WindowTooSmall("segment leaves the lattice".into()))?;
        let bi = w
            .index_of(blocker)
            .ok_or_else(|| PercolationError::WindowTooSmall(format!("site {blocker:?} is outside the window")))?;
        let f_id = comps.labels[bi].expect("non-cluster site has a component");
        path.detours.push(f_id);
        let f_mask: Vec<bool> = comps.labels.iter().map(|l| *l == Some(f_id)).collect();
        let (_, outer) = boundary_masks(&w, &f_mask);
        let on_outer = |s: Site| w.index_of(s).map(|i| outer[i]).unwrap_or(false);
        let p1 = a
            .iter()
            .filter(|e| on_outer(e.0) && e.1 <= x_t + EPS && e.2 >= x_t - EPS)
            .map(|e| e.0)
            .min()
            .ok_or(PercolationError::NotConnected)?;
        let dir = sub(y, x);
        let pl = a
            .iter()
            .filter(|e| on_outer(e.0))
            .max_by(|p, q| {
                let far = if (p.2 - q.2).abs() > EPS { p.2.total_cmp(&q.2) } else { std::cmp::Ordering::Equal };
                far.then(dot(site_point(p.0), dir).total_cmp(&dot(site_point(q.0), dir)))
                    .then(q.0.cmp(&p.0))
            })
            .copied()
            .expect("p1 is a candidate");
        let walk = boundary_walk(&w, &outer, p1, pl.0).ok_or(PercolationError::NotConnected)?;
        for s in walk {
            path.push(site_point(s), LegKind::Boundary);
        }
        let s_new = pl.2.min(len);
        if s_new <= s_i + EPS {
            return Err(PercolationError::NotConnected);
        }
        path.push(at(s_new), LegKind::Rejoin);
        s_i = s_new;
        if s_i >= len - EPS {
            break;
        }
    }
    Ok(path)
}

/// Shortest path from `from` to `to` inside the sites marked in `allowed`.
fn boundary_walk(w: &super::LatticeWindow, allowed: &[bool], from: Site, to: Site) -> Option<Vec<Site>> {
    let n = w.len();
    let mut prev = vec![usize::MAX; n];
    let start = w.index(from);
    let goal = w.index(to);
    prev[start] = start;
    let mut queue = VecDeque::from([start]);
    while let Some(i) = queue.pop_front() {
        if i == goal {
            break;
        }
        for t in w.neighbors(w.site(i)) {
            let j = w.index(t);
            if allowed[j] && prev[j] == usize::MAX {
                prev[j] = i;
                queue.push_back(j);
            }
        }
    }
    if prev[goal] == usize::MAX {
        return None;
    }
    let mut out = vec![to];
    let mut cur = goal;
    while cur != start {
        cur = prev[cur];
        out.push(w.site(cur));
    }
    out.reverse();
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::super::LatticeWindow;
    use super::*;

    #[test]
    fn segment_sites_axis_aligned() {
        let a = segment_sites([0.0, 0.0, 0.0], [3.0, 0.0, 0.0], 2);
        assert_eq!(a.len(), 4);
        let b = segment_sites([0.0, 0.5, 0.0], [2.0, 0.5, 0.0], 2);
        assert_eq!(b.len(), 6);
    }

    #[test]
    fn open_lattice_goes_straight() {
        let w = LatticeWindow::cube(2, [0, 0, 0], 12);
        let l = SiteLattice::from_fn(w, |_| true);
        let x = [-8.0, -3.0, 0.0];
        let y = [7.5, 4.0, 0.0];
        let p = detour_skeleton(&l, x, y).unwrap();
        let k = (norm(sub(y, x)) / 2f64.sqrt()).ceil() as usize;
        assert_eq!(p.steps(), k);
        assert!(p.legs.iter().all(|l| matches!(l.kind, LegKind::Straight | LegKind::Finish)));
        assert_eq!(p.end(), y);
    }

    #[test]
    fn blob_forces_a_detour() {
        let w = LatticeWindow::cube(2, [0, 0, 0], 10);
        let mut l = SiteLattice::from_fn(w, |_| true);
        for i in -1..=1 {
            for j in -1..=1 {
                l.set([i, j, 0], false);
            }
        }
        let x = [-6.0, 0.2, 0.0];
        let y = [6.0, -0.1, 0.0];
        let p = detour_skeleton(&l, x, y).unwrap();
        assert!(p.max_step() <= 2f64.sqrt() + 1e-9);
        assert_eq!(p.detours.len(), 1);
        let bound = norm(sub(y, x)) / 2f64.sqrt() + 9.0 * 9.0 + 2.0;
        assert!((p.steps() as f64) <= bound);
        for q in &p.waypoints {
            assert!(covering_sites(&l, *q).len() > 0, "{q:?}");
        }
    }

    #[test]
    fn different_clusters_rejected() {
        let w = LatticeWindow::cube(2, [0, 0, 0], 5);
        let mut l = SiteLattice::from_fn(w, |_| true);
        for j in -5..=5 {
            l.set([0, j, 0], false);
        }
        assert_eq!(
            detour_skeleton(&l, [-3.0, 0.0, 0.0], [3.0, 0.0, 0.0]),
            Err(PercolationError::DifferentClusters)
        );
    }
}
