use std::collections::BTreeMap;

use serde::Serialize;

use super::shape::ShapeEstimate;
use super::HomogError;
use crate::field::Field;
use crate::geom::{dist, norm, sub, Point};
use crate::reachability::{passage_times, GridConfig};
use crate::skeleton::{LegKind, SkeletonPath};

/// Source of `E[θ(0, v)]` with its standard error.
pub trait PassageOracle: Sync {
    fn expected(&self, v: Point) -> Option<(f64, f64)>;
}

/// Oracle backed by a closure.
pub struct FnOracle<F>(pub F);

impl<F: Fn(Point) -> Option<(f64, f64)> + Sync> PassageOracle for FnOracle<F> {
    fn expected(&self, v: Point) -> Option<(f64, f64)> {
        (self.0)(v)
    }
}

/// `E[θ(0, v)]` interpolated from a Monte Carlo table on an angle grid
/// (d = 2): linear in angle, linear in radius, and proportional to `|v|`
/// below the smallest radius. Increments beyond the largest radius are
/// not covered.
#[derive(Debug, Clone)]
pub struct EmpiricalPassageOracle {
    radii: Vec<f64>,
    mean: Vec<Vec<f64>>,
    se: Vec<Vec<f64>>,
    n: usize,
}

impl EmpiricalPassageOracle {
    pub fn from_estimate(est: &ShapeEstimate) -> Result<Self, HomogError> {
        if est.dim != 2 {
            return Err(HomogError::Unsupported("the empirical passage oracle is two-dimensional".into()));
        }
        let n = est.grid.len();
        let equal = est.grid.dirs.iter().enumerate().all(|(k, d)| {
            let a = k as f64 * std::f64::consts::TAU / n as f64;
            (d[0] - a.cos()).abs() < 1e-9 && (d[1] - a.sin()).abs() < 1e-9
        });
        if !equal {
            return Err(HomogError::Unsupported("the oracle needs an equal-angle direction grid".into()));
        }
        Ok(EmpiricalPassageOracle {
            radii: est.radii.clone(),
            mean: est.mean_passage.clone(),
            se: est.passage_se.clone(),
            n,
        })
    }

    fn at_radius(&self, table: &[Vec<f64>], k: usize, v: Point) -> f64 {
        let a = v[1].atan2(v[0]).rem_euclid(std::f64::consts::TAU);
        let pos = a / std::f64::consts::TAU * self.n as f64;
        let i = (pos.floor() as usize) % self.n;
        let w = pos - pos.floor();
        table[k][i] * (1.0 - w) + table[k][(i + 1) % self.n] * w
    }

    fn interpolate(&self, table: &[Vec<f64>], v: Point) -> Option<f64> {
        let r = norm(v);
        if r == 0.0 {
            return Some(0.0);
        }
        let last = *self.radii.last()?;
        if r > last * (1.0 + 1e-12) {
            return None;
        }
        if r <= self.radii[0] {
            return Some(self.at_radius(table, 0, v) * r / self.radii[0]);
        }
        let k = self.radii.iter().position(|x| *x >= r).unwrap_or(self.radii.len() - 1);
        let (r0, r1) = (self.radii[k - 1], self.radii[k]);
        let w = (r - r0) / (r1 - r0);
        Some(self.at_radius(table, k - 1, v) * (1.0 - w) + self.at_radius(table, k, v) * w)
    }
}

impl PassageOracle for EmpiricalPassageOracle {
    fn expected(&self, v: Point) -> Option<(f64, f64)> {
        Some((self.interpolate(&self.mean, v)?, self.interpolate(&self.se, v)?))
    }
}

/// Waypoints along `path`, each the furthest later path point within
/// `max_leg` of the previous waypoint.
pub fn greedy_skeleton(dim: usize, path: &[Point], max_leg: f64) -> SkeletonPath {
    let mut sk = SkeletonPath::new(dim, path[0]);
    let mut i = 0;
    while i + 1 < path.len() {
        let here = path[i];
        let mut j = i + 1;
        while j + 1 < path.len() && dist(path[j + 1], here) <= max_leg {
            j += 1;
        }
        sk.push(path[j], LegKind::Greedy);
        i = j;
    }
    sk
}

/// Outcome of the separation check for same-scale legs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reasonableness {
    pub passed: bool,
    /// Legs per dyadic length bucket `[2^k, 2^{k+1})`.
    pub buckets: BTreeMap<i32, usize>,
    /// Leg pairs that are far apart in bucket order but too close in space.
    pub violations: Vec<(usize, usize)>,
}

/// Whether legs `i < j` of one dyadic length bucket with at least `η − 1`
/// bucket-mates between them satisfy `speed·(E_i + E_j) + 1 ≤ |v_i − v_j|`,
/// where `v_i` is the end of leg `i` and `E_i` its expected passage time.
pub fn reasonableness(sk: &SkeletonPath, expected: &[f64], speed: f64, eta: usize) -> Reasonableness {
    let mut buckets: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
    for (i, leg) in sk.legs.iter().enumerate() {
        if leg.length > 0.0 {
            buckets.entry(leg.length.log2().floor() as i32).or_default().push(i);
        }
    }
    let mut violations = Vec::new();
    for members in buckets.values() {
        for a in 0..members.len() {
            for b in (a + eta.max(1))..members.len() {
                let (i, j) = (members[a], members[b]);
                let gap = dist(sk.waypoints[i + 1], sk.waypoints[j + 1]);
                if speed * (expected[i] + expected[j]) + 1.0 > gap {
                    violations.push((i, j));
                }
            }
        }
    }
    Reasonableness {
        passed: violations.is_empty(),
        buckets: buckets.into_iter().map(|(k, v)| (k, v.len())).collect(),
        violations,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SkeletonErrorReport {
    /// `Σ max(0, E[θ(v_i, v_{i+1})] − θ(v_i, v_{i+1}))`.
    pub error: f64,
    pub expected: Vec<f64>,
    pub expected_se: Vec<f64>,
    pub actual: Vec<f64>,
    pub reasonable: Reasonableness,
}

/// Error of a skeleton in one environment against an oracle for the mean
/// passage time, together with its separation verdict. The per-leg
/// contributions are written into `sk`.
pub fn skeleton_error(
    field: &Field,
    sk: &mut SkeletonPath,
    oracle: &dyn PassageOracle,
    eta: usize,
    proto: &GridConfig,
) -> Result<SkeletonErrorReport, HomogError> {
    let mut expected = Vec::with_capacity(sk.legs.len());
    let mut expected_se = Vec::with_capacity(sk.legs.len());
    let mut actual = Vec::with_capacity(sk.legs.len());
    let mut error = 0.0;
    for i in 0..sk.legs.len() {
        let (a, b) = (sk.waypoints[i], sk.waypoints[i + 1]);
        let inc = sub(b, a);
        let (e, se) = oracle.expected(inc).ok_or(HomogError::OracleGap(inc))?;
        let t = passage_times(field, a, &[b], proto, None)?.0[0];
        let c = (e - t).max(0.0);
        sk.legs[i].error = Some(c);
        error += c;
        expected.push(e);
        expected_se.push(se);
        actual.push(t);
    }
    let reasonable = reasonableness(sk, &expected, field.bounds().speed_limit(), eta);
    Ok(SkeletonErrorReport {
        error,
        expected,
        expected_se,
        actual,
        reasonable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::ORIGIN;

    fn proto() -> GridConfig {
        GridConfig::centered(2, 0.25, 0.1, ORIGIN, 1.0)
    }

    #[test]
    fn zero_field_error_vanishes() {
        let f = Field::zero(2);
        let p = proto();
        let oracle = FnOracle(|v: Point| passage_times(&Field::zero(2), ORIGIN, &[v], &proto(), None).ok().map(|r| (r.0[0], 0.0)));
        let mut sk = SkeletonPath::from_points(
            2,
            vec![[0.0; 3], [3.0, 1.0, 0.0], [5.5, -2.0, 0.0], [9.0, 0.25, 0.0]],
            LegKind::Greedy,
        );
        let r = skeleton_error(&f, &mut sk, &oracle, 2, &p).unwrap();
        assert_eq!(r.error, 0.0);
    }

    #[test]
    fn separated_same_scale_legs_pass() {
        let sk = SkeletonPath::from_points(
            2,
            vec![[0.0; 3], [3.0, 0.0, 0.0], [40.0, 0.0, 0.0], [43.0, 0.0, 0.0]],
            LegKind::Greedy,
        );
        let r = reasonableness(&sk, &[3.0, 37.0, 3.0], 2.0, 1);
        assert_eq!(r.buckets.get(&1), Some(&2));
        assert!(r.passed, "{r:?}");
        let close = SkeletonPath::from_points(2, vec![[0.0; 3], [3.0, 0.0, 0.0], [6.0, 0.0, 0.0]], LegKind::Greedy);
        assert!(!reasonableness(&close, &[3.0, 3.0], 2.0, 1).passed);
    }

    #[test]
    fn greedy_skeleton_respects_leg_bound() {
        let path: Vec<Point> = (0..=40).map(|i| [i as f64 * 0.5, (i as f64 * 0.3).sin(), 0.0]).collect();
        let sk = greedy_skeleton(2, &path, 3.0);
        assert!(sk.max_step() <= 3.0);
        assert_eq!(sk.end(), path[40]);
    }
}
