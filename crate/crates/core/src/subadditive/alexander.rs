use std::collections::BTreeMap;

use serde::Serialize;

use super::hull::caratheodory;
use super::oracle::{lattice_point, GoodSet, SubadditiveOracle};
use super::SubadditiveError;
use crate::geom::{dot, norm, Point};

/// Evidence that `αx` lies in the convex hull of the good increments of a
/// skeleton for `nx`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HullCertificate {
    pub x: [i64; 3],
    pub n: usize,
    /// Number of skeleton increments.
    pub m: usize,
    /// `n / m`.
    pub alpha: f64,
    /// At most `d + 1` distinct increments and convex weights with
    /// `Σ p_i v_i = αx`.
    pub support: Vec<([i64; 3], f64)>,
    /// `f̄_x(x)` and the average of `f̄_x` over increments times `m / n`;
    /// the first never exceeds the second when every increment is good.
    pub support_check: (f64, f64),
}

fn scaled(v: [i64; 3], k: i64) -> [i64; 3] {
    [v[0] * k, v[1] * k, v[2] * k]
}

/// Waypoints `round(j·n·x / pieces)` for `j = 0..=pieces`.
pub fn straight_skeleton(x: [i64; 3], n: usize, pieces: usize) -> Vec<[i64; 3]> {
    let end = scaled(x, n as i64);
    (0..=pieces)
        .map(|j| {
            let mut p = [0i64; 3];
            for c in 0..3 {
                p[c] = (end[c] as f64 * j as f64 / pieces as f64).round() as i64;
            }
            p
        })
        .collect()
}

/// Check that `skeleton` runs from 0 to `n·x` through good increments and
/// turn it into a hull certificate for `αx`, `α = n/m`.
pub fn alexander_step1(
    oracle: &dyn SubadditiveOracle,
    good: &GoodSet,
    n: usize,
    skeleton: &[[i64; 3]],
) -> Result<HullCertificate, SubadditiveError> {
    let x = good.x;
    if skeleton.len() < 2 || skeleton[0] != [0, 0, 0] || *skeleton.last().unwrap() != scaled(x, n as i64) {
        return Err(SubadditiveError::InvalidInput(format!("skeleton must run from 0 to {n}·{x:?}")));
    }
    let mut counts: BTreeMap<[i64; 3], usize> = BTreeMap::new();
    for k in 1..skeleton.len() {
        let a = skeleton[k - 1];
        let b = skeleton[k];
        let v = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
        good.check(oracle, v)
            .map_err(|reason| SubadditiveError::BadIncrement { index: k, reason })?;
        *counts.entry(v).or_default() += 1;
    }
    let m = skeleton.len() - 1;
    let xp = lattice_point(x);
    let g = oracle.support(xp);
    let avg = counts.iter().map(|(v, c)| *c as f64 * dot(g, lattice_point(*v))).sum::<f64>() / n as f64;
    let support_check = (dot(g, xp), avg * m as f64 / n as f64);
    let alpha = n as f64 / m as f64;
    let d = oracle.dim();
    let distinct: Vec<[i64; 3]> = counts.keys().copied().collect();
    let pts: Vec<Vec<f64>> = distinct.iter().map(|v| lattice_point(*v)[..d].to_vec()).collect();
    let target: Vec<f64> = xp[..d].iter().map(|c| alpha * c).collect();
    let weights = caratheodory(&pts, &target)?;
    Ok(HullCertificate {
        x,
        n,
        m,
        alpha,
        support: weights.into_iter().map(|(i, p)| (distinct[i], p)).collect(),
        support_check,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReduceReport {
    pub t: u64,
    /// Remainder with `tx = z + Σ increments`.
    pub z: [i64; 3],
    pub increments: Vec<([i64; 3], u64)>,
    pub m: u64,
    /// `f(tx) − f̄(tx)`.
    pub gap: f64,
    /// `f(z) − f̄(z)`.
    pub z_gap: f64,
    /// `f(z) − f̄_x(z) + Σ (f(v_k) − f̄_x(v_k))`, which bounds `gap` by
    /// subadditivity.
    pub bound: f64,
    pub holds: bool,
    /// `(gap − z_gap) / t`.
    pub measured_constant: f64,
    /// `|z| ≤ (d + 1)·K|x|`.
    pub z_small: bool,
}

/// Split `tx` into a short remainder plus `⌊tα⁻¹p_i⌋` copies of each hull
/// increment and evaluate both sides of the gap inequality.
pub fn alexander_reduce(
    oracle: &dyn SubadditiveOracle,
    cert: &HullCertificate,
    good: &GoodSet,
    t: u64,
) -> Result<ReduceReport, SubadditiveError> {
    if cert.x != good.x {
        return Err(SubadditiveError::StaleCertificate { built: cert.x, asked: good.x });
    }
    let x = cert.x;
    let tx = scaled(x, t as i64);
    let mut z = tx;
    let mut increments = Vec::new();
    let mut m = 0;
    for (v, p) in &cert.support {
        let copies = (t as f64 * p / cert.alpha + 1e-9).floor() as u64;
        for c in 0..3 {
            z[c] -= copies as i64 * v[c];
        }
        if copies > 0 {
            increments.push((*v, copies));
            m += copies;
        }
    }
    let g = oracle.support(lattice_point(x));
    let zp = lattice_point(z);
    let gap = oracle.f(tx) - oracle.f_bar(lattice_point(tx));
    let z_gap = oracle.f(z) - oracle.f_bar(zp);
    let excess: f64 = increments
        .iter()
        .map(|(v, c)| *c as f64 * (oracle.f(*v) - dot(g, lattice_point(*v))))
        .sum();
    let bound = oracle.f(z) - dot(g, zp) + excess;
    let scale = 1.0 + oracle.f(tx).abs();
    let d = oracle.dim() as f64;
    Ok(ReduceReport {
        t,
        z,
        increments,
        m,
        gap,
        z_gap,
        bound,
        holds: gap <= bound + 1e-9 * scale,
        measured_constant: (gap - z_gap) / t as f64,
        z_small: norm(zp) <= (d + 1.0) * good.k * norm(lattice_point(x)) + 1e-9,
    })
}

/// One doubling level of the induction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapLevel {
    pub level: usize,
    pub radius: f64,
    /// `sup (f − f̄)` over sample points with `|x| ≤ radius`.
    pub sup_gap: f64,
    /// `sup (f − f̄) / (|x|^ν φ(|x|))` over the same points.
    pub normalized_sup: f64,
    /// Growth of `sup_gap` over the previous level.
    pub slack: f64,
    /// `slack / ((M^ν − 1) R^ν φ(R))` with `R` the previous radius.
    pub normalized_slack: f64,
    pub reduce: ReduceReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub oracle: String,
    pub nu: f64,
    pub factor: u64,
    pub levels: Vec<GapLevel>,
    /// Largest normalized gap seen: the fitted `C` in `f − f̄ ≤ C|x|^ν φ(|x|)`.
    pub constant: f64,
}

fn sample_directions(dim: usize) -> Vec<Point> {
    if dim == 2 {
        (0..16)
            .map(|k| {
                let a = k as f64 * std::f64::consts::TAU / 16.0;
                [a.cos(), a.sin(), 0.0]
            })
            .collect()
    } else {
        let mut out = Vec::new();
        for i in -1i32..=1 {
            for j in -1i32..=1 {
                for k in -1i32..=1 {
                    if (i, j, k) != (0, 0, 0) {
                        let v = [i as f64, j as f64, k as f64];
                        let n = norm(v);
                        out.push([v[0] / n, v[1] / n, v[2] / n]);
                    }
                }
            }
        }
        out
    }
}

/// Doubling induction for `f − f̄`: at level `k` the sup over `|x| ≤ K·M^k`
/// is compared with the previous level, and the reduction step is replayed
/// on `x = K·M^{k−1} e₁` with `t = M` using a skeleton from `skeleton`.
#[allow(clippy::too_many_arguments)]
pub fn gap_from_skeleton(
    oracle: &dyn SubadditiveOracle,
    nu: f64,
    phi: fn(f64) -> f64,
    c: f64,
    base: i64,
    factor: u64,
    levels: usize,
    skeleton: &dyn Fn([i64; 3], usize) -> Option<Vec<[i64; 3]>>,
) -> Result<GapReport, SubadditiveError> {
    if base < 1 || factor < 2 || levels == 0 {
        return Err(SubadditiveError::InvalidInput("need base ≥ 1, factor ≥ 2 and at least one level".into()));
    }
    let dim = oracle.dim();
    let dirs = sample_directions(dim);
    let mut sup_gap = 0.0f64;
    let mut normalized = 0.0f64;
    let mut seen = std::collections::BTreeSet::new();
    let mut visit = |v: [i64; 3], sup_gap: &mut f64, normalized: &mut f64| {
        if !seen.insert(v) {
            return;
        }
        let p = lattice_point(v);
        let r = norm(p);
        let gap = oracle.f(v) - oracle.f_bar(p);
        *sup_gap = sup_gap.max(gap);
        if r >= 1.0 {
            *normalized = normalized.max(gap / (r.powf(nu) * phi(r)));
        }
    };
    let b = base.min(4);
    for i in -b..=b {
        for j in -b..=b {
            let kr = if dim == 3 { b } else { 0 };
            for k in -kr..=kr {
                if i * i + j * j + k * k <= base * base {
                    visit([i, j, k], &mut sup_gap, &mut normalized);
                }
            }
        }
    }
    let mut prev_radius = base as f64;
    let mut out = Vec::new();
    for level in 1..=levels {
        let radius = prev_radius * factor as f64;
        let before = sup_gap;
        for s in [0.25, 0.5, 0.75, 1.0] {
            let r = radius * s;
            if r <= prev_radius * 0.999 {
                continue;
            }
            for d in &dirs {
                let v = [(r * d[0]).round() as i64, (r * d[1]).round() as i64, (r * d[2]).round() as i64];
                if norm(lattice_point(v)) <= radius + 1e-9 {
                    visit(v, &mut sup_gap, &mut normalized);
                }
            }
        }
        let x = [prev_radius.round() as i64, 0, 0];
        let good = GoodSet { x, nu, phi, c, k: 2.0 };
        let sk = skeleton(x, 1).ok_or(SubadditiveError::NoSkeleton(x))?;
        let cert = alexander_step1(oracle, &good, 1, &sk)?;
        let reduce = alexander_reduce(oracle, &cert, &good, factor)?;
        let slack = sup_gap - before;
        let scale = ((factor as f64).powf(nu) - 1.0) * prev_radius.powf(nu) * phi(prev_radius);
        out.push(GapLevel {
            level,
            radius,
            sup_gap,
            normalized_sup: normalized,
            slack,
            normalized_slack: slack / scale,
            reduce,
        });
        prev_radius = radius;
    }
    Ok(GapReport {
        oracle: oracle.name().to_string(),
        nu,
        factor,
        levels: out,
        constant: normalized,
    })
}

#[cfg(test)]
mod tests {
    use super::super::oracle::{NormPlusLog, NormPlusRoot, Polyhedral};
    use super::*;

    fn one(_: f64) -> f64 {
        1.0
    }

    fn good(x: [i64; 3]) -> GoodSet {
        GoodSet { x, nu: 0.5, phi: one, c: 2.0, k: 2.0 }
    }

    #[test]
    fn identical_increments_give_alpha_one() {
        let o = NormPlusRoot { dim: 2 };
        let x = [5, 2, 0];
        let sk: Vec<[i64; 3]> = (0..=4).map(|j| scaled(x, j)).collect();
        let cert = alexander_step1(&o, &good(x), 4, &sk).unwrap();
        assert_eq!(cert.alpha, 1.0);
        let r = alexander_reduce(&o, &cert, &good(x), 1).unwrap();
        assert_eq!(r.z, [0, 0, 0]);
        assert_eq!(r.increments, vec![(x, 1)]);
    }

    #[test]
    fn unit_steps_toward_an_axis_point() {
        let o = NormPlusRoot { dim: 2 };
        let x = [7, 0, 0];
        let n = 3;
        let sk = straight_skeleton(x, n, 21);
        let cert = alexander_step1(&o, &good(x), n, &sk).unwrap();
        assert_eq!(cert.m, n * 7);
        assert!(cert.support_check.0 <= cert.support_check.1 + 1e-12);
    }

    #[test]
    fn overshooting_increment_is_named() {
        let o = NormPlusRoot { dim: 2 };
        let x = [4, 0, 0];
        let sk = vec![[0, 0, 0], [5, 0, 0], [4, 0, 0]];
        match alexander_step1(&o, &good(x), 1, &sk) {
            Err(SubadditiveError::BadIncrement { index, .. }) => assert_eq!(index, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reduction_inequality_holds() {
        let o = NormPlusRoot { dim: 2 };
        let x = [50, 0, 0];
        let g = GoodSet { x, nu: 0.5, phi: one, c: 1.0, k: 2.0 };
        let cert = alexander_step1(&o, &g, 1, &straight_skeleton(x, 1, 5)).unwrap();
        let r = alexander_reduce(&o, &cert, &g, 4).unwrap();
        assert!(r.holds && r.z_small);
        let stale = GoodSet { x: [49, 0, 0], ..g };
        assert!(matches!(
            alexander_reduce(&o, &cert, &stale, 4),
            Err(SubadditiveError::StaleCertificate { .. })
        ));
    }

    #[test]
    fn doubling_reports() {
        let sk = |x: [i64; 3], n: usize| Some(straight_skeleton(x, n, 1));
        let root = gap_from_skeleton(&NormPlusRoot { dim: 2 }, 0.5, one, 2.0, 4, 2, 5, &sk).unwrap();
        assert!(root.constant <= 1.0 + 1e-9);
        let flat = gap_from_skeleton(&Polyhedral::l1(2), 0.5, one, 2.0, 4, 2, 5, &sk).unwrap();
        assert!(flat.levels.iter().all(|l| l.slack == 0.0 && l.sup_gap == 0.0));
        let log = gap_from_skeleton(&NormPlusLog { dim: 2 }, 0.5, one, 2.0, 4, 2, 5, &sk).unwrap();
        let s: Vec<f64> = log.levels.iter().map(|l| l.normalized_slack).collect();
        assert!(s.windows(2).all(|w| w[1] < w[0]), "{s:?}");
    }
}
