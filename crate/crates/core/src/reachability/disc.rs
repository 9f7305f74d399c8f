use std::collections::HashSet;

use crate::geom::Point;

/// Lattice points `z = k/√d` with `ball(z, 1) ∩ E ≠ ∅`, returned as sorted
/// integer coordinates `k`.
pub fn disc_points(points: &[Point], dim: usize) -> Vec<[i64; 3]> {
    let s = (dim as f64).sqrt();
    let mut out: HashSet<[i64; 3]> = HashSet::new();
    for p in points {
        let mut lo = [0i64; 3];
        let mut hi = [0i64; 3];
        for i in 0..dim {
            lo[i] = ((p[i] - 1.0) * s).ceil() as i64 - 1;
            hi[i] = ((p[i] + 1.0) * s).floor() as i64 + 1;
        }
        for k2 in lo[2]..=hi[2] {
            for k1 in lo[1]..=hi[1] {
                for k0 in lo[0]..=hi[0] {
                    let k = [k0, k1, k2];
                    let mut q = 0.0;
                    for i in 0..dim {
                        let c = k[i] as f64 / s - p[i];
                        q += c * c;
                    }
                    if q <= 1.0 + 1e-12 {
                        out.insert(k);
                    }
                }
            }
        }
    }
    let mut v: Vec<[i64; 3]> = out.into_iter().collect();
    v.sort_unstable();
    v
}

/// `disc` of a grid mask.
pub fn disc(cfg: &super::GridConfig, mask: &[bool]) -> Vec<[i64; 3]> {
    let pts: Vec<Point> = mask
        .iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .map(|(i, _)| cfg.point(i))
        .collect();
    disc_points(&pts, cfg.dim)
}

/// Position of the lattice point with integer coordinates `k`.
pub fn disc_position(k: [i64; 3], dim: usize) -> Point {
    let s = (dim as f64).sqrt();
    let mut p = [0.0; 3];
    for i in 0..dim {
        p[i] = k[i] as f64 / s;
    }
    p
}
