use std::collections::HashMap;

use crate::geom::{normalize, Point};

/// Unit directions with a triangulation of the sphere: consecutive pairs
/// in d = 2, icosphere triangles in d = 3.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionGrid {
    pub dim: usize,
    pub dirs: Vec<Point>,
    pub faces: Vec<Vec<usize>>,
}

impl DirectionGrid {
    /// `n` equally spaced angles, counter-clockwise from `e₁`.
    pub fn circle(n: usize) -> Self {
        let dirs = (0..n)
            .map(|k| {
                let a = k as f64 * std::f64::consts::TAU / n as f64;
                [a.cos(), a.sin(), 0.0]
            })
            .collect();
        let faces = (0..n).map(|k| vec![k, (k + 1) % n]).collect();
        DirectionGrid { dim: 2, dirs, faces }
    }

    /// Icosahedron with each face split into four `level` times.
    pub fn icosphere(level: usize) -> Self {
        let t = (1.0 + 5f64.sqrt()) / 2.0;
        let mut dirs: Vec<Point> = [
            [-1.0, t, 0.0],
            [1.0, t, 0.0],
            [-1.0, -t, 0.0],
            [1.0, -t, 0.0],
            [0.0, -1.0, t],
            [0.0, 1.0, t],
            [0.0, -1.0, -t],
            [0.0, 1.0, -t],
            [t, 0.0, -1.0],
            [t, 0.0, 1.0],
            [-t, 0.0, -1.0],
            [-t, 0.0, 1.0],
        ]
        .into_iter()
        .map(normalize)
        .collect();
        let mut faces: Vec<[usize; 3]> = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        for _ in 0..level {
            let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
            let mut midpoint = |a: usize, b: usize, dirs: &mut Vec<Point>| {
                let key = (a.min(b), a.max(b));
                *mid.entry(key).or_insert_with(|| {
                    let p = dirs[a];
                    let q = dirs[b];
                    dirs.push(normalize([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                    dirs.len() - 1
                })
            };
            let mut next = Vec::with_capacity(faces.len() * 4);
            for [a, b, c] in faces {
                let ab = midpoint(a, b, &mut dirs);
                let bc = midpoint(b, c, &mut dirs);
                let ca = midpoint(c, a, &mut dirs);
                next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
            }
            faces = next;
        }
        DirectionGrid {
            dim: 3,
            dirs,
            faces: faces.into_iter().map(|f| f.to_vec()).collect(),
        }
    }

    /// The default grid: 64 angles in d = 2, a level-2 icosphere in d = 3.
    pub fn standard(dim: usize) -> Self {
        if dim == 3 {
            DirectionGrid::icosphere(2)
        } else {
            DirectionGrid::circle(64)
        }
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::norm;

    #[test]
    fn icosphere_counts() {
        let g = DirectionGrid::icosphere(2);
        assert_eq!(g.len(), 162);
        assert_eq!(g.faces.len(), 320);
        assert!(g.dirs.iter().all(|d| (norm(*d) - 1.0).abs() < 1e-12));
    }

    #[test]
    fn circle_is_closed() {
        let g = DirectionGrid::circle(64);
        assert_eq!(g.faces.last().unwrap(), &vec![63, 0]);
    }
}
