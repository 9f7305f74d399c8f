use super::SubadditiveError;

const EPS: f64 = 1e-12;

/// Convex weights with `Σλ_j p_j = target`, found as a basic feasible
/// solution of a phase-one simplex (so at most `d + 1` are nonzero).
pub fn convex_feasible(points: &[Vec<f64>], target: &[f64]) -> Result<Vec<f64>, SubadditiveError> {
    let d = target.len();
    let n = points.len();
    if n == 0 {
        return Err(SubadditiveError::InvalidInput("no points".into()));
    }
    if let Some(i) = points.iter().position(|p| p.len() != d) {
        return Err(SubadditiveError::InvalidInput(format!("point {i} has the wrong dimension")));
    }
    let m = d + 1;
    let cols = n + m + 1;
    let rhs = cols - 1;
    let mut t = vec![vec![0.0; cols]; m];
    for (r, row) in t.iter_mut().enumerate() {
        let b = if r < d { target[r] } else { 1.0 };
        let sign = if b < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            row[j] = sign * if r < d { points[j][r] } else { 1.0 };
        }
        row[n + r] = 1.0;
        row[rhs] = sign * b;
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    let mut cost = vec![0.0; cols];
    for row in &t {
        for j in 0..n {
            cost[j] -= row[j];
        }
        cost[rhs] -= row[rhs];
    }
    loop {
        let Some(enter) = (0..n + m).find(|j| cost[*j] < -EPS) else { break };
        let mut leave: Option<usize> = None;
        for i in 0..m {
            if t[i][enter] > EPS {
                let ratio = t[i][rhs] / t[i][enter];
                let better = match leave {
                    None => true,
                    Some(l) => {
                        let lr = t[l][rhs] / t[l][enter];
                        ratio < lr - EPS || (ratio <= lr + EPS && basis[i] < basis[l])
                    }
                };
                if better {
                    leave = Some(i);
                }
            }
        }
        let Some(l) = leave else { break };
        let p = t[l][enter];
        for v in t[l].iter_mut() {
            *v /= p;
        }
        let pivot_row = t[l].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != l && row[enter].abs() > 0.0 {
                let f = row[enter];
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        let f = cost[enter];
        for (v, pv) in cost.iter_mut().zip(&pivot_row) {
            *v -= f * pv;
        }
        basis[l] = enter;
    }
    let mut w = vec![0.0; n];
    for (i, &b) in basis.iter().enumerate() {
        if b < n {
            w[b] = t[i][rhs].max(0.0);
        }
    }
    let total: f64 = w.iter().sum();
    if total > 0.0 {
        for x in w.iter_mut() {
            *x /= total;
        }
    }
    let residual = reconstruction_error(points, target, &w);
    if residual > 1e-9 {
        return Err(SubadditiveError::OutsideHull { residual });
    }
    Ok(w)
}

fn reconstruction_error(points: &[Vec<f64>], target: &[f64], w: &[f64]) -> f64 {
    let mut err = (w.iter().sum::<f64>() - 1.0).abs();
    for c in 0..target.len() {
        let s: f64 = points.iter().zip(w).map(|(p, a)| a * p[c]).sum();
        err = err.max((s - target[c]).abs());
    }
    err
}

/// At most `d + 1` of `points` with convex weights reproducing `target`.
pub fn caratheodory(points: &[Vec<f64>], target: &[f64]) -> Result<Vec<(usize, f64)>, SubadditiveError> {
    let w = convex_feasible(points, target)?;
    let out: Vec<(usize, f64)> = w.into_iter().enumerate().filter(|(_, a)| *a > 0.0).collect();
    debug_assert!(out.len() <= target.len() + 1);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng;
    use rand::Rng;

    fn rebuild(points: &[Vec<f64>], w: &[(usize, f64)], d: usize) -> Vec<f64> {
        (0..d).map(|c| w.iter().map(|(i, a)| a * points[*i][c]).sum()).collect()
    }

    #[test]
    fn target_at_a_vertex() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(caratheodory(&pts, &[1.0, 0.0]).unwrap(), vec![(1, 1.0)]);
    }

    #[test]
    fn square_center() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]];
        let w = caratheodory(&pts, &[0.5, 0.5]).unwrap();
        assert!(w.len() <= 3);
        let r = rebuild(&pts, &w, 2);
        assert!((r[0] - 0.5).abs() < 1e-9 && (r[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn random_mean_in_3d() {
        let mut r = rng(8);
        let pts: Vec<Vec<f64>> = (0..20).map(|_| (0..3).map(|_| r.gen::<f64>() * 4.0 - 2.0).collect()).collect();
        let mean: Vec<f64> = (0..3).map(|c| pts.iter().map(|p| p[c]).sum::<f64>() / 20.0).collect();
        let w = caratheodory(&pts, &mean).unwrap();
        assert!(w.len() <= 4);
        assert!(w.iter().all(|(_, a)| *a >= 0.0));
        let back = rebuild(&pts, &w, 3);
        for c in 0..3 {
            assert!((back[c] - mean[c]).abs() < 1e-9);
        }
    }

    #[test]
    fn outside_hull_is_an_error() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!(matches!(caratheodory(&pts, &[1.0, 1.0]), Err(SubadditiveError::OutsideHull { .. })));
    }
}
