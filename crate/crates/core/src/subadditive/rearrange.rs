use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive, Zero};

use super::SubadditiveError;

/// Arithmetic used by [`rearrange`]: exact for rationals, tolerant for floats.
pub trait Scalar: Clone + PartialOrd + Num + Signed + Debug {
    fn from_usize(n: usize) -> Self;
    fn to_f64(&self) -> f64;
    /// Certificate tolerance; zero for exact arithmetic.
    fn tolerance() -> Self;
    /// Snap values that are numerically 0 or 1.
    fn snap(&mut self) {}
}

impl Scalar for f64 {
    fn from_usize(n: usize) -> Self {
        n as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn tolerance() -> Self {
        1e-9
    }
    fn snap(&mut self) {
        if self.abs() < 1e-12 {
            *self = 0.0;
        } else if (*self - 1.0).abs() < 1e-12 {
            *self = 1.0;
        }
    }
}

impl Scalar for BigRational {
    fn from_usize(n: usize) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn tolerance() -> Self {
        BigRational::zero()
    }
}

fn pivot_tol<T: Scalar>() -> T {
    if T::tolerance().is_zero() {
        T::zero()
    } else {
        T::tolerance() * T::tolerance() * T::from_usize(1000)
    }
}

/// A nonzero `k` with `M k = 0`, when `M` has more columns than rank.
fn kernel_vector<T: Scalar>(mut m: Vec<Vec<T>>) -> Option<Vec<T>> {
    let rows = m.len();
    let cols = m.first().map(|r| r.len()).unwrap_or(0);
    let tol = pivot_tol::<T>();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let best = (r..rows)
            .max_by(|a, b| m[*a][c].abs().partial_cmp(&m[*b][c].abs()).unwrap_or(std::cmp::Ordering::Equal))?;
        if m[best][c].abs() <= tol {
            continue;
        }
        m.swap(r, best);
        let p = m[r][c].clone();
        for j in c..cols {
            m[r][j] = m[r][j].clone() / p.clone();
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in c..cols {
                    let delta = f.clone() * m[r][j].clone();
                    m[i][j] = m[i][j].clone() - delta;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    let free = (0..cols).find(|c| !pivots.contains(c))?;
    let mut k = vec![T::zero(); cols];
    k[free] = T::one();
    for (row, &pc) in pivots.iter().enumerate() {
        k[pc] = -m[row][free].clone();
    }
    Some(k)
}

fn is_fractional<T: Scalar>(a: &T) -> bool {
    *a > T::zero() && *a < T::one()
}

/// Move `alpha` inside the solution set of its equations until at most
/// `d + 1` coordinates are strictly between 0 and 1.
fn reduce_to_basic<T: Scalar>(alpha: &mut [T], vectors: &[&Vec<T>], d: usize) {
    loop {
        let frac: Vec<usize> = (0..alpha.len()).filter(|i| is_fractional(&alpha[*i])).collect();
        if frac.len() <= d + 1 {
            return;
        }
        let mut m = vec![Vec::with_capacity(frac.len()); d + 1];
        for &i in &frac {
            for (c, row) in m.iter_mut().take(d).enumerate() {
                row.push(vectors[i][c].clone());
            }
            m[d].push(T::one());
        }
        let k = kernel_vector(m).expect("more columns than rows leaves a kernel");
        let mut step: Option<(T, usize)> = None;
        for (j, kj) in k.iter().enumerate() {
            if kj.is_zero() {
                continue;
            }
            let a = &alpha[frac[j]];
            let room = if kj.is_positive() {
                (T::one() - a.clone()) / kj.clone()
            } else {
                a.clone() / -kj.clone()
            };
            if step.as_ref().map(|s| room < s.0).unwrap_or(true) {
                step = Some((room, j));
            }
        }
        let (t, hit) = step.expect("kernel vector is nonzero");
        for (j, kj) in k.iter().enumerate() {
            let i = frac[j];
            alpha[i] = alpha[i].clone() + t.clone() * kj.clone();
            alpha[i].snap();
        }
        alpha[frac[hit]] = if k[hit].is_positive() { T::one() } else { T::zero() };
    }
}

fn certificate_residual<T: Scalar>(alpha: &[T], vectors: &[&Vec<T>], x: &[T], total: usize) -> T {
    let d = x.len();
    let total = T::from_usize(total);
    let mut worst = (alpha.iter().fold(T::zero(), |s, a| s + a.clone()) - total.clone()).abs();
    for c in 0..d {
        let s = alpha
            .iter()
            .zip(vectors)
            .fold(T::zero(), |s, (a, v)| s + a.clone() * v[c].clone());
        let r = (s - total.clone() * x[c].clone()).abs();
        if r > worst {
            worst = r;
        }
    }
    for a in alpha {
        let out = if a.is_negative() {
            -a.clone()
        } else if *a > T::one() {
            a.clone() - T::one()
        } else {
            T::zero()
        };
        if out > worst {
            worst = out;
        }
    }
    worst
}

/// Order of `vectors` (each of norm at most 1, summing to `n·x`) whose
/// prefix sums stay within `2d` of `k·x`.
///
/// Works from the back: keeps weights `α ∈ [0,1]` with `Σα_i v_i = (k−d)x`
/// and `Σα_i = k−d` on the `k` unplaced vectors, lowers the target to
/// `k−1−d`, walks to a basic solution, and places last a vector whose
/// weight dropped to zero.
pub fn rearrange<T: Scalar>(vectors: &[Vec<T>], x: &[T]) -> Result<Vec<usize>, SubadditiveError> {
    let n = vectors.len();
    let d = x.len();
    let tol = T::tolerance();
    let slack = tol.clone() * T::from_usize(n.max(1));
    for (i, v) in vectors.iter().enumerate() {
        if v.len() != d {
            return Err(SubadditiveError::InvalidInput(format!("vector {i} has {} coordinates, expected {d}", v.len())));
        }
        let sq = v.iter().fold(T::zero(), |s, c| s + c.clone() * c.clone());
        if sq > T::one() + tol.clone() {
            return Err(SubadditiveError::InvalidInput(format!("vector {i} lies outside the unit ball")));
        }
    }
    let refs: Vec<&Vec<T>> = vectors.iter().collect();
    let ones = vec![T::one(); n];
    if certificate_residual(&ones, &refs, x, n) > slack {
        return Err(SubadditiveError::InvalidInput("vectors do not sum to n·x".into()));
    }
    if n <= d {
        return Ok((0..n).collect());
    }
    let mut active: Vec<usize> = (0..n).collect();
    let mut alpha = vec![T::from_usize(n - d) / T::from_usize(n); n];
    let mut tail = Vec::with_capacity(n);
    for k in ((d + 1)..=n).rev() {
        let scale = T::from_usize(k - 1 - d) / T::from_usize(k - d);
        for a in alpha.iter_mut() {
            *a = a.clone() * scale.clone();
            a.snap();
        }
        let vs: Vec<&Vec<T>> = active.iter().map(|i| &vectors[*i]).collect();
        reduce_to_basic(&mut alpha, &vs, d);
        let (pos, _) = alpha
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))
            .expect("active set is non-empty");
        if alpha[pos] > tol {
            return Err(SubadditiveError::Infeasible(format!(
                "no zero weight among {k} vectors (smallest {:?})",
                alpha[pos]
            )));
        }
        tail.push(active.remove(pos));
        alpha.remove(pos);
        let vs: Vec<&Vec<T>> = active.iter().map(|i| &vectors[*i]).collect();
        let res = certificate_residual(&alpha, &vs, x, k - 1 - d);
        if res > slack {
            return Err(SubadditiveError::Infeasible(format!("certificate residual {:?} after removal", res)));
        }
    }
    active.extend(tail.into_iter().rev());
    Ok(active)
}

/// `max_k |Σ_{i≤k} v_{σ(i)} − k·x|` for the given order.
pub fn prefix_deviation(vectors: &[Vec<f64>], x: &[f64], order: &[usize]) -> f64 {
    let d = x.len();
    let mut s = vec![0.0; d];
    let mut worst = 0.0f64;
    for (k, &i) in order.iter().enumerate() {
        for c in 0..d {
            s[c] += vectors[i][c];
        }
        let dev = (0..d)
            .map(|c| (s[c] - (k + 1) as f64 * x[c]).powi(2))
            .sum::<f64>()
            .sqrt();
        worst = worst.max(dev);
    }
    worst
}

/// Smallest achievable prefix deviation over all orders (branch and bound).
pub fn best_prefix_deviation(vectors: &[Vec<f64>], x: &[f64]) -> f64 {
    fn go(vs: &[Vec<f64>], x: &[f64], used: &mut [bool], s: &mut Vec<f64>, k: usize, cur: f64, best: &mut f64) {
        if cur >= *best {
            return;
        }
        if k == vs.len() {
            *best = cur;
            return;
        }
        for i in 0..vs.len() {
            if used[i] {
                continue;
            }
            used[i] = true;
            for c in 0..x.len() {
                s[c] += vs[i][c];
            }
            let dev = (0..x.len())
                .map(|c| (s[c] - (k + 1) as f64 * x[c]).powi(2))
                .sum::<f64>()
                .sqrt();
            go(vs, x, used, s, k + 1, cur.max(dev), best);
            for c in 0..x.len() {
                s[c] -= vs[i][c];
            }
            used[i] = false;
        }
    }
    let mut best = f64::INFINITY;
    let mut used = vec![false; vectors.len()];
    let mut s = vec![0.0; x.len()];
    go(vectors, x, &mut used, &mut s, 0, 0.0, &mut best);
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng;
    use rand::Rng;

    fn is_permutation(p: &[usize], n: usize) -> bool {
        let mut q = p.to_vec();
        q.sort_unstable();
        q == (0..n).collect::<Vec<_>>()
    }

    #[test]
    fn identical_vectors_have_zero_deviation() {
        let v = vec![vec![0.3, 0.4]; 7];
        let p = rearrange(&v, &[0.3, 0.4]).unwrap();
        assert!(is_permutation(&p, 7));
        assert!(prefix_deviation(&v, &[0.3, 0.4], &p) < 1e-12);
    }

    #[test]
    fn cross_example() {
        let v = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]];
        let p = rearrange(&v, &[0.0, 0.0]).unwrap();
        assert!(prefix_deviation(&v, &[0.0, 0.0], &p) <= 4.0);
        assert!((best_prefix_deviation(&v, &[0.0, 0.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_recentered_instances() {
        let mut r = rng(3);
        for _ in 0..200 {
            let n = 10;
            let mut v: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    let a = r.gen::<f64>() * std::f64::consts::TAU;
                    let m = r.gen::<f64>().sqrt() * 0.5;
                    vec![m * a.cos(), m * a.sin()]
                })
                .collect();
            let mean: Vec<f64> = (0..2).map(|c| v.iter().map(|x| x[c]).sum::<f64>() / n as f64).collect();
            for x in v.iter_mut() {
                x[0] -= mean[0];
                x[1] -= mean[1];
            }
            let p = rearrange(&v, &[0.0, 0.0]).unwrap();
            assert!(is_permutation(&p, n));
            assert!(prefix_deviation(&v, &[0.0, 0.0], &p) <= 4.0 + 1e-9);
        }
    }

    #[test]
    fn exact_rationals() {
        let q = |a: i64, b: i64| BigRational::new(a.into(), b.into());
        let v = vec![
            vec![q(1, 1), q(0, 1)],
            vec![q(1, 2), q(1, 2)],
            vec![q(-1, 3), q(2, 3)],
            vec![q(0, 1), q(-1, 1)],
            vec![q(1, 3), q(-1, 6)],
        ];
        let x = vec![q(3, 10), q(0, 1)];
        let p = rearrange(&v, &x).unwrap();
        assert!(is_permutation(&p, 5));
        let vf: Vec<Vec<f64>> = v.iter().map(|r| r.iter().map(Scalar::to_f64).collect()).collect();
        assert!(prefix_deviation(&vf, &[0.3, 0.0], &p) <= 4.0);
    }

    #[test]
    fn bad_sum_is_rejected() {
        let v = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!(matches!(rearrange(&v, &[0.0, 0.0]), Err(SubadditiveError::InvalidInput(_))));
    }
}
