use std::fmt;

use serde::Serialize;

use crate::geom::{dot, norm, Point, ORIGIN};

/// A nonnegative subadditive `f` on ℤ^d together with its homogeneous limit
/// `f̄` and a supporting linear functional `f̄_x`.
pub trait SubadditiveOracle: Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn f(&self, v: [i64; 3]) -> f64;
    fn f_bar(&self, x: Point) -> f64;
    /// Gradient `g` with `f̄_x(v) = g·v`, `g·x = f̄(x)` and `g·v ≤ f̄(v)`.
    /// Depends only on the direction of `x`.
    fn support(&self, x: Point) -> Point;
    /// Constant `r` with `f(v) ≤ r|v|` away from the origin.
    fn growth(&self) -> f64;
}

pub(crate) fn lattice_point(v: [i64; 3]) -> Point {
    [v[0] as f64, v[1] as f64, v[2] as f64]
}

/// Lexicographically smallest point of the unit sphere: the subgradient
/// of the Euclidean norm chosen at the origin.
fn norm_support(x: Point, dim: usize) -> Point {
    let n = norm(x);
    if n == 0.0 {
        let mut g = ORIGIN;
        g[0] = -1.0;
        let _ = dim;
        g
    } else {
        [x[0] / n, x[1] / n, x[2] / n]
    }
}

/// `f(v) = |v| + √|v|` with `f̄ = |·|`.
#[derive(Debug, Clone, Copy)]
pub struct NormPlusRoot {
    pub dim: usize,
}

impl SubadditiveOracle for NormPlusRoot {
    fn name(&self) -> &str {
        "root"
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn f(&self, v: [i64; 3]) -> f64 {
        let n = norm(lattice_point(v));
        n + n.sqrt()
    }
    fn f_bar(&self, x: Point) -> f64 {
        norm(x)
    }
    fn support(&self, x: Point) -> Point {
        norm_support(x, self.dim)
    }
    fn growth(&self) -> f64 {
        2.0
    }
}

/// `f(v) = |v| + log(2 + |v|)` with `f̄ = |·|`.
#[derive(Debug, Clone, Copy)]
pub struct NormPlusLog {
    pub dim: usize,
}

impl SubadditiveOracle for NormPlusLog {
    fn name(&self) -> &str {
        "log"
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn f(&self, v: [i64; 3]) -> f64 {
        let n = norm(lattice_point(v));
        n + (2.0 + n).ln()
    }
    fn f_bar(&self, x: Point) -> f64 {
        norm(x)
    }
    fn support(&self, x: Point) -> Point {
        norm_support(x, self.dim)
    }
    fn growth(&self) -> f64 {
        1.0 + 3f64.ln()
    }
}

/// `f = f̄ = max_k g_k·v`: exactly additive along rays, so every gap is 0.
#[derive(Debug, Clone)]
pub struct Polyhedral {
    pub dim: usize,
    pub gradients: Vec<Point>,
}

impl Polyhedral {
    /// The ℓ¹ norm, whose gradients are the sign vectors.
    pub fn l1(dim: usize) -> Self {
        let mut gradients = Vec::new();
        let zs: &[f64] = if dim == 3 { &[-1.0, 1.0] } else { &[0.0] };
        for &a in &[-1.0, 1.0] {
            for &b in &[-1.0, 1.0] {
                for &c in zs {
                    gradients.push([a, b, c]);
                }
            }
        }
        Polyhedral { dim, gradients }
    }

    fn best(&self, x: Point) -> Point {
        let mut best = self.gradients[0];
        let mut val = dot(best, x);
        for g in &self.gradients[1..] {
            let t = dot(*g, x);
            if t > val + 1e-12 || ((t - val).abs() <= 1e-12 && lex_less(*g, best)) {
                best = *g;
                val = t;
            }
        }
        best
    }
}

fn lex_less(a: Point, b: Point) -> bool {
    a.partial_cmp(&b) == Some(std::cmp::Ordering::Less)
}

impl SubadditiveOracle for Polyhedral {
    fn name(&self) -> &str {
        "polyhedral"
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn f(&self, v: [i64; 3]) -> f64 {
        self.f_bar(lattice_point(v))
    }
    fn f_bar(&self, x: Point) -> f64 {
        dot(self.best(x), x)
    }
    fn support(&self, x: Point) -> Point {
        self.best(x)
    }
    fn growth(&self) -> f64 {
        self.gradients.iter().map(|g| norm(*g)).fold(0.0, f64::max)
    }
}

/// Built-in oracles by name: `root`, `log` and `polyhedral` (ℓ¹).
pub fn oracle_by_name(name: &str, dim: usize) -> Option<Box<dyn SubadditiveOracle>> {
    match name {
        "root" => Some(Box::new(NormPlusRoot { dim })),
        "log" => Some(Box::new(NormPlusLog { dim })),
        "polyhedral" => Some(Box::new(Polyhedral::l1(dim))),
        _ => None,
    }
}

/// Which membership condition of `G_x` failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum GoodViolation {
    TooLong { length: f64, limit: f64 },
    Overshoots { value: f64, limit: f64 },
    Inefficient { excess: f64, allowance: f64 },
}

impl fmt::Display for GoodViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GoodViolation::TooLong { length, limit } => write!(f, "length {length:.4} exceeds {limit:.4}"),
            GoodViolation::Overshoots { value, limit } => {
                write!(f, "supporting value {value:.4} exceeds {limit:.4}")
            }
            GoodViolation::Inefficient { excess, allowance } => {
                write!(f, "excess {excess:.4} exceeds allowance {allowance:.4}")
            }
        }
    }
}

/// Good increments toward `x`: `|v| ≤ K|x|`, `f̄_x(v) ≤ f̄_x(x)` and
/// `f(v) ≤ f̄_x(v) + C|x|^ν φ(|x|)`.
#[derive(Debug, Clone, Copy)]
pub struct GoodSet {
    pub x: [i64; 3],
    pub nu: f64,
    pub phi: fn(f64) -> f64,
    pub c: f64,
    pub k: f64,
}

impl GoodSet {
    pub fn allowance(&self) -> f64 {
        let r = norm(lattice_point(self.x));
        self.c * r.powf(self.nu) * (self.phi)(r)
    }

    pub fn check(&self, oracle: &dyn SubadditiveOracle, v: [i64; 3]) -> Result<(), GoodViolation> {
        let x = lattice_point(self.x);
        let vp = lattice_point(v);
        let limit = self.k * norm(x);
        if norm(vp) > limit + 1e-9 {
            return Err(GoodViolation::TooLong { length: norm(vp), limit });
        }
        let g = oracle.support(x);
        let (value, top) = (dot(g, vp), dot(g, x));
        if value > top + 1e-9 {
            return Err(GoodViolation::Overshoots { value, limit: top });
        }
        let excess = oracle.f(v) - value;
        let allowance = self.allowance();
        if excess > allowance + 1e-9 {
            return Err(GoodViolation::Inefficient { excess, allowance });
        }
        Ok(())
    }

    pub fn contains(&self, oracle: &dyn SubadditiveOracle, v: [i64; 3]) -> bool {
        self.check(oracle, v).is_ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn supports_are_supporting_and_scale_free() {
        let oracles: Vec<Box<dyn SubadditiveOracle>> =
            vec![oracle_by_name("root", 2).unwrap(), oracle_by_name("polyhedral", 3).unwrap()];
        let pts = [[3.0, -1.0, 0.0], [0.0, 2.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 0.0]];
        for o in &oracles {
            for x in pts {
                let g = o.support(x);
                assert!((dot(g, x) - o.f_bar(x)).abs() < 1e-12);
                assert_eq!(g, o.support([2.5 * x[0], 2.5 * x[1], 2.5 * x[2]]));
                for v in pts {
                    assert!(dot(g, v) <= o.f_bar(v) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn synthetic_f_dominates_limit() {
        for o in [oracle_by_name("root", 2).unwrap(), oracle_by_name("log", 2).unwrap()] {
            for i in -6..=6 {
                for j in -6..=6 {
                    let v = [i, j, 0];
                    assert!(o.f(v) >= o.f_bar(lattice_point(v)));
                    for (a, b) in [(1, 2), (-3, 1)] {
                        let w = [a, b, 0];
                        assert!(o.f([i + a, j + b, 0]) <= o.f(v) + o.f(w) + 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn good_set_reports_the_failed_condition() {
        let o = NormPlusRoot { dim: 2 };
        let g = GoodSet {
            x: [10, 0, 0],
            nu: 0.5,
            phi: |_| 1.0,
            c: 1.0,
            k: 2.0,
        };
        assert!(g.contains(&o, [1, 0, 0]));
        assert!(matches!(g.check(&o, [11, 0, 0]), Err(GoodViolation::Overshoots { .. })));
        assert!(matches!(g.check(&o, [0, 25, 0]), Err(GoodViolation::TooLong { .. })));
    }
}
