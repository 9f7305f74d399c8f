//! Random divergence-free vector fields built from compactly supported bumps.
//!
//! The potential is `a·r·Σ_k c_k b((x − z_k)/r)` with `b(u) = (1 − |u|²)⁴` on
//! the unit ball, centers `z_k = shift + s·k` and i.i.d. coefficients
//! `c_k ∈ [−1, 1]`. In two dimensions `V` is the rotated gradient of that
//! stream function; in three dimensions `V` is the curl of a vector potential
//! carrying one coefficient per component.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Mat, Point, ORIGIN};
use crate::seed::{hash_point, mix, unit};

const SHIFT_SALT: u64 = 0x5348_4946_54;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("dimension must be 2 or 3, got {0}")]
    Dimension(usize),
    #[error("invalid {name}: {reason}")]
    Parameter { name: &'static str, reason: String },
    #[error("2(r + s) = {0} exceeds 1, which breaks unit range of dependence")]
    RangeOfDependence(f64),
}

/// Law of a random field. `seed` is the default seed used by `Field::from_spec`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub dim: usize,
    pub amplitude: f64,
    pub bump_radius: f64,
    pub pitch: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for FieldSpec {
    fn default() -> Self {
        FieldSpec {
            dim: 2,
            amplitude: 0.0,
            bump_radius: 0.3,
            pitch: 0.15,
            seed: 0,
        }
    }
}

/// Analytic bounds derived from the bump profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct FieldBounds {
    /// Bound on sup |V|.
    pub sup: f64,
    /// Bound on sup ‖DV‖.
    pub lip: f64,
    /// Bound on the Lipschitz constant of DV.
    pub hess_lip: f64,
}

impl FieldBounds {
    /// The single constant L with ‖V‖_{C^{1,1}} ≤ L.
    pub fn c11(&self) -> f64 {
        self.sup.max(self.lip).max(self.hess_lip)
    }

    /// Speed limit of controlled paths: unit control plus drift.
    pub fn speed_limit(&self) -> f64 {
        self.sup + 1.0
    }
}

impl FieldSpec {
    pub fn zero(dim: usize) -> Self {
        FieldSpec {
            dim,
            ..FieldSpec::default()
        }
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        if self.dim != 2 && self.dim != 3 {
            return Err(FieldError::Dimension(self.dim));
        }
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(FieldError::Parameter {
                name: "amplitude",
                reason: format!("must be finite and non-negative, got {}", self.amplitude),
            });
        }
        for (name, v) in [("bump_radius", self.bump_radius), ("pitch", self.pitch)] {
            if !(v > 0.0 && v <= 0.5) {
                return Err(FieldError::Parameter {
                    name,
                    reason: format!("must lie in (0, 1/2], got {v}"),
                });
            }
        }
        let span = 2.0 * (self.bump_radius + self.pitch);
        if span > 1.0 + 1e-12 {
            return Err(FieldError::RangeOfDependence(span));
        }
        Ok(())
    }

    /// Number of components of the potential.
    fn components(&self) -> usize {
        if self.dim == 2 {
            1
        } else {
            3
        }
    }

    /// Upper bound on the number of bumps covering any point.
    pub fn max_overlap(&self) -> usize {
        let per_axis = (2.0 * self.bump_radius / self.pitch).floor() as usize + 1;
        per_axis.pow(self.dim as u32)
    }

    /// Derivative bounds for this law. They do not depend on the seed.
    pub fn bounds(&self) -> FieldBounds {
        if self.amplitude == 0.0 {
            return FieldBounds::default();
        }
        let d = self.dim;
        let r = self.bump_radius;
        let a = self.amplitude;
        let n = self.max_overlap() as f64;
        let comp = if d == 2 { 1.0 } else { 6f64.sqrt() };
        let b2 = profile_max(|q| hess_frobenius(q, d));
        let b3 = profile_max(|q| third_frobenius(q, d));
        // Σ_j |∇b(u_j)| and Σ_j ‖D²b(u_j)‖ sampled over one period, with a
        // Lipschitz margin for the sampling gap.
        let steps = if d == 2 { 128 } else { 32 };
        let delta = self.pitch / steps as f64;
        let (g1, g2) = self.cell_sums(steps);
        let half_diag = delta * (d as f64).sqrt() / 2.0;
        let m1 = g1 + n * b2 / r * half_diag;
        let m2 = g2 + n * b3 / r * half_diag;
        FieldBounds {
            sup: comp * a * m1,
            lip: comp * a / r * m2,
            hess_lip: comp * a / (r * r) * n * b3,
        }
    }

    fn cell_sums(&self, steps: usize) -> (f64, f64) {
        let d = self.dim;
        let r = self.bump_radius;
        let s = self.pitch;
        let reach = (r / s).ceil() as i64 + 1;
        let mut best1: f64 = 0.0;
        let mut best2: f64 = 0.0;
        let count = steps.pow(d as u32);
        for idx in 0..count {
            let mut x = ORIGIN;
            let mut rem = idx;
            for xi in x.iter_mut().take(d) {
                *xi = (rem % steps) as f64 * s / steps as f64;
                rem /= steps;
            }
            let mut g1 = 0.0;
            let mut g2 = 0.0;
            for_each_offset(d, reach, |k| {
                let mut q = 0.0;
                for i in 0..d {
                    let u = (x[i] - s * k[i] as f64) / r;
                    q += u * u;
                }
                if q < 1.0 {
                    let w = 1.0 - q;
                    g1 += 8.0 * q.sqrt() * w * w * w;
                    g2 += hess_frobenius(q, d);
                }
            });
            best1 = best1.max(g1);
            best2 = best2.max(g2);
        }
        (best1, best2)
    }

    /// Serialize as a plain-text `key = value` block.
    pub fn to_config_block(&self) -> String {
        toml::to_string(self).expect("field spec serializes")
    }

    pub fn from_config_block(text: &str) -> Result<Self, FieldError> {
        let spec: FieldSpec = toml::from_str(text).map_err(|e| FieldError::Parameter {
            name: "config",
            reason: e.message().to_string(),
        })?;
        spec.validate()?;
        Ok(spec)
    }
}

/// ‖D²b‖_F at squared radius q.
fn hess_frobenius(q: f64, d: usize) -> f64 {
    if q >= 1.0 {
        return 0.0;
    }
    let w = 1.0 - q;
    let v = 64.0 * w.powi(6) * d as f64 - 768.0 * w.powi(5) * q + 2304.0 * w.powi(4) * q * q;
    v.max(0.0).sqrt()
}

/// ‖D³b‖_F at squared radius q.
fn third_frobenius(q: f64, d: usize) -> f64 {
    if q >= 1.0 {
        return 0.0;
    }
    let w = 1.0 - q;
    let v = 2304.0 * w.powi(4) * 3.0 * (d as f64 + 2.0) * q + 36864.0 * w * w * q.powi(3)
        - 55296.0 * w.powi(3) * q * q;
    v.max(0.0).sqrt()
}

/// Maximum over the unit ball of a radial profile given in terms of |u|².
fn profile_max(f: impl Fn(f64) -> f64) -> f64 {
    let n = 20_000;
    let m = (0..=n)
        .map(|i| {
            let rho = i as f64 / n as f64;
            f(rho * rho)
        })
        .fold(0.0, f64::max);
    m * 1.01
}

fn for_each_offset(d: usize, reach: i64, mut f: impl FnMut([i64; 3])) {
    let zr = if d == 3 { reach } else { 0 };
    for k2 in -zr..=zr {
        for k1 in -reach..=reach {
            for k0 in -reach..=reach {
                f([k0, k1, k2]);
            }
        }
    }
}

/// A realized field. Cheap to clone; evaluation is pure.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    spec: FieldSpec,
    seed: u64,
    shift: Point,
    bounds: FieldBounds,
}

/// Value and Jacobian (`jac[i][j] = ∂_j V_i`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub v: Point,
    pub jac: Mat,
}

impl Field {
    /// Realize the law `spec` with the given seed.
    pub fn build(spec: &FieldSpec, seed: u64) -> Result<Field, FieldError> {
        spec.validate()?;
        let mut shift = ORIGIN;
        for (i, si) in shift.iter_mut().enumerate().take(spec.dim) {
            *si = spec.pitch * unit(mix(mix(seed, SHIFT_SALT), i as u64));
        }
        Ok(Field {
            spec: spec.clone(),
            seed,
            shift,
            bounds: spec.bounds(),
        })
    }

    /// Realize the law with its own default seed.
    pub fn from_spec(spec: &FieldSpec) -> Result<Field, FieldError> {
        Field::build(spec, spec.seed)
    }

    pub fn zero(dim: usize) -> Field {
        Field::build(&FieldSpec::zero(dim), 0).expect("zero spec is valid")
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn shift(&self) -> Point {
        self.shift
    }

    pub fn bounds(&self) -> FieldBounds {
        self.bounds
    }

    pub fn is_zero(&self) -> bool {
        self.spec.amplitude == 0.0
    }

    /// Coefficient of component `comp` of the bump at lattice index `k`.
    pub fn coefficient(&self, k: [i64; 3], comp: usize) -> f64 {
        2.0 * unit(hash_point(self.seed, k, comp as u64)) - 1.0
    }

    /// Bump center of lattice index `k`.
    pub fn center(&self, k: [i64; 3]) -> Point {
        let mut z = ORIGIN;
        for i in 0..self.spec.dim {
            z[i] = self.shift[i] + self.spec.pitch * k[i] as f64;
        }
        z
    }

    /// Lattice indices of all bumps whose support contains `x`.
    pub fn influencing(&self, x: Point) -> Vec<[i64; 3]> {
        let mut out = Vec::new();
        self.visit_bumps(x, |k, _| out.push(k));
        out
    }

    fn visit_bumps(&self, x: Point, mut f: impl FnMut([i64; 3], Point)) {
        let d = self.spec.dim;
        let r = self.spec.bump_radius;
        let s = self.spec.pitch;
        let mut lo = [0i64; 3];
        let mut hi = [0i64; 3];
        for i in 0..d {
            let rel = x[i] - self.shift[i];
            lo[i] = ((rel - r) / s).ceil() as i64;
            hi[i] = ((rel + r) / s).floor() as i64;
        }
        for k2 in lo[2]..=hi[2] {
            for k1 in lo[1]..=hi[1] {
                for k0 in lo[0]..=hi[0] {
                    let k = [k0, k1, k2];
                    let z = self.center(k);
                    let mut u = ORIGIN;
                    let mut q = 0.0;
                    for i in 0..d {
                        u[i] = (x[i] - z[i]) / r;
                        q += u[i] * u[i];
                    }
                    if q < 1.0 {
                        f(k, u);
                    }
                }
            }
        }
    }

    pub fn eval(&self, x: Point) -> Point {
        self.sample_with(x, false, |k, c| self.coefficient(k, c)).v
    }

    pub fn eval_jacobian(&self, x: Point) -> Mat {
        self.sample_with(x, true, |k, c| self.coefficient(k, c)).jac
    }

    pub fn sample(&self, x: Point) -> Sample {
        self.sample_with(x, true, |k, c| self.coefficient(k, c))
    }

    fn sample_with(&self, x: Point, want_jac: bool, coef: impl Fn([i64; 3], usize) -> f64) -> Sample {
        let mut out = Sample {
            v: ORIGIN,
            jac: [[0.0; 3]; 3],
        };
        if self.is_zero() {
            return out;
        }
        let d = self.spec.dim;
        let a = self.spec.amplitude;
        let r = self.spec.bump_radius;
        let nc = self.spec.components();
        // Gradient and Hessian of each potential component.
        let mut g = [[0.0f64; 3]; 3];
        let mut h = [[[0.0f64; 3]; 3]; 3];
        self.visit_bumps(x, |k, u| {
            let q = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
            let w = 1.0 - q;
            let w2 = w * w;
            let w3 = w2 * w;
            for m in 0..nc {
                let c = coef(k, m) * a;
                for i in 0..d {
                    g[m][i] += c * (-8.0 * u[i] * w3);
                }
                if want_jac {
                    let cr = c / r;
                    for i in 0..d {
                        for j in 0..d {
                            let mut val = 48.0 * w2 * u[i] * u[j];
                            if i == j {
                                val -= 8.0 * w3;
                            }
                            h[m][i][j] += cr * val;
                        }
                    }
                }
            }
        });
        if d == 2 {
            out.v = [-g[0][1], g[0][0], 0.0];
            for j in 0..2 {
                out.jac[0][j] = -h[0][1][j];
                out.jac[1][j] = h[0][0][j];
            }
        } else {
            out.v = [g[2][1] - g[1][2], g[0][2] - g[2][0], g[1][0] - g[0][1]];
            for l in 0..3 {
                out.jac[0][l] = h[2][1][l] - h[1][2][l];
                out.jac[1][l] = h[0][2][l] - h[2][0][l];
                out.jac[2][l] = h[1][0][l] - h[0][1][l];
            }
        }
        out
    }

    /// Sample V on the grid `lo + h·i`, `i < dims`, with x fastest.
    pub fn sample_grid(&self, lo: Point, h: f64, dims: [usize; 3]) -> Vec<Point> {
        let total = dims[0] * dims[1] * dims[2];
        let mut out = Vec::with_capacity(total);
        if self.is_zero() {
            out.resize(total, ORIGIN);
            return out;
        }
        let table = CoefTable::new(self, lo, h, dims);
        for i2 in 0..dims[2] {
            for i1 in 0..dims[1] {
                for i0 in 0..dims[0] {
                    let x = [
                        lo[0] + h * i0 as f64,
                        lo[1] + h * i1 as f64,
                        lo[2] + h * i2 as f64,
                    ];
                    out.push(self.sample_with(x, false, |k, c| table.get(self, k, c)).v);
                }
            }
        }
        out
    }

    /// Write V sampled on a grid as CSV with columns x, y[, z], vx, vy[, vz].
    pub fn write_grid_csv<W: Write>(
        &self,
        mut w: W,
        lo: Point,
        h: f64,
        dims: [usize; 3],
    ) -> std::io::Result<()> {
        let d = self.spec.dim;
        let names = ["x", "y", "z"];
        let mut header: Vec<String> = names[..d].iter().map(|s| s.to_string()).collect();
        header.extend(names[..d].iter().map(|s| format!("v{s}")));
        writeln!(w, "{}", header.join(","))?;
        let values = self.sample_grid(lo, h, dims);
        let mut idx = 0;
        for i2 in 0..dims[2] {
            for i1 in 0..dims[1] {
                for i0 in 0..dims[0] {
                    let x = [
                        lo[0] + h * i0 as f64,
                        lo[1] + h * i1 as f64,
                        lo[2] + h * i2 as f64,
                    ];
                    let v = values[idx];
                    idx += 1;
                    let row: Vec<String> = x[..d]
                        .iter()
                        .chain(v[..d].iter())
                        .map(|c| format!("{c}"))
                        .collect();
                    writeln!(w, "{}", row.join(","))?;
                }
            }
        }
        Ok(())
    }
}

/// Dense coefficient cache over the bump indices touching a grid box.
struct CoefTable {
    lo: [i64; 3],
    n: [usize; 3],
    nc: usize,
    data: Vec<f64>,
}

impl CoefTable {
    fn new(field: &Field, lo: Point, h: f64, dims: [usize; 3]) -> Self {
        let spec = &field.spec;
        let d = spec.dim;
        let mut klo = [0i64; 3];
        let mut n = [1usize; 3];
        for i in 0..d {
            let hi_x = lo[i] + h * (dims[i].max(1) - 1) as f64;
            let a = ((lo[i] - field.shift[i] - spec.bump_radius) / spec.pitch).floor() as i64 - 1;
            let b = ((hi_x - field.shift[i] + spec.bump_radius) / spec.pitch).ceil() as i64 + 1;
            klo[i] = a;
            n[i] = (b - a + 1) as usize;
        }
        let nc = spec.components();
        let mut data = Vec::with_capacity(n[0] * n[1] * n[2] * nc);
        for j2 in 0..n[2] {
            for j1 in 0..n[1] {
                for j0 in 0..n[0] {
                    let k = [klo[0] + j0 as i64, klo[1] + j1 as i64, klo[2] + j2 as i64];
                    for c in 0..nc {
                        data.push(field.coefficient(k, c));
                    }
                }
            }
        }
        CoefTable { lo: klo, n, nc, data }
    }

    #[inline]
    fn get(&self, field: &Field, k: [i64; 3], comp: usize) -> f64 {
        let j0 = k[0] - self.lo[0];
        let j1 = k[1] - self.lo[1];
        let j2 = k[2] - self.lo[2];
        if j0 < 0
            || j1 < 0
            || j2 < 0
            || j0 as usize >= self.n[0]
            || j1 as usize >= self.n[1]
            || j2 as usize >= self.n[2]
        {
            return field.coefficient(k, comp);
        }
        let idx = (j0 as usize + self.n[0] * (j1 as usize + self.n[1] * j2 as usize)) * self.nc + comp;
        self.data[idx]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(dim: usize) -> FieldSpec {
        FieldSpec {
            dim,
            amplitude: 0.4,
            bump_radius: 0.3,
            pitch: 0.15,
            seed: 11,
        }
    }

    #[test]
    fn zero_amplitude_is_zero() {
        let f = Field::zero(2);
        assert_eq!(f.eval([0.3, -1.2, 0.0]), ORIGIN);
        assert_eq!(f.eval_jacobian([0.3, -1.2, 0.0]), [[0.0; 3]; 3]);
        assert_eq!(f.bounds().c11(), 0.0);
    }

    #[test]
    fn rejects_bad_specs() {
        let mut s = spec(2);
        s.dim = 4;
        assert!(matches!(Field::build(&s, 0), Err(FieldError::Dimension(4))));
        let mut s = spec(2);
        s.bump_radius = 0.45;
        s.pitch = 0.1;
        assert!(matches!(Field::build(&s, 0), Err(FieldError::RangeOfDependence(_))));
        let mut s = spec(3);
        s.amplitude = -1.0;
        assert!(Field::build(&s, 0).is_err());
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        for d in [2, 3] {
            let f = Field::build(&spec(d), 5).unwrap();
            let h = 1e-4;
            for t in 0..20 {
                let x = [0.37 * t as f64, -0.21 * t as f64, 0.13 * t as f64];
                let jac = f.eval_jacobian(x);
                for j in 0..d {
                    let mut xp = x;
                    let mut xm = x;
                    xp[j] += h;
                    xm[j] -= h;
                    let vp = f.eval(xp);
                    let vm = f.eval(xm);
                    for i in 0..d {
                        let fd = (vp[i] - vm[i]) / (2.0 * h);
                        assert!((fd - jac[i][j]).abs() < 1e-5 * jac[i][j].abs().max(1.0), "d={d} i={i} j={j} fd={fd} an={}", jac[i][j]);
                    }
                }
                let trace: f64 = (0..d).map(|i| jac[i][i]).sum();
                assert!(trace.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn grid_sampler_matches_eval() {
        let f = Field::build(&spec(2), 3).unwrap();
        let lo = [-1.3, 0.2, 0.0];
        let g = f.sample_grid(lo, 0.25, [9, 7, 1]);
        for (idx, v) in g.iter().enumerate() {
            let x = [lo[0] + 0.25 * (idx % 9) as f64, lo[1] + 0.25 * (idx / 9) as f64, 0.0];
            assert_eq!(*v, f.eval(x));
        }
    }

    #[test]
    fn config_block_round_trip() {
        let s = spec(3);
        let text = s.to_config_block();
        assert_eq!(FieldSpec::from_config_block(&text).unwrap(), s);
    }

    #[test]
    fn influence_radius() {
        let f = Field::build(&spec(2), 9).unwrap();
        let x = [0.4, 0.1, 0.0];
        for k in f.influencing(x) {
            let z = f.center(k);
            assert!(crate::geom::dist(x, z) < 0.3);
        }
    }
}
