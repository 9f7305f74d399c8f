use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{Direction, GridConfig, ReachError};
use crate::field::Field;
use crate::geom::{add, dist, dot, scale, sub, Point, ORIGIN};

const NONE: u32 = u32::MAX;
const FROM_SOURCE: u32 = u32::MAX - 1;

/// Smallest `τ > 0` with `|δ − τw| ≤ τ`: the time to cross the straight
/// segment `δ` under frozen drift `w` with a unit-speed control. Infinite
/// when the drift makes the segment impassable.
#[inline]
pub fn segment_time(delta: Point, w: Point) -> f64 {
    let dd = dot(delta, delta);
    if dd == 0.0 {
        return 0.0;
    }
    let dw = dot(delta, w);
    let a = 1.0 - dot(w, w);
    let disc = dw * dw + a * dd;
    if disc < 0.0 {
        return f64::INFINITY;
    }
    let den = dw + disc.sqrt();
    if den <= 0.0 {
        f64::INFINITY
    } else {
        dd / den
    }
}

/// When a solve may stop early.
#[derive(Debug, Clone, PartialEq)]
pub enum StopRule {
    /// Settle every node of the window.
    Exhaust,
    /// Settle every node with arrival time at most the given time.
    Time(f64),
    /// Settle the neighbourhoods needed to evaluate `time_at` at these points.
    Targets(Vec<Point>),
}

/// Arrival times θ(x₀, ·) on a grid.
#[derive(Debug, Clone)]
pub struct PassageMap {
    source: Point,
    cfg: GridConfig,
    rho: Option<f64>,
    direction: Direction,
    times: Vec<f64>,
    pred: Vec<u32>,
    velocity: Vec<Point>,
    horizon: f64,
}

struct Piece {
    corners: Vec<(isize, f64)>,
}

struct Edge {
    step: [i64; 3],
    flat: isize,
    piece_disp: Point,
    pieces: Vec<Piece>,
}

struct Lag {
    step: [i64; 3],
    flat: isize,
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Primitive integer offsets of max-norm at most `radius`.
fn primitive_offsets(dim: usize, radius: usize) -> Vec<[i64; 3]> {
    let r = radius as i64;
    let zr = if dim == 3 { r } else { 0 };
    let mut out = Vec::new();
    for k in -zr..=zr {
        for j in -r..=r {
            for i in -r..=r {
                if i == 0 && j == 0 && k == 0 {
                    continue;
                }
                if gcd(gcd(i, j), k) == 1 {
                    out.push([i, j, k]);
                }
            }
        }
    }
    out
}

fn flat_of(step: [i64; 3], n: [usize; 3]) -> isize {
    (step[0] + n[0] as i64 * (step[1] + n[1] as i64 * step[2])) as isize
}

/// Multilinear interpolation corners for a point given in cell units
/// relative to a node.
fn corners(off: [f64; 3], dim: usize, n: [usize; 3]) -> Vec<(isize, f64)> {
    let mut out = vec![([0i64; 3], 1.0)];
    for i in 0..dim {
        let b = off[i].floor();
        let f = off[i] - b;
        let mut next = Vec::with_capacity(out.len() * 2);
        for (c, w) in out {
            let mut lo = c;
            lo[i] = b as i64;
            if f < 1e-12 {
                next.push((lo, w));
            } else if f > 1.0 - 1e-12 {
                lo[i] += 1;
                next.push((lo, w));
            } else {
                next.push((lo, w * (1.0 - f)));
                let mut hi = lo;
                hi[i] += 1;
                next.push((hi, w * f));
            }
        }
        out = next;
    }
    out.into_iter().map(|(c, w)| (flat_of(c, n), w)).collect()
}

fn build_edges(cfg: &GridConfig) -> Vec<Edge> {
    let n = cfg.dims();
    primitive_offsets(cfg.dim, cfg.stencil)
        .into_iter()
        .map(|step| {
            let cells = [step[0] as f64, step[1] as f64, step[2] as f64];
            let len = dot(cells, cells).sqrt();
            let m = len.ceil().max(1.0) as usize;
            let pieces = (0..m)
                .map(|j| {
                    let t = (j as f64 + 0.5) / m as f64;
                    Piece {
                        corners: corners(scale(cells, t), cfg.dim, n),
                    }
                })
                .collect();
            Edge {
                step,
                flat: flat_of(step, n),
                piece_disp: scale(cells, cfg.h / m as f64),
                pieces,
            }
        })
        .collect()
}

fn build_lags(cfg: &GridConfig) -> Vec<Lag> {
    let n = cfg.dims();
    let r = (1.0 / cfg.h + 1e-9).floor() as i64;
    let zr = if cfg.dim == 3 { r } else { 0 };
    let mut out = Vec::new();
    for k in -zr..=zr {
        for j in -r..=r {
            for i in -r..=r {
                let q = (i * i + j * j + k * k) as f64 * cfg.h * cfg.h;
                if q > 0.0 && q <= 1.0 + 1e-12 {
                    out.push(Lag {
                        step: [i, j, k],
                        flat: flat_of([i, j, k], n),
                    });
                }
            }
        }
    }
    out
}

/// Lag of one guaranteed dilation: `⌈ρ/Δt⌉·Δt`.
fn lag_time(rho: f64, dt: f64) -> f64 {
    (rho / dt - 1e-9).ceil().max(1.0) * dt
}

fn interp(cfg: &GridConfig, velocity: &[Point], x: Point) -> Point {
    let n = cfg.dims();
    let mut base = [0usize; 3];
    let mut frac = [0.0f64; 3];
    for i in 0..cfg.dim {
        let u = ((x[i] - cfg.window.lo[i]) / cfg.h).clamp(0.0, (n[i] - 1) as f64);
        let b = (u.floor() as usize).min(n[i].saturating_sub(2));
        base[i] = b;
        frac[i] = if n[i] > 1 { u - b as f64 } else { 0.0 };
    }
    let mut v = ORIGIN;
    let corners = 1usize << cfg.dim;
    for c in 0..corners {
        let mut w = 1.0;
        let mut idx = base;
        for i in 0..cfg.dim {
            if c >> i & 1 == 1 {
                w *= frac[i];
                idx[i] += 1;
            } else {
                w *= 1.0 - frac[i];
            }
        }
        if w != 0.0 {
            v = add(v, scale(velocity[cfg.index(idx)], w));
        }
    }
    v
}

/// Time along the straight segment `a → b` with drift interpolated from the
/// grid, split into pieces no longer than `h`.
fn path_cost(cfg: &GridConfig, velocity: &[Point], sign: f64, a: Point, b: Point) -> f64 {
    let d = sub(b, a);
    let len = dot(d, d).sqrt();
    if len == 0.0 {
        return 0.0;
    }
    let m = (len / cfg.h).ceil().max(1.0) as usize;
    let piece = scale(d, 1.0 / m as f64);
    let mut t = 0.0;
    for j in 0..m {
        let mid = add(a, scale(d, (j as f64 + 0.5) / m as f64));
        t += segment_time(piece, scale(interp(cfg, velocity, mid), sign));
    }
    t
}

fn check_dims(field: &Field, cfg: &GridConfig) -> Result<(), ReachError> {
    cfg.validate()?;
    if field.dim() != cfg.dim {
        return Err(ReachError::Dimension {
            field: field.dim(),
            grid: cfg.dim,
        });
    }
    Ok(())
}

#[inline]
fn push(heap: &mut BinaryHeap<Reverse<(u64, u32)>>, t: f64, idx: usize) {
    heap.push(Reverse((t.to_bits(), idx as u32)));
}

/// Arrival times from `x0` on the window of `cfg`.
///
/// Nodes whose time does not exceed the certified horizon (the earliest
/// arrival at the window's boundary band) are exact for the unbounded grid.
pub fn first_passage(
    field: &Field,
    x0: Point,
    cfg: &GridConfig,
    rho: Option<f64>,
    stop: StopRule,
) -> Result<PassageMap, ReachError> {
    first_passage_dir(field, x0, cfg, rho, Direction::Forward, stop)
}

pub(crate) fn first_passage_dir(
    field: &Field,
    x0: Point,
    cfg: &GridConfig,
    rho: Option<f64>,
    direction: Direction,
    stop: StopRule,
) -> Result<PassageMap, ReachError> {
    check_dims(field, cfg)?;
    if let Some(r) = rho {
        if !(r > 0.0) {
            return Err(ReachError::Grid(format!("rho must be positive, got {r}")));
        }
    }
    if !cfg.contains(x0) {
        return Err(ReachError::OutsideGrid(x0));
    }
    let n = cfg.dims();
    let velocity = field.sample_grid(cfg.node([0, 0, 0]), cfg.h, n);
    solve(x0, cfg, rho, direction, velocity, stop)
}

pub(crate) fn solve(
    x0: Point,
    cfg: &GridConfig,
    rho: Option<f64>,
    direction: Direction,
    velocity: Vec<Point>,
    stop: StopRule,
) -> Result<PassageMap, ReachError> {
    let n = cfg.dims();
    let len = cfg.len();
    let dim = cfg.dim;
    let sign = direction.sign();
    let edges = build_edges(cfg);
    let lags = if rho.is_some() { build_lags(cfg) } else { Vec::new() };
    let lag = rho.map(|r| lag_time(r, cfg.dt)).unwrap_or(f64::INFINITY);
    let lag_cells = if rho.is_some() {
        (1.0 / cfg.h + 1e-9).floor() as usize
    } else {
        0
    };
    let band = cfg.stencil.max(lag_cells);

    let mut times = vec![f64::INFINITY; len];
    let mut pred = vec![NONE; len];
    let mut settled = vec![false; len];
    let mut heap = BinaryHeap::new();

    // Seed the nodes around the source with direct segments.
    let reach = cfg.stencil.max(lag_cells) as i64;
    let near = cfg.nearest(x0).ok_or(ReachError::OutsideGrid(x0))?;
    for_box(near, reach, dim, n, |c| {
        let p = cfg.node(c);
        let idx = cfg.index(c);
        let mut t = f64::INFINITY;
        let cheb = (0..dim)
            .map(|i| ((p[i] - x0[i]) / cfg.h).abs())
            .fold(0.0, f64::max);
        if cheb <= cfg.stencil as f64 + 1e-9 {
            t = path_cost(cfg, &velocity, sign, x0, p);
        }
        if rho.is_some() && dist(p, x0) <= 1.0 + 1e-12 {
            t = t.min(lag);
        }
        if t < times[idx] {
            times[idx] = t;
            pred[idx] = FROM_SOURCE;
            push(&mut heap, t, idx);
        }
    });

    let mut needed: Vec<bool> = Vec::new();
    let mut remaining = 0usize;
    let mut limit = f64::INFINITY;
    match &stop {
        StopRule::Exhaust => {}
        StopRule::Time(t) => limit = *t,
        StopRule::Targets(ts) => {
            needed = vec![false; len];
            for &y in ts {
                let c = cfg.nearest(y).ok_or(ReachError::OutsideGrid(y))?;
                for_box(c, reach, dim, n, |q| {
                    let i = cfg.index(q);
                    if !needed[i] {
                        needed[i] = true;
                        remaining += 1;
                    }
                });
            }
        }
    }

    let in_band = |c: [usize; 3]| (0..dim).any(|i| c[i] < band || c[i] + band >= n[i]);
    let mut horizon = f64::INFINITY;
    while let Some(Reverse((bits, idx32))) = heap.pop() {
        let t = f64::from_bits(bits);
        let idx = idx32 as usize;
        if settled[idx] || t > times[idx] {
            continue;
        }
        if t > limit {
            break;
        }
        settled[idx] = true;
        let c = cfg.coords(idx);
        if horizon.is_infinite() && in_band(c) {
            horizon = t;
        }
        if !needed.is_empty() && needed[idx] {
            remaining -= 1;
            if remaining == 0 {
                break;
            }
        }
        for e in &edges {
            if !inside(c, e.step, dim, n) {
                continue;
            }
            let j = (idx as isize + e.flat) as usize;
            if settled[j] {
                continue;
            }
            let mut cost = 0.0;
            for piece in &e.pieces {
                let mut w = ORIGIN;
                for &(off, wt) in &piece.corners {
                    let v = velocity[(idx as isize + off) as usize];
                    w[0] += wt * v[0];
                    w[1] += wt * v[1];
                    w[2] += wt * v[2];
                }
                cost += segment_time(e.piece_disp, scale(w, sign));
            }
            let nt = t + cost;
            if nt < times[j] {
                times[j] = nt;
                pred[j] = idx as u32;
                push(&mut heap, nt, j);
            }
        }
        if !lags.is_empty() {
            let nt = t + lag;
            for l in &lags {
                if !inside(c, l.step, dim, n) {
                    continue;
                }
                let j = (idx as isize + l.flat) as usize;
                if !settled[j] && nt < times[j] {
                    times[j] = nt;
                    pred[j] = idx as u32;
                    push(&mut heap, nt, j);
                }
            }
        }
    }
    for i in 0..len {
        if !settled[i] {
            times[i] = f64::INFINITY;
            pred[i] = NONE;
        }
    }
    Ok(PassageMap {
        source: x0,
        cfg: cfg.clone(),
        rho,
        direction,
        times,
        pred,
        velocity,
        horizon,
    })
}

#[inline]
fn inside(c: [usize; 3], step: [i64; 3], dim: usize, n: [usize; 3]) -> bool {
    (0..dim).all(|i| {
        let v = c[i] as i64 + step[i];
        v >= 0 && v < n[i] as i64
    })
}

fn for_box(c: [usize; 3], r: i64, dim: usize, n: [usize; 3], mut f: impl FnMut([usize; 3])) {
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    for i in 0..dim {
        lo[i] = (c[i] as i64 - r).max(0) as usize;
        hi[i] = ((c[i] as i64 + r) as usize).min(n[i] - 1);
    }
    for k in lo[2]..=hi[2] {
        for j in lo[1]..=hi[1] {
            for i in lo[0]..=hi[0] {
                f([i, j, k]);
            }
        }
    }
}

impl PassageMap {
    pub fn source(&self) -> Point {
        self.source
    }

    pub fn grid(&self) -> &GridConfig {
        &self.cfg
    }

    pub fn rho(&self) -> Option<f64> {
        self.rho
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// Arrival time per node, `+∞` where the solve never settled the node.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Drift samples the solve used, one per node.
    pub fn velocity(&self) -> &[Point] {
        &self.velocity
    }

    pub(crate) fn into_velocity(self) -> Vec<Point> {
        self.velocity
    }

    /// Times up to this value are exact for the unbounded grid.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn time_at_node(&self, c: [usize; 3]) -> f64 {
        self.times[self.cfg.index(c)]
    }

    /// θ(x₀, y) for an arbitrary point: the best settled node in the stencil
    /// neighbourhood of `y` followed by a straight final segment.
    pub fn time_at(&self, y: Point) -> f64 {
        let cfg = &self.cfg;
        let sign = self.direction.sign();
        if dist(y, self.source) < 1e-12 {
            return 0.0;
        }
        let Some(c) = cfg.nearest(y) else {
            return f64::INFINITY;
        };
        let lag = self.rho.map(|r| lag_time(r, cfg.dt));
        let lag_cells = if lag.is_some() {
            (1.0 / cfg.h + 1e-9).floor() as i64
        } else {
            0
        };
        let cheb = |a: Point, b: Point| {
            (0..cfg.dim)
                .map(|i| ((a[i] - b[i]) / cfg.h).abs())
                .fold(0.0, f64::max)
        };
        let mut best = f64::INFINITY;
        if cheb(y, self.source) <= cfg.stencil as f64 + 1e-9 {
            best = path_cost(cfg, &self.velocity, sign, self.source, y);
        }
        if let Some(l) = lag {
            if dist(y, self.source) <= 1.0 + 1e-12 {
                best = best.min(l);
            }
        }
        let n = cfg.dims();
        for_box(c, (cfg.stencil as i64).max(lag_cells), cfg.dim, n, |q| {
            let t = self.times[cfg.index(q)];
            if !t.is_finite() || t >= best {
                return;
            }
            let p = cfg.node(q);
            if cheb(p, y) <= cfg.stencil as f64 + 1e-9 {
                best = best.min(t + path_cost(cfg, &self.velocity, sign, p, y));
            }
            if let Some(l) = lag {
                if dist(p, y) <= 1.0 + 1e-12 {
                    best = best.min(t + l);
                }
            }
        });
        best
    }

    /// `time_at`, failing when the value is not covered by the horizon.
    pub fn certified_time_at(&self, y: Point) -> Result<f64, ReachError> {
        let t = self.time_at(y);
        if t <= self.horizon {
            Ok(t)
        } else {
            let speed = self.velocity.iter().map(|v| dot(*v, *v).sqrt()).fold(0.0, f64::max) + 1.0;
            Err(ReachError::WindowTooSmall {
                required: speed * t.min(1e12) + 1.0,
                available: self.cfg.window.inner_radius(self.source, self.cfg.dim),
            })
        }
    }

    /// Node sequence of a shortest path from the source to node `idx`,
    /// starting with the source point itself.
    pub fn path_to(&self, idx: usize) -> Vec<Point> {
        let mut out = Vec::new();
        if !self.times[idx].is_finite() {
            return out;
        }
        let mut cur = idx as u32;
        loop {
            out.push(self.cfg.point(cur as usize));
            let p = self.pred[cur as usize];
            if p == FROM_SOURCE || p == NONE {
                break;
            }
            cur = p;
        }
        out.push(self.source);
        out.reverse();
        out
    }

    /// Shortest path to an arbitrary point, ending exactly at `y`.
    pub fn path_to_point(&self, y: Point) -> Vec<Point> {
        let Some(c) = self.cfg.nearest(y) else {
            return Vec::new();
        };
        let mut path = self.path_to(self.cfg.index(c));
        if let Some(last) = path.last() {
            if dist(*last, y) > 1e-12 {
                path.push(y);
            }
        }
        path
    }
}

/// Arrival times at `targets` from `x0`, on a window sized automatically and
/// enlarged until every returned value is certified.
///
/// Only the resolution fields of `proto` (`h`, `dt`, `stencil`, `dim`) are
/// used; the window is recentred on `x0`.
pub fn passage_times(
    field: &Field,
    x0: Point,
    targets: &[Point],
    proto: &GridConfig,
    rho: Option<f64>,
) -> Result<(Vec<f64>, PassageMap), ReachError> {
    passage_times_from(field, x0, targets, proto, rho, Direction::Forward)
}

pub fn passage_times_from(
    field: &Field,
    x0: Point,
    targets: &[Point],
    proto: &GridConfig,
    rho: Option<f64>,
    direction: Direction,
) -> Result<(Vec<f64>, PassageMap), ReachError> {
    let far = targets.iter().map(|y| dist(*y, x0)).fold(0.0, f64::max);
    let mut half = 1.25 * far + 3.0;
    let mut last_err = None;
    for _ in 0..5 {
        let cfg = GridConfig::centered(proto.dim, proto.h, proto.dt, x0, half).with_stencil(proto.stencil);
        let map = first_passage_dir(field, x0, &cfg, rho, direction, StopRule::Targets(targets.to_vec()))?;
        match targets.iter().map(|y| map.certified_time_at(*y)).collect::<Result<Vec<_>, _>>() {
            Ok(ts) => return Ok((ts, map)),
            Err(e) => last_err = Some(e),
        }
        half *= 1.6;
    }
    Err(last_err.expect("at least one attempt"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_time_cases() {
        assert_eq!(segment_time([1.0, 0.0, 0.0], ORIGIN), 1.0);
        assert!((segment_time([1.0, 0.0, 0.0], [0.5, 0.0, 0.0]) - 1.0 / 1.5).abs() < 1e-12);
        assert!((segment_time([1.0, 0.0, 0.0], [-0.5, 0.0, 0.0]) - 2.0).abs() < 1e-12);
        assert!(segment_time([1.0, 0.0, 0.0], [-1.5, 0.0, 0.0]).is_infinite());
        assert!((segment_time([1.0, 0.0, 0.0], [2.0, 0.0, 0.0]) - 1.0 / 3.0).abs() < 1e-12);
        // Cross wind of speed 0.6 leaves 0.8 along the segment.
        assert!((segment_time([1.0, 0.0, 0.0], [0.0, 0.6, 0.0]) - 1.25).abs() < 1e-12);
        // A cross wind faster than the control blocks the segment.
        assert!(segment_time([0.0, 1.0, 0.0], [1.5, 0.0, 0.0]).is_infinite());
    }

    #[test]
    fn segment_time_solves_the_constraint() {
        for (d, w) in [([0.3, -0.7, 0.2], [0.4, 0.1, -0.3]), ([1.0, 1.0, 0.0], [1.2, 0.9, 0.0])] {
            let t = segment_time(d, w);
            let r = sub(d, scale(w, t));
            assert!((dot(r, r).sqrt() - t).abs() < 1e-12);
        }
    }

    #[test]
    fn primitive_counts() {
        assert_eq!(primitive_offsets(2, 1).len(), 8);
        assert_eq!(primitive_offsets(2, 2).len(), 16);
        assert_eq!(primitive_offsets(3, 1).len(), 26);
    }

    #[test]
    fn zero_field_distance() {
        let f = Field::zero(2);
        let cfg = GridConfig::centered(2, 0.25, 0.1, ORIGIN, 6.0);
        let map = first_passage(&f, ORIGIN, &cfg, None, StopRule::Exhaust).unwrap();
        for (i, t) in map.times().iter().enumerate() {
            let p = cfg.point(i);
            let r = dot(p, p).sqrt();
            assert!(*t >= r - 1e-9 && *t <= r * 1.01 + 1e-9, "{p:?} {t}");
        }
        assert_eq!(map.time_at(ORIGIN), 0.0);
        let y = [1.1, -2.3, 0.0];
        assert!((map.time_at(y) - dot(y, y).sqrt()).abs() < 0.05);
    }

    #[test]
    fn rho_lag_shortcuts() {
        let f = Field::zero(2);
        let cfg = GridConfig::centered(2, 0.25, 0.1, ORIGIN, 6.0);
        let plain = first_passage(&f, ORIGIN, &cfg, None, StopRule::Exhaust).unwrap();
        let fast = first_passage(&f, ORIGIN, &cfg, Some(0.5), StopRule::Exhaust).unwrap();
        for (a, b) in plain.times().iter().zip(fast.times()) {
            assert!(b <= a);
        }
        // Four lags of 0.5 cover distance 4 faster than unit speed.
        assert!((fast.time_at([4.0, 0.0, 0.0]) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn path_reconstruction_ends_at_target() {
        let f = Field::zero(2);
        let cfg = GridConfig::centered(2, 0.25, 0.1, ORIGIN, 4.0);
        let map = first_passage(&f, ORIGIN, &cfg, None, StopRule::Exhaust).unwrap();
        let p = map.path_to_point([2.0, 1.0, 0.0]);
        assert_eq!(p[0], ORIGIN);
        assert_eq!(*p.last().unwrap(), [2.0, 1.0, 0.0]);
    }
}
