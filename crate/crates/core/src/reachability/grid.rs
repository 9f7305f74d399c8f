use serde::{Deserialize, Serialize};

use super::ReachError;
use crate::geom::{Point, ORIGIN};

/// Forward sets use `V`, backward sets use `−V`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Forward,
    Backward,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

/// Axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: Point,
    pub hi: Point,
}

impl Window {
    pub fn centered(center: Point, half: f64) -> Self {
        let mut lo = center;
        let mut hi = center;
        for i in 0..3 {
            lo[i] -= half;
            hi[i] += half;
        }
        Window { lo, hi }
    }

    /// Largest radius of a ball around `x` inside the box (first `d` axes).
    pub fn inner_radius(&self, x: Point, d: usize) -> f64 {
        (0..d)
            .map(|i| (x[i] - self.lo[i]).min(self.hi[i] - x[i]))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Uniform grid `lo + h·i` over a window, with a time step used to bin
/// arrival times into reachable-set masks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub dim: usize,
    pub h: f64,
    pub dt: f64,
    pub window: Window,
    /// Max-norm radius of the edge stencil in cells.
    pub stencil: usize,
}

impl GridConfig {
    /// Grid of half-width `half` around `center`, snapped so `center` is a node.
    pub fn centered(dim: usize, h: f64, dt: f64, center: Point, half: f64) -> Self {
        let cells = (half / h).ceil();
        let mut w = Window::centered(center, cells * h);
        if dim == 2 {
            w.lo[2] = center[2];
            w.hi[2] = center[2];
        }
        GridConfig {
            dim,
            h,
            dt,
            window: w,
            stencil: default_stencil(dim),
        }
    }

    pub fn with_stencil(mut self, stencil: usize) -> Self {
        self.stencil = stencil;
        self
    }

    pub fn validate(&self) -> Result<(), ReachError> {
        if self.dim != 2 && self.dim != 3 {
            return Err(ReachError::Grid(format!("dimension must be 2 or 3, got {}", self.dim)));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(ReachError::Grid(format!("spacing h must be positive, got {}", self.h)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(ReachError::Grid(format!("time step dt must be positive, got {}", self.dt)));
        }
        if self.stencil == 0 {
            return Err(ReachError::Grid("stencil radius must be at least 1".into()));
        }
        for i in 0..self.dim {
            if !(self.window.hi[i] > self.window.lo[i]) {
                return Err(ReachError::Grid(format!("window axis {i} is empty")));
            }
        }
        Ok(())
    }

    /// Δt times the per-step growth speed (drift bound plus unit control),
    /// in cells.
    pub fn cfl_ratio(&self, drift_bound: f64) -> f64 {
        self.dt * (drift_bound + 1.0) / self.h
    }

    pub fn check_cfl(&self, drift_bound: f64) -> Result<(), ReachError> {
        let ratio = self.cfl_ratio(drift_bound);
        if ratio > 0.5 + 1e-12 {
            return Err(ReachError::Cfl {
                ratio,
                max_dt: 0.5 * self.h / (drift_bound + 1.0),
            });
        }
        Ok(())
    }

    pub fn dims(&self) -> [usize; 3] {
        let mut n = [1usize; 3];
        for (i, ni) in n.iter_mut().enumerate().take(self.dim) {
            *ni = ((self.window.hi[i] - self.window.lo[i]) / self.h + 1e-9).floor() as usize + 1;
        }
        n
    }

    pub fn len(&self) -> usize {
        let n = self.dims();
        n[0] * n[1] * n[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn node(&self, c: [usize; 3]) -> Point {
        let mut p = ORIGIN;
        for i in 0..self.dim {
            p[i] = self.window.lo[i] + self.h * c[i] as f64;
        }
        if self.dim == 2 {
            p[2] = self.window.lo[2];
        }
        p
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let n = self.dims();
        [idx % n[0], (idx / n[0]) % n[1], idx / (n[0] * n[1])]
    }

    #[inline]
    pub fn index(&self, c: [usize; 3]) -> usize {
        let n = self.dims();
        c[0] + n[0] * (c[1] + n[1] * c[2])
    }

    pub fn point(&self, idx: usize) -> Point {
        self.node(self.coords(idx))
    }

    /// Nearest node to `x`, if `x` lies within half a cell of the grid.
    pub fn nearest(&self, x: Point) -> Option<[usize; 3]> {
        let n = self.dims();
        let mut c = [0usize; 3];
        for i in 0..self.dim {
            let f = ((x[i] - self.window.lo[i]) / self.h).round();
            if f < 0.0 || f as usize >= n[i] {
                return None;
            }
            c[i] = f as usize;
        }
        Some(c)
    }

    /// Whether `x` lies in the closed window (first `d` axes).
    pub fn contains(&self, x: Point) -> bool {
        (0..self.dim).all(|i| x[i] >= self.window.lo[i] - 1e-12 && x[i] <= self.window.hi[i] + 1e-12)
    }
}

pub fn default_stencil(dim: usize) -> usize {
    if dim == 2 {
        4
    } else {
        2
    }
}
