//! Site percolation with ℓ∞ adjacency on finite windows of ℤ^d.

mod classify;
mod clusters;
mod sets;
mod skeleton;

use std::fmt::Write as _;

use rand::Rng;
use thiserror::Error;

pub use classify::{calibrate_threshold, classify_sites, open_fraction, site_sup_passage, ClassifyConfig};
pub use clusters::{clusters, label_components, ClusterDecomposition, Components, UnionFind};
pub use sets::{
    boundaries, check_unicoherence, cl_of, giant_cluster_event, is_connected, random_connected_set,
    BoundaryKind, UnicoherenceReport, Witness,
};
pub use skeleton::{detour_skeleton, segment_sites, skeleton_bound, SkeletonBound};

use crate::reachability::ReachError;
use crate::seed::{hash_point, unit};

pub type Site = [i64; 3];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PercolationError {
    #[error("site {0:?} lies outside the window")]
    OutsideWindow(Site),
    #[error("window too small: {0}")]
    WindowTooSmall(String),
    #[error("set is not connected")]
    NotConnected,
    #[error("endpoints are not in the solidification of a common open cluster")]
    DifferentClusters,
    #[error("invalid lattice text: {0}")]
    Parse(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Solver(#[from] ReachError),
}

/// Inclusive box `lo..=hi` of lattice sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LatticeWindow {
    pub dim: usize,
    pub lo: Site,
    pub hi: Site,
}

impl LatticeWindow {
    pub fn new(dim: usize, lo: Site, hi: Site) -> Self {
        let mut lo = lo;
        let mut hi = hi;
        if dim == 2 {
            lo[2] = 0;
            hi[2] = 0;
        }
        LatticeWindow { dim, lo, hi }
    }

    /// `Q_R(center)`: sites within ℓ∞ distance `r` of `center`.
    pub fn cube(dim: usize, center: Site, r: i64) -> Self {
        let mut lo = center;
        let mut hi = center;
        for i in 0..dim {
            lo[i] -= r;
            hi[i] += r;
        }
        LatticeWindow::new(dim, lo, hi)
    }

    pub fn side(&self, i: usize) -> usize {
        (self.hi[i] - self.lo[i] + 1).max(0) as usize
    }

    pub fn len(&self) -> usize {
        (0..3).map(|i| self.side(i)).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, s: Site) -> bool {
        (0..3).all(|i| s[i] >= self.lo[i] && s[i] <= self.hi[i])
    }

    pub fn contains_window(&self, other: &LatticeWindow) -> bool {
        self.contains(other.lo) && self.contains(other.hi)
    }

    pub fn center(&self) -> Site {
        let mut c = [0; 3];
        for i in 0..3 {
            c[i] = (self.lo[i] + self.hi[i]).div_euclid(2);
        }
        c
    }

    #[inline]
    pub fn index(&self, s: Site) -> usize {
        let a = (s[0] - self.lo[0]) as usize;
        let b = (s[1] - self.lo[1]) as usize;
        let c = (s[2] - self.lo[2]) as usize;
        a + self.side(0) * (b + self.side(1) * c)
    }

    pub fn index_of(&self, s: Site) -> Option<usize> {
        self.contains(s).then(|| self.index(s))
    }

    #[inline]
    pub fn site(&self, idx: usize) -> Site {
        let n0 = self.side(0);
        let n1 = self.side(1);
        [
            self.lo[0] + (idx % n0) as i64,
            self.lo[1] + ((idx / n0) % n1) as i64,
            self.lo[2] + (idx / (n0 * n1)) as i64,
        ]
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.len()).map(move |i| self.site(i))
    }

    /// ℓ∞ neighbours of `s` inside the window.
    pub fn neighbors(&self, s: Site) -> Vec<Site> {
        let mut out = Vec::with_capacity(26);
        let zr = if self.dim == 3 { 1 } else { 0 };
        for dz in -zr..=zr {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if dx == 0 && dy == 0 && dz == 0 {
                        continue;
                    }
                    let t = [s[0] + dx, s[1] + dy, s[2] + dz];
                    if self.contains(t) {
                        out.push(t);
                    }
                }
            }
        }
        out
    }
}

/// ℓ∞ graph distance between sites.
pub fn linf(a: Site, b: Site) -> i64 {
    (0..3).map(|i| (a[i] - b[i]).abs()).max().unwrap_or(0)
}

/// Open/closed state of every site of a window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiteLattice {
    window: LatticeWindow,
    open: Vec<bool>,
}

impl SiteLattice {
    pub fn from_fn(window: LatticeWindow, mut f: impl FnMut(Site) -> bool) -> Self {
        let open = (0..window.len()).map(|i| f(window.site(i))).collect();
        SiteLattice { window, open }
    }

    pub fn from_states(window: LatticeWindow, open: Vec<bool>) -> Result<Self, PercolationError> {
        if open.len() != window.len() {
            return Err(PercolationError::Parameter(format!(
                "{} states for a window of {} sites",
                open.len(),
                window.len()
            )));
        }
        Ok(SiteLattice { window, open })
    }

    /// Independent sites, open with probability `p`; site states are keyed
    /// by `(seed, site)` so any sub-window agrees with the full lattice.
    pub fn iid(window: LatticeWindow, p: f64, seed: u64) -> Self {
        SiteLattice::from_fn(window, |s| unit(hash_point(seed, s, 0x5175)) < p)
    }

    pub fn iid_rng<R: Rng>(window: LatticeWindow, p: f64, rng: &mut R) -> Self {
        SiteLattice::from_fn(window, |_| rng.gen::<f64>() < p)
    }

    pub fn window(&self) -> &LatticeWindow {
        &self.window
    }

    pub fn dim(&self) -> usize {
        self.window.dim
    }

    pub fn states(&self) -> &[bool] {
        &self.open
    }

    pub fn is_open(&self, s: Site) -> bool {
        self.window.index_of(s).map(|i| self.open[i]).unwrap_or(false)
    }

    pub fn set(&mut self, s: Site, open: bool) {
        let i = self.window.index(s);
        self.open[i] = open;
    }

    pub fn open_count(&self) -> usize {
        self.open.iter().filter(|o| **o).count()
    }

    /// Copy of the states on a sub-window.
    pub fn restrict(&self, w: LatticeWindow) -> Result<SiteLattice, PercolationError> {
        if !self.window.contains_window(&w) {
            return Err(PercolationError::WindowTooSmall(format!(
                "{:?}..{:?} is not inside {:?}..{:?}",
                w.lo, w.hi, self.window.lo, self.window.hi
            )));
        }
        Ok(SiteLattice::from_fn(w, |s| self.is_open(s)))
    }

    /// Text form: a header line, then one character per site (`.` open,
    /// `#` closed), one row per y, layers separated by blank lines.
    pub fn to_text(&self) -> String {
        let w = &self.window;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "dim={} lo={},{},{} hi={},{},{}",
            w.dim, w.lo[0], w.lo[1], w.lo[2], w.hi[0], w.hi[1], w.hi[2]
        );
        for z in w.lo[2]..=w.hi[2] {
            if z != w.lo[2] {
                out.push('\n');
            }
            for y in w.lo[1]..=w.hi[1] {
                for x in w.lo[0]..=w.hi[0] {
                    out.push(if self.is_open([x, y, z]) { '.' } else { '#' });
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, PercolationError> {
        let bad = |m: &str| PercolationError::Parse(m.to_string());
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty input"))?;
        let mut dim = None;
        let mut lo = None;
        let mut hi = None;
        for tok in header.split_whitespace() {
            let (k, v) = tok.split_once('=').ok_or_else(|| bad("header token without '='"))?;
            let triple = || -> Result<Site, PercolationError> {
                let parts: Vec<i64> = v
                    .split(',')
                    .map(|p| p.parse::<i64>().map_err(|_| bad("bad coordinate")))
                    .collect::<Result<_, _>>()?;
                if parts.len() != 3 {
                    return Err(bad("coordinates need three entries"));
                }
                Ok([parts[0], parts[1], parts[2]])
            };
            match k {
                "dim" => dim = Some(v.parse::<usize>().map_err(|_| bad("bad dim"))?),
                "lo" => lo = Some(triple()?),
                "hi" => hi = Some(triple()?),
                _ => return Err(bad("unknown header key")),
            }
        }
        let (dim, lo, hi) = match (dim, lo, hi) {
            (Some(d), Some(l), Some(h)) => (d, l, h),
            _ => return Err(bad("header needs dim, lo and hi")),
        };
        let window = LatticeWindow::new(dim, lo, hi);
        let mut open = Vec::with_capacity(window.len());
        for line in lines {
            for ch in line.chars() {
                match ch {
                    '.' => open.push(true),
                    '#' => open.push(false),
                    c if c.is_whitespace() => {}
                    _ => return Err(bad("unexpected character")),
                }
            }
        }
        SiteLattice::from_states(window, open)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_indexing_round_trips() {
        let w = LatticeWindow::new(3, [-2, -1, 0], [1, 2, 2]);
        for i in 0..w.len() {
            assert_eq!(w.index(w.site(i)), i);
        }
        assert_eq!(w.neighbors([0, 0, 1]).len(), 26);
        assert_eq!(w.neighbors([-2, -1, 0]).len(), 7);
    }

    #[test]
    fn text_round_trip() {
        let w = LatticeWindow::cube(2, [0, 0, 0], 3);
        let l = SiteLattice::iid(w, 0.7, 4);
        let back = SiteLattice::from_text(&l.to_text()).unwrap();
        assert_eq!(back, l);
        let w3 = LatticeWindow::cube(3, [1, 1, 1], 1);
        let l3 = SiteLattice::iid(w3, 0.5, 9);
        assert_eq!(SiteLattice::from_text(&l3.to_text()).unwrap(), l3);
    }

    #[test]
    fn iid_is_window_independent() {
        let big = SiteLattice::iid(LatticeWindow::cube(2, [0, 0, 0], 6), 0.5, 1);
        let small = SiteLattice::iid(LatticeWindow::cube(2, [1, 1, 0], 2), 0.5, 1);
        assert_eq!(big.restrict(*small.window()).unwrap(), small);
    }
}
