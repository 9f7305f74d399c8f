use std::collections::{BTreeSet, VecDeque};

use rand::Rng;
use serde::Serialize;

use super::clusters::{clusters, label_components};
use super::{LatticeWindow, PercolationError, Site, SiteLattice};

/// Closed sites joined to `s` by a path of closed sites (sites of `s`
/// included when closed). Sorted.
pub fn cl_of(lattice: &SiteLattice, s: &[Site]) -> Result<Vec<Site>, PercolationError> {
    let w = lattice.window();
    let st = lattice.states();
    let mut seen = vec![false; w.len()];
    let mut queue = VecDeque::new();
    for &v in s {
        let i = w.index_of(v).ok_or(PercolationError::OutsideWindow(v))?;
        if !st[i] && !seen[i] {
            seen[i] = true;
            queue.push_back(v);
        }
    }
    let mut out = Vec::new();
    while let Some(v) = queue.pop_front() {
        out.push(v);
        for t in w.neighbors(v) {
            let j = w.index(t);
            if !st[j] && !seen[j] {
                seen[j] = true;
                queue.push_back(t);
            }
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Inner and outer boundaries of `e` relative to the window: sites of `e`
/// with a neighbour in the window outside `e`, and window sites outside `e`
/// with a neighbour in `e`. Both sorted.
pub fn boundaries(window: &LatticeWindow, e: &[Site]) -> Result<(Vec<Site>, Vec<Site>), PercolationError> {
    let mut mask = vec![false; window.len()];
    for &v in e {
        let i = window.index_of(v).ok_or(PercolationError::OutsideWindow(v))?;
        mask[i] = true;
    }
    let (inner, outer) = boundary_masks(window, &mask);
    let pick = |m: Vec<bool>| -> Vec<Site> {
        m.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| window.site(i)).collect()
    };
    Ok((pick(inner), pick(outer)))
}

pub(crate) fn boundary_masks(window: &LatticeWindow, mask: &[bool]) -> (Vec<bool>, Vec<bool>) {
    let n = window.len();
    let mut inner = vec![false; n];
    let mut outer = vec![false; n];
    for i in 0..n {
        let v = window.site(i);
        for t in window.neighbors(v) {
            let j = window.index(t);
            if mask[i] && !mask[j] {
                inner[i] = true;
            }
            if !mask[i] && mask[j] {
                outer[i] = true;
            }
        }
    }
    (inner, outer)
}

/// Whether `e` is connected under ℓ∞ adjacency. The empty set counts as
/// connected.
pub fn is_connected(window: &LatticeWindow, e: &[Site]) -> Result<bool, PercolationError> {
    let mut mask = vec![false; window.len()];
    for &v in e {
        mask[window.index_of(v).ok_or(PercolationError::OutsideWindow(v))?] = true;
    }
    Ok(label_components(window, &mask).count() <= 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    Inner,
    Outer,
}

/// A complement component whose boundary splits into several pieces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub component: Vec<Site>,
    pub kind: BoundaryKind,
    pub pieces: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnicoherenceReport {
    pub components: usize,
    pub passed: bool,
    pub witness: Option<Witness>,
}

/// For each component of `window ∖ c`, check that its inner and outer
/// boundaries are connected.
pub fn check_unicoherence(window: &LatticeWindow, c: &[Site]) -> Result<UnicoherenceReport, PercolationError> {
    let mut in_c = vec![false; window.len()];
    for &v in c {
        in_c[window.index_of(v).ok_or(PercolationError::OutsideWindow(v))?] = true;
    }
    if label_components(window, &in_c).count() != 1 {
        return Err(PercolationError::NotConnected);
    }
    let rest: Vec<bool> = in_c.iter().map(|b| !b).collect();
    let comps = label_components(window, &rest);
    for id in 0..comps.count() as u32 {
        let mask: Vec<bool> = comps.labels.iter().map(|l| *l == Some(id)).collect();
        let (inner, outer) = boundary_masks(window, &mask);
        for (kind, m) in [(BoundaryKind::Inner, inner), (BoundaryKind::Outer, outer)] {
            let pieces = label_components(window, &m).count();
            if pieces > 1 {
                return Ok(UnicoherenceReport {
                    components: comps.count(),
                    passed: false,
                    witness: Some(Witness {
                        component: comps.members(id).into_iter().map(|i| window.site(i)).collect(),
                        kind,
                        pieces,
                    }),
                });
            }
        }
    }
    Ok(UnicoherenceReport {
        components: comps.count(),
        passed: true,
        witness: None,
    })
}

/// The event that the largest open cluster of `Q_{R+n}` leaves only
/// components of at most `n` sites meeting `Q_R`. Cubes are centred at the
/// centre of the lattice window.
pub fn giant_cluster_event(lattice: &SiteLattice, r: i64, n: i64) -> Result<bool, PercolationError> {
    let w = lattice.window();
    let center = w.center();
    let outer = LatticeWindow::cube(w.dim, center, r + n);
    let inner = LatticeWindow::cube(w.dim, center, r);
    let sub = lattice.restrict(outer)?;
    let dec = clusters(&sub);
    let Some(giant) = dec.largest_open() else {
        return Ok(false);
    };
    let rest: Vec<bool> = dec.labels.iter().map(|l| *l != giant).collect();
    let comps = label_components(&outer, &rest);
    let mut meets = vec![false; comps.count()];
    for (i, l) in comps.labels.iter().enumerate() {
        if let Some(id) = l {
            if inner.contains(outer.site(i)) {
                meets[*id as usize] = true;
            }
        }
    }
    Ok(comps
        .sizes
        .iter()
        .zip(&meets)
        .all(|(&size, &m)| !m || size as i64 <= n))
}

/// A random connected set of `size` sites grown from a uniform seed site by
/// repeatedly adding a uniform neighbour of the current set.
pub fn random_connected_set<R: Rng>(window: &LatticeWindow, size: usize, rng: &mut R) -> Vec<Site> {
    let size = size.clamp(1, window.len());
    let start = window.site(rng.gen_range(0..window.len()));
    let mut set = BTreeSet::from([start]);
    let mut frontier: Vec<Site> = Vec::new();
    let mut in_frontier = BTreeSet::new();
    let mut add_frontier = |v: Site, set: &BTreeSet<Site>, frontier: &mut Vec<Site>| {
        for t in window.neighbors(v) {
            if !set.contains(&t) && in_frontier.insert(t) {
                frontier.push(t);
            }
        }
    };
    add_frontier(start, &set, &mut frontier);
    while set.len() < size && !frontier.is_empty() {
        let k = rng.gen_range(0..frontier.len());
        let v = frontier.swap_remove(k);
        set.insert(v);
        add_frontier(v, &set, &mut frontier);
    }
    set.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_site_boundaries() {
        let w = LatticeWindow::cube(2, [0, 0, 0], 3);
        let (inner, outer) = boundaries(&w, &[[0, 0, 0]]).unwrap();
        assert_eq!(inner, vec![[0, 0, 0]]);
        assert_eq!(outer.len(), 8);
    }

    #[test]
    fn square_boundaries() {
        let w = LatticeWindow::cube(2, [0, 0, 0], 4);
        let sq: Vec<Site> = (-1..=1).flat_map(|x| (-1..=1).map(move |y| [x, y, 0])).collect();
        let (inner, outer) = boundaries(&w, &sq).unwrap();
        assert_eq!(inner.len(), 8);
        assert_eq!(outer.len(), 16);
    }

    #[test]
    fn cl_examples() {
        let w = LatticeWindow::cube(2, [0, 0, 0], 3);
        let all_open = SiteLattice::from_fn(w, |_| true);
        assert!(cl_of(&all_open, &[[0, 0, 0], [1, 0, 0]]).unwrap().is_empty());
        let mut one = all_open.clone();
        one.set([0, 0, 0], false);
        assert_eq!(cl_of(&one, &[[0, 0, 0]]).unwrap(), vec![[0, 0, 0]]);
        one.set([1, 1, 0], false);
        assert_eq!(cl_of(&one, &[[0, 0, 0]]).unwrap().len(), 2);
    }

    #[test]
    fn unicoherence_single_site() {
        let w = LatticeWindow::cube(2, [2, 2, 0], 2);
        let r = check_unicoherence(&w, &[[2, 2, 0]]).unwrap();
        assert!(r.passed);
        assert_eq!(r.components, 1);
        assert_eq!(
            check_unicoherence(&w, &[[0, 0, 0], [4, 4, 0]]),
            Err(PercolationError::NotConnected)
        );
    }

    #[test]
    fn giant_event_extremes() {
        let w = LatticeWindow::cube(2, [0, 0, 0], 8);
        let open = SiteLattice::from_fn(w, |_| true);
        let closed = SiteLattice::from_fn(w, |_| false);
        for n in 0..4 {
            assert!(giant_cluster_event(&open, 4, n).unwrap());
            assert!(!giant_cluster_event(&closed, 4, n).unwrap());
        }
        assert!(giant_cluster_event(&open, 8, 1).is_err());
    }
}
