use super::{LatticeWindow, SiteLattice};

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let p = self.parent[x] as usize;
            self.parent[x] = self.parent[p];
            x = p;
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
        true
    }
}

/// Component labels of a membership mask; ids follow first appearance in
/// index order, and non-members carry `None`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Components {
    pub labels: Vec<Option<u32>>,
    pub sizes: Vec<usize>,
}

impl Components {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    /// Window indices of component `id`.
    pub fn members(&self, id: u32) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == Some(id))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Offsets to the neighbours that precede a site in index order.
fn backward_offsets(dim: usize) -> Vec<[i64; 3]> {
    let zr = if dim == 3 { 1 } else { 0 };
    let mut out = Vec::new();
    for dz in -zr..=zr {
        for dy in -1..=1 {
            for dx in -1..=1i64 {
                let o = [dx, dy, dz];
                if (dz, dy, dx) < (0, 0, 0) {
                    out.push(o);
                }
            }
        }
    }
    out
}

/// Connected components (ℓ∞ adjacency) of the sites where `member` holds.
pub fn label_components(window: &LatticeWindow, member: &[bool]) -> Components {
    label_by(window, |i| member[i], |a, b| member[a] && member[b])
}

fn label_by(
    window: &LatticeWindow,
    member: impl Fn(usize) -> bool,
    joins: impl Fn(usize, usize) -> bool,
) -> Components {
    let n = window.len();
    let mut uf = UnionFind::new(n);
    let offs = backward_offsets(window.dim);
    for i in 0..n {
        if !member(i) {
            continue;
        }
        let s = window.site(i);
        for o in &offs {
            let t = [s[0] + o[0], s[1] + o[1], s[2] + o[2]];
            if let Some(j) = window.index_of(t) {
                if joins(i, j) {
                    uf.union(i, j);
                }
            }
        }
    }
    let mut root_id = vec![u32::MAX; n];
    let mut labels = vec![None; n];
    let mut sizes = Vec::new();
    for i in 0..n {
        if !member(i) {
            continue;
        }
        let r = uf.find(i);
        if root_id[r] == u32::MAX {
            root_id[r] = sizes.len() as u32;
            sizes.push(0);
        }
        let id = root_id[r];
        labels[i] = Some(id);
        sizes[id as usize] += 1;
    }
    Components { labels, sizes }
}

/// Maximal connected constant-state components of a lattice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterDecomposition {
    pub labels: Vec<u32>,
    pub sizes: Vec<usize>,
    pub open: Vec<bool>,
}

impl ClusterDecomposition {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    /// Largest open cluster, ties to the lowest id.
    pub fn largest_open(&self) -> Option<u32> {
        let mut best: Option<u32> = None;
        for (id, (&size, &open)) in self.sizes.iter().zip(&self.open).enumerate() {
            if open && best.map_or(true, |b| size > self.sizes[b as usize]) {
                best = Some(id as u32);
            }
        }
        best
    }

    pub fn mask(&self, id: u32) -> Vec<bool> {
        self.labels.iter().map(|l| *l == id).collect()
    }
}

pub fn clusters(lattice: &SiteLattice) -> ClusterDecomposition {
    let st = lattice.states();
    let comps = label_by(lattice.window(), |_| true, |a, b| st[a] == st[b]);
    let labels: Vec<u32> = comps.labels.iter().map(|l| l.expect("every site is a member")).collect();
    let mut open = vec![false; comps.sizes.len()];
    for (i, &l) in labels.iter().enumerate() {
        open[l as usize] = st[i];
    }
    ClusterDecomposition {
        labels,
        sizes: comps.sizes,
        open,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_sites_are_adjacent() {
        let w = LatticeWindow::cube(2, [0, 0, 0], 2);
        let mut l = SiteLattice::from_fn(w, |_| true);
        l.set([0, 0, 0], false);
        l.set([1, 1, 0], false);
        l.set([-2, 2, 0], false);
        let c = clusters(&l);
        assert_eq!(c.count(), 3);
        assert_eq!(c.sizes.iter().sum::<usize>(), w.len());
        let closed: Vec<usize> = (0..c.count()).filter(|&i| !c.open[i]).map(|i| c.sizes[i]).collect();
        assert_eq!(closed.len(), 2);
        assert!(closed.contains(&2) && closed.contains(&1));
    }

    #[test]
    fn largest_open_breaks_ties_low() {
        let w = LatticeWindow::new(2, [0, 0, 0], [4, 0, 0]);
        let l = SiteLattice::from_states(w, vec![true, false, true, false, true]).unwrap();
        let c = clusters(&l);
        assert_eq!(c.largest_open(), Some(0));
        let none = SiteLattice::from_fn(w, |_| false);
        assert_eq!(clusters(&none).largest_open(), None);
    }

    #[test]
    fn three_d_components() {
        let w = LatticeWindow::cube(3, [0, 0, 0], 1);
        let mut m = vec![false; w.len()];
        m[w.index([-1, -1, -1])] = true;
        m[w.index([0, 0, 0])] = true;
        m[w.index([1, -1, 1])] = true;
        let c = label_components(&w, &m);
        assert_eq!(c.count(), 1);
        assert_eq!(c.sizes, vec![3]);
    }
}
