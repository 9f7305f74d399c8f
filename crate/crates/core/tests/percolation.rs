use ghomog::percolation::{
    check_unicoherence, cl_of, clusters, detour_skeleton, giant_cluster_event, random_connected_set, segment_sites,
    skeleton_bound, LatticeWindow, PercolationError, SiteLattice,
};
use ghomog::seed::rng;
use rand::Rng;

fn same_cluster_pair(l: &SiteLattice, r: &mut impl Rng) -> Option<([f64; 3], [f64; 3])> {
    let dec = clusters(l);
    let big = dec.largest_open()?;
    let w = l.window();
    let members: Vec<_> = (0..w.len()).filter(|i| dec.labels[*i] == big).map(|i| w.site(i)).collect();
    let inner: Vec<_> = members
        .iter()
        .filter(|s| (0..w.dim).all(|i| s[i] > w.lo[i] + 2 && s[i] < w.hi[i] - 2))
        .collect();
    if inner.len() < 2 {
        return None;
    }
    let a = inner[r.gen_range(0..inner.len())];
    let b = inner[r.gen_range(0..inner.len())];
    let jitter = |s: &[i64; 3], r: &mut dyn rand::RngCore| {
        let mut p = [s[0] as f64, s[1] as f64, s[2] as f64];
        for x in p.iter_mut().take(w.dim) {
            *x += (r.gen::<f64>() - 0.5) * 0.9;
        }
        p
    };
    Some((jitter(a, r), jitter(b, r)))
}

#[test]
fn random_skeletons_respect_the_counting_bound() {
    let mut r = rng(77);
    let mut checked = 0;
    for trial in 0..200u64 {
        let dim = if trial % 4 == 3 { 3 } else { 2 };
        let half = if dim == 2 { 14 } else { 7 };
        let l = SiteLattice::iid(LatticeWindow::cube(dim, [0, 0, 0], half), 0.9, trial);
        let Some((x, y)) = same_cluster_pair(&l, &mut r) else { continue };
        let path = detour_skeleton(&l, x, y).unwrap();
        let b = skeleton_bound(&l, x, y).unwrap();
        assert!(path.max_step() <= (dim as f64).sqrt() + 1e-9);
        assert!((path.steps() as f64) <= b.bound, "{} > {}", path.steps(), b.bound);
        assert!(!path.revisits_detour());
        assert_eq!(path.end(), y);
        checked += 1;
    }
    assert!(checked > 150);
}

#[test]
fn segment_sites_cover_the_segment() {
    let x = [0.3, -1.2, 0.0];
    let y = [5.1, 2.7, 0.0];
    let a = segment_sites(x, y, 2);
    for k in 0..=100 {
        let t = k as f64 / 100.0;
        let p = [x[0] + t * (y[0] - x[0]), x[1] + t * (y[1] - x[1])];
        assert!(a.iter().any(|(s, _, _)| (0..2).all(|i| (p[i] - s[i] as f64).abs() <= 0.5 + 1e-9)));
    }
}

#[test]
fn unicoherence_holds_for_random_sets() {
    let mut r = rng(5);
    for i in 0..300 {
        let (dim, half) = if i % 3 == 0 { (3, 2) } else { (2, 4) };
        let w = LatticeWindow::cube(dim, [0, 0, 0], half);
        let size = r.gen_range(1..w.len() / 2);
        let set = random_connected_set(&w, size, &mut r);
        let rep = check_unicoherence(&w, &set).unwrap();
        assert!(rep.passed, "{:?}", rep.witness);
    }
}

#[test]
fn disconnected_set_is_rejected() {
    let w = LatticeWindow::cube(2, [0, 0, 0], 3);
    assert_eq!(
        check_unicoherence(&w, &[[0, 0, 0], [3, 3, 0]]).unwrap_err(),
        PercolationError::NotConnected
    );
}

#[test]
fn cl_returns_only_closed_sites() {
    let l = SiteLattice::iid(LatticeWindow::cube(2, [0, 0, 0], 10), 0.6, 2);
    let s: Vec<_> = (-5..=5).map(|i| [i, 0, 0]).collect();
    for v in cl_of(&l, &s).unwrap() {
        assert!(!l.is_open(v));
    }
}

#[test]
fn giant_event_is_monotone_in_n() {
    for seed in 0..20 {
        let l = SiteLattice::iid(LatticeWindow::cube(2, [0, 0, 0], 20), 0.7, seed);
        let mut was = false;
        for n in [0, 2, 5, 10] {
            let now = giant_cluster_event(&l, 8, n).unwrap();
            assert!(now || !was);
            was = now;
        }
    }
}
