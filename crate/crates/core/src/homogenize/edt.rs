//! Exact Euclidean distance transforms on node grids.

const BIG: f64 = 1e30;

/// Squared distance transform of a sampled function along one line.
fn dt_line(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let mut s;
        loop {
            let p = v[k];
            s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] && k > 0 {
                k -= 1;
            } else {
                break;
            }
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate().take(n) {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Squared distance (in node units) from every node to the nearest node
/// with `feature[i] == true`; `dims` is x-fastest.
pub fn squared_edt(feature: &[bool], dims: [usize; 3]) -> Vec<f64> {
    let mut g: Vec<f64> = feature.iter().map(|f| if *f { 0.0 } else { BIG }).collect();
    let strides = [1, dims[0], dims[0] * dims[1]];
    let longest = dims.iter().copied().max().unwrap_or(1);
    let mut buf = vec![0.0; longest];
    let mut out = vec![0.0; longest];
    let mut v = vec![0usize; longest];
    let mut z = vec![0.0; longest + 1];
    for axis in 0..3 {
        let n = dims[axis];
        if n <= 1 {
            continue;
        }
        let stride = strides[axis];
        for start in 0..g.len() {
            if (start / stride) % n != 0 {
                continue;
            }
            for i in 0..n {
                buf[i] = g[start + i * stride];
            }
            dt_line(&buf[..n], &mut out[..n], &mut v, &mut z);
            for i in 0..n {
                g[start + i * stride] = out[i].min(BIG);
            }
        }
    }
    g
}

/// Hausdorff distance in node units between two node sets on one grid;
/// infinite when exactly one of them is empty.
pub fn hausdorff_masks(a: &[bool], b: &[bool], dims: [usize; 3]) -> f64 {
    let a_any = a.iter().any(|x| *x);
    let b_any = b.iter().any(|x| *x);
    match (a_any, b_any) {
        (false, false) => return 0.0,
        (true, false) | (false, true) => return f64::INFINITY,
        _ => {}
    }
    let da = squared_edt(a, dims);
    let db = squared_edt(b, dims);
    let mut worst = 0.0f64;
    for i in 0..a.len() {
        if a[i] {
            worst = worst.max(db[i]);
        }
        if b[i] {
            worst = worst.max(da[i]);
        }
    }
    worst.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brute_force_agreement() {
        let dims = [9, 7, 3];
        let n = dims.iter().product::<usize>();
        let feature: Vec<bool> = (0..n).map(|i| (i * 37 + 11) % 23 == 0).collect();
        let d = squared_edt(&feature, dims);
        let coord = |i: usize| [i % 9, (i / 9) % 7, i / 63];
        for i in 0..n {
            let c = coord(i);
            let best = (0..n)
                .filter(|j| feature[*j])
                .map(|j| {
                    let e = coord(j);
                    (0..3).map(|k| (c[k] as f64 - e[k] as f64).powi(2)).sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min);
            assert_eq!(d[i], best);
        }
    }

    #[test]
    fn hausdorff_of_shifted_points() {
        let dims = [10, 10, 1];
        let mut a = vec![false; 100];
        let mut b = vec![false; 100];
        a[0] = true;
        b[3 + 4 * 10] = true;
        assert_eq!(hausdorff_masks(&a, &b, dims), 5.0);
    }
}
