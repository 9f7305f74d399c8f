//! Descriptive statistics and least-squares fits used by the experiments.

use serde::Serialize;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample standard deviation; zero for fewer than two samples.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

pub fn std_err(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    std_dev(xs) / (xs.len() as f64).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Linear-interpolated quantile of the sample.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// Ordinary least squares fit y = intercept + slope·x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n: usize,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> LineFit {
    let n = xs.len().min(ys.len());
    let mx = mean(&xs[..n]);
    let my = mean(&ys[..n]);
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for i in 0..n {
        let dx = xs[i] - mx;
        let dy = ys[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { f64::NAN };
    let r2 = if syy > 0.0 && sxx > 0.0 {
        sxy * sxy / (sxx * syy)
    } else {
        1.0
    };
    LineFit {
        slope,
        intercept: my - slope * mx,
        r2,
        n,
    }
}

/// Fit y ≈ c·x^k on log-log axes, skipping non-positive entries.
pub fn fit_power(xs: &[f64], ys: &[f64]) -> LineFit {
    let (lx, ly): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .unzip();
    fit_line(&lx, &ly)
}

/// Leave-one-out jackknife standard error of a statistic of paired samples.
pub fn jackknife_se<T, F>(samples: &[T], stat: F) -> f64
where
    T: Clone,
    F: Fn(&[T]) -> f64,
{
    let n = samples.len();
    if n < 2 {
        return 0.0;
    }
    let mut reps = Vec::with_capacity(n);
    let mut buf: Vec<T> = Vec::with_capacity(n - 1);
    for i in 0..n {
        buf.clear();
        buf.extend(samples.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, s)| s.clone()));
        reps.push(stat(&buf));
    }
    let m = mean(&reps);
    let ss: f64 = reps.iter().map(|r| (r - m) * (r - m)).sum();
    (ss * (n - 1) as f64 / n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_moments() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&xs), 2.5);
        assert!((std_dev(&xs) - 1.290_994_448_735_805_6).abs() < 1e-12);
        assert_eq!(median(&xs), 2.5);
        assert_eq!(quantile(&xs, 0.0), 1.0);
        assert_eq!(quantile(&xs, 1.0), 4.0);
    }

    #[test]
    fn exact_line_and_power() {
        let xs = [1.0, 2.0, 3.0];
        let ys = [3.0, 5.0, 7.0];
        let f = fit_line(&xs, &ys);
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        let p = fit_power(&[2.0, 4.0, 8.0], &[3.0 * 2f64.sqrt(), 6.0, 6.0 * 2f64.sqrt()]);
        assert!((p.slope - 0.5).abs() < 1e-12);
    }

    #[test]
    fn jackknife_of_mean_matches_std_err() {
        let xs = [1.0, 4.0, 2.0, 8.0, 5.0];
        let jk = jackknife_se(&xs, mean);
        assert!((jk - std_err(&xs)).abs() < 1e-12);
    }
}
