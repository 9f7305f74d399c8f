use rayon::prelude::*;
use serde::Serialize;

use super::directions::DirectionGrid;
use super::shape::{estimate_theta_bar, scaled_hausdorff, ShapeEstimate};
use super::solve::{certified_map, sup_over_sublevels, InitialData};
use super::{trial_field, HomogError, TrialFailure};
use crate::field::FieldSpec;
use crate::geom::{norm, scale, Point, ORIGIN};
use crate::reachability::{passage_times, GridConfig};
use crate::seed::derive_seed;
use crate::stats::{fit_power, jackknife_se, mean, median, std_dev, std_err, LineFit};

/// Seeds for auxiliary runs (plug-in limits) are drawn from this offset so
/// they never coincide with the main trials.
const AUX: u64 = 1 << 40;

fn split<T>(runs: Vec<(u64, Result<T, HomogError>)>) -> (Vec<(u64, T)>, Vec<TrialFailure>) {
    let mut ok = Vec::new();
    let mut failures = Vec::new();
    for (seed, r) in runs {
        match r {
            Ok(v) => ok.push((seed, v)),
            Err(e) => failures.push(TrialFailure { seed, error: e.to_string() }),
        }
    }
    (ok, failures)
}

fn run_trials<T: Send>(
    seed: u64,
    offset: u64,
    trials: usize,
    job: impl Fn(u64) -> Result<T, HomogError> + Sync,
) -> Vec<(u64, Result<T, HomogError>)> {
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let s = derive_seed(seed, offset + i as u64);
            (s, job(s))
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct FluctuationReport {
    pub direction: Point,
    pub radii: Vec<f64>,
    /// `θ(0, Rv)` for every radius, per successful trial.
    pub samples: Vec<(u64, Vec<f64>)>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub std_se: Vec<f64>,
    /// Plug-in `θ̄(v)` and its standard error.
    pub theta_bar: f64,
    pub theta_bar_se: f64,
    pub theta_bar_radius: f64,
    /// `|mean − R·θ̄(v)|`.
    pub bias: Vec<f64>,
    pub std_fit: LineFit,
    pub bias_fit: LineFit,
    pub failures: Vec<TrialFailure>,
}

/// Mean, spread and bias of `θ(0, Rv)` against `R`. `θ̄(v)` is the plug-in
/// `θ(0, R'v)/R'` at `R' = 2·max R`, averaged over `theta_trials`
/// independent fields.
pub fn fluctuation_experiment(
    spec: &FieldSpec,
    seed: u64,
    direction: Point,
    radii: &[f64],
    trials: usize,
    theta_trials: usize,
    proto: &GridConfig,
) -> Result<FluctuationReport, HomogError> {
    if trials < 2 || theta_trials < 1 || radii.is_empty() {
        return Err(HomogError::Parameter("need radii, two trials and one plug-in trial".into()));
    }
    let v = scale(direction, 1.0 / norm(direction));
    let targets: Vec<Point> = radii.iter().map(|r| scale(v, *r)).collect();
    let (samples, mut failures) = split(run_trials(seed, 0, trials, |s| {
        let f = trial_field(spec, s)?;
        Ok(passage_times(&f, ORIGIN, &targets, proto, None)?.0)
    }));
    if samples.len() < 2 {
        return Err(HomogError::NoTrials(format!("{} fluctuation trials failed", failures.len())));
    }
    let far = 2.0 * radii.iter().copied().fold(0.0, f64::max);
    let (plug, fails) = split(run_trials(seed, AUX, theta_trials, |s| {
        let f = trial_field(spec, s)?;
        Ok(passage_times(&f, ORIGIN, &[scale(v, far)], proto, None)?.0[0] / far)
    }));
    failures.extend(fails);
    if plug.is_empty() {
        return Err(HomogError::NoTrials("every plug-in trial failed".into()));
    }
    let plug: Vec<f64> = plug.into_iter().map(|p| p.1).collect();
    let theta_bar = mean(&plug);
    let theta_bar_se = if plug.len() > 1 { std_err(&plug) } else { 0.0 };
    let mut means = Vec::new();
    let mut stds = Vec::new();
    let mut std_se = Vec::new();
    let mut bias = Vec::new();
    for (k, r) in radii.iter().enumerate() {
        let xs: Vec<f64> = samples.iter().map(|s| s.1[k]).collect();
        let m = mean(&xs);
        let sd = std_dev(&xs);
        means.push(m);
        stds.push(sd);
        std_se.push(sd / (2.0 * (xs.len() as f64 - 1.0)).sqrt());
        bias.push((m - r * theta_bar).abs());
    }
    Ok(FluctuationReport {
        direction: v,
        radii: radii.to_vec(),
        std_fit: fit_power(radii, &stds),
        bias_fit: fit_power(radii, &bias),
        samples,
        mean: means,
        std: stds,
        std_se,
        theta_bar,
        theta_bar_se,
        theta_bar_radius: far,
        bias,
        failures,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ShapeConvergenceReport {
    pub times: Vec<f64>,
    /// `dist_H(t⁻¹R_t(0), S_1)` per time, per successful trial.
    pub distances: Vec<(u64, Vec<f64>)>,
    pub median: Vec<f64>,
    pub failures: Vec<TrialFailure>,
}

/// Hausdorff distance between the rescaled reachable set and the shape
/// `S_1` of `est` at each time in `times`.
pub fn shape_convergence_experiment(
    spec: &FieldSpec,
    seed: u64,
    times: &[f64],
    trials: usize,
    est: &ShapeEstimate,
    proto: &GridConfig,
) -> Result<ShapeConvergenceReport, HomogError> {
    let t_max = times.iter().copied().fold(0.0, f64::max);
    if !(t_max > 0.0) || trials == 0 {
        return Err(HomogError::Parameter("need positive times and at least one trial".into()));
    }
    let reach = est.shape_set(t_max).max_radius();
    let (distances, failures) = split(run_trials(seed, 0, trials, |s| {
        let f = trial_field(spec, s)?;
        let mut guess = 1.25 * reach + 4.0;
        loop {
            let map = certified_map(&f, ORIGIN, t_max, proto, guess)?;
            let room = map.grid().window.inner_radius(ORIGIN, spec.dim);
            if room >= reach + 2.0 * proto.h {
                return Ok(times.iter().map(|t| scaled_hausdorff(&map, est, *t)).collect::<Vec<f64>>());
            }
            guess = room * 1.5;
        }
    }));
    if distances.is_empty() {
        return Err(HomogError::NoTrials("every shape trial failed".into()));
    }
    let med = (0..times.len())
        .map(|k| median(&distances.iter().map(|d| d.1[k]).collect::<Vec<_>>()))
        .collect();
    Ok(ShapeConvergenceReport {
        times: times.to_vec(),
        distances,
        median: med,
        failures,
    })
}

/// Plug-in `H̄(p)` for linear data: `sup {p·y : θ(0,y) ≤ s} / s`, averaged
/// over `trials` fields. Returns the mean and its standard error.
pub fn linear_rate(
    spec: &FieldSpec,
    seed: u64,
    p: Point,
    s: f64,
    trials: usize,
    proto: &GridConfig,
) -> Result<(f64, f64), HomogError> {
    let u0 = InitialData::Linear { p };
    let (vals, _) = split(run_trials(seed, AUX, trials, |sd| {
        let f = trial_field(spec, sd)?;
        let map = certified_map(&f, ORIGIN, s, proto, 1.6 * s + 4.0)?;
        Ok(sup_over_sublevels(&map, &u0, &[s], 1.0)[0] / s)
    }));
    let xs: Vec<f64> = vals.into_iter().map(|v| v.1).collect();
    if xs.is_empty() {
        return Err(HomogError::NoTrials("every plug-in trial failed".into()));
    }
    let se = if xs.len() > 1 { std_err(&xs) } else { 0.0 };
    Ok((mean(&xs), se))
}

#[derive(Debug, Clone, Serialize)]
pub struct HomogErrorReport {
    pub eps: Vec<f64>,
    pub times: Vec<f64>,
    pub points: Vec<Point>,
    /// `max_{t,x} |u^ε − ū|` per ε, per successful trial.
    pub errors: Vec<(u64, Vec<f64>)>,
    pub median: Vec<f64>,
    /// Power fit of the median error against ε.
    pub fit: LineFit,
    pub failures: Vec<TrialFailure>,
}

/// `max |u^ε(t,x) − ū(t,x)|` over the sampled `(t, x)` for each ε; `u_bar`
/// supplies the homogenized solution.
#[allow(clippy::too_many_arguments)]
pub fn homog_error_experiment(
    spec: &FieldSpec,
    seed: u64,
    u0: &InitialData,
    eps: &[f64],
    times: &[f64],
    points: &[Point],
    trials: usize,
    u_bar: &(dyn Fn(f64, Point) -> f64 + Sync),
    proto: &GridConfig,
) -> Result<HomogErrorReport, HomogError> {
    if eps.is_empty() || eps.windows(2).any(|w| w[1] >= w[0]) || eps.iter().any(|e| *e <= 0.0) {
        return Err(HomogError::Parameter("ε list must be positive and decreasing".into()));
    }
    if times.is_empty() || points.is_empty() || trials == 0 {
        return Err(HomogError::Parameter("need times, points and trials".into()));
    }
    let t_max = times.iter().copied().fold(0.0, f64::max);
    let (errors, failures) = split(run_trials(seed, 0, trials, |s| {
        let f = trial_field(spec, s)?;
        let mut out = Vec::with_capacity(eps.len());
        for e in eps {
            let mut worst = 0.0f64;
            for x in points {
                let x0 = scale(*x, 1.0 / e);
                let map = certified_map(&f, x0, t_max / e, proto, 1.6 * t_max / e + 4.0)?;
                let u = sup_over_sublevels(&map, u0, times, *e);
                for (t, ue) in times.iter().zip(u) {
                    worst = worst.max((ue - u_bar(*t, *x)).abs());
                }
            }
            out.push(worst);
        }
        Ok(out)
    }));
    if errors.is_empty() {
        return Err(HomogError::NoTrials("every homogenization trial failed".into()));
    }
    let med: Vec<f64> = (0..eps.len())
        .map(|k| median(&errors.iter().map(|d| d.1[k]).collect::<Vec<_>>()))
        .collect();
    Ok(HomogErrorReport {
        eps: eps.to_vec(),
        times: times.to_vec(),
        points: points.to_vec(),
        fit: fit_power(eps, &med),
        errors,
        median: med,
        failures,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuityReport {
    pub amplitudes: Vec<f64>,
    pub limit_amplitude: f64,
    pub momenta: Vec<Point>,
    /// `sup_p |H̄ⁿ(p) − H̄(p)|` per law of the sequence.
    pub sup_diff: Vec<f64>,
    /// Jackknife standard error of each entry of `sup_diff`.
    pub se: Vec<f64>,
    pub trials: usize,
    pub failures: Vec<TrialFailure>,
}

/// `sup_p |H̄ⁿ(p) − H̄(p)|` for a sequence of laws against a limit law,
/// with every law sampled on the same seeds.
#[allow(clippy::too_many_arguments)]
pub fn continuity_experiment(
    sequence: &[FieldSpec],
    limit: &FieldSpec,
    seed: u64,
    grid: &DirectionGrid,
    radius: f64,
    trials: usize,
    momenta: &[Point],
    proto: &GridConfig,
) -> Result<ContinuityReport, HomogError> {
    let base = estimate_theta_bar(limit, seed, grid, &[radius], trials, proto)?;
    let mut failures = base.failures.clone();
    let mut sup_diff = Vec::new();
    let mut se = Vec::new();
    let mut used = trials;
    for spec in sequence {
        let est = estimate_theta_bar(spec, seed, grid, &[radius], trials, proto)?;
        failures.extend(est.failures.iter().cloned());
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = est
            .sample_seeds
            .iter()
            .zip(&est.samples)
            .filter_map(|(s, a)| {
                base.sample_seeds
                    .iter()
                    .position(|b| b == s)
                    .map(|j| (a.clone(), base.samples[j].clone()))
            })
            .collect();
        used = used.min(pairs.len());
        let stat = |ps: &[(Vec<f64>, Vec<f64>)]| -> f64 {
            let n = grid.len();
            let th_n: Vec<f64> = (0..n).map(|d| mean(&ps.iter().map(|p| p.0[d]).collect::<Vec<_>>())).collect();
            let th: Vec<f64> = (0..n).map(|d| mean(&ps.iter().map(|p| p.1[d]).collect::<Vec<_>>())).collect();
            let a = ShapeEstimate::from_theta(grid.clone(), th_n);
            let b = ShapeEstimate::from_theta(grid.clone(), th);
            momenta
                .iter()
                .map(|p| (a.effective_h(*p) - b.effective_h(*p)).abs())
                .fold(0.0, f64::max)
        };
        sup_diff.push(stat(&pairs));
        se.push(jackknife_se(&pairs, stat));
    }
    Ok(ContinuityReport {
        amplitudes: sequence.iter().map(|s| s.amplitude).collect(),
        limit_amplitude: limit.amplitude,
        momenta: momenta.to_vec(),
        sup_diff,
        se,
        trials: used,
        failures,
    })
}
