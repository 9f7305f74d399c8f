use std::collections::HashMap;
use std::time::Instant;

use rand::Rng;
use serde_json::{json, Value};

use super::config::{ExperimentConfig, Params};
use super::{drive, HarnessError, Row, RunRecord};
use crate::field::{Field, FieldSpec};
use crate::geom::{dot, norm, Point};
use crate::homogenize::{
    continuity_experiment, estimate_theta_bar, fluctuation_experiment, homog_error_experiment, linear_rate,
    shape_convergence_experiment, u_bar, DirectionGrid, InitialData, TrialFailure,
};
use crate::percolation::{
    check_unicoherence, cl_of, clusters, detour_skeleton, random_connected_set, skeleton_bound, LatticeWindow,
    SiteLattice,
};
use crate::seed::{derive_seed, rng};
use crate::stats::fit_line;
use crate::subadditive::{
    best_prefix_deviation, gap_from_skeleton, oracle_by_name, prefix_deviation, rearrange, straight_skeleton,
};

/// Seed index of auxiliary estimates (limit shapes, plug-in rates).
const AUX: u64 = 1 << 41;

pub(crate) struct KindOutput {
    pub records: Vec<RunRecord>,
    pub aggregate: Vec<Row>,
    pub summary: Value,
    pub failures: Vec<(Option<usize>, u64, String)>,
    pub completed: usize,
}

impl KindOutput {
    fn from_records(records: Vec<RunRecord>, summary: Value) -> Self {
        let failures = records
            .iter()
            .filter_map(|r| r.error.clone().map(|e| (Some(r.trial), r.seed, e)))
            .collect();
        KindOutput {
            completed: records.len(),
            records,
            aggregate: Vec::new(),
            summary,
            failures,
        }
    }
}

fn one(_: f64) -> f64 {
    1.0
}

fn log_phi(r: f64) -> f64 {
    (2.0 + r).ln()
}

fn log3_phi(r: f64) -> f64 {
    (2.0 + r).ln().powi(3)
}

pub(crate) fn phi_by_name(name: &str) -> Option<fn(f64) -> f64> {
    match name {
        "one" => Some(one),
        "log" => Some(log_phi),
        "log3" => Some(log3_phi),
        _ => None,
    }
}

/// Equal-angle circle in two dimensions, smallest icosphere with at least
/// `n` vertices in three.
pub fn direction_grid(dim: usize, n: usize) -> DirectionGrid {
    if dim == 2 {
        return DirectionGrid::circle(n);
    }
    let mut level = 0;
    while 10 * 4usize.pow(level as u32) + 2 < n && level < 4 {
        level += 1;
    }
    DirectionGrid::icosphere(level)
}

fn values(records: &[RunRecord], measurement: &str) -> Vec<f64> {
    records
        .iter()
        .flat_map(|r| r.rows.iter())
        .filter(|row| row.measurement == measurement)
        .map(|row| row.value)
        .collect()
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn fraction(hits: usize, total: usize) -> f64 {
    if total == 0 {
        f64::NAN
    } else {
        hits as f64 / total as f64
    }
}

pub(crate) fn execute(cfg: &ExperimentConfig, deadline: Option<Instant>) -> Result<KindOutput, HarnessError> {
    match &cfg.params {
        Params::FieldCheck(p) => {
            let spec = cfg.field.spec();
            let b = spec.bounds();
            let d = spec.dim;
            let records = drive(cfg, deadline, |i, s| {
                let f = Field::build(&spec, s).map_err(|e| e.to_string())?;
                let mut r = rng(s);
                let (mut div, mut speed, mut jac, mut bad) = (0.0f64, 0.0f64, 0.0f64, 0usize);
                for _ in 0..p.points {
                    let mut x = [0.0; 3];
                    for c in x.iter_mut().take(d) {
                        *c = r.gen_range(-p.extent..=p.extent);
                    }
                    let smp = f.sample(x);
                    let dv = (0..d).map(|k| smp.jac[k][k]).sum::<f64>().abs();
                    let sp = norm(smp.v);
                    let jf = (0..d)
                        .flat_map(|a| (0..d).map(move |c| (a, c)))
                        .map(|(a, c)| smp.jac[a][c] * smp.jac[a][c])
                        .sum::<f64>()
                        .sqrt();
                    bad += usize::from(dv > p.tolerance)
                        + usize::from(sp > b.sup * (1.0 + 1e-9))
                        + usize::from(jf > b.lip * (1.0 + 1e-9));
                    div = div.max(dv);
                    speed = speed.max(sp);
                    jac = jac.max(jf);
                }
                Ok(vec![
                    Row::trial(i, s, "max_divergence", "", div),
                    Row::trial(i, s, "max_speed", "", speed),
                    Row::trial(i, s, "max_jacobian", "", jac),
                    Row::trial(i, s, "violations", "", bad as f64),
                ])
            });
            let violations: f64 = values(&records, "violations").iter().sum();
            let errors = records.iter().filter(|r| r.error.is_some()).count();
            let summary = json!({
                "passed": violations == 0.0 && errors == 0,
                "violations": violations,
                "max_divergence": values(&records, "max_divergence").iter().copied().fold(0.0, f64::max),
                "max_speed": values(&records, "max_speed").iter().copied().fold(0.0, f64::max),
                "max_jacobian": values(&records, "max_jacobian").iter().copied().fold(0.0, f64::max),
                "speed_bound": b.sup,
                "jacobian_bound": b.lip,
            });
            Ok(KindOutput::from_records(records, summary))
        }
        Params::PercolationTail(p) => {
            let n = p.set_size as i64;
            let half = if p.set_shape == "line" {
                n / 2
            } else {
                ((n as f64).powf(1.0 / p.dim as f64).ceil() as i64) / 2 + 1
            };
            let set_window = LatticeWindow::cube(p.dim, [0; 3], half);
            let window = LatticeWindow::cube(p.dim, [0; 3], half + p.margin);
            let line: Vec<_> = (0..n).map(|i| [i - n / 2, 0, 0]).collect();
            let records = drive(cfg, deadline, |i, s| {
                let set = if p.set_shape == "line" {
                    line.clone()
                } else {
                    random_connected_set(&set_window, p.set_size, &mut rng(s))
                };
                let lattice = SiteLattice::iid(window, p.p, s);
                let cl = cl_of(&lattice, &set).map_err(|e| e.to_string())?;
                let inside = cl.iter().filter(|v| set.contains(v)).count();
                Ok(vec![
                    Row::trial(i, s, "set_size", "", set.len() as f64),
                    Row::trial(i, s, "closed_in_set", "", inside as f64),
                    Row::trial(i, s, "cl_size", "", cl.len() as f64),
                ])
            });
            let sizes = values(&records, "cl_size");
            let total = sizes.len();
            let mut tail = Vec::new();
            let (mut xs, mut ys) = (Vec::new(), Vec::new());
            for delta in -n..=p.max_delta {
                let hits = sizes.iter().filter(|c| **c > (n + delta) as f64).count();
                tail.push((delta, fraction(hits, total)));
                if hits >= p.min_count && hits < total {
                    xs.push(delta as f64);
                    ys.push((hits as f64 / total as f64).ln());
                }
            }
            let fit = (xs.len() >= 2).then(|| fit_line(&xs, &ys));
            let aggregate = tail
                .iter()
                .map(|(d, t)| Row::aggregate("tail", &format!("delta={d}"), *t))
                .collect();
            let summary = json!({
                "trials": total,
                "mean_cl_size": sizes.iter().sum::<f64>() / total.max(1) as f64,
                "max_cl_size": sizes.iter().copied().fold(0.0, f64::max),
                "tail": tail,
                "log_tail_fit": fit,
                "fit_points": xs.len(),
                "fit_deltas": xs,
            });
            let mut out = KindOutput::from_records(records, summary);
            out.aggregate = aggregate;
            Ok(out)
        }
        Params::Unicoherence(p) => {
            let w = LatticeWindow::new(p.dim, [0; 3], [p.side - 1; 3]);
            let max = if p.max_size == 0 { (w.len() / 2).max(p.min_size) } else { p.max_size };
            let records = drive(cfg, deadline, |i, s| {
                let mut r = rng(s);
                let size = r.gen_range(p.min_size..=max);
                let set = random_connected_set(&w, size, &mut r);
                let rep = check_unicoherence(&w, &set).map_err(|e| e.to_string())?;
                Ok(vec![
                    Row::trial(i, s, "size", "", set.len() as f64),
                    Row::trial(i, s, "components", "", rep.components as f64),
                    Row::trial(i, s, "passed", "", flag(rep.passed)),
                ])
            });
            let passed = values(&records, "passed").iter().filter(|v| **v == 1.0).count();
            let summary = json!({
                "checked": records.len(),
                "passed": passed,
                "compliance": fraction(passed, records.len()),
            });
            Ok(KindOutput::from_records(records, summary))
        }
        Params::Detour(p) => {
            let records = drive(cfg, deadline, |i, s| {
                let dim = p.dims[i % p.dims.len()];
                let radius = if dim == 2 { p.radius_2d } else { p.radius_3d };
                let lattice = SiteLattice::iid(LatticeWindow::cube(dim, [0; 3], radius), p.p, s);
                let Some((x, y)) = same_cluster_pair(&lattice, &mut rng(s)) else {
                    return Ok(vec![Row::trial(i, s, "skipped", "", 1.0)]);
                };
                let path = detour_skeleton(&lattice, x, y).map_err(|e| e.to_string())?;
                let b = skeleton_bound(&lattice, x, y).map_err(|e| e.to_string())?;
                let step_ok = path.max_step() <= (dim as f64).sqrt() + 1e-9;
                let count_ok = path.steps() as f64 <= b.bound;
                let revisit = path.revisits_detour();
                Ok(vec![
                    Row::trial(i, s, "dim", "", dim as f64),
                    Row::trial(i, s, "steps", "", path.steps() as f64),
                    Row::trial(i, s, "bound", "", b.bound),
                    Row::trial(i, s, "max_step", "", path.max_step()),
                    Row::trial(i, s, "detours", "", path.detours.len() as f64),
                    Row::trial(i, s, "revisits", "", flag(revisit)),
                    Row::trial(i, s, "compliant", "", flag(step_ok && count_ok && !revisit)),
                ])
            });
            let compliant = values(&records, "compliant");
            let ok = compliant.iter().filter(|v| **v == 1.0).count();
            let errors = records.iter().filter(|r| r.error.is_some()).count();
            let summary = json!({
                "checked": compliant.len() + errors,
                "skipped": values(&records, "skipped").len(),
                "compliant": ok,
                "compliance": fraction(ok, compliant.len() + errors),
            });
            Ok(KindOutput::from_records(records, summary))
        }
        Params::Rearrange(p) => {
            let records = drive(cfg, deadline, |i, s| {
                let mut r = rng(s);
                let d = p.dims[r.gen_range(0..p.dims.len())];
                let n = r.gen_range(1..=p.max_n);
                let vs: Vec<Vec<f64>> = (0..n).map(|_| unit_ball(&mut r, d)).collect();
                let x: Vec<f64> = (0..d).map(|c| vs.iter().map(|v| v[c]).sum::<f64>() / n as f64).collect();
                let order = rearrange(&vs, &x).map_err(|e| e.to_string())?;
                let dev = prefix_deviation(&vs, &x, &order);
                let bound = 2.0 * d as f64;
                let mut rows = vec![
                    Row::trial(i, s, "dim", "", d as f64),
                    Row::trial(i, s, "n", "", n as f64),
                    Row::trial(i, s, "deviation", "", dev),
                    Row::trial(i, s, "compliant", "", flag(dev <= bound + 1e-9)),
                ];
                if n <= p.exhaustive_max {
                    let best = best_prefix_deviation(&vs, &x);
                    rows.push(Row::trial(i, s, "best", "", best));
                    rows.push(Row::trial(i, s, "confirmed", "", flag(best <= dev + 1e-9 && best <= bound + 1e-9)));
                }
                Ok(rows)
            });
            let compliant = values(&records, "compliant").iter().filter(|v| **v == 1.0).count();
            let confirmed = values(&records, "confirmed");
            let summary = json!({
                "instances": records.len(),
                "compliant": compliant,
                "compliance": fraction(compliant, records.len()),
                "exhaustive_checked": confirmed.len(),
                "exhaustive_confirmed": confirmed.iter().filter(|v| **v == 1.0).count(),
                "worst_ratio": records.iter().filter_map(|r| {
                    let d = r.rows.iter().find(|x| x.measurement == "dim")?.value;
                    let dev = r.rows.iter().find(|x| x.measurement == "deviation")?.value;
                    Some(dev / (2.0 * d))
                }).fold(0.0, f64::max),
            });
            Ok(KindOutput::from_records(records, summary))
        }
        Params::Shape(p) => {
            check_deadline(deadline)?;
            let spec = cfg.field.spec();
            let proto = cfg.proto();
            let grid = direction_grid(spec.dim, p.directions);
            let est = estimate_theta_bar(&spec, derive_seed(cfg.seed, AUX), &grid, &p.radii, p.theta_trials, &proto)
                .map_err(runtime)?;
            let rep = shape_convergence_experiment(&spec, cfg.seed, &p.times, cfg.trials, &est, &proto).map_err(runtime)?;
            let index = seed_index(cfg.seed, cfg.trials);
            let mut out = compound(
                rep.distances.iter().map(|(s, ds)| {
                    let rows = p
                        .times
                        .iter()
                        .zip(ds)
                        .map(|(t, d)| Row::trial(index[s], *s, "hausdorff", &format!("t={t}"), *d))
                        .collect();
                    (index[s], *s, rows)
                }),
                &rep.failures,
                &index,
            );
            out.failures.extend(est.failures.iter().map(|f| (None, f.seed, f.error.clone())));
            for (k, th) in est.theta_bar.iter().enumerate() {
                out.aggregate.push(Row::aggregate("theta_bar", &format!("dir={k}"), *th));
            }
            for (t, m) in p.times.iter().zip(&rep.median) {
                out.aggregate.push(Row::aggregate("median_hausdorff", &format!("t={t}"), *m));
            }
            out.summary = json!({
                "times": p.times,
                "median": rep.median,
                "strictly_decreasing": rep.median.windows(2).all(|w| w[1] < w[0]),
                "theta_bar": est.theta_bar,
                "theta_se": est.theta_se,
            });
            Ok(out)
        }
        Params::Fluctuation(p) => {
            check_deadline(deadline)?;
            let spec = cfg.field.spec();
            let mut dir = [0.0; 3];
            dir[..spec.dim].copy_from_slice(&p.direction);
            let rep = fluctuation_experiment(&spec, cfg.seed, dir, &p.radii, cfg.trials, p.theta_trials, &cfg.proto())
                .map_err(runtime)?;
            let index = seed_index(cfg.seed, cfg.trials);
            let mut out = compound(
                rep.samples.iter().map(|(s, ts)| {
                    let rows = p
                        .radii
                        .iter()
                        .zip(ts)
                        .map(|(r, t)| Row::trial(index[s], *s, "theta", &format!("R={r}"), *t))
                        .collect();
                    (index[s], *s, rows)
                }),
                &rep.failures,
                &index,
            );
            for (k, r) in p.radii.iter().enumerate() {
                let key = format!("R={r}");
                out.aggregate.push(Row::aggregate("mean", &key, rep.mean[k]));
                out.aggregate.push(Row::aggregate("std", &key, rep.std[k]));
                out.aggregate.push(Row::aggregate("bias", &key, rep.bias[k]));
            }
            out.aggregate.push(Row::aggregate("theta_bar", "", rep.theta_bar));
            out.summary = json!({
                "radii": rep.radii,
                "std": rep.std,
                "bias": rep.bias,
                "theta_bar": rep.theta_bar,
                "theta_bar_se": rep.theta_bar_se,
                "std_exponent": rep.std_fit.slope,
                "bias_exponent": rep.bias_fit.slope,
                "std_fit": rep.std_fit,
                "bias_fit": rep.bias_fit,
            });
            Ok(out)
        }
        Params::HomogError(p) => {
            check_deadline(deadline)?;
            let spec = cfg.field.spec();
            let proto = cfg.proto();
            let aux = derive_seed(cfg.seed, AUX);
            let t_max = p.times.iter().copied().fold(0.0, f64::max);
            let eps_min = p.eps.iter().copied().fold(f64::INFINITY, f64::min);
            let reference = t_max / eps_min;
            let points: Vec<Point> = p.points.iter().map(|x| pad(x)).collect();
            let (limit, ubar): (Value, Box<dyn Fn(f64, Point) -> f64 + Sync>) = match p.u0 {
                InitialData::Constant { value } => (json!({ "value": value }), Box::new(move |_, _| value)),
                InitialData::Linear { p: m } => {
                    let (h, se) =
                        linear_rate(&spec, aux, m, 2.0 * reference, p.plug_trials, &proto).map_err(runtime)?;
                    (json!({ "h_bar": h, "h_bar_se": se }), Box::new(move |t, x| dot(m, x) + t * h))
                }
                cone @ InitialData::Cone { .. } => {
                    let grid = direction_grid(spec.dim, p.directions);
                    let est = estimate_theta_bar(&spec, aux, &grid, &[reference], p.plug_trials, &proto)
                        .map_err(runtime)?;
                    let theta = est.theta_bar.clone();
                    (json!({ "theta_bar": theta }), Box::new(move |t, x| u_bar(&est, &cone, t, x)))
                }
            };
            let rep = homog_error_experiment(&spec, cfg.seed, &p.u0, &p.eps, &p.times, &points, cfg.trials, &*ubar, &proto)
                .map_err(runtime)?;
            let index = seed_index(cfg.seed, cfg.trials);
            let mut out = compound(
                rep.errors.iter().map(|(s, es)| {
                    let rows = p
                        .eps
                        .iter()
                        .zip(es)
                        .map(|(e, v)| Row::trial(index[s], *s, "error", &format!("eps={e}"), *v))
                        .collect();
                    (index[s], *s, rows)
                }),
                &rep.failures,
                &index,
            );
            for (e, m) in p.eps.iter().zip(&rep.median) {
                out.aggregate.push(Row::aggregate("median_error", &format!("eps={e}"), *m));
            }
            out.summary = json!({
                "eps": rep.eps,
                "median": rep.median,
                "exponent": rep.fit.slope,
                "fit": rep.fit,
                "decreasing": rep.median.windows(2).all(|w| w[1] < w[0]),
                "limit": limit,
            });
            Ok(out)
        }
        Params::Continuity(p) => {
            check_deadline(deadline)?;
            let limit = cfg.field.spec();
            let sequence: Vec<FieldSpec> = (0..p.levels)
                .map(|n| FieldSpec {
                    amplitude: limit.amplitude * (1.0 + 0.5f64.powi(n as i32)),
                    ..limit.clone()
                })
                .collect();
            let grid = direction_grid(limit.dim, p.directions);
            let momenta = direction_grid(limit.dim, p.momenta).dirs;
            let rep = continuity_experiment(&sequence, &limit, cfg.seed, &grid, p.radius, cfg.trials, &momenta, &cfg.proto())
                .map_err(runtime)?;
            let mut out = KindOutput {
                records: Vec::new(),
                aggregate: Vec::new(),
                summary: Value::Null,
                failures: rep.failures.iter().map(|f| (None, f.seed, f.error.clone())).collect(),
                completed: rep.trials,
            };
            for (n, (d, se)) in rep.sup_diff.iter().zip(&rep.se).enumerate() {
                let key = format!("n={n}");
                out.aggregate.push(Row::aggregate("amplitude", &key, rep.amplitudes[n]));
                out.aggregate.push(Row::aggregate("sup_diff", &key, *d));
                out.aggregate.push(Row::aggregate("se", &key, *se));
            }
            out.summary = json!({
                "amplitudes": rep.amplitudes,
                "limit_amplitude": rep.limit_amplitude,
                "sup_diff": rep.sup_diff,
                "se": rep.se,
                "paired_trials": rep.trials,
                "decreasing": rep.sup_diff.windows(2).all(|w| w[1] < w[0]),
            });
            Ok(out)
        }
        Params::SkeletonGap(p) => {
            let oracle = oracle_by_name(&p.oracle, cfg.field.dim).expect("validated oracle");
            let phi = phi_by_name(&p.phi).expect("validated phi");
            let pieces = p.pieces;
            let sk = move |x: [i64; 3], n: usize| Some(straight_skeleton(x, n, pieces));
            let rep = gap_from_skeleton(&*oracle, p.nu, phi, p.c, p.base, p.factor, p.levels, &sk).map_err(runtime)?;
            let mut aggregate = Vec::new();
            for l in &rep.levels {
                let key = format!("level={}", l.level);
                aggregate.push(Row::aggregate("radius", &key, l.radius));
                aggregate.push(Row::aggregate("sup_gap", &key, l.sup_gap));
                aggregate.push(Row::aggregate("normalized_sup", &key, l.normalized_sup));
                aggregate.push(Row::aggregate("slack", &key, l.slack));
                aggregate.push(Row::aggregate("normalized_slack", &key, l.normalized_slack));
                aggregate.push(Row::aggregate("reduction_holds", &key, flag(l.reduce.holds)));
            }
            let summary = json!({
                "oracle": rep.oracle,
                "constant": rep.constant,
                "max_slack": rep.levels.iter().map(|l| l.slack).fold(0.0, f64::max),
                "reductions_hold": rep.levels.iter().all(|l| l.reduce.holds),
                "levels": rep.levels.len(),
            });
            Ok(KindOutput {
                records: Vec::new(),
                aggregate,
                summary,
                failures: Vec::new(),
                completed: 1,
            })
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Runtime(e.to_string())
}

fn check_deadline(deadline: Option<Instant>) -> Result<(), HarnessError> {
    match deadline {
        Some(d) if Instant::now() >= d => Err(HarnessError::Runtime("budget exhausted before the run started".into())),
        _ => Ok(()),
    }
}

fn pad(x: &[f64]) -> Point {
    let mut p = [0.0; 3];
    p[..x.len()].copy_from_slice(x);
    p
}

fn seed_index(master: u64, trials: usize) -> HashMap<u64, usize> {
    (0..trials).map(|i| (derive_seed(master, i as u64), i)).collect()
}

/// Records of a module-level experiment that ran its own trials.
fn compound(
    rows: impl Iterator<Item = (usize, u64, Vec<Row>)>,
    failures: &[TrialFailure],
    index: &HashMap<u64, usize>,
) -> KindOutput {
    let mut records: Vec<RunRecord> = rows
        .map(|(trial, seed, rows)| RunRecord {
            trial,
            seed,
            rows,
            elapsed_ms: None,
            error: None,
        })
        .collect();
    let mut out_failures = Vec::new();
    for f in failures {
        match index.get(&f.seed) {
            Some(&trial) => {
                records.push(RunRecord {
                    trial,
                    seed: f.seed,
                    rows: vec![Row::trial(trial, f.seed, "failed", "", 1.0)],
                    elapsed_ms: None,
                    error: Some(f.error.clone()),
                });
                out_failures.push((Some(trial), f.seed, f.error.clone()));
            }
            None => out_failures.push((None, f.seed, f.error.clone())),
        }
    }
    records.sort_by_key(|r| r.trial);
    KindOutput {
        completed: records.len(),
        records,
        aggregate: Vec::new(),
        summary: Value::Null,
        failures: out_failures,
    }
}

fn unit_ball(r: &mut impl Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| r.gen_range(-1.0..=1.0)).collect();
        if v.iter().map(|c| c * c).sum::<f64>() <= 1.0 {
            return v;
        }
    }
}

/// Two jittered points over sites of the largest open cluster, away from the
/// window's edge.
pub fn same_cluster_pair(l: &SiteLattice, r: &mut impl Rng) -> Option<(Point, Point)> {
    let dec = clusters(l);
    let big = dec.largest_open()?;
    let w = l.window();
    let inner: Vec<_> = (0..w.len())
        .filter(|i| dec.labels[*i] == big)
        .map(|i| w.site(i))
        .filter(|s| (0..w.dim).all(|i| s[i] > w.lo[i] + 2 && s[i] < w.hi[i] - 2))
        .collect();
    if inner.len() < 2 {
        return None;
    }
    let pick = |r: &mut dyn rand::RngCore| {
        let s = inner[r.gen_range(0..inner.len())];
        let mut p = [s[0] as f64, s[1] as f64, s[2] as f64];
        for x in p.iter_mut().take(w.dim) {
            *x += (r.gen::<f64>() - 0.5) * 0.9;
        }
        p
    };
    let a = pick(r);
    let b = pick(r);
    Some((a, b))
}
