//! Acceptance run: one line per criterion, non-zero exit if any fails.
//! Pass substrings as arguments to run a subset, e.g. `-- c04 c05`.

use std::time::Instant;

use ghomog::field::{Field, FieldSpec};
use ghomog::geom::{norm, Point, ORIGIN};
use ghomog::harness::{execute, ExperimentConfig, RunOutput};
use ghomog::homogenize::{
    continuity_experiment, estimate_theta_bar, fluctuation_experiment, homog_error_experiment, linear_rate,
    shape_convergence_experiment, DirectionGrid, InitialData,
};
use ghomog::percolation::{giant_cluster_event, site_sup_passage, ClassifyConfig, LatticeWindow, SiteLattice};
use ghomog::reachability::{
    first_passage, oracle_passage_many, propagate, Direction, GridConfig, OracleConfig, StopRule, Window,
};
use ghomog::seed::{derive_seed, rng};
use rand::Rng;
use rayon::prelude::*;
use serde_json::Value;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Law used by the Monte Carlo experiments: open fraction near 0.95 at
/// threshold `2√2 + 1` on the `h = 0.25` grid.
fn experiment_law() -> FieldSpec {
    FieldSpec {
        dim: 2,
        amplitude: 0.83,
        bump_radius: 0.3,
        pitch: 0.15,
        seed: 0,
    }
}

fn experiment_proto() -> GridConfig {
    GridConfig::centered(2, 0.25, 0.1, ORIGIN, 1.0).with_stencil(2)
}

fn harness_run(text: &str) -> RunOutput {
    execute(&ExperimentConfig::from_toml(text).expect("valid config")).expect("run succeeds")
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

fn c01() -> Outcome {
    let t0 = Instant::now();
    let (h, dt) = (0.25, 0.1);
    let cfg = GridConfig::centered(2, h, dt, ORIGIN, 16.0);
    let map = first_passage(&Field::zero(2), ORIGIN, &cfg, None, StopRule::Exhaust).unwrap();
    let mut worst = 0.0f64;
    for (i, t) in map.times().iter().enumerate() {
        let r = norm(cfg.point(i));
        if r <= 12.0 {
            worst = worst.max((t - r).abs());
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    let dims = cfg.dims();
    outcome(
        worst <= h + 2.0 * dt && secs < 10.0,
        format!("{}x{} grid, worst |θ − |y|| = {worst:.4} (limit {:.2}), {secs:.2}s", dims[0], dims[1], h + 2.0 * dt),
    )
}

fn c02() -> Outcome {
    let (h, dt) = (0.05, 0.05);
    let mut worst = 0.0f64;
    let mut r = rng(2);
    for trial in 0..5u64 {
        let spec = FieldSpec {
            amplitude: r.gen_range(0.1..0.4),
            ..experiment_law()
        };
        let f = Field::build(&spec, derive_seed(2, trial)).unwrap();
        let ys: Vec<Point> = (0..20)
            .map(|_| {
                let a = r.gen_range(0.0..std::f64::consts::TAU);
                let rad = r.gen_range(1.0..6.0);
                [rad * a.cos(), rad * a.sin(), 0.0]
            })
            .collect();
        let g = GridConfig::centered(2, h, dt, ORIGIN, 8.0);
        let map = first_passage(&f, ORIGIN, &g, None, StopRule::Exhaust).unwrap();
        let oc = OracleConfig {
            dim: 2,
            h: 0.01,
            dt,
            directions: 16,
            window: Window::centered(ORIGIN, 8.0),
            node_limit: 20_000_000,
        };
        let or = oracle_passage_many(&f, ORIGIN, &ys, &oc).unwrap();
        for (y, o) in ys.iter().zip(&or) {
            worst = worst.max((map.certified_time_at(*y).unwrap() - o).abs());
        }
    }
    let tol = 3.0 * (h + dt);
    outcome(worst <= tol, format!("5 fields x 20 targets, worst |solver − oracle| = {worst:.3} (limit {tol:.2})"))
}

fn c03() -> Outcome {
    let spec = experiment_law();
    let b = spec.bounds();
    let speed = b.speed_limit();
    let h = 0.25;
    let dt = ((0.5 * h / speed) * 1e4).floor() / 1e4;
    let t_max = 25.0;
    let half = speed * t_max + 2.0;
    let results: Vec<(usize, f64)> = (0..50u64)
        .into_par_iter()
        .map(|i| {
            let f = Field::build(&spec, derive_seed(3, i)).unwrap();
            let cfg = GridConfig::centered(2, h, dt, ORIGIN, half).with_stencil(2);
            let front = propagate(&f, ORIGIN, t_max, &cfg, Direction::Forward).unwrap();
            (front.envelope_violations(speed), front.growth_constant(5.0, t_max))
        })
        .collect();
    let violations: usize = results.iter().map(|r| r.0).sum();
    let beta = results.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    outcome(
        violations == 0 && beta > 0.0,
        format!("50 fields, speed L+1 = {speed:.3}, dt = {dt}: {violations} envelope violations, fitted β = {beta:.3}"),
    )
}

fn c04() -> Outcome {
    let t0 = Instant::now();
    let out = harness_run("kind = \"rearrange\"\nseed = 4\ntrials = 1000\n[params]\ndims = [2, 3]\nmax_n = 12\nexhaustive_max = 8\n");
    let secs = t0.elapsed().as_secs_f64();
    let s = &out.summary.summary;
    let checked = num(&s["exhaustive_checked"]);
    let confirmed = num(&s["exhaustive_confirmed"]);
    outcome(
        num(&s["compliance"]) == 1.0 && checked == confirmed && checked > 0.0 && secs < 60.0,
        format!(
            "1000 instances, compliance {}, worst deviation/2d {:.3}, exhaustive {confirmed}/{checked}, {secs:.1}s",
            num(&s["compliance"]),
            num(&s["worst_ratio"])
        ),
    )
}

fn c05() -> Outcome {
    let a = harness_run("kind = \"unicoherence\"\nseed = 5\ntrials = 10000\n[params]\ndim = 2\nside = 8\n");
    let b = harness_run("kind = \"unicoherence\"\nseed = 5\ntrials = 1000\n[params]\ndim = 3\nside = 5\n");
    let ca = num(&a.summary.summary["compliance"]);
    let cb = num(&b.summary.summary["compliance"]);
    outcome(
        ca == 1.0 && cb == 1.0 && a.summary.trials_completed == 10000 && b.summary.trials_completed == 1000,
        format!("compliance {ca} over 10000 sets in 8² windows, {cb} over 1000 sets in 5³ windows"),
    )
}

fn c06() -> Outcome {
    let out = harness_run(
        "kind = \"percolation-tail\"\nseed = 6\ntrials = 10000\n[params]\ndim = 2\np = 0.95\nset_shape = \"line\"\nset_size = 40\n",
    );
    let fit = &out.summary.summary["log_tail_fit"];
    let (slope, r2) = (num(&fit["slope"]), num(&fit["r2"]));
    let n = num(&out.summary.summary["fit_points"]);
    outcome(
        slope < 0.0 && r2 >= 0.9,
        format!("10000 trials, log tail fit over {n} points: slope {slope:.3}, R² {r2:.4}"),
    )
}

fn c07() -> Outcome {
    let (r, n) = (20, 25);
    let hits = (0..1000u64)
        .into_par_iter()
        .filter(|i| {
            let l = SiteLattice::iid(LatticeWindow::cube(2, [0; 3], r + n), 0.95, derive_seed(7, *i));
            giant_cluster_event(&l, r, n).unwrap()
        })
        .count();
    let p = hits as f64 / 1000.0;
    outcome(p >= 0.99, format!("P[E_n] = {p:.3} over 1000 trials (R = {r}, n = {n})"))
}

fn c08() -> Outcome {
    let out = harness_run("kind = \"detour\"\nseed = 8\ntrials = 1000\n[params]\ndims = [2, 3]\np = 0.95\n");
    let s = &out.summary.summary;
    let checked = num(&s["checked"]);
    outcome(
        num(&s["compliance"]) == 1.0 && checked >= 900.0,
        format!(
            "{checked} skeletons ({} lattices without a pair), compliance {}",
            num(&s["skipped"]),
            num(&s["compliance"])
        ),
    )
}

fn open_fraction_estimate() -> f64 {
    let spec = experiment_law();
    let cfg = ClassifyConfig {
        h: 0.25,
        dt: 0.1,
        stencil: Some(2),
        sample_spacing: 0.5,
    };
    let c = 2.0 * 2f64.sqrt() + 1.0;
    let open: usize = (0..8u64)
        .into_par_iter()
        .map(|s| {
            let f = Field::build(&spec, derive_seed(9, 1000 + s)).unwrap();
            (0..25).filter(|i| site_sup_passage(&f, [3 * i, 0, 0], c, &cfg).unwrap() <= c).count()
        })
        .sum();
    open as f64 / 200.0
}

fn c09_c10() -> (Outcome, Outcome) {
    let p_open = open_fraction_estimate();
    let rep = fluctuation_experiment(
        &experiment_law(),
        910,
        [1.0, 0.0, 0.0],
        &[16.0, 32.0, 64.0, 128.0],
        100,
        8,
        &experiment_proto(),
    )
    .unwrap();
    let n = rep.samples.len();
    let std: Vec<String> = rep.std.iter().map(|s| format!("{s:.3}")).collect();
    let bias: Vec<String> = rep.bias.iter().map(|s| format!("{s:.3}")).collect();
    (
        outcome(
            rep.std_fit.slope <= 0.75 && p_open > 0.9,
            format!(
                "a = 0.83, open fraction {p_open:.3}, {n} trials, std {} at R = 16..128, exponent {:.3}",
                std.join(" "),
                rep.std_fit.slope
            ),
        ),
        outcome(
            rep.bias_fit.slope <= 0.75,
            format!(
                "θ̄ = {:.4} ± {:.4} (plug-in at R' = {}), bias {}, exponent {:.3}",
                rep.theta_bar,
                rep.theta_bar_se,
                rep.theta_bar_radius,
                bias.join(" "),
                rep.bias_fit.slope
            ),
        ),
    )
}

fn c11() -> Outcome {
    let spec = experiment_law();
    let proto = experiment_proto();
    let grid = DirectionGrid::circle(32);
    let est = estimate_theta_bar(&spec, derive_seed(11, 1 << 41), &grid, &[200.0], 10, &proto).unwrap();
    let rep = shape_convergence_experiment(&spec, 11, &[25.0, 50.0, 100.0], 30, &est, &proto).unwrap();
    let med: Vec<String> = rep.median.iter().map(|m| format!("{m:.4}")).collect();
    outcome(
        rep.median.windows(2).all(|w| w[1] < w[0]) && rep.distances.len() >= 25,
        format!("{} trials, median d_H at t = 25, 50, 100: {}", rep.distances.len(), med.join(" ")),
    )
}

fn c12() -> Outcome {
    let spec = experiment_law();
    let proto = experiment_proto();
    let p = [1.0, 0.0, 0.0];
    let eps = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0];
    let t = 4.0;
    let (h_bar, h_se) = linear_rate(&spec, derive_seed(12, 1 << 41), p, 2.0 * t / eps[2], 4, &proto).unwrap();
    let ubar = move |s: f64, x: Point| p[0] * x[0] + s * h_bar;
    let rep = homog_error_experiment(
        &spec,
        12,
        &InitialData::Linear { p },
        &eps,
        &[1.0, 2.0, 3.0, 4.0],
        &[ORIGIN],
        30,
        &ubar,
        &proto,
    )
    .unwrap();
    let med: Vec<String> = rep.median.iter().map(|m| format!("{m:.4}")).collect();
    let decreasing = rep.median.windows(2).all(|w| w[1] < w[0]);
    outcome(
        decreasing && rep.fit.slope >= 0.4,
        format!(
            "H̄(e₁) = {h_bar:.4} ± {h_se:.4}, {} trials, median error at ε = 1/16, 1/32, 1/64: {}, exponent {:.3}",
            rep.errors.len(),
            med.join(" "),
            rep.fit.slope
        ),
    )
}

fn c13() -> Outcome {
    let zero = FieldSpec::zero(2);
    let grid = DirectionGrid::circle(64);
    let fine = experiment_proto().with_stencil(4);
    let est0 = estimate_theta_bar(&zero, 13, &grid, &[32.0], 2, &fine).unwrap();
    let momenta: Vec<Point> = (0..32)
        .map(|k| {
            let a = 0.1 + k as f64 * std::f64::consts::TAU / 32.0;
            let m = 0.5 + (k % 4) as f64;
            [m * a.cos(), m * a.sin(), 0.0]
        })
        .collect();
    let zero_err = momenta
        .iter()
        .map(|p| (est0.effective_h(*p) - norm(*p)).abs() / norm(*p))
        .fold(0.0, f64::max);

    let est = estimate_theta_bar(&experiment_law(), 13, &grid, &[32.0], 8, &experiment_proto()).unwrap();
    let mut homog = 0.0f64;
    let mut two = 0.0f64;
    let gap = std::f64::consts::TAU / 64.0;
    let mut two_ok = true;
    for p in &momenta {
        let h = est.effective_h(*p);
        homog = homog.max((est.effective_h([2.0 * p[0], 2.0 * p[1], 0.0]) - 2.0 * h).abs());
        let s = est.support_h(*p, 8);
        two = two.max((h - s).abs());
        let radius = est.theta_bar.iter().map(|t| 1.0 / t).fold(0.0, f64::max);
        two_ok &= (h - s).abs() <= norm(*p) * radius * (1.0 - (gap / 2.0).cos()) + 1e-12;
    }
    outcome(
        homog == 0.0 && two_ok && zero_err <= 0.01,
        format!(
            "max |H̄(2p) − 2H̄(p)| = {homog:e}, max two-formula gap {two:.2e}, V ≡ 0 worst relative error {:.3}% on 64 directions",
            100.0 * zero_err
        ),
    )
}

fn c14() -> Outcome {
    let limit = FieldSpec {
        amplitude: 0.4,
        ..experiment_law()
    };
    let seq: Vec<FieldSpec> = (0..4)
        .map(|n| FieldSpec {
            amplitude: limit.amplitude * (1.0 + 0.5f64.powi(n)),
            ..limit.clone()
        })
        .collect();
    let grid = DirectionGrid::circle(16);
    let momenta = DirectionGrid::circle(8).dirs;
    let rep = continuity_experiment(&seq, &limit, 14, &grid, 32.0, 50, &momenta, &experiment_proto()).unwrap();
    let ok = (1..rep.sup_diff.len()).all(|n| rep.sup_diff[n - 1] - rep.sup_diff[n] > rep.se[n - 1].max(rep.se[n]));
    let cells: Vec<String> = rep.sup_diff.iter().zip(&rep.se).map(|(d, s)| format!("{d:.4}±{s:.4}")).collect();
    outcome(
        ok,
        format!("a = {}, {} paired trials, sup_p |H̄ⁿ − H̄| for n = 0..3: {}", limit.amplitude, rep.trials, cells.join(" ")),
    )
}

fn c15() -> Outcome {
    let root = harness_run("kind = \"skeleton-gap\"\n[params]\noracle = \"root\"\nbase = 4\nfactor = 2\nlevels = 5\n");
    let flat = harness_run("kind = \"skeleton-gap\"\n[params]\noracle = \"polyhedral\"\nbase = 4\nfactor = 2\nlevels = 5\n");
    let c = num(&root.summary.summary["constant"]);
    let slack = num(&flat.summary.summary["max_slack"]);
    let levels = num(&root.summary.summary["levels"]);
    outcome(
        c <= 1.05 && slack == 0.0 && levels == 5.0,
        format!("|v| + √|v|: sup gap/|x|^½ = {c:.4} over {levels} levels; additive oracle slack {slack}"),
    )
}

fn c16() -> Outcome {
    let configs = [
        "kind = \"rearrange\"\nseed = 16\ntrials = 200\n",
        "kind = \"detour\"\nseed = 16\ntrials = 100\n",
        "kind = \"percolation-tail\"\nseed = 16\ntrials = 500\n",
        "kind = \"fluctuation\"\nseed = 16\ntrials = 6\n[field]\namplitude = 0.83\n[grid]\nh = 0.25\nstencil = 2\n[params]\nradii = [4.0, 8.0]\ntheta_trials = 2\n",
    ];
    let mut same = 0;
    let mut names = Vec::new();
    for text in configs {
        let a = harness_run(&format!("workers = 1\n{text}"));
        let b = harness_run(&format!("workers = 2\n{text}"));
        let c = harness_run(&format!("workers = 1\n{text}"));
        if a.csv() == b.csv() && a.csv() == c.csv() && a.summary.config_hash == b.summary.config_hash {
            same += 1;
        }
        names.push(a.summary.kind);
    }
    outcome(
        same == configs.len(),
        format!("{same}/{} kinds ({}) byte-identical across reruns and 1 vs 2 workers", configs.len(), names.join(", ")),
    )
}

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |name: &str| filters.is_empty() || filters.iter().any(|f| name.contains(f.as_str()));
    let mut failed = Vec::new();
    let mut report = |name: &str, title: &str, o: Outcome, secs: f64| {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {name} {title}: {} ({secs:.1}s)", o.detail);
        if !o.pass {
            failed.push(name.to_string());
        }
    };
    let single: [(&str, &str, fn() -> Outcome); 13] = [
        ("c01", "zero-field oracle", c01),
        ("c02", "solver cross-validation", c02),
        ("c03", "speed and growth envelopes", c03),
        ("c04", "rearrangement bound", c04),
        ("c05", "unicoherence", c05),
        ("c06", "closed-cluster tails", c06),
        ("c07", "giant-cluster event", c07),
        ("c08", "detour skeleton", c08),
        ("c11", "shape convergence", c11),
        ("c12", "homogenization rate", c12),
        ("c13", "effective Hamiltonian identities", c13),
        ("c14", "continuity in the law", c14),
        ("c15", "doubling induction", c15),
    ];
    for (name, title, f) in &single[..8] {
        if wanted(name) {
            let t0 = Instant::now();
            let o = f();
            report(name, title, o, t0.elapsed().as_secs_f64());
        }
    }
    if wanted("c09") || wanted("c10") {
        let t0 = Instant::now();
        let (a, b) = c09_c10();
        let secs = t0.elapsed().as_secs_f64();
        report("c09", "fluctuation scaling", a, secs);
        report("c10", "bias scaling", b, secs);
    }
    for (name, title, f) in &single[8..] {
        if wanted(name) {
            let t0 = Instant::now();
            let o = f();
            report(name, title, o, t0.elapsed().as_secs_f64());
        }
    }
    if wanted("c16") {
        let t0 = Instant::now();
        let o = c16();
        report("c16", "reproducibility", o, t0.elapsed().as_secs_f64());
    }
    if failed.is_empty() {
        println!("acceptance: all selected criteria passed");
    } else {
        println!("acceptance: failed {}", failed.join(", "));
        std::process::exit(1);
    }
}
