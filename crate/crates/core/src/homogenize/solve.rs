use serde::{Deserialize, Serialize};

use super::shape::ShapeEstimate;
use super::HomogError;
use crate::field::Field;
use crate::geom::{dist, dot, norm, scale, sub, Point};
use crate::reachability::{first_passage, GridConfig, PassageMap, ReachError, StopRule};

/// Lipschitz initial data `u₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InitialData {
    Constant { value: f64 },
    /// `u₀(x) = p·x`.
    Linear { p: Point },
    /// `u₀(x) = −slope·|x − center|`.
    Cone { center: Point, slope: f64 },
}

impl InitialData {
    pub fn eval(&self, x: Point) -> f64 {
        match *self {
            InitialData::Constant { value } => value,
            InitialData::Linear { p } => dot(p, x),
            InitialData::Cone { center, slope } => -slope * dist(x, center),
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match *self {
            InitialData::Constant { .. } => 0.0,
            InitialData::Linear { p } => norm(p),
            InitialData::Cone { slope, .. } => slope.abs(),
        }
    }
}

/// A solve from `x0` with every node of arrival time up to `t` settled and
/// certified; the window starts at `guess` and grows until it suffices.
pub fn certified_map(field: &Field, x0: Point, t: f64, proto: &GridConfig, guess: f64) -> Result<PassageMap, HomogError> {
    let mut half = guess.max(proto.h * (proto.stencil as f64 + 2.0));
    let mut last = None;
    for _ in 0..6 {
        let cfg = GridConfig::centered(proto.dim, proto.h, proto.dt, x0, half).with_stencil(proto.stencil);
        let map = first_passage(field, x0, &cfg, None, StopRule::Time(t))?;
        if map.horizon() >= t {
            return Ok(map);
        }
        last = Some(ReachError::WindowTooSmall {
            required: half * 1.5,
            available: half,
        });
        half *= 1.5;
    }
    Err(last.expect("at least one attempt").into())
}

/// `u^ε(t, x) = sup { u₀(εy) : y ∈ R_{t/ε}(x/ε) }` for each `t` in `times`.
pub fn solve_u(
    field: &Field,
    u0: &InitialData,
    times: &[f64],
    x: Point,
    eps: f64,
    proto: &GridConfig,
) -> Result<Vec<f64>, HomogError> {
    if !(eps > 0.0) {
        return Err(HomogError::Parameter("ε must be positive".into()));
    }
    let t_max = times.iter().copied().fold(0.0, f64::max);
    let x0 = scale(x, 1.0 / eps);
    let s_max = t_max / eps;
    let map = certified_map(field, x0, s_max, proto, 1.6 * s_max + 4.0)?;
    Ok(sup_over_sublevels(&map, u0, times, eps))
}

/// `sup u₀(εy)` over nodes with arrival time at most `t/ε`, for each `t`.
pub fn sup_over_sublevels(map: &PassageMap, u0: &InitialData, times: &[f64], eps: f64) -> Vec<f64> {
    let cfg = map.grid();
    let start = u0.eval(scale(map.source(), eps));
    let mut best = vec![start; times.len()];
    for (i, s) in map.times().iter().enumerate() {
        if !s.is_finite() {
            continue;
        }
        let v = u0.eval(scale(cfg.point(i), eps));
        for (b, t) in best.iter_mut().zip(times) {
            if *s <= t / eps && v > *b {
                *b = v;
            }
        }
    }
    best
}

/// `ū(t, x) = sup { u₀(y) : y ∈ x + S_t }` for the shape of `est`.
pub fn u_bar(est: &ShapeEstimate, u0: &InitialData, t: f64, x: Point) -> f64 {
    match *u0 {
        InitialData::Constant { value } => value,
        InitialData::Linear { p } => dot(p, x) + t * est.effective_h(p),
        InitialData::Cone { center, slope } => -slope * est.shape_set(t).distance_to(sub(center, x)),
    }
}
