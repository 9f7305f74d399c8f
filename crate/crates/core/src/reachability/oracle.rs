use serde::{Deserialize, Serialize};

use super::{GridConfig, ReachError, Window};
use crate::field::Field;
use crate::geom::{add, scale, Point, ORIGIN};

/// Space-time graph used as an independent check on the grid solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub dim: usize,
    /// Cell size used to merge states.
    pub h: f64,
    /// Euler step.
    pub dt: f64,
    /// Number of unit control directions; the zero control is always added.
    pub directions: usize,
    pub window: Window,
    pub node_limit: usize,
}

fn controls(dim: usize, n: usize) -> Vec<Point> {
    let mut out = vec![ORIGIN];
    if dim == 2 {
        for j in 0..n {
            let a = std::f64::consts::TAU * j as f64 / n as f64;
            out.push([a.cos(), a.sin(), 0.0]);
        }
    } else {
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        for j in 0..n {
            let z = 1.0 - 2.0 * (j as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let a = golden * j as f64;
            out.push([r * a.cos(), r * a.sin(), z]);
        }
    }
    out
}

/// Arrival time at `y` on the Euler-step graph.
pub fn oracle_passage(field: &Field, x0: Point, y: Point, cfg: &OracleConfig) -> Result<f64, ReachError> {
    Ok(oracle_passage_many(field, x0, &[y], cfg)?[0])
}

/// Arrival times at several targets from one breadth-first sweep.
///
/// States are cells of size `h`; each cell keeps the exact position of the
/// first trajectory that entered it, and every step applies
/// `x → x + Δt(α + V(x))` for each control `α`. A target is reached at the
/// first step whose state lands in its cell.
pub fn oracle_passage_many(
    field: &Field,
    x0: Point,
    ys: &[Point],
    cfg: &OracleConfig,
) -> Result<Vec<f64>, ReachError> {
    let grid = GridConfig {
        dim: cfg.dim,
        h: cfg.h,
        dt: cfg.dt,
        window: cfg.window,
        stencil: 1,
    };
    grid.validate()?;
    let len = grid.len();
    if len > cfg.node_limit {
        return Err(ReachError::NodeLimit {
            needed: len,
            limit: cfg.node_limit,
        });
    }
    let ctrl = controls(cfg.dim, cfg.directions);
    let start = grid.nearest(x0).ok_or(ReachError::OutsideGrid(x0))?;
    let target_cells = ys
        .iter()
        .map(|y| grid.nearest(*y).map(|c| grid.index(c)).ok_or(ReachError::OutsideGrid(*y)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = vec![f64::INFINITY; ys.len()];
    let mut visited = vec![false; len];
    let mut frontier = vec![x0];
    visited[grid.index(start)] = true;
    let mut left = ys.len();
    for (t, &c) in target_cells.iter().enumerate() {
        if visited[c] {
            out[t] = 0.0;
            left -= 1;
        }
    }
    let mut step = 0usize;
    while left > 0 && !frontier.is_empty() {
        step += 1;
        let mut next = Vec::new();
        for p in &frontier {
            let v = field.eval(*p);
            for a in &ctrl {
                let q = add(*p, scale(add(*a, v), cfg.dt));
                let Some(c) = grid.nearest(q) else { continue };
                let i = grid.index(c);
                if !visited[i] {
                    visited[i] = true;
                    next.push(q);
                }
            }
        }
        let now = step as f64 * cfg.dt;
        for (t, &c) in target_cells.iter().enumerate() {
            if out[t].is_infinite() && visited[c] {
                out[t] = now;
                left -= 1;
            }
        }
        frontier = next;
    }
    Ok(out)
}
