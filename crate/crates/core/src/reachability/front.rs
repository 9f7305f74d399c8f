use super::solver::{first_passage_dir, PassageMap, StopRule};
use super::{Direction, GridConfig, ReachError};
use crate::field::Field;
use crate::geom::{dist, Point};

pub(crate) const UNREACHED: u32 = u32::MAX;

/// Reachable-set masks `M_k = {y : θ(x₀, y) ≤ kΔt}` for `k = 0..=k_max`.
///
/// Masks are stored once as the first step at which each node is covered,
/// so the running union is monotone by construction.
#[derive(Debug, Clone)]
pub struct GridFront {
    origin: Point,
    direction: Direction,
    steps: Vec<u32>,
    counts: Vec<usize>,
    k_max: u32,
    map: PassageMap,
}

/// Masks of the reachable sets from `x0` up to `t_max`.
pub fn propagate(
    field: &Field,
    x0: Point,
    t_max: f64,
    cfg: &GridConfig,
    direction: Direction,
) -> Result<GridFront, ReachError> {
    cfg.validate()?;
    let b = field.bounds();
    cfg.check_cfl(b.sup)?;
    let required = b.speed_limit() * t_max + 1.0;
    let available = cfg.window.inner_radius(x0, cfg.dim);
    if available < required {
        return Err(ReachError::WindowTooSmall { required, available });
    }
    let map = first_passage_dir(field, x0, cfg, None, direction, StopRule::Time(t_max))?;
    Ok(GridFront::from_map(map, t_max))
}

impl GridFront {
    /// Bin the arrival times of `map` into steps of `Δt` up to `t_max`.
    pub fn from_map(map: PassageMap, t_max: f64) -> Self {
        let dt = map.grid().dt;
        let k_max = (t_max / dt - 1e-9).ceil().max(0.0) as u32;
        let mut counts = vec![0usize; k_max as usize + 1];
        let steps: Vec<u32> = map
            .times()
            .iter()
            .map(|&t| {
                if !t.is_finite() {
                    return UNREACHED;
                }
                let k = (t / dt - 1e-9).ceil().max(0.0);
                if k > k_max as f64 {
                    UNREACHED
                } else {
                    k as u32
                }
            })
            .collect();
        for &k in &steps {
            if k != UNREACHED {
                counts[k as usize] += 1;
            }
        }
        for k in 1..counts.len() {
            counts[k] += counts[k - 1];
        }
        GridFront {
            origin: map.source(),
            direction: map.direction(),
            steps,
            counts,
            k_max,
            map,
        }
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn grid(&self) -> &GridConfig {
        self.map.grid()
    }

    pub fn passage(&self) -> &PassageMap {
        &self.map
    }

    pub fn k_max(&self) -> u32 {
        self.k_max
    }

    /// First step covering each node, `u32::MAX` if never covered.
    pub fn steps(&self) -> &[u32] {
        &self.steps
    }

    pub fn time(&self, k: u32) -> f64 {
        k as f64 * self.grid().dt
    }

    pub fn mask(&self, k: u32) -> Vec<bool> {
        self.steps.iter().map(|&s| s <= k).collect()
    }

    pub fn count(&self, k: u32) -> usize {
        self.counts[k.min(self.k_max) as usize]
    }

    /// Node centres of mask `k`.
    pub fn points(&self, k: u32) -> Vec<Point> {
        let cfg = self.grid();
        self.steps
            .iter()
            .enumerate()
            .filter(|(_, &s)| s <= k)
            .map(|(i, _)| cfg.point(i))
            .collect()
    }

    /// Nodes violating `M_k ⊆ ball(x₀, speed·kΔt + h)` at the step where they
    /// first appear; masks only grow, so this covers every later step too.
    pub fn envelope_violations(&self, speed: f64) -> usize {
        let cfg = self.grid();
        self.steps
            .iter()
            .enumerate()
            .filter(|(i, &k)| {
                k != UNREACHED && dist(cfg.point(*i), self.origin) > speed * self.time(k) + cfg.h + 1e-9
            })
            .count()
    }

    /// Largest β with `|M_k|·h^d ≥ β·t^d` for every step with `t ∈ [t_lo, t_hi]`.
    pub fn growth_constant(&self, t_lo: f64, t_hi: f64) -> f64 {
        let cfg = self.grid();
        let cell = cfg.h.powi(cfg.dim as i32);
        (0..=self.k_max)
            .filter(|&k| {
                let t = self.time(k);
                t >= t_lo - 1e-9 && t <= t_hi + 1e-9
            })
            .map(|k| self.count(k) as f64 * cell / self.time(k).powi(cfg.dim as i32))
            .fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::ORIGIN;

    #[test]
    fn zero_field_disc_growth() {
        let f = Field::zero(2);
        let cfg = GridConfig::centered(2, 0.25, 0.1, ORIGIN, 8.0);
        let front = propagate(&f, ORIGIN, 5.0, &cfg, Direction::Forward).unwrap();
        assert_eq!(front.envelope_violations(1.0), 0);
        let area = front.count(50) as f64 * 0.0625;
        assert!((area - std::f64::consts::PI * 25.0).abs() < 3.0, "{area}");
        for k in 1..=front.k_max() {
            assert!(front.count(k) >= front.count(k - 1));
        }
    }

    #[test]
    fn window_precheck_names_radius() {
        let f = Field::zero(2);
        let cfg = GridConfig::centered(2, 0.25, 0.1, ORIGIN, 4.0);
        match propagate(&f, ORIGIN, 5.0, &cfg, Direction::Forward) {
            Err(ReachError::WindowTooSmall { required, .. }) => assert!((required - 6.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cfl_violation_is_reported() {
        let f = Field::zero(2);
        let cfg = GridConfig::centered(2, 0.1, 0.2, ORIGIN, 4.0);
        assert!(matches!(
            propagate(&f, ORIGIN, 1.0, &cfg, Direction::Forward),
            Err(ReachError::Cfl { .. })
        ));
    }
}
