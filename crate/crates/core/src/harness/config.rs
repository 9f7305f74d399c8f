use std::fmt;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::field::{FieldError, FieldSpec};
use crate::geom::ORIGIN;
use crate::homogenize::InitialData;
use crate::reachability::{default_stencil, GridConfig, ReachError};

/// A configuration problem, naming the offending key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
}

impl ConfigError {
    fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    FieldCheck,
    PercolationTail,
    Unicoherence,
    Detour,
    Rearrange,
    Shape,
    Fluctuation,
    HomogError,
    Continuity,
    SkeletonGap,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 10] = [
        ExperimentKind::FieldCheck,
        ExperimentKind::PercolationTail,
        ExperimentKind::Unicoherence,
        ExperimentKind::Detour,
        ExperimentKind::Rearrange,
        ExperimentKind::Shape,
        ExperimentKind::Fluctuation,
        ExperimentKind::HomogError,
        ExperimentKind::Continuity,
        ExperimentKind::SkeletonGap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::FieldCheck => "field-check",
            ExperimentKind::PercolationTail => "percolation-tail",
            ExperimentKind::Unicoherence => "unicoherence",
            ExperimentKind::Detour => "detour",
            ExperimentKind::Rearrange => "rearrange",
            ExperimentKind::Shape => "shape",
            ExperimentKind::Fluctuation => "fluctuation",
            ExperimentKind::HomogError => "homog-error",
            ExperimentKind::Continuity => "continuity",
            ExperimentKind::SkeletonGap => "skeleton-gap",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn description(self) -> &'static str {
        match self {
            ExperimentKind::FieldCheck => "divergence, speed and Lipschitz bounds of sampled fields",
            ExperimentKind::PercolationTail => "tail of the closed cluster attached to a set of sites",
            ExperimentKind::Unicoherence => "boundary connectivity of complements of random connected sets",
            ExperimentKind::Detour => "detour skeletons between sites of the largest open cluster",
            ExperimentKind::Rearrange => "prefix bound of the vector rearrangement on random instances",
            ExperimentKind::Shape => "Hausdorff distance of scaled reachable sets to the limit shape",
            ExperimentKind::Fluctuation => "spread and bias of passage times along a ray",
            ExperimentKind::HomogError => "sup error of the rescaled solution against the homogenized one",
            ExperimentKind::Continuity => "effective Hamiltonian along a sequence of amplitudes",
            ExperimentKind::SkeletonGap => "doubling induction for a synthetic subadditive oracle",
        }
    }

    /// Whether runs of this kind solve passage problems on a grid.
    pub fn uses_grid(self) -> bool {
        matches!(
            self,
            ExperimentKind::Shape | ExperimentKind::Fluctuation | ExperimentKind::HomogError | ExperimentKind::Continuity
        )
    }

    fn default_trials(self) -> usize {
        match self {
            ExperimentKind::FieldCheck => 8,
            ExperimentKind::PercolationTail => 2000,
            ExperimentKind::Unicoherence => 1000,
            ExperimentKind::Detour => 200,
            ExperimentKind::Rearrange => 1000,
            ExperimentKind::Shape => 8,
            ExperimentKind::Fluctuation => 16,
            ExperimentKind::HomogError => 4,
            ExperimentKind::Continuity => 8,
            ExperimentKind::SkeletonGap => 1,
        }
    }
}

/// The law of the environment, without a seed: trial seeds come from the
/// master seed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldLaw {
    pub dim: usize,
    pub amplitude: f64,
    pub bump_radius: f64,
    pub pitch: f64,
}

impl FieldLaw {
    pub fn spec(&self) -> FieldSpec {
        FieldSpec {
            dim: self.dim,
            amplitude: self.amplitude,
            bump_radius: self.bump_radius,
            pitch: self.pitch,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridBlock {
    pub h: f64,
    pub dt: f64,
    pub stencil: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldCheckParams {
    /// Random evaluation points per field.
    pub points: usize,
    /// Points are uniform in `[−extent, extent]^d`.
    pub extent: f64,
    /// Allowed |div V|.
    pub tolerance: f64,
}

impl Default for FieldCheckParams {
    fn default() -> Self {
        FieldCheckParams {
            points: 256,
            extent: 8.0,
            tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PercolationTailParams {
    pub dim: usize,
    pub p: f64,
    /// `line` (sites `0..set_size` along the first axis, centred) or
    /// `connected` (a random connected set grown inside a small cube).
    pub set_shape: String,
    pub set_size: usize,
    /// Lattice margin around the set.
    pub margin: i64,
    /// Tails `P[|cl(S)| > |S| + δ]` are reported for `δ = −|S|..=max_delta`.
    pub max_delta: i64,
    /// Tail points with fewer exceedances are left out of the fit.
    pub min_count: usize,
}

impl Default for PercolationTailParams {
    fn default() -> Self {
        PercolationTailParams {
            dim: 2,
            p: 0.95,
            set_shape: "line".into(),
            set_size: 40,
            margin: 16,
            max_delta: 0,
            min_count: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UnicoherenceParams {
    pub dim: usize,
    pub side: i64,
    pub min_size: usize,
    /// Zero means half the window.
    pub max_size: usize,
}

impl Default for UnicoherenceParams {
    fn default() -> Self {
        UnicoherenceParams {
            dim: 2,
            side: 8,
            min_size: 1,
            max_size: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetourParams {
    pub dims: Vec<usize>,
    pub p: f64,
    pub radius_2d: i64,
    pub radius_3d: i64,
}

impl Default for DetourParams {
    fn default() -> Self {
        DetourParams {
            dims: vec![2, 3],
            p: 0.95,
            radius_2d: 14,
            radius_3d: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RearrangeParams {
    pub dims: Vec<usize>,
    pub max_n: usize,
    /// Instances up to this size are also solved by exhaustive search.
    pub exhaustive_max: usize,
}

impl Default for RearrangeParams {
    fn default() -> Self {
        RearrangeParams {
            dims: vec![2, 3],
            max_n: 12,
            exhaustive_max: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShapeParams {
    /// Direction count in two dimensions; in three, the smallest
    /// icosphere with at least this many vertices.
    pub directions: usize,
    /// Radii of the limit-shape estimate; the largest one is used.
    pub radii: Vec<f64>,
    pub theta_trials: usize,
    pub times: Vec<f64>,
}

impl Default for ShapeParams {
    fn default() -> Self {
        ShapeParams {
            directions: 16,
            radii: vec![8.0, 16.0],
            theta_trials: 8,
            times: vec![4.0, 8.0, 16.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FluctuationParams {
    pub direction: Vec<f64>,
    pub radii: Vec<f64>,
    pub theta_trials: usize,
}

impl Default for FluctuationParams {
    fn default() -> Self {
        FluctuationParams {
            direction: vec![1.0, 0.0],
            radii: vec![4.0, 8.0, 16.0],
            theta_trials: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HomogErrorParams {
    pub u0: InitialData,
    pub eps: Vec<f64>,
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    /// Trials behind the homogenized solution.
    pub plug_trials: usize,
    /// Direction count for the limit shape when `u0` is not linear.
    pub directions: usize,
}

impl Default for HomogErrorParams {
    fn default() -> Self {
        HomogErrorParams {
            u0: InitialData::Linear { p: [1.0, 0.0, 0.0] },
            eps: vec![0.25, 0.125],
            times: vec![1.0, 2.0],
            points: vec![vec![0.0, 0.0]],
            plug_trials: 4,
            directions: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuityParams {
    /// Amplitudes `a(1 + 2^−n)` for `n < levels`, where `a` is the field amplitude.
    pub levels: usize,
    pub directions: usize,
    pub radius: f64,
    /// Number of unit momenta on which `H̄` is compared.
    pub momenta: usize,
}

impl Default for ContinuityParams {
    fn default() -> Self {
        ContinuityParams {
            levels: 4,
            directions: 16,
            radius: 16.0,
            momenta: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SkeletonGapParams {
    /// `root`, `log` or `polyhedral`.
    pub oracle: String,
    pub nu: f64,
    /// `one`, `log` or `log3`.
    pub phi: String,
    pub c: f64,
    pub base: i64,
    pub factor: u64,
    pub levels: usize,
    pub pieces: usize,
}

impl Default for SkeletonGapParams {
    fn default() -> Self {
        SkeletonGapParams {
            oracle: "root".into(),
            nu: 0.5,
            phi: "one".into(),
            c: 2.0,
            base: 4,
            factor: 2,
            levels: 5,
            pieces: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Params {
    FieldCheck(FieldCheckParams),
    PercolationTail(PercolationTailParams),
    Unicoherence(UnicoherenceParams),
    Detour(DetourParams),
    Rearrange(RearrangeParams),
    Shape(ShapeParams),
    Fluctuation(FluctuationParams),
    HomogError(HomogErrorParams),
    Continuity(ContinuityParams),
    SkeletonGap(SkeletonGapParams),
}

impl Params {
    pub fn default_for(kind: ExperimentKind) -> Params {
        match kind {
            ExperimentKind::FieldCheck => Params::FieldCheck(Default::default()),
            ExperimentKind::PercolationTail => Params::PercolationTail(Default::default()),
            ExperimentKind::Unicoherence => Params::Unicoherence(Default::default()),
            ExperimentKind::Detour => Params::Detour(Default::default()),
            ExperimentKind::Rearrange => Params::Rearrange(Default::default()),
            ExperimentKind::Shape => Params::Shape(Default::default()),
            ExperimentKind::Fluctuation => Params::Fluctuation(Default::default()),
            ExperimentKind::HomogError => Params::HomogError(Default::default()),
            ExperimentKind::Continuity => Params::Continuity(Default::default()),
            ExperimentKind::SkeletonGap => Params::SkeletonGap(Default::default()),
        }
    }

    fn parse(kind: ExperimentKind, table: Table) -> Result<Params, ConfigError> {
        fn typed<T: DeserializeOwned>(table: Table) -> Result<T, ConfigError> {
            Value::Table(table)
                .try_into()
                .map_err(|e: toml::de::Error| ConfigError::new("params", e.message().trim().to_string()))
        }
        Ok(match kind {
            ExperimentKind::FieldCheck => Params::FieldCheck(typed(table)?),
            ExperimentKind::PercolationTail => Params::PercolationTail(typed(table)?),
            ExperimentKind::Unicoherence => Params::Unicoherence(typed(table)?),
            ExperimentKind::Detour => Params::Detour(typed(table)?),
            ExperimentKind::Rearrange => Params::Rearrange(typed(table)?),
            ExperimentKind::Shape => Params::Shape(typed(table)?),
            ExperimentKind::Fluctuation => Params::Fluctuation(typed(table)?),
            ExperimentKind::HomogError => Params::HomogError(typed(table)?),
            ExperimentKind::Continuity => Params::Continuity(typed(table)?),
            ExperimentKind::SkeletonGap => Params::SkeletonGap(typed(table)?),
        })
    }
}

/// A validated experiment with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub trials: usize,
    /// Worker threads; zero uses every available core.
    pub workers: usize,
    /// Wall-clock budget in seconds.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget_secs: Option<f64>,
    pub field: FieldLaw,
    pub grid: GridBlock,
    pub params: Params,
}

const TOP_KEYS: [&str; 8] = ["kind", "seed", "trials", "workers", "budget_secs", "field", "grid", "params"];

fn number(v: &Value, name: &str) -> Result<f64, ConfigError> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(ConfigError::new(name, "expected a number")),
    }
}

fn count(v: &Value, name: &str) -> Result<u64, ConfigError> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        _ => Err(ConfigError::new(name, "expected a non-negative integer")),
    }
}

fn sub_table(table: &Table, key: &str) -> Result<Table, ConfigError> {
    match table.get(key) {
        None => Ok(Table::new()),
        Some(Value::Table(t)) => Ok(t.clone()),
        Some(_) => Err(ConfigError::new(key, "expected a section")),
    }
}

fn check_keys(table: &Table, prefix: &str, allowed: &[&str]) -> Result<(), ConfigError> {
    for key in table.keys() {
        if !allowed.contains(&key.as_str()) {
            let name = if prefix.is_empty() { key.clone() } else { format!("{prefix}.{key}") };
            return Err(ConfigError::new(name, format!("unknown key; expected one of {}", allowed.join(", "))));
        }
    }
    Ok(())
}

fn field_error(e: FieldError) -> ConfigError {
    match e {
        FieldError::Dimension(_) => ConfigError::new("field.dim", e.to_string()),
        FieldError::Parameter { name, .. } => ConfigError::new(format!("field.{name}"), e.to_string()),
        FieldError::RangeOfDependence(_) => ConfigError::new("field.bump_radius", e.to_string()),
    }
}

fn grid_error(e: ReachError) -> ConfigError {
    match e {
        ReachError::Cfl { .. } => ConfigError::new("grid.dt", e.to_string()),
        _ => ConfigError::new("grid", e.to_string()),
    }
}

fn positive(name: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::new(name, format!("must be positive, got {v}")))
    }
}

fn probability(name: &str, v: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(ConfigError::new(name, format!("must lie in [0, 1], got {v}")))
    }
}

fn dims_ok(name: &str, dims: &[usize]) -> Result<(), ConfigError> {
    if dims.is_empty() || dims.iter().any(|d| *d != 2 && *d != 3) {
        return Err(ConfigError::new(name, "dimensions must be a non-empty list of 2 and 3"));
    }
    Ok(())
}

fn increasing(name: &str, xs: &[f64]) -> Result<(), ConfigError> {
    if xs.is_empty() || xs[0] <= 0.0 || xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ConfigError::new(name, "must be a non-empty increasing list of positive numbers"));
    }
    Ok(())
}

impl ExperimentConfig {
    /// Parse and validate a configuration file.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::new("config", e.message().trim().to_string()))?;
        check_keys(&table, "", &TOP_KEYS)?;
        let kind_name = match table.get("kind") {
            None => {
                let names: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
                return Err(ConfigError::new(
                    "kind",
                    format!("missing experiment kind; expected one of {}", names.join(", ")),
                ));
            }
            Some(Value::String(s)) => s.clone(),
            Some(_) => return Err(ConfigError::new("kind", "expected a string")),
        };
        let kind = ExperimentKind::from_name(&kind_name)
            .ok_or_else(|| ConfigError::new("kind", format!("unknown experiment kind `{kind_name}`")))?;
        let seed = table.get("seed").map(|v| count(v, "seed")).transpose()?.unwrap_or(0);
        let trials = match table.get("trials") {
            Some(v) => count(v, "trials")? as usize,
            None => kind.default_trials(),
        };
        let workers = table.get("workers").map(|v| count(v, "workers")).transpose()?.unwrap_or(0) as usize;
        let budget_secs = table.get("budget_secs").map(|v| number(v, "budget_secs")).transpose()?;

        let ft = sub_table(&table, "field")?;
        check_keys(&ft, "field", &["dim", "amplitude", "bump_radius", "pitch"])?;
        let base = FieldSpec::default();
        let field = FieldLaw {
            dim: ft.get("dim").map(|v| count(v, "field.dim")).transpose()?.map_or(base.dim, |d| d as usize),
            amplitude: ft.get("amplitude").map(|v| number(v, "field.amplitude")).transpose()?.unwrap_or(base.amplitude),
            bump_radius: ft
                .get("bump_radius")
                .map(|v| number(v, "field.bump_radius"))
                .transpose()?
                .unwrap_or(base.bump_radius),
            pitch: ft.get("pitch").map(|v| number(v, "field.pitch")).transpose()?.unwrap_or(base.pitch),
        };

        let gt = sub_table(&table, "grid")?;
        check_keys(&gt, "grid", &["h", "dt", "stencil"])?;
        let h = gt.get("h").map(|v| number(v, "grid.h")).transpose()?.unwrap_or(0.25);
        let dt = gt.get("dt").map(|v| number(v, "grid.dt")).transpose()?;
        let stencil = gt
            .get("stencil")
            .map(|v| count(v, "grid.stencil"))
            .transpose()?
            .map_or(default_stencil(field.dim), |s| s as usize);

        let params = Params::parse(kind, sub_table(&table, "params")?)?;
        let mut cfg = ExperimentConfig {
            kind,
            seed,
            trials,
            workers,
            budget_secs,
            field,
            grid: GridBlock { h, dt: dt.unwrap_or(0.1), stencil },
            params,
        };
        if dt.is_none() {
            cfg.grid.dt = cfg.default_dt();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Largest drift bound over every law the run draws from.
    fn drift_bound(&self) -> f64 {
        let spec = self.field.spec();
        match &self.params {
            Params::Continuity(_) => FieldSpec {
                amplitude: 2.0 * spec.amplitude,
                ..spec
            }
            .bounds()
            .sup,
            _ => spec.bounds().sup,
        }
    }

    /// `min(0.1, h / (2(sup|V| + 1)))`, rounded down to four decimals.
    fn default_dt(&self) -> f64 {
        if self.field.spec().validate().is_err() || !(self.grid.h > 0.0) {
            return 0.1;
        }
        let max = 0.5 * self.grid.h / (self.drift_bound() + 1.0);
        ((max * 1e4).floor() / 1e4).min(0.1)
    }

    /// Grid used as the resolution prototype of every solve.
    pub fn proto(&self) -> GridConfig {
        GridConfig::centered(self.field.dim, self.grid.h, self.grid.dt, ORIGIN, 1.0).with_stencil(self.grid.stencil)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let spec = self.field.spec();
        spec.validate().map_err(field_error)?;
        if self.kind.uses_grid() {
            let g = self.proto();
            g.validate().map_err(grid_error)?;
            g.check_cfl(self.drift_bound()).map_err(grid_error)?;
        }
        if let Some(b) = self.budget_secs {
            positive("budget_secs", b)?;
        }
        if self.trials == 0 {
            return Err(ConfigError::new("trials", "must be at least 1"));
        }
        let d = self.field.dim;
        match &self.params {
            Params::FieldCheck(p) => {
                if p.points == 0 {
                    return Err(ConfigError::new("params.points", "must be at least 1"));
                }
                positive("params.extent", p.extent)?;
                positive("params.tolerance", p.tolerance)?;
            }
            Params::PercolationTail(p) => {
                dims_ok("params.dim", &[p.dim])?;
                probability("params.p", p.p)?;
                if p.set_size == 0 {
                    return Err(ConfigError::new("params.set_size", "must be at least 1"));
                }
                if p.set_shape != "line" && p.set_shape != "connected" {
                    return Err(ConfigError::new("params.set_shape", "expected line or connected"));
                }
                if p.margin < 1 {
                    return Err(ConfigError::new("params.margin", "must be at least 1"));
                }
            }
            Params::Unicoherence(p) => {
                dims_ok("params.dim", &[p.dim])?;
                if p.side < 2 {
                    return Err(ConfigError::new("params.side", "must be at least 2"));
                }
                if p.min_size == 0 || (p.max_size != 0 && p.max_size < p.min_size) {
                    return Err(ConfigError::new("params.max_size", "sizes need 1 ≤ min_size ≤ max_size"));
                }
            }
            Params::Detour(p) => {
                dims_ok("params.dims", &p.dims)?;
                probability("params.p", p.p)?;
                if p.radius_2d < 4 || p.radius_3d < 4 {
                    return Err(ConfigError::new("params.radius_2d", "lattice radii must be at least 4"));
                }
            }
            Params::Rearrange(p) => {
                dims_ok("params.dims", &p.dims)?;
                if p.max_n == 0 {
                    return Err(ConfigError::new("params.max_n", "must be at least 1"));
                }
                if p.exhaustive_max > 10 {
                    return Err(ConfigError::new("params.exhaustive_max", "exhaustive search is limited to 10 vectors"));
                }
            }
            Params::Shape(p) => {
                if p.directions < 3 {
                    return Err(ConfigError::new("params.directions", "must be at least 3"));
                }
                increasing("params.radii", &p.radii)?;
                increasing("params.times", &p.times)?;
                if p.theta_trials < 2 {
                    return Err(ConfigError::new("params.theta_trials", "must be at least 2"));
                }
            }
            Params::Fluctuation(p) => {
                if p.direction.len() != d || p.direction.iter().all(|c| *c == 0.0) {
                    return Err(ConfigError::new("params.direction", format!("need a non-zero vector with {d} entries")));
                }
                increasing("params.radii", &p.radii)?;
                if self.trials < 2 {
                    return Err(ConfigError::new("trials", "fluctuations need at least 2 trials"));
                }
                if p.theta_trials == 0 {
                    return Err(ConfigError::new("params.theta_trials", "must be at least 1"));
                }
            }
            Params::HomogError(p) => {
                if p.eps.is_empty() || p.eps.iter().any(|e| *e <= 0.0) || p.eps.windows(2).any(|w| w[1] >= w[0]) {
                    return Err(ConfigError::new("params.eps", "must be a non-empty decreasing list of positive numbers"));
                }
                increasing("params.times", &p.times)?;
                if p.points.is_empty() || p.points.iter().any(|x| x.len() != d) {
                    return Err(ConfigError::new("params.points", format!("need points with {d} coordinates")));
                }
                if p.plug_trials < 2 {
                    return Err(ConfigError::new("params.plug_trials", "must be at least 2"));
                }
                if let InitialData::Cone { slope, .. } = p.u0 {
                    positive("params.u0.slope", slope)?;
                }
            }
            Params::Continuity(p) => {
                if p.levels == 0 || p.momenta == 0 || p.directions < 3 {
                    return Err(ConfigError::new("params", "need levels, momenta and at least 3 directions"));
                }
                positive("params.radius", p.radius)?;
                if self.trials < 2 {
                    return Err(ConfigError::new("trials", "continuity needs at least 2 trials"));
                }
                if !(self.field.amplitude > 0.0) {
                    return Err(ConfigError::new("field.amplitude", "continuity needs a positive limit amplitude"));
                }
                let top = FieldSpec {
                    amplitude: 2.0 * self.field.amplitude,
                    ..spec
                };
                top.validate().map_err(field_error)?;
            }
            Params::SkeletonGap(p) => {
                if crate::subadditive::oracle_by_name(&p.oracle, d).is_none() {
                    return Err(ConfigError::new("params.oracle", "expected root, log or polyhedral"));
                }
                if super::kinds::phi_by_name(&p.phi).is_none() {
                    return Err(ConfigError::new("params.phi", "expected one, log or log3"));
                }
                if p.base < 1 || p.factor < 2 || p.levels == 0 || p.pieces == 0 {
                    return Err(ConfigError::new("params", "need base ≥ 1, factor ≥ 2, levels ≥ 1 and pieces ≥ 1"));
                }
                positive("params.nu", p.nu)?;
                positive("params.c", p.c)?;
            }
        }
        Ok(())
    }

    /// Normalized echo with every default applied.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the normalized configuration without the worker count and
    /// budget, which never change the numbers.
    pub fn hash(&self) -> String {
        let canonical = ExperimentConfig {
            workers: 0,
            budget_secs: None,
            ..self.clone()
        };
        Sha256::digest(canonical.to_toml().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// One catalog entry: a kind, what it measures and its parameters with
/// their defaults.
#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntry {
    pub kind: &'static str,
    pub description: &'static str,
    pub uses_grid: bool,
    pub default_trials: usize,
    pub params: String,
}

pub fn list_experiments() -> Vec<CatalogEntry> {
    ExperimentKind::ALL
        .iter()
        .map(|k| CatalogEntry {
            kind: k.name(),
            description: k.description(),
            uses_grid: k.uses_grid(),
            default_trials: k.default_trials(),
            params: toml::to_string(&Params::default_for(*k)).expect("defaults serialize"),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_names_the_kind() {
        let e = ExperimentConfig::from_toml("").unwrap_err();
        assert_eq!(e.field, "kind");
        assert!(e.reason.contains("missing experiment kind"));
    }

    #[test]
    fn cfl_violation_names_dt_and_bound() {
        let text = "kind = \"shape\"\n[field]\namplitude = 0.83\n[grid]\nh = 0.25\ndt = 0.5\n";
        let e = ExperimentConfig::from_toml(text).unwrap_err();
        assert_eq!(e.field, "grid.dt");
        assert!(e.reason.contains("reduce dt to at most"), "{e}");
    }

    #[test]
    fn normalized_echo_round_trips() {
        for k in ExperimentKind::ALL {
            let amp = if k == ExperimentKind::Continuity { 0.3 } else { 0.0 };
            let text = format!("kind = \"{}\"\nseed = 5\n[field]\namplitude = {amp:?}\n", k.name());
            let c = ExperimentConfig::from_toml(&text).unwrap();
            let echo = c.to_toml();
            assert_eq!(ExperimentConfig::from_toml(&echo).unwrap(), c, "{echo}");
        }
    }

    #[test]
    fn unknown_keys_are_named() {
        let e = ExperimentConfig::from_toml("kind = \"detour\"\nsed = 3\n").unwrap_err();
        assert_eq!(e.field, "sed");
        let e = ExperimentConfig::from_toml("kind = \"detour\"\n[params]\nq = 0.5\n").unwrap_err();
        assert_eq!(e.field, "params");
        assert!(e.reason.contains('q'));
        let e = ExperimentConfig::from_toml("kind = \"detour\"\n[field]\nbump_radius = 0.5\npitch = 0.25\n").unwrap_err();
        assert_eq!(e.field, "field.bump_radius");
    }

    #[test]
    fn hash_ignores_workers() {
        let a = ExperimentConfig::from_toml("kind = \"rearrange\"\nworkers = 1\n").unwrap();
        let b = ExperimentConfig::from_toml("kind = \"rearrange\"\nworkers = 3\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = ExperimentConfig::from_toml("kind = \"rearrange\"\nseed = 1\n").unwrap();
        assert_ne!(a.hash(), c.hash());
    }
}
