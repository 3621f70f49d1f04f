//! Scenario configuration: a TOML file with one section per concern.
//!
//! Grid defaults depend on the scenario and weight defaults on `q`, so the
//! raw table is completed before it is deserialized. The resolved
//! [`Config`] therefore has no optional fields and is what gets recorded in
//! the run metadata.

use std::fmt;
use std::path::{Path, PathBuf};

use freesurf_core::analysis::{validate_config, ConfigReport, ExponentConfig, WeightConfig};
use freesurf_core::spectral::VerticalScheme;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    LinearDecay,
    BoundaryForced,
    ResolventSweep,
    MultiplierAudit,
    NonlinearSmallData,
    DivergenceCorrector,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::LinearDecay,
        Scenario::BoundaryForced,
        Scenario::ResolventSweep,
        Scenario::MultiplierAudit,
        Scenario::NonlinearSmallData,
        Scenario::DivergenceCorrector,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::LinearDecay => "linear-decay",
            Scenario::BoundaryForced => "boundary-forced",
            Scenario::ResolventSweep => "resolvent-sweep",
            Scenario::MultiplierAudit => "multiplier-audit",
            Scenario::NonlinearSmallData => "nonlinear-small-data",
            Scenario::DivergenceCorrector => "divergence-corrector",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|x| x.name() == s)
    }

    /// Whether the exponent and weight configuration must pass the
    /// admissibility checks before the scenario runs.
    pub fn needs_admissible_exponents(self) -> bool {
        self == Scenario::NonlinearSmallData
    }

    fn grid_defaults(self) -> GridConfig {
        let g = |modes, box_len, vertical_nodes, depth, scheme| GridConfig { modes, box_len, vertical_nodes, depth, scheme };
        let two_pi = 2.0 * std::f64::consts::PI;
        match self {
            Scenario::LinearDecay => g(128, 512.0, 64, 80.0, Scheme::Chebyshev),
            Scenario::BoundaryForced => g(8, two_pi, 160, 40.0, Scheme::Chebyshev),
            Scenario::ResolventSweep => g(8, two_pi, 64, 8.0, Scheme::Chebyshev),
            Scenario::MultiplierAudit => g(8, two_pi, 16, 4.0, Scheme::Chebyshev),
            Scenario::NonlinearSmallData => g(8, two_pi, 40, 12.0, Scheme::Chebyshev),
            Scenario::DivergenceCorrector => g(8, two_pi, 96, 6.0, Scheme::FiniteDifference),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Chebyshev,
    FiniteDifference,
}

impl From<Scheme> for VerticalScheme {
    fn from(s: Scheme) -> Self {
        match s {
            Scheme::Chebyshev => VerticalScheme::Chebyshev,
            Scheme::FiniteDifference => VerticalScheme::FiniteDifference,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Fourier modes per horizontal direction.
    pub modes: usize,
    /// Period of the horizontal box.
    pub box_len: f64,
    pub vertical_nodes: usize,
    /// Depth `L` of the truncated column `[-L, 0]`.
    pub depth: f64,
    pub scheme: Scheme,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsConfig {
    pub mu: f64,
    pub c_sigma: f64,
    pub c_g: f64,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self { mu: 1.0, c_sigma: 1.0, c_g: 1.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExponentsConfig {
    pub p: f64,
    pub q: f64,
    pub theta: f64,
    /// Integrability of the localized initial data.
    pub q_bar: f64,
    /// Exponent of the height norm.
    pub r: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WeightsConfig {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub b4: f64,
    pub c1: f64,
    pub d1: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Fitted decay exponent vs target.
    pub decay_exponent: f64,
    /// Relative mismatch of closed-form and collocated boundary solutions.
    pub cross_check: f64,
    /// Fitted kernel power vs target.
    pub kernel_power: f64,
    /// Relative error and residual of manufactured resolvent solves.
    pub resolvent: f64,
    /// Largest factor between an estimate ratio and the sweep median.
    pub ratio_spread: f64,
    /// Largest accepted multiplier constant.
    pub max_constant: f64,
    /// Largest accepted growth of a multiplier constant with the budget.
    pub constant_growth: f64,
    pub lopatinskii_spread: f64,
    pub contraction: f64,
    /// Converged residual relative to the Picard tolerance.
    pub residual_factor: f64,
    /// Smallest accepted observed convergence order.
    pub order: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            decay_exponent: 0.15,
            cross_check: 1e-6,
            kernel_power: 0.1,
            resolvent: 1e-7,
            ratio_spread: 10.0,
            max_constant: 100.0,
            constant_growth: 3.0,
            lopatinskii_spread: 1e3,
            contraction: 0.5,
            residual_factor: 10.0,
            order: 1.8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialData {
    /// Zero-mean height with the slowest admissible spatial fall-off.
    Localized,
    Zero,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct DecayConfig {
    pub data: InitialData,
    pub amplitude: f64,
    pub t_min: f64,
    pub t_max: f64,
    /// Log-spaced sample times in `[t_min, t_max]`.
    pub samples: usize,
    pub contour_nodes: usize,
    /// Extra fit windows reported for sensitivity; they carry no verdict.
    pub windows: Vec<[f64; 2]>,
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self {
            data: InitialData::Localized,
            amplitude: 1.0,
            t_min: 5.0,
            t_max: 200.0,
            samples: 20,
            contour_nodes: 800,
            windows: vec![[5.0, 100.0], [10.0, 200.0]],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct BoundaryConfig {
    pub samples: usize,
    pub xi_min: f64,
    pub xi_max: f64,
    pub lambda_max: f64,
    /// Frequency of the tangential forcing used for the kernel decay.
    pub kernel_xi: f64,
    pub kernel_depth: f64,
    pub tau_min: f64,
    pub tau_max: f64,
    pub tau_samples: usize,
}

impl Default for BoundaryConfig {
    fn default() -> Self {
        Self {
            samples: 50,
            xi_min: 0.5,
            xi_max: 4.0,
            lambda_max: 40.0,
            kernel_xi: 0.02,
            kernel_depth: 40.0,
            tau_min: 0.2,
            tau_max: 5.0,
            tau_samples: 25,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Random manufactured solves.
    pub samples: usize,
    pub lambda_max: f64,
    /// Ray angles of the estimate sweep, in units of pi.
    pub arg_fractions: Vec<f64>,
    /// Sweep nodes per decade of `|lambda|`, starting at 1.
    pub per_decade: usize,
    pub decades: usize,
    pub xi: [f64; 2],
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            samples: 20,
            lambda_max: 1e4,
            arg_fractions: vec![0.0, 0.5, 0.7],
            per_decade: 4,
            decades: 4,
            xi: [1.0, 0.5],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct AuditConfig {
    /// Samples per symbol; the growth check reruns with four times as many.
    pub budget: usize,
    pub lopatinskii_samples: usize,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self { budget: 1600, lopatinskii_samples: 10_000 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct PicardConfig {
    /// Amplitude of the single-mode height `a cos x1`.
    pub amplitude: f64,
    pub horizon: f64,
    pub tau: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self { amplitude: 1e-3, horizon: 5.0, tau: 0.05, tol: 1e-6, max_iter: 12 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct DivergenceConfig {
    /// Grids in the refinement study, starting at `grid.vertical_nodes`
    /// and doubling.
    pub levels: usize,
}

impl Default for DivergenceConfig {
    fn default() -> Self {
        Self { levels: 4 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub scenario: Scenario,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Cap on worker threads; 0 uses every core.
    pub workers: usize,
    pub grid: GridConfig,
    #[serde(default)]
    pub physics: PhysicsConfig,
    pub exponents: ExponentsConfig,
    pub weights: WeightsConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub decay: DecayConfig,
    #[serde(default)]
    pub boundary: BoundaryConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub audit: AuditConfig,
    #[serde(default)]
    pub picard: PicardConfig,
    #[serde(default)]
    pub divergence: DivergenceConfig,
}

pub const OUTPUT_DIR_VAR: &str = "FREESURF_OUTPUT_DIR";
pub const WORKERS_VAR: &str = "FREESURF_WORKERS";

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn section<'a>(t: &'a mut Table, name: &str) -> Result<&'a mut Table, CliError> {
    t.entry(name)
        .or_insert_with(|| Value::Table(Table::new()))
        .as_table_mut()
        .ok_or_else(|| usage(format!("`{name}` must be a section")))
}

fn fill<T: Serialize>(t: &mut Table, defaults: &T) -> Result<(), CliError> {
    let Value::Table(d) = Value::try_from(defaults).map_err(|e| usage(e.to_string()))? else {
        unreachable!("defaults serialize to a table");
    };
    for (k, v) in d {
        t.entry(k).or_insert(v);
    }
    Ok(())
}

fn float(v: &Value, key: &str) -> Result<f64, CliError> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(usage(format!("`{key}` must be a number"))),
    }
}

impl Config {
    /// Parses a configuration, filling every omitted key with its default.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut t: Table = text.parse().map_err(|e: toml::de::Error| usage(format!("malformed config: {}", e.message())))?;
        let scenario = match t.get("scenario") {
            None => return Err(usage("missing required key `scenario`")),
            Some(Value::String(s)) => Scenario::parse(s).ok_or_else(|| {
                let names: Vec<&str> = Scenario::ALL.iter().map(|s| s.name()).collect();
                usage(format!("unknown scenario `{s}`; expected one of {}", names.join(", ")))
            })?,
            Some(_) => return Err(usage("`scenario` must be a string")),
        };
        t.entry("seed").or_insert(Value::Integer(0));
        t.entry("workers").or_insert(Value::Integer(0));
        t.entry("output_dir").or_insert(Value::String(format!("runs/{scenario}")));
        fill(section(&mut t, "grid")?, &scenario.grid_defaults())?;

        let exps = section(&mut t, "exponents")?;
        let q = float(exps.get("q").ok_or_else(|| usage("missing required key `exponents.q`"))?, "exponents.q")?;
        let base = ExponentConfig { q, ..Default::default() };
        exps.entry("p").or_insert(Value::Float(base.p));
        exps.entry("theta").or_insert(Value::Float(base.theta));
        exps.entry("q_bar").or_insert(Value::Float(base.q_bar()));
        exps.entry("r").or_insert(Value::Float(q));
        let w = WeightConfig::standard(q);
        fill(
            section(&mut t, "weights")?,
            &WeightsConfig { a1: w.a1, a2: w.a2, b1: w.b1, b2: w.b2, b3: w.b3, b4: w.b4, c1: w.c1, d1: w.d1 },
        )?;

        let cfg: Config = Value::Table(t).try_into().map_err(|e: toml::de::Error| usage(format!("invalid config: {}", e.message())))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Applies the environment overrides for the output directory and the
    /// worker cap.
    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<(), CliError> {
        if let Some(dir) = get(OUTPUT_DIR_VAR).filter(|s| !s.is_empty()) {
            self.output_dir = dir.into();
        }
        if let Some(w) = get(WORKERS_VAR).filter(|s| !s.is_empty()) {
            self.workers = w.trim().parse().map_err(|_| usage(format!("{WORKERS_VAR} must be a non-negative integer, got `{w}`")))?;
        }
        Ok(())
    }

    fn check(&self) -> Result<(), CliError> {
        let g = &self.grid;
        if g.modes < 2 || g.vertical_nodes < 4 || !(g.box_len > 0.0) || !(g.depth > 0.0) {
            return Err(usage("grid needs modes >= 2, vertical_nodes >= 4 and positive box_len and depth"));
        }
        let e = &self.exponents;
        if !(e.q > 1.0 && e.p > 1.0 && e.q_bar >= 1.0 && e.r >= 1.0) {
            return Err(usage("exponents need q > 1, p > 1, q_bar >= 1 and r >= 1"));
        }
        let d = &self.decay;
        if !(d.t_min > 0.0 && d.t_max > d.t_min) || d.samples < 10 {
            return Err(usage("decay needs 0 < t_min < t_max and at least 10 samples"));
        }
        if self.divergence.levels < 2 {
            return Err(usage("divergence.levels must be at least 2"));
        }
        Ok(())
    }

    pub fn exponent_config(&self) -> ExponentConfig {
        ExponentConfig { p: self.exponents.p, q: self.exponents.q, theta: self.exponents.theta }
    }

    pub fn weight_config(&self) -> WeightConfig {
        let w = &self.weights;
        WeightConfig { a1: w.a1, a2: w.a2, b1: w.b1, b2: w.b2, b3: w.b3, b4: w.b4, c1: w.c1, d1: w.d1 }
    }

    pub fn admissibility(&self) -> ConfigReport {
        validate_config(&self.exponent_config(), &self.weight_config())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("resolved config serializes")
    }
}
