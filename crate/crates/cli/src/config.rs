//! Scenario files: schema-versioned TOML, unknown fields rejected.

use std::collections::BTreeMap;
use std::path::Path;

use coupling_lab::circle::Symbol;
use coupling_lab::numerics::grid::KGrid;
use coupling_lab::profile::ScalarProfile;
use coupling_lab::propagators::EvolveOptions;
use coupling_lab::shortrange::Spectrum;
use coupling_lab::transport::CircleMode;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Field { path: String, message: String },
}

impl ConfigError {
    fn field(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Field { path: path.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kgrid: Option<KGridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeSpec>,
    #[serde(default)]
    pub integrator: EvolveOptions,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    pub checks: Vec<CheckSpec>,
}

/// The evolution system a scenario is about.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// `X_t = i[[0, q], [conj q, k]]X`.
    Model2x2 { q: ScalarProfile },
    /// The `J`-unitary system with coupling `q`.
    Krein { q: ScalarProfile },
    /// `X_t = i(kΛ + V)X`, `V` Toeplitz in its diagonals plus explicit pairs.
    Nxn {
        lambdas: Vec<f64>,
        #[serde(default)]
        toeplitz: Vec<ScalarProfile>,
        #[serde(default)]
        pairs: Vec<PairSpec>,
    },
    /// `u_t = k u_x + q u` on the circle.
    Transport { modes: Vec<CircleMode> },
    /// `x' = i(k·symbol + V̂*)x` on the circle.
    CircleSchrodinger {
        n_max: usize,
        modes: Vec<CircleMode>,
        #[serde(default = "square")]
        symbol: Symbol,
    },
    Shortrange {
        v: ScalarProfile,
        gamma: f64,
        alpha: f64,
        n_max: usize,
        #[serde(default = "half_line")]
        spectrum: Spectrum,
    },
    /// `u_t = k|∂|u + q(t)·2cos θ u` with `q = shape·amp·T^{-γ}`.
    HalflineTransport { alpha: f64, gamma: f64, amp: f64, shape: ScalarProfile },
}

fn square() -> Symbol {
    Symbol::Square
}

fn half_line() -> Spectrum {
    Spectrum::HalfLine
}

impl ModelSpec {
    pub fn id(&self) -> &'static str {
        match self {
            ModelSpec::Model2x2 { .. } => "model2x2",
            ModelSpec::Krein { .. } => "krein",
            ModelSpec::Nxn { .. } => "nxn",
            ModelSpec::Transport { .. } => "transport",
            ModelSpec::CircleSchrodinger { .. } => "circle_schrodinger",
            ModelSpec::Shortrange { .. } => "shortrange",
            ModelSpec::HalflineTransport { .. } => "halfline_transport",
        }
    }
}

/// `V_ij = q`, `V_ji = conj q` with 1-based indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub i: usize,
    pub j: usize,
    pub q: ScalarProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KGridSpec {
    /// Midpoint cells of width at most `dk` on `[-k_max, k_max]`.
    Symmetric { k_max: f64, dk: f64 },
    /// `cells` midpoint cells on `[a, b]`.
    Interval { a: f64, b: f64, cells: usize },
    /// `k = iy`.
    Imaginary { ys: Vec<f64> },
}

impl KGridSpec {
    pub fn build(&self) -> KGrid {
        match self {
            KGridSpec::Symmetric { k_max, dk } => KGrid::symmetric_with_step(*k_max, *dk),
            KGridSpec::Interval { a, b, cells } => KGrid::interval(*a, *b, *cells),
            KGridSpec::Imaginary { ys } => KGrid::imaginary(ys.clone()),
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        match self {
            KGridSpec::Symmetric { k_max, dk } if !(*k_max > 0.0 && *dk > 0.0) => {
                Err(ConfigError::field("kgrid", "k_max and dk must be positive"))
            }
            KGridSpec::Interval { a, b, cells } if !(b > a && *cells > 0) => Err(ConfigError::field("kgrid", "need b > a and cells > 0")),
            KGridSpec::Imaginary { ys } if ys.is_empty() || ys.iter().any(|y| *y <= 0.0) => {
                Err(ConfigError::field("kgrid.ys", "need positive imaginary parts"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub t_max: f64,
    /// Snapshot times for Cauchy sequences; `[t_max]` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
}

impl TimeSpec {
    pub fn snapshots(&self) -> Vec<f64> {
        self.times.clone().unwrap_or_else(|| vec![self.t_max])
    }
}

/// Coefficient `value` of `e^{inθ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeValue {
    pub n: i64,
    pub value: Complex64,
}

/// Constant for a "≲" check: a number, or a second model run first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Calibration {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
}

fn default_count() -> usize {
    50
}

fn default_dim() -> usize {
    4
}

fn default_samples() -> usize {
    512
}

/// One requested check; the tag is `check`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckSpec {
    /// Unitarity (or `J`-unitarity) defect at every `k` of the grid, plus
    /// the 2×2 symmetry.
    Unitarity,
    /// Random scenarios across all flows, drawn from the scenario seed.
    UnitaritySuite {
        #[serde(default = "default_count")]
        count: usize,
    },
    AdjugateContraction {
        #[serde(default = "default_count")]
        count: usize,
        #[serde(default = "default_dim")]
        dim: usize,
    },
    Rotation { eps: f64, t: f64 },
    TraceFormula,
    WeakL1 {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        calibration: Option<Calibration>,
    },
    LowerBoundImaginary { ys: Vec<f64> },
    ComplexKExpansion { j: usize, ys: Vec<f64> },
    DeterminantFlow { j: usize },
    DiagonalLimit { j: usize },
    DegeneratePair {
        j: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        calibration: Option<Calibration>,
    },
    ColumnTail {
        column: usize,
        cutoff: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        calibration: Option<Calibration>,
    },
    Plancherel,
    InstructiveJ0 { amplitudes: Vec<f64> },
    TransportLimit {
        #[serde(default)]
        exponentiated: bool,
        #[serde(default = "default_n_out")]
        n_out: usize,
    },
    CorrectedLimit {
        #[serde(default)]
        psi0: Vec<ModeValue>,
    },
    SobolevGrowth {
        gamma: f64,
        #[serde(default)]
        cutoffs: Vec<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        calibration: Option<Calibration>,
    },
    Approximation { k: f64, n_list: Vec<usize> },
    ShortrangeSobolev { s: u32 },
    Analyticity { k: f64, l_list: Vec<usize> },
    SnLp {
        n_list: Vec<usize>,
        /// `0` stands for `p = ∞`.
        p_list: Vec<f64>,
        #[serde(default = "yes")]
        two_sided: bool,
    },
    MuL2 { a: f64, b: f64, cells: usize },
    L1Loc { a: f64, b: f64, cells: usize },
    WkbBernstein { t_list: Vec<f64>, alpha: f64, gamma: f64, amp: f64, ks: Vec<f64> },
    Oscillatory { t_list: Vec<f64>, alpha: f64, gamma: f64, amp: f64, c_band: f64, s_max: f64, ds: f64 },
    HalflineLocalization { t_list: Vec<f64>, k_max: f64, dk: f64, k_loc: Vec<f64>, d_ladder: Vec<f64>, snapshots: usize },
    HHalfEquivalence {
        #[serde(default = "default_samples")]
        samples: usize,
    },
    ExpMap {
        function: String,
        ladder: Vec<f64>,
        #[serde(default = "default_samples")]
        samples: usize,
    },
    UnimodularExp {
        function: String,
        eps_ladder: Vec<f64>,
        n_list: Vec<usize>,
        #[serde(default = "default_samples")]
        samples: usize,
    },
}

fn default_n_out() -> usize {
    32
}

fn yes() -> bool {
    true
}

impl CheckSpec {
    pub fn name(&self) -> String {
        let v = serde_json::to_value(self).expect("check specs serialize");
        v["check"].as_str().unwrap_or("check").to_string()
    }
}

/// Tolerance keys a scenario may override, with their defaults.
pub const TOLERANCES: &[(&str, f64)] = &[
    ("unitarity", 1e-8),
    ("rotation", 1e-9),
    ("adjugate", 1e-10),
    ("j0", 1e-6),
    ("diagonal_budget", 4.0 * std::f64::consts::PI),
    ("equivalence_band", 0.2),
];

impl ScenarioConfig {
    pub fn tolerance(&self, key: &str) -> f64 {
        self.tolerances
            .get(key)
            .copied()
            .or_else(|| TOLERANCES.iter().find(|(k, _)| *k == key).map(|(_, v)| *v))
            .expect("tolerance keys are validated")
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let de = toml::Deserializer::parse(text).map_err(|e| ConfigError::field("<document>", e.to_string()))?;
        let cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ConfigError::field(if path == "." { "<root>".to_string() } else { path }, e.into_inner().message().trim().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialize")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::field("schema_version", format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version)));
        }
        if self.checks.is_empty() {
            return Err(ConfigError::field("checks", "at least one check is required"));
        }
        for key in self.tolerances.keys() {
            if !TOLERANCES.iter().any(|(k, _)| k == key) {
                return Err(ConfigError::field(format!("tolerances.{key}"), "unknown tolerance"));
            }
        }
        if let Some(k) = &self.kgrid {
            k.validate()?;
        }
        if let Some(t) = &self.time {
            if !(t.t_max > 0.0) {
                return Err(ConfigError::field("time.t_max", "must be positive"));
            }
            if let Some(ts) = &t.times {
                if ts.is_empty() || ts.windows(2).any(|w| w[1] <= w[0]) || ts.iter().any(|x| *x <= 0.0 || *x > t.t_max) {
                    return Err(ConfigError::field("time.times", "must be increasing and inside (0, t_max]"));
                }
            }
        }
        for (i, c) in self.checks.iter().enumerate() {
            self.check_requirements(c).map_err(|m| ConfigError::field(format!("checks[{i}]"), m))?;
        }
        Ok(())
    }

    fn check_requirements(&self, c: &CheckSpec) -> Result<(), String> {
        use CheckSpec::*;
        let model = self.model.as_ref().map(|m| m.id());
        let need = |ids: &[&str]| -> Result<(), String> {
            match model {
                Some(m) if ids.contains(&m) => Ok(()),
                _ => Err(format!("check `{}` needs model {}", c.name(), ids.join(" or "))),
            }
        };
        let need_k = || self.kgrid.as_ref().map(|_| ()).ok_or_else(|| format!("check `{}` needs [kgrid]", c.name()));
        let need_t = || self.time.as_ref().map(|_| ()).ok_or_else(|| format!("check `{}` needs [time]", c.name()));
        match c {
            Unitarity => {
                need(&["model2x2", "nxn", "krein"])?;
                need_k()?;
                need_t()
            }
            UnitaritySuite { .. } | AdjugateContraction { .. } | Rotation { .. } | InstructiveJ0 { .. } => Ok(()),
            WkbBernstein { .. } | Oscillatory { .. } | HHalfEquivalence { .. } | ExpMap { .. } | UnimodularExp { .. } => Ok(()),
            TraceFormula | WeakL1 { .. } => {
                need(&["model2x2"])?;
                need_k()?;
                need_t()
            }
            LowerBoundImaginary { .. } => {
                need(&["model2x2"])?;
                need_t()
            }
            ComplexKExpansion { .. } => {
                need(&["model2x2", "nxn"])?;
                need_t()
            }
            DeterminantFlow { .. } | DiagonalLimit { .. } | DegeneratePair { .. } | ColumnTail { .. } => {
                need(&["model2x2", "nxn"])?;
                need_k()?;
                need_t()
            }
            Plancherel | TransportLimit { .. } => {
                need(&["transport"])?;
                need_k()?;
                need_t()
            }
            CorrectedLimit { .. } | SobolevGrowth { .. } => {
                need(&["circle_schrodinger"])?;
                need_k()?;
                need_t()
            }
            Approximation { .. } => {
                need(&["circle_schrodinger"])?;
                need_t()
            }
            ShortrangeSobolev { .. } | SnLp { .. } => {
                need(&["shortrange"])?;
                need_k()?;
                need_t()
            }
            Analyticity { .. } | MuL2 { .. } | L1Loc { .. } => {
                need(&["shortrange"])?;
                need_t()
            }
            HalflineLocalization { .. } => need(&["halfline_transport"]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema_version = 1
name = "free"
[model]
kind = "model2x2"
q = { kind = "zero" }
[kgrid]
kind = "symmetric"
k_max = 5.0
dk = 0.5
[time]
t_max = 2.0
[[checks]]
check = "trace_formula"
"#;

    #[test]
    fn round_trips_through_toml() {
        let cfg = ScenarioConfig::from_toml(MINIMAL).unwrap();
        let again = ScenarioConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn unknown_field_is_rejected_with_its_path() {
        let bad = MINIMAL.replace("dk = 0.5", "dk = 0.5\nstep = 1");
        let err = ScenarioConfig::from_toml(&bad).unwrap_err().to_string();
        assert!(err.contains("kgrid") && err.contains("step"), "{err}");
    }

    #[test]
    fn missing_gamma_names_the_field() {
        let text = r#"
schema_version = 1
name = "sr"
[model]
kind = "shortrange"
v = { kind = "power_decay", amp = [1.0, 0.0], power = 0.8 }
alpha = 0.25
n_max = 8
[[checks]]
check = "analyticity"
k = 1.0
l_list = [2, 3]
"#;
        let err = ScenarioConfig::from_toml(text).unwrap_err().to_string();
        assert!(err.contains("model") && err.contains("gamma"), "{err}");
    }

    #[test]
    fn checks_demand_their_model() {
        let bad = MINIMAL.replace("check = \"trace_formula\"", "check = \"plancherel\"");
        let err = ScenarioConfig::from_toml(&bad).unwrap_err().to_string();
        assert!(err.contains("checks[0]") && err.contains("transport"), "{err}");
    }

    #[test]
    fn wrong_schema_version() {
        let bad = MINIMAL.replace("schema_version = 1", "schema_version = 7");
        assert!(ScenarioConfig::from_toml(&bad).unwrap_err().to_string().starts_with("schema_version"));
    }
}
