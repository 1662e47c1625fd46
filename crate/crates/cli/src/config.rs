use std::fmt;
use std::path::{Path, PathBuf};

use matchkit_scenarios::cr::CrConfig;
use matchkit_scenarios::d2d::D2dConfig;
use matchkit_scenarios::hetnet::HetNetConfig;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Cr,
    Hetnet,
    D2d,
    Dynamic,
}

impl ScenarioKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::Cr => "cr",
            ScenarioKind::Hetnet => "hetnet",
            ScenarioKind::D2d => "d2d",
            ScenarioKind::Dynamic => "dynamic",
        }
    }

    pub fn methods(self) -> &'static [Method] {
        match self {
            ScenarioKind::Cr => &[Method::ModifiedDa, Method::ClassicalDa, Method::Random],
            ScenarioKind::Hetnet => &[Method::MatchingWithTransfers, Method::BestNeighbor],
            ScenarioKind::D2d => &[Method::Truthful, Method::Cheat],
            ScenarioKind::Dynamic => &[Method::Canonical, Method::Iterative],
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ModifiedDa,
    ClassicalDa,
    Random,
    MatchingWithTransfers,
    BestNeighbor,
    Truthful,
    Cheat,
    Canonical,
    Iterative,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ModifiedDa => "modified_da",
            Method::ClassicalDa => "classical_da",
            Method::Random => "random",
            Method::MatchingWithTransfers => "matching_with_transfers",
            Method::BestNeighbor => "best_neighbor",
            Method::Truthful => "truthful",
            Method::Cheat => "cheat",
            Method::Canonical => "canonical",
            Method::Iterative => "iterative",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    List(Vec<u64>),
    Range { base_seed: u64, n_runs: usize },
}

impl Seeds {
    /// Run `i` of a range uses `base_seed + i`, wrapping at `u64::MAX`.
    pub fn expand(&self) -> Vec<u64> {
        match self {
            Seeds::List(v) => v.clone(),
            Seeds::Range { base_seed, n_runs } => (0..*n_runs as u64).map(|i| base_seed.wrapping_add(i)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Seeds::List(v) => v.len(),
            Seeds::Range { n_runs, .. } => *n_runs,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds::Range { base_seed: 0, n_runs: 1 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Output {
    pub path: Option<PathBuf>,
    pub format: Format,
}

/// Which D2D quantity fills the `primary_metric` column.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum D2dMetric {
    #[default]
    DuUtility,
    SystemUtility,
}

/// Markov activity on top of the `cr` instance parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicConfig {
    pub epochs: usize,
    pub p_stay_idle: f64,
    pub p_stay_busy: f64,
    pub gain_rho: f64,
    pub fading_sigma_db: f64,
    pub max_iterations: usize,
}

impl Default for DynamicConfig {
    fn default() -> Self {
        DynamicConfig {
            epochs: 20,
            p_stay_idle: 0.9,
            p_stay_busy: 0.8,
            gain_rho: 0.9,
            fading_sigma_db: 3.0,
            max_iterations: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioKind,
    /// Empty means every method of the scenario.
    #[serde(default)]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub seeds: Seeds,
    #[serde(default)]
    pub output: Output,
    /// Off by default so that tables are reproducible byte for byte.
    #[serde(default)]
    pub record_wall_time: bool,
    #[serde(default)]
    pub d2d_metric: D2dMetric,
    #[serde(default)]
    pub cr: CrConfig,
    #[serde(default)]
    pub hetnet: HetNetConfig,
    #[serde(default)]
    pub d2d: D2dConfig,
    #[serde(default)]
    pub dynamic: DynamicConfig,
}

impl ExperimentConfig {
    pub fn new(scenario: ScenarioKind) -> Self {
        ExperimentConfig {
            scenario,
            methods: Vec::new(),
            seeds: Seeds::default(),
            output: Output::default(),
            record_wall_time: false,
            d2d_metric: D2dMetric::default(),
            cr: CrConfig::default(),
            hetnet: HetNetConfig::default(),
            d2d: D2dConfig::default(),
            dynamic: DynamicConfig::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn resolved_methods(&self) -> Vec<Method> {
        if self.methods.is_empty() {
            self.scenario.methods().to_vec()
        } else {
            self.methods.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(HarnessError::Config("at least one seed is required".into()));
        }
        let allowed = self.scenario.methods();
        for m in &self.methods {
            if !allowed.contains(m) {
                return Err(HarnessError::Config(format!(
                    "method {} does not apply to scenario {}",
                    m.as_str(),
                    self.scenario
                )));
            }
        }
        let resolved = self.resolved_methods();
        for (i, m) in resolved.iter().enumerate() {
            if resolved[..i].contains(m) {
                return Err(HarnessError::Config(format!("method {} listed twice", m.as_str())));
            }
        }
        let params = match self.scenario {
            ScenarioKind::Cr => self.cr.validate(),
            ScenarioKind::Hetnet => self.hetnet.validate(),
            ScenarioKind::D2d => self.d2d.validate(),
            ScenarioKind::Dynamic => self.cr.validate(),
        };
        params.map_err(|e| HarnessError::Config(e.to_string()))?;
        if self.scenario == ScenarioKind::Dynamic {
            self.validate_dynamic()?;
        }
        Ok(())
    }

    fn validate_dynamic(&self) -> Result<()> {
        let d = &self.dynamic;
        let bad = |name: &str, reason: &str| Err(HarnessError::Config(format!("dynamic.{name} {reason}")));
        if d.epochs == 0 {
            return bad("epochs", "must be at least 1");
        }
        if d.max_iterations == 0 {
            return bad("max_iterations", "must be at least 1");
        }
        for (name, p) in [("p_stay_idle", d.p_stay_idle), ("p_stay_busy", d.p_stay_busy), ("gain_rho", d.gain_rho)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(name, "must lie in [0, 1]");
            }
        }
        if !(d.fading_sigma_db >= 0.0 && d.fading_sigma_db.is_finite()) {
            return bad("fading_sigma_db", "must be finite and non-negative");
        }
        Ok(())
    }
}
