//! Declarative run configuration, read from TOML.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::InputError;
use crate::davidson::FitConfig;
use crate::dominance::{MetricSet, MetricSpec};
use crate::qtext::{Anchor, Granularity};
use crate::ufg::{DepthMode, DEFAULT_MAX_SIZE};

/// Largest method roster the ufg engine accepts by default.
pub const DEFAULT_UFG_METHOD_LIMIT: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Davidson,
    Ufg,
    Qtext,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Davidson => "davidson",
            Engine::Ufg => "ufg",
            Engine::Qtext => "qtext",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    /// Precomputed per-record metrics.
    #[default]
    Metrics,
    /// Tokens and log-probabilities; metrics are computed on ingest.
    Generations,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InputSpec {
    Path(String),
    Table {
        path: String,
        /// Prefixes instance ids as `dataset/instance` so several datasets
        /// can be concatenated without id clashes.
        #[serde(default)]
        dataset: Option<String>,
        #[serde(default)]
        kind: InputKind,
    },
}

impl InputSpec {
    pub fn path(&self) -> &str {
        match self {
            InputSpec::Path(p) | InputSpec::Table { path: p, .. } => p,
        }
    }

    pub fn dataset(&self) -> Option<&str> {
        match self {
            InputSpec::Path(_) => None,
            InputSpec::Table { dataset, .. } => dataset.as_deref(),
        }
    }

    pub fn kind(&self) -> InputKind {
        match self {
            InputSpec::Path(_) => InputKind::Metrics,
            InputSpec::Table { kind, .. } => *kind,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UfgConfig {
    /// Method roster for the partial orders; required when the data has more
    /// methods than `method_limit`.
    pub methods: Option<Vec<String>>,
    pub method_limit: usize,
    pub max_size: usize,
    pub mode: DepthMode,
}

impl Default for UfgConfig {
    fn default() -> Self {
        UfgConfig { methods: None, method_limit: DEFAULT_UFG_METHOD_LIMIT, max_size: DEFAULT_MAX_SIZE, mode: DepthMode::Weighted }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum ParamSource {
    /// The shipped tuned parameters.
    Published,
    File { path: String },
    Tune {
        ratings: String,
        #[serde(default)]
        granularity: Granularity,
        #[serde(default = "default_trials")]
        max_trials: usize,
        #[serde(default = "default_restarts")]
        restarts: usize,
        #[serde(default = "default_scale")]
        perturbation_scale: f64,
        #[serde(default)]
        anchor: Anchor,
    },
}

fn default_trials() -> usize {
    10_000
}
fn default_restarts() -> usize {
    1
}
fn default_scale() -> f64 {
    0.1
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationScope {
    /// One set of bounds over every ingested record.
    #[default]
    Pooled,
    /// Separate bounds per input table.
    PerInput,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QTextConfig {
    pub params: ParamSource,
    pub normalization: NormalizationScope,
}

impl Default for QTextConfig {
    fn default() -> Self {
        QTextConfig { params: ParamSource::Published, normalization: NormalizationScope::Pooled }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgreementConfig {
    pub top_k: usize,
}

impl Default for AgreementConfig {
    fn default() -> Self {
        AgreementConfig { top_k: 5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub inputs: Vec<InputSpec>,
    /// Metrics used for dominance; defaults to coherence, diversity and
    /// perplexity.
    pub metrics: Option<Vec<MetricSpec>>,
    /// Absolute tolerance under which metric values count as equal.
    pub eq_tolerance: f64,
    pub engines: BTreeSet<Engine>,
    pub seed: u64,
    pub out_dir: String,
    pub davidson: FitConfig,
    pub ufg: UfgConfig,
    pub qtext: QTextConfig,
    pub agreement: AgreementConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            inputs: Vec::new(),
            metrics: None,
            eq_tolerance: 0.0,
            engines: [Engine::Davidson, Engine::Ufg, Engine::Qtext].into_iter().collect(),
            seed: 0,
            out_dir: "out".into(),
            davidson: FitConfig::default(),
            ufg: UfgConfig::default(),
            qtext: QTextConfig::default(),
            agreement: AgreementConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig, InputError> {
        let cfg = RunConfig::parse(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses without validating, for callers that fill in fields first.
    pub fn parse(text: &str) -> Result<RunConfig, InputError> {
        toml::from_str(text).map_err(|e| InputError::Config(e.to_string()))
    }

    /// Reads and parses a config file. Validation happens in [`super::run`].
    pub fn load(path: &Path) -> Result<RunConfig, InputError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| InputError::Io { path: path.display().to_string(), message: e.to_string() })?;
        RunConfig::parse(&text)
    }

    pub fn metric_set(&self) -> Result<MetricSet, InputError> {
        match &self.metrics {
            None => Ok(MetricSet::text_default()),
            Some(specs) => MetricSet::new(specs.clone()).map_err(|e| InputError::Config(e.to_string())),
        }
    }

    pub fn validate(&self) -> Result<(), InputError> {
        let fail = |m: String| Err(InputError::Config(m));
        if self.inputs.is_empty() {
            return fail("no inputs configured".into());
        }
        if self.engines.is_empty() {
            return fail("no engines selected".into());
        }
        self.metric_set()?;
        if !(self.eq_tolerance >= 0.0) {
            return fail("eq_tolerance must be non-negative".into());
        }
        if let Some(methods) = &self.ufg.methods {
            if methods.len() > self.ufg.method_limit {
                return fail(format!(
                    "ufg method filter has {} methods; the limit is {}",
                    methods.len(),
                    self.ufg.method_limit
                ));
            }
            if methods.len() < 2 {
                return fail("ufg method filter needs at least two methods".into());
            }
        }
        if self.ufg.max_size < 2 {
            return fail("ufg max_size must be at least 2".into());
        }
        if self.engines.contains(&Engine::Qtext) {
            let ids: BTreeSet<&str> = self.inputs.iter().filter_map(InputSpec::dataset).collect();
            let names = self.inputs.iter().filter_map(InputSpec::dataset).count();
            if self.qtext.normalization == NormalizationScope::PerInput && (names != self.inputs.len() || ids.len() != names) {
                return fail("per-input normalization needs a distinct dataset name on every input".into());
            }
        }
        Ok(())
    }

    /// `path` resolved against the directory holding the config file.
    pub fn resolve(base: &Path, path: &str) -> PathBuf {
        let p = Path::new(path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = RunConfig::from_toml("inputs = [\"data.csv\"]\n").unwrap();
        assert_eq!(cfg.engines.len(), 3);
        assert_eq!(cfg.ufg.method_limit, 8);
        assert_eq!(cfg.qtext.params, ParamSource::Published);
        assert_eq!(cfg.metric_set().unwrap(), MetricSet::text_default());
    }

    #[test]
    fn full_config() {
        let text = r#"
            inputs = ["a.csv", { path = "b.jsonl", dataset = "wiki" }, { path = "g.csv", kind = "generations" }]
            engines = ["davidson", "qtext"]
            seed = 42
            eq_tolerance = 1e-9
            [[metrics]]
            name = "coherence"
            direction = "higher_is_better"
            [[metrics]]
            name = "perplexity"
            direction = "lower_is_better"
            [davidson]
            zero_counts = "haldane"
            [ufg]
            methods = ["a", "b", "c"]
            mode = "uniform_count"
            [qtext.params]
            source = "tune"
            ratings = "r.csv"
            granularity = "method"
            max_trials = 50
        "#;
        let cfg = RunConfig::from_toml(text).unwrap();
        assert_eq!(cfg.inputs[1].dataset(), Some("wiki"));
        assert_eq!(cfg.inputs[2].kind(), InputKind::Generations);
        assert_eq!(cfg.metric_set().unwrap().len(), 2);
        assert_eq!(cfg.ufg.mode, DepthMode::UniformCount);
        assert!(matches!(cfg.qtext.params, ParamSource::Tune { max_trials: 50, granularity: Granularity::Method, .. }));
    }

    #[test]
    fn invalid_configs() {
        assert!(RunConfig::from_toml("inputs = []").is_err());
        assert!(RunConfig::from_toml("inputs = [\"a\"]\nengines = []").is_err());
        let big: Vec<String> = (0..9).map(|i| format!("\"m{i}\"")).collect();
        let text = format!("inputs = [\"a\"]\n[ufg]\nmethods = [{}]\n", big.join(","));
        assert!(matches!(RunConfig::from_toml(&text), Err(InputError::Config(m)) if m.contains("limit")));
        assert!(RunConfig::from_toml("inputs = [\"a\"]\nbogus = 1").is_err());
        assert!(RunConfig::from_toml("inputs = [\"a\"]\n[qtext]\nnormalization = \"per_input\"").is_err());
    }
}
