//! Experiment configuration files.
//!
//! A config is TOML (or JSON when the file ends in `.json`) with the blocks
//! `market`, `strategy`, optional `alternative`, `interpretation`, `run` and
//! `output`. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analytics::critical_threshold;
use crate::error::Error;
use crate::market::{AllocationStrategy, Interpretation, MarketParams};

/// Strategy block. `critical-threshold` resolves to `threshold` at the
/// market's critical cutoff when the config is loaded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StrategySpec {
    Constant {
        fraction: f64,
    },
    Threshold {
        cutoff: f64,
    },
    CriticalThreshold,
    StepTable {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
    ExpDecomposable {
        theta: f64,
        scale: f64,
    },
}

impl StrategySpec {
    fn resolve(&self, params: &MarketParams) -> crate::error::Result<AllocationStrategy> {
        match self {
            StrategySpec::Constant { fraction } => AllocationStrategy::constant(*fraction),
            StrategySpec::Threshold { cutoff } => AllocationStrategy::threshold(*cutoff),
            StrategySpec::CriticalThreshold => {
                AllocationStrategy::threshold(critical_threshold(params))
            }
            StrategySpec::StepTable {
                breakpoints,
                values,
            } => AllocationStrategy::step_table(breakpoints.clone(), values.clone()),
            StrategySpec::ExpDecomposable { theta, scale } => {
                AllocationStrategy::exp_decomposable(*theta, *scale)
            }
        }
    }

    fn from_strategy(s: &AllocationStrategy) -> Self {
        match s.clone() {
            AllocationStrategy::Constant { fraction } => StrategySpec::Constant { fraction },
            AllocationStrategy::Threshold { cutoff } => StrategySpec::Threshold { cutoff },
            AllocationStrategy::StepTable {
                breakpoints,
                values,
            } => StrategySpec::StepTable {
                breakpoints,
                values,
            },
            AllocationStrategy::ExpDecomposable { theta, scale } => {
                StrategySpec::ExpDecomposable { theta, scale }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub n_samples: usize,
    pub seed: u64,
    /// Coarsest grid of the residual study.
    pub grid_steps: usize,
    /// Refinement factors applied to the coarse grid; 1 keeps it.
    pub refinement_levels: Vec<usize>,
    pub n_paths: usize,
    pub n_candidates: usize,
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n_samples: 100_000,
            seed: 42,
            grid_steps: 256,
            refinement_levels: vec![1, 4, 16],
            n_paths: 100,
            n_candidates: 100,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: PathBuf::from("out"),
            formats: vec![OutputFormat::Csv, OutputFormat::Json],
        }
    }
}

impl OutputConfig {
    pub fn wants(&self, format: OutputFormat) -> bool {
        self.formats.contains(&format)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub market: MarketParams,
    pub strategy: StrategySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alternative: Option<StrategySpec>,
    pub interpretation: Interpretation,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Scalar overrides from the command line; flags win over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub n_samples: Option<usize>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

/// A validated config with its strategies resolved.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub config: ExperimentConfig,
    pub strategy: AllocationStrategy,
    pub alternative: Option<AllocationStrategy>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl From<Error> for ConfigError {
    fn from(e: Error) -> Self {
        ConfigError::Invalid(e.to_string())
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn from_json_str(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let is_json = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let parsed = if is_json {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        };
        parsed.map_err(|message| ConfigError::Parse {
            path: path.to_path_buf(),
            message,
        })
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.run.seed = seed;
        }
        if let Some(n) = o.n_samples {
            self.run.n_samples = n;
        }
        if let Some(dir) = &o.out {
            self.output.directory = dir.clone();
        }
        if let Some(w) = o.workers {
            self.run.workers = w;
        }
    }

    /// Validates every block and replaces `critical-threshold` by its cutoff.
    pub fn resolve(mut self) -> Result<ResolvedConfig, ConfigError> {
        let strategy = self.strategy.resolve(&self.market)?;
        self.interpretation.check_strategy(&strategy)?;
        let alternative = match &self.alternative {
            Some(spec) => {
                let alt = spec.resolve(&self.market)?;
                self.interpretation.check_strategy(&alt)?;
                Some(alt)
            }
            None => None,
        };
        let run = &self.run;
        if run.n_samples < 2 {
            return Err(ConfigError::Invalid(format!(
                "run.n_samples must be at least 2, got {}",
                run.n_samples
            )));
        }
        if run.grid_steps == 0 {
            return Err(ConfigError::Invalid(
                "run.grid_steps must be positive".into(),
            ));
        }
        if run.refinement_levels.is_empty() || run.refinement_levels.contains(&0) {
            return Err(ConfigError::Invalid(
                "run.refinement_levels must be non-empty positive factors".into(),
            ));
        }
        if run.n_paths == 0 {
            return Err(ConfigError::Invalid("run.n_paths must be positive".into()));
        }
        if run.workers == 0 {
            return Err(ConfigError::Invalid("run.workers must be positive".into()));
        }
        self.strategy = StrategySpec::from_strategy(&strategy);
        self.alternative = alternative.as_ref().map(StrategySpec::from_strategy);
        Ok(ResolvedConfig {
            config: self,
            strategy,
            alternative,
        })
    }
}
