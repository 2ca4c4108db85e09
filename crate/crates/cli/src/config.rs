use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use porder::baselines::{DEFAULT_DELTA, DEFAULT_TAU};
use porder::estimation::DEFAULT_ALPHA;
use porder::executor::{ExecOptions, Mode};
use porder::sampler::SamplerConfig;
use porder::trace::DEFAULT_MAX_ATTEMPTS;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisConfig {
    pub target_ip_cov: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_attempts")]
    pub max_attempts: usize,
    /// Extra uniform linear extensions appended until the set has this many
    /// traces.
    #[serde(default)]
    pub min_traces: usize,
}

fn default_attempts() -> usize {
    DEFAULT_MAX_ATTEMPTS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    pub alpha: Vec<f64>,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            alpha: vec![DEFAULT_ALPHA],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub tau: f64,
    pub delta: f64,
    pub qj: bool,
    pub qj_jump_p: Option<f64>,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            tau: DEFAULT_TAU,
            delta: DEFAULT_DELTA,
            qj: false,
            qj_jump_p: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExecuteConfig {
    pub scenario: PathBuf,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default)]
    pub options: ExecOptions,
}

fn default_mode() -> Mode {
    Mode::Expert
}

/// One experiment. Relative paths resolve against the config file's
/// directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// Ground-truth graph; needed by `simulate` and `evaluate`.
    #[serde(default)]
    pub graph: Option<PathBuf>,
    /// Observed traces; otherwise the run directory's `traces.json`.
    #[serde(default)]
    pub traces: Option<PathBuf>,
    #[serde(default)]
    pub synthesis: Option<SynthesisConfig>,
    #[serde(default)]
    pub sampler: SamplerConfig,
    /// One chain per seed; defaults to the sampler seed.
    #[serde(default)]
    pub chain_seeds: Vec<u64>,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub baseline: BaselineConfig,
    #[serde(default)]
    pub execute: Option<ExecuteConfig>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("runs")
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        config.validate()?;
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.graph.as_mut().map(fix);
        self.traces.as_mut().map(fix);
        if let Some(exec) = self.execute.as_mut() {
            fix(&mut exec.scenario);
        }
        fix(&mut self.out);
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return bad(format!("run name `{}` must be a plain non-empty name", self.name));
        }
        for path in [&self.graph, &self.traces].into_iter().flatten() {
            if !path.is_file() {
                return bad(format!("{} does not exist", path.display()));
            }
        }
        if let Some(exec) = &self.execute {
            if !exec.scenario.is_file() {
                return bad(format!("{} does not exist", exec.scenario.display()));
            }
        }
        if let Some(syn) = &self.synthesis {
            if !(syn.target_ip_cov > 0.0 && syn.target_ip_cov <= 1.0) {
                return bad(format!("target_ip_cov {} outside (0, 1]", syn.target_ip_cov));
            }
            if self.graph.is_none() {
                return bad("synthesis needs a ground-truth graph".into());
            }
        }
        if self.estimator.alpha.is_empty() {
            return bad("estimator.alpha must list at least one threshold".into());
        }
        if let Some(a) = self.estimator.alpha.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return bad(format!("alpha {a} outside (0, 1)"));
        }
        for (name, v) in [("tau", self.baseline.tau), ("delta", self.baseline.delta)] {
            if !(v > 0.0 && v < 1.0) {
                return bad(format!("baseline.{name} {v} outside (0, 1)"));
            }
        }
        self.sampler
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn seeds(&self) -> Vec<u64> {
        if self.chain_seeds.is_empty() {
            vec![self.sampler.seed]
        } else {
            self.chain_seeds.clone()
        }
    }

    /// Replaces every seed: chains, synthesis and execution.
    pub fn override_seed(&mut self, seed: u64) {
        self.sampler.seed = seed;
        self.chain_seeds = vec![seed];
        if let Some(syn) = self.synthesis.as_mut() {
            syn.seed = seed;
        }
        if let Some(exec) = self.execute.as_mut() {
            exec.options.seed = seed;
        }
    }

    pub fn run_dir(&self) -> PathBuf {
        self.out.join(&self.name)
    }
}
