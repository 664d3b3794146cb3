use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::drives::SchemeFamily;
use crate::error::{AmpError, Result};
use crate::evolve::EvolutionConfig;
use crate::problem::{DifficultyEnsemble, ProblemSet};

/// Overrides the output directory.
pub const ENV_OUT_DIR: &str = "AMPSIM_OUT_DIR";
/// Overrides the worker thread count.
pub const ENV_THREADS: &str = "AMPSIM_THREADS";

/// A scheme given by name (default parameters) or as a full table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SchemeSpec {
    Name(String),
    Family(SchemeFamily),
}

impl SchemeSpec {
    pub fn family(&self) -> Result<SchemeFamily> {
        match self {
            SchemeSpec::Name(name) => SchemeFamily::from_name(name),
            SchemeSpec::Family(f) => Ok(f.clone()),
        }
    }
}

/// Everything needed to reproduce a study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub ensemble: DifficultyEnsemble,
    /// Names of the ensemble sets to run; empty runs all of them.
    pub sets: Vec<String>,
    pub schemes: Vec<SchemeSpec>,
    /// Inclusive `[min, max]` spin counts.
    pub n_range: (usize, usize),
    pub draws: usize,
    pub seed: u64,
    pub evolution: EvolutionConfig,
    pub out_dir: PathBuf,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            ensemble: DifficultyEnsemble::default(),
            sets: Vec::new(),
            schemes: Vec::new(),
            n_range: (5, 12),
            draws: 200,
            seed: 0,
            evolution: EvolutionConfig::default(),
            out_dir: PathBuf::from("results"),
            threads: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| AmpError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| AmpError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| AmpError::Config(e.to_string()))
    }

    /// Apply the output-directory and thread-count environment overrides.
    pub fn apply_env(&mut self) -> Result<()> {
        self.apply_overrides(std::env::var(ENV_OUT_DIR).ok(), std::env::var(ENV_THREADS).ok())
    }

    pub fn apply_overrides(&mut self, out_dir: Option<String>, threads: Option<String>) -> Result<()> {
        if let Some(dir) = out_dir.filter(|d| !d.is_empty()) {
            self.out_dir = PathBuf::from(dir);
        }
        if let Some(t) = threads.filter(|t| !t.is_empty()) {
            let t: usize = t
                .parse()
                .map_err(|_| AmpError::Config(format!("{ENV_THREADS} must be a positive integer, got '{t}'")))?;
            if t == 0 {
                return Err(AmpError::Config(format!("{ENV_THREADS} must be >= 1")));
            }
            self.threads = Some(t);
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.n_range;
        if lo < 2 || hi < lo {
            return Err(AmpError::Config(format!("n_range [{lo}, {hi}] must satisfy 2 <= min <= max")));
        }
        if self.draws == 0 {
            return Err(AmpError::Config("draws must be >= 1".into()));
        }
        self.evolution.validate().map_err(|e| AmpError::Config(e.to_string()))?;
        self.selected_sets()?;
        self.families()?;
        Ok(())
    }

    pub fn sizes(&self) -> Vec<usize> {
        (self.n_range.0..=self.n_range.1).collect()
    }

    pub fn selected_sets(&self) -> Result<Vec<ProblemSet>> {
        if self.sets.is_empty() {
            return Ok(self.ensemble.sets.clone());
        }
        self.sets.iter().map(|k| self.ensemble.resolve(k)).collect()
    }

    pub fn families(&self) -> Result<Vec<SchemeFamily>> {
        self.schemes.iter().map(SchemeSpec::family).collect()
    }
}

/// Size the global worker pool. Only the first call takes effect.
pub fn configure_threads(threads: Option<usize>) {
    if let Some(t) = threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
}
