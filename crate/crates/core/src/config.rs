//! File-based run configuration (TOML). Every section is optional and
//! unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::GridSpec;
use crate::datagen::DatasetSpec;
use crate::learner::LearnerParams;
use crate::metateach::MetaConfig;
use crate::planner::{ExperimentSetup, TeacherConfig, TinyInstance};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerSettings {
    pub bind: String,
    /// Directory for finished session logs; none disables persistence.
    pub log_dir: Option<PathBuf>,
    pub max_sessions: usize,
}

impl Default for ServerSettings {
    fn default() -> Self {
        Self { bind: "127.0.0.1:8080".into(), log_dir: None, max_sessions: 256 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub n_seeds: usize,
    pub dataset: DatasetSpec<f64>,
    pub learner: LearnerParams<f64>,
    pub teacher: TeacherConfig<f64>,
    pub grid: GridSpec,
    pub verify: TinyInstance<f64>,
    pub meta: MetaConfig<f64>,
    pub server: ServerSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_seeds: 10,
            dataset: DatasetSpec::default(),
            learner: LearnerParams::default(),
            teacher: TeacherConfig::default(),
            grid: GridSpec::default(),
            verify: TinyInstance::default(),
            meta: MetaConfig::default(),
            server: ServerSettings::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)
            .map_err(|e| ConfigError::Parse { path: origin.to_path_buf(), message: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml_str(&text, path)
    }

    /// Loads `path` if given, defaults otherwise.
    pub fn load_or_default(path: Option<&Path>) -> Result<Self, ConfigError> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let inv = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        self.experiment_setup().validate().map_err(|e| inv(&e))?;
        self.meta.validate().map_err(|e| inv(&e))?;
        self.verify.learner.validate().map_err(|e| inv(&e))?;
        if self.server.max_sessions == 0 {
            return Err(ConfigError::Invalid("server.max_sessions must be positive".into()));
        }
        Ok(())
    }

    pub fn experiment_setup(&self) -> ExperimentSetup<f64> {
        ExperimentSetup {
            dataset: self.dataset.clone(),
            learner: self.learner,
            teacher: self.teacher.clone(),
            grid: self.grid.clone(),
            seed: self.seed,
            n_seeds: self.n_seeds,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        let back = RunConfig::from_toml_str(&cfg.to_toml(), Path::new("x.toml")).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_file_overrides() {
        let cfg = RunConfig::from_toml_str("seed = 4\n[teacher]\nhorizon = 12\n", Path::new("x.toml")).unwrap();
        assert_eq!(cfg.seed, 4);
        assert_eq!(cfg.teacher.horizon, 12);
        assert_eq!(cfg.teacher.rollout_samples, TeacherConfig::<f64>::default().rollout_samples);
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = RunConfig::from_toml_str("seed = 1\n[teacher]\nhorizn = 3\n", Path::new("run.toml")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("run.toml") && msg.contains("line 3") && msg.contains("horizn"), "{msg}");
    }

    #[test]
    fn invalid_values_rejected() {
        let err = RunConfig::from_toml_str("[teacher]\nstage_cost_tutor = 0.5\n", Path::new("x.toml")).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid(_)), "{err}");
        let err = RunConfig::from_toml_str("[learner]\nw2_enlightened = 1.0\n", Path::new("x.toml")).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid(_)), "{err}");
    }
}
