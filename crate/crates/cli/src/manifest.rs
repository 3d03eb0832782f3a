//! The pipeline manifest: one JSON config file holding paths, component
//! configs, and the global seed every stochastic component derives its
//! substream from.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use gaze_affect::dataset::SplitSpec;
use gaze_affect::error::{Error, Result};
use gaze_affect::net::{GridSpec, ModelConfig, TrainConfig};
use gaze_affect::pipeline::PipelineConfig;
use gaze_affect::rng::substream_seed;
use gaze_affect::synth::SynthConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ManifestPaths {
    pub sessions: PathBuf,
    pub landmarks: PathBuf,
    pub ratings: PathBuf,
    pub out: PathBuf,
}

impl Default for ManifestPaths {
    fn default() -> Self {
        Self {
            sessions: PathBuf::from("data/sessions"),
            landmarks: PathBuf::from("data/landmarks"),
            ratings: PathBuf::from("data/ratings.csv"),
            out: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct PipelineManifest {
    pub seed: u64,
    /// Overrides the derived training substream; leaves every other
    /// component's stream (and therefore the feature files) untouched.
    pub train_seed: Option<u64>,
    pub paths: ManifestPaths,
    pub pipeline: PipelineConfig,
    pub synth: SynthConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub split: SplitSpec,
    pub grid: GridSpec,
}

impl PipelineManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let body = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let manifest: PipelineManifest =
            serde_json::from_str(&body).map_err(|e| Error::Json {
                path: path.display().to_string(),
                source: e,
            })?;
        Ok(manifest)
    }

    /// Component configs with their seeds rebased onto named substreams
    /// of the manifest seed.
    pub fn effective_synth(&self) -> SynthConfig {
        SynthConfig {
            seed: substream_seed(self.seed, "synth"),
            ..self.synth
        }
    }

    pub fn effective_split(&self) -> SplitSpec {
        SplitSpec {
            seed: substream_seed(self.seed, "split"),
            ..self.split
        }
    }

    pub fn effective_train(&self) -> TrainConfig {
        TrainConfig {
            seed: self
                .train_seed
                .unwrap_or_else(|| substream_seed(self.seed, "train")),
            ..self.train
        }
    }

    pub fn svm_seed(&self) -> u64 {
        substream_seed(self.seed, "svm")
    }

    pub fn features_path(&self) -> PathBuf {
        self.paths.out.join("features.csv")
    }
}

/// Table 3-style feature-set names mapped onto the branch switches.
pub fn feature_set(name: &str, base: &ModelConfig) -> Result<ModelConfig> {
    let (personality, stimulus, environment) = match name {
        "eye" => (false, false, true),
        "eye-no-env" => (false, false, false),
        "eye+personality" => (true, false, true),
        "eye+stimulus" => (false, true, true),
        "eye+personality+stimulus" => (true, true, true),
        other => return Err(Error::UnknownLabel(other.to_string())),
    };
    Ok(ModelConfig {
        include_personality: personality,
        include_stimulus: stimulus,
        include_environment: environment,
        ..*base
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse_from_empty_object() {
        let m: PipelineManifest = serde_json::from_str("{}").unwrap();
        assert_eq!(m.seed, 0);
        assert_eq!(m.split.train_fraction, 0.64);
        assert_eq!(m.train.patience, 10);
    }

    #[test]
    fn component_seeds_are_distinct_substreams() {
        let m = PipelineManifest {
            seed: 42,
            ..Default::default()
        };
        let synth = m.effective_synth().seed;
        let split = m.effective_split().seed;
        let train = m.effective_train().seed;
        assert_ne!(synth, split);
        assert_ne!(split, train);
        assert_ne!(synth, train);
    }

    #[test]
    fn train_seed_override_leaves_synth_alone() {
        let base = PipelineManifest {
            seed: 42,
            ..Default::default()
        };
        let overridden = PipelineManifest {
            train_seed: Some(7),
            ..base.clone()
        };
        assert_eq!(
            base.effective_synth().seed,
            overridden.effective_synth().seed
        );
        assert_ne!(
            base.effective_train().seed,
            overridden.effective_train().seed
        );
    }

    #[test]
    fn feature_sets_map_to_switches() {
        let base = ModelConfig::default();
        let eye = feature_set("eye", &base).unwrap();
        assert!(!eye.include_personality && !eye.include_stimulus && eye.include_environment);
        let no_env = feature_set("eye-no-env", &base).unwrap();
        assert!(!no_env.include_environment);
        let full = feature_set("eye+personality+stimulus", &base).unwrap();
        assert!(full.include_personality && full.include_stimulus && full.include_environment);
        assert!(feature_set("everything", &base).is_err());
    }
}
