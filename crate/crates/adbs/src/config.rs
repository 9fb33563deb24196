//! Run configuration files.
//!
//! A run is described by a flat TOML file with typed keys; unknown keys
//! are rejected so typos cannot silently fall back to defaults, and every
//! missing key takes the documented default. The same file drives all
//! subcommands. See the repository README for the full key reference.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{self, FscilStream, SyntheticSpec};
use crate::embedding::FeatureExtractor;
use crate::error::{Error, Result};
use crate::protocol::{Ablation, IncrementSpec, SessionSpec, TrainConfig};

/// Which feature extractor a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractorKind {
    Identity,
    RandomProjection,
    TrainableLinear,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("adbs-out")
}
fn default_num_classes() -> usize {
    18
}
fn default_feature_dim() -> usize {
    16
}
fn default_samples_per_base_class() -> usize {
    100
}
fn default_test_per_class() -> usize {
    20
}
fn default_center_separation() -> f64 {
    1.0
}
fn default_within_class_std() -> f64 {
    0.35
}
fn default_std_spread() -> f64 {
    0.0
}
fn default_center_concentration() -> f64 {
    0.0
}
fn default_novel_overlap() -> f64 {
    0.0
}
fn default_base_classes() -> usize {
    10
}
fn default_num_sessions() -> usize {
    4
}
fn default_n_way() -> usize {
    2
}
fn default_k_shot() -> usize {
    5
}
fn default_extractor() -> ExtractorKind {
    ExtractorKind::Identity
}
fn default_extractor_output_dim() -> usize {
    16
}
fn default_ablation() -> Ablation {
    Ablation::AdbIc
}
fn default_alpha() -> f64 {
    0.05
}
fn default_temperature() -> f64 {
    16.0
}
fn default_base_epochs() -> usize {
    10
}
fn default_finetune_epochs() -> usize {
    10
}
fn default_base_lr() -> f64 {
    0.05
}
fn default_boundary_lr() -> f64 {
    0.05
}
fn default_clamp_floor() -> f64 {
    1e-3
}
fn default_batch_size() -> usize {
    32
}
fn default_verify_instances() -> usize {
    1000
}
fn default_grad_check_cases() -> usize {
    100
}
fn default_grad_check_rel_tol() -> f64 {
    1e-4
}
fn default_grad_check_abs_tol() -> f64 {
    1e-6
}
fn default_ablate_seeds() -> usize {
    20
}

/// Everything a run needs, in one flat file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; all randomness (data, batching, initialization)
    /// derives from it through named sub-streams.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,

    /// Optional feature CSV replacing the synthetic generator.
    #[serde(default)]
    pub feature_csv: Option<PathBuf>,
    #[serde(default = "default_num_classes")]
    pub num_classes: usize,
    #[serde(default = "default_feature_dim")]
    pub feature_dim: usize,
    #[serde(default = "default_samples_per_base_class")]
    pub samples_per_base_class: usize,
    #[serde(default = "default_test_per_class")]
    pub test_per_class: usize,
    #[serde(default = "default_center_separation")]
    pub center_separation: f64,
    #[serde(default = "default_within_class_std")]
    pub within_class_std: f64,
    /// Per-class spread heterogeneity of the generator (0 = identical
    /// spreads).
    #[serde(default = "default_std_spread")]
    pub std_spread: f64,
    /// Cone crowding of the class centers (0 = isotropic directions).
    #[serde(default = "default_center_concentration")]
    pub center_concentration: f64,
    /// How close novel-class centers land to earlier classes (0 =
    /// placed like base classes).
    #[serde(default = "default_novel_overlap")]
    pub novel_overlap: f64,

    #[serde(default = "default_base_classes")]
    pub base_classes: usize,
    #[serde(default = "default_num_sessions")]
    pub num_sessions: usize,
    #[serde(default = "default_n_way")]
    pub n_way: usize,
    #[serde(default = "default_k_shot")]
    pub k_shot: usize,
    /// Assign classes to sessions in seeded random order instead of
    /// ascending label order.
    #[serde(default)]
    pub shuffle_classes: bool,

    #[serde(default = "default_extractor")]
    pub extractor: ExtractorKind,
    /// Output dimension of the projection extractors.
    #[serde(default = "default_extractor_output_dim")]
    pub extractor_output_dim: usize,

    #[serde(default = "default_ablation")]
    pub ablation: Ablation,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_base_epochs")]
    pub base_epochs: usize,
    #[serde(default = "default_finetune_epochs")]
    pub finetune_epochs: usize,
    #[serde(default = "default_base_lr")]
    pub base_lr: f64,
    #[serde(default = "default_boundary_lr")]
    pub boundary_lr: f64,
    #[serde(default)]
    pub momentum: f64,
    #[serde(default = "default_clamp_floor")]
    pub clamp_floor: f64,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,

    /// Instances for the verify subcommand's probability sweep.
    #[serde(default = "default_verify_instances")]
    pub verify_instances: usize,
    #[serde(default = "default_grad_check_cases")]
    pub grad_check_cases: usize,
    #[serde(default = "default_grad_check_rel_tol")]
    pub grad_check_rel_tol: f64,
    #[serde(default = "default_grad_check_abs_tol")]
    pub grad_check_abs_tol: f64,

    /// Number of paired seeds for the ablate subcommand.
    #[serde(default = "default_ablate_seeds")]
    pub ablate_seeds: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty config must deserialize to defaults")
    }
}

impl RunConfig {
    /// Parses a TOML string, rejecting unknown keys by name.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads and validates a configuration file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(&path)?;
        Self::from_toml(&text)
    }

    /// Applies command-line overrides.
    pub fn with_overrides(mut self, seed: Option<u64>, out: Option<PathBuf>) -> Self {
        if let Some(seed) = seed {
            self.seed = seed;
        }
        if let Some(out) = out {
            self.out_dir = out;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.train_config().validate()?;
        self.session_spec().validate()?;
        if self.feature_csv.is_none() {
            self.synthetic_spec().validate()?;
        }
        if self.extractor != ExtractorKind::Identity && self.extractor_output_dim == 0 {
            return Err(Error::Config("extractor_output_dim must be >= 1".into()));
        }
        Ok(())
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            alpha: self.alpha,
            temperature: self.temperature,
            base_epochs: self.base_epochs,
            finetune_epochs: self.finetune_epochs,
            base_lr: self.base_lr,
            boundary_lr: self.boundary_lr,
            momentum: self.momentum,
            clamp_floor: self.clamp_floor,
            batch_size: self.batch_size,
            ablation: self.ablation,
            seed: self.seed,
        }
    }

    pub fn session_spec(&self) -> SessionSpec {
        SessionSpec {
            base_class_count: self.base_classes,
            sessions: vec![
                IncrementSpec {
                    n_way: self.n_way,
                    k_shot: self.k_shot,
                };
                self.num_sessions
            ],
            seed: self.seed,
            shuffle_assignment: self.shuffle_classes,
        }
    }

    pub fn synthetic_spec(&self) -> SyntheticSpec {
        SyntheticSpec {
            num_classes: self.num_classes,
            dim: self.feature_dim,
            samples_per_base_class: self.samples_per_base_class,
            test_per_class: self.test_per_class,
            center_separation: self.center_separation,
            within_class_std: self.within_class_std,
            std_spread: self.std_spread,
            center_concentration: self.center_concentration,
            novel_overlap: self.novel_overlap,
            seed: self.seed,
        }
    }

    /// Builds the configured stream: the feature CSV when given, the
    /// synthetic generator otherwise.
    pub fn build_stream(&self) -> Result<FscilStream> {
        match &self.feature_csv {
            Some(path) => data::load_feature_csv(path, &self.session_spec()),
            None => data::generate_synthetic(&self.synthetic_spec(), &self.session_spec()),
        }
    }

    /// Builds the configured extractor for a stream of `input_dim` raw
    /// coordinates.
    pub fn build_extractor(&self, input_dim: usize) -> Result<FeatureExtractor> {
        match self.extractor {
            ExtractorKind::Identity => FeatureExtractor::identity(input_dim),
            ExtractorKind::RandomProjection => {
                FeatureExtractor::random_projection(input_dim, self.extractor_output_dim, self.seed)
            }
            ExtractorKind::TrainableLinear => {
                FeatureExtractor::trainable_linear(input_dim, self.extractor_output_dim, self.seed)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_takes_all_defaults() {
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg.base_classes, 10);
        assert_eq!(cfg.num_sessions, 4);
        assert_eq!(cfg.alpha, 0.05);
        assert_eq!(cfg.ablation, Ablation::AdbIc);
        assert_eq!(cfg.extractor, ExtractorKind::Identity);
        assert!(cfg.feature_csv.is_none());
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let err = RunConfig::from_toml("alhpa = 0.1\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("alhpa"), "message should name the key: {msg}");
    }

    #[test]
    fn type_errors_are_config_errors() {
        assert!(matches!(
            RunConfig::from_toml("alpha = \"high\"\n"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            RunConfig::from_toml("ablation = \"adbic\"\n"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn session_spec_mirrors_the_layout_keys() {
        let cfg =
            RunConfig::from_toml("base_classes = 5\nnum_sessions = 2\nn_way = 3\nk_shot = 1\n")
                .unwrap();
        let spec = cfg.session_spec();
        assert_eq!(spec.base_class_count, 5);
        assert_eq!(spec.sessions.len(), 2);
        assert_eq!(spec.sessions[0].n_way, 3);
        assert_eq!(spec.total_classes(), 11);
    }

    #[test]
    fn invalid_values_fail_validation() {
        assert!(RunConfig::from_toml("temperature = 0.0\n").is_err());
        assert!(RunConfig::from_toml("test_per_class = 0\n").is_err());
        assert!(RunConfig::from_toml("momentum = 1.5\n").is_err());
    }

    #[test]
    fn overrides_replace_seed_and_out_dir() {
        let cfg = RunConfig::from_toml("seed = 1\n")
            .unwrap()
            .with_overrides(Some(9), Some(PathBuf::from("elsewhere")));
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.out_dir, PathBuf::from("elsewhere"));
    }
}
