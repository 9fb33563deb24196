//! The session engine: base training, then for each incremental session
//! prototype expansion, boundary mean-init, boundary fine-tuning, and
//! cumulative evaluation.
//!
//! Base training initializes the classifier from class prototypes (so zero
//! epochs is exactly the nearest-class-mean model) and runs mini-batch
//! descent on the classification loss plus the weighted inter-class
//! constraint. The extractor is frozen afterwards. Each incremental
//! session appends prototype columns, mean-initializes the new boundaries,
//! freezes the old ones, and fine-tunes only the new entries.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::boundary::{finetune_boundaries, ic_grads};
use crate::classifier::{self, ClassifierState};
use crate::data::{FscilStream, LabeledExample};
use crate::embedding::{FeatureExtractor, FeatureVector};
use crate::error::{Error, Result};
use crate::metrics::{self, SessionReport};
use crate::seeding::{stream_rng, Stream};

/// The three experiment arms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    /// Boundaries pinned at 1, no boundary updates anywhere: the plain
    /// prototype/NCM pipeline and the control for all comparisons.
    FixedBaseline,
    /// Adaptive boundaries without the inter-class constraint (alpha is
    /// forced to 0).
    AdbOnly,
    /// Adaptive boundaries plus the inter-class constraint.
    AdbIc,
}

impl Ablation {
    pub fn name(self) -> &'static str {
        match self {
            Ablation::FixedBaseline => "fixed_baseline",
            Ablation::AdbOnly => "adb_only",
            Ablation::AdbIc => "adb_ic",
        }
    }
}

impl std::fmt::Display for Ablation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One incremental session: `n_way` new classes with `k_shot` samples each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncrementSpec {
    pub n_way: usize,
    pub k_shot: usize,
}

/// Layout of a full run: base class count plus the incremental sessions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSpec {
    pub base_class_count: usize,
    pub sessions: Vec<IncrementSpec>,
    pub seed: u64,
    /// Assign classes to sessions in a seeded random order instead of
    /// ascending label order. Off by default.
    pub shuffle_assignment: bool,
}

impl SessionSpec {
    pub fn validate(&self) -> Result<()> {
        if self.base_class_count == 0 {
            return Err(Error::EmptyInput("base session needs >= 1 class".into()));
        }
        if self.sessions.iter().any(|s| s.n_way == 0 || s.k_shot == 0) {
            return Err(Error::EmptyInput("n_way and k_shot must be >= 1".into()));
        }
        Ok(())
    }

    /// Base classes plus all incremental classes.
    pub fn total_classes(&self) -> usize {
        self.base_class_count + self.sessions.iter().map(|s| s.n_way).sum::<usize>()
    }
}

/// All optimization hyperparameters of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Weight of the inter-class constraint in the total loss.
    pub alpha: f64,
    /// Softmax temperature applied to the cosine logits.
    pub temperature: f64,
    pub base_epochs: usize,
    pub finetune_epochs: usize,
    /// Learning rate for classifier columns and the trainable extractor.
    pub base_lr: f64,
    /// Learning rate for boundary scalars.
    pub boundary_lr: f64,
    /// SGD momentum for all parameter groups; 0 disables it.
    pub momentum: f64,
    /// Lower bound boundary scalars are clamped to after every step.
    pub clamp_floor: f64,
    pub batch_size: usize,
    pub ablation: Ablation,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            temperature: 16.0,
            base_epochs: 10,
            finetune_epochs: 10,
            base_lr: 0.05,
            boundary_lr: 0.05,
            momentum: 0.0,
            clamp_floor: 1e-3,
            batch_size: 32,
            ablation: Ablation::AdbIc,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::Config(
                "alpha must be a finite non-negative real".into(),
            ));
        }
        if !(self.temperature > 0.0) || !self.temperature.is_finite() {
            return Err(Error::Config("temperature must be positive".into()));
        }
        if !(self.base_lr >= 0.0) || !(self.boundary_lr >= 0.0) {
            return Err(Error::Config("learning rates must be non-negative".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config("momentum must lie in [0, 1)".into()));
        }
        if !(self.clamp_floor > 0.0) || !self.clamp_floor.is_finite() {
            return Err(Error::Config("clamp_floor must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        Ok(())
    }

    /// The constraint weight actually applied: the fixed baseline and the
    /// boundaries-only arm force it to zero regardless of `alpha`.
    pub fn effective_alpha(&self) -> f64 {
        match self.ablation {
            Ablation::AdbIc => self.alpha,
            _ => 0.0,
        }
    }
}

/// Seedable randomness state stored in checkpoints. Every training phase
/// derives its generator from `(master_seed, phase, session)`, so the
/// master seed alone reproduces the remaining phases of a resumed run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub master_seed: u64,
}

/// Everything needed to resume or evaluate a run after some session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionCheckpoint {
    pub classifier: ClassifierState,
    /// The (frozen) extractor the classifier was built on; stored so a
    /// reloaded checkpoint reproduces the run without outside state.
    pub extractor: FeatureExtractor,
    pub session_index: usize,
    /// External label of each classifier column, in column order.
    pub class_labels: Vec<i64>,
    pub rng_state: RngState,
}

const CHECKPOINT_FORMAT: &str = "adbs.checkpoint";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    checkpoint: SessionCheckpoint,
}

impl SessionCheckpoint {
    pub fn column_of_label(&self, label: i64) -> Option<usize> {
        self.class_labels.iter().position(|&l| l == label)
    }

    pub fn label_of_column(&self, column: usize) -> Option<i64> {
        self.class_labels.get(column).copied()
    }

    pub fn validate(&self) -> Result<()> {
        self.classifier.validate()?;
        if self.class_labels.len() != self.classifier.num_classes() {
            return Err(Error::Checkpoint(format!(
                "{} class labels for {} classifier columns",
                self.class_labels.len(),
                self.classifier.num_classes()
            )));
        }
        let mut sorted = self.class_labels.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.class_labels.len() {
            return Err(Error::Checkpoint("duplicate class labels".into()));
        }
        if self.extractor.output_dim() != self.classifier.dim() {
            return Err(Error::Checkpoint(format!(
                "extractor output dimension {} does not match classifier dimension {}",
                self.extractor.output_dim(),
                self.classifier.dim()
            )));
        }
        let max_session = self
            .classifier
            .session_of()
            .iter()
            .copied()
            .max()
            .unwrap_or(0);
        if max_session > self.session_index {
            return Err(Error::Checkpoint(format!(
                "classifier holds session {max_session} but the checkpoint is at {}",
                self.session_index
            )));
        }
        Ok(())
    }

    /// Serializes to the versioned, self-describing checkpoint file.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = CheckpointFile {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            checkpoint: self.clone(),
        };
        let json =
            serde_json::to_string_pretty(&file).map_err(|e| Error::Checkpoint(e.to_string()))?;
        std::fs::write(path, json)?;
        Ok(())
    }

    /// Loads and validates a checkpoint file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: CheckpointFile =
            serde_json::from_str(&text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if file.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!(
                "not a checkpoint file (format `{}`)",
                file.format
            )));
        }
        if file.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {} (supported: {CHECKPOINT_VERSION})",
                file.version
            )));
        }
        file.checkpoint.validate()?;
        Ok(file.checkpoint)
    }
}

fn group_by_label(
    examples: &[LabeledExample],
    extractor: &FeatureExtractor,
) -> Result<BTreeMap<i64, Vec<FeatureVector>>> {
    let mut grouped: BTreeMap<i64, Vec<FeatureVector>> = BTreeMap::new();
    for e in examples {
        grouped
            .entry(e.label)
            .or_default()
            .push(extractor.extract(&e.values)?);
    }
    Ok(grouped)
}

/// Base-session training. Initializes the classifier from class
/// prototypes with unit boundaries, then runs `base_epochs` of mini-batch
/// descent on `L_cls + alpha * L_ic` over the classifier columns, the
/// boundaries, and the extractor's trainable layer if it has one. Under
/// the fixed baseline the boundaries stay at one and only the
/// classification loss is used. The extractor is frozen on return.
pub fn train_base(
    stream: &FscilStream,
    cfg: &TrainConfig,
    extractor: FeatureExtractor,
) -> Result<SessionCheckpoint> {
    cfg.validate()?;
    stream.validate()?;
    let mut extractor = extractor;
    if extractor.input_dim() != stream.feature_dim {
        return Err(Error::ShapeMismatch {
            context: "extractor input vs stream features",
            expected: stream.feature_dim,
            actual: extractor.input_dim(),
        });
    }
    let base = &stream.base;
    if base.train.is_empty() {
        return Err(Error::Protocol("base session has no training data".into()));
    }

    let class_labels = base.train_labels();
    let col_of: BTreeMap<i64, usize> = class_labels
        .iter()
        .enumerate()
        .map(|(c, &l)| (l, c))
        .collect();

    let features: Vec<FeatureVector> = base
        .train
        .iter()
        .map(|e| extractor.extract(&e.values))
        .collect::<Result<_>>()?;
    let label_cols: Vec<usize> = base.train.iter().map(|e| col_of[&e.label]).collect();

    let mut grouped: Vec<Vec<FeatureVector>> = vec![Vec::new(); class_labels.len()];
    for (f, &c) in features.iter().zip(&label_cols) {
        grouped[c].push(f.clone());
    }
    let prototypes: Vec<FeatureVector> = grouped
        .iter()
        .map(|g| classifier::prototype(g))
        .collect::<Result<_>>()?;
    let mut state = ClassifierState::from_prototypes(&prototypes, cfg.clamp_floor)?;
    // normalized class means anchor the inter-class constraint while the
    // columns train away from them
    let mut anchors: Vec<FeatureVector> = prototypes
        .iter()
        .map(|p| p.normalize())
        .collect::<Result<_>>()?;

    if cfg.base_epochs > 0 {
        let classes = state.num_classes();
        let dim = state.dim();
        let alpha = cfg.effective_alpha();
        let trainable = !extractor.is_frozen();
        let mut w_vel = vec![vec![0.0; dim]; classes];
        let mut m_vel = vec![0.0; classes];
        let mut p_vel = vec![vec![0.0; extractor.input_dim()]; extractor.output_dim()];
        let mut rng = stream_rng(cfg.seed, Stream::Batching, 0);
        let mut order: Vec<usize> = (0..base.train.len()).collect();

        for epoch in 0..cfg.base_epochs {
            if trainable && alpha > 0.0 {
                // the feature field moves under a trainable extractor, so
                // the constraint anchors track the current class means
                let mut grouped: Vec<Vec<FeatureVector>> = vec![Vec::new(); classes];
                for (example, &c) in base.train.iter().zip(&label_cols) {
                    grouped[c].push(extractor.extract(&example.values)?);
                }
                for (anchor, g) in anchors.iter_mut().zip(&grouped) {
                    *anchor = classifier::prototype(g)?.normalize()?;
                }
            }
            order.shuffle(&mut rng);
            for batch in order.chunks(cfg.batch_size) {
                let scale = 1.0 / batch.len() as f64;
                let mut w_grads = vec![vec![0.0; dim]; classes];
                let mut m_grads = vec![0.0; classes];
                let mut p_grads = vec![vec![0.0; extractor.input_dim()]; extractor.output_dim()];
                let mut batch_loss = 0.0;

                for &i in batch {
                    let example = &base.train[i];
                    let f = if trainable {
                        extractor.extract(&example.values)?
                    } else {
                        features[i].clone()
                    };
                    let ce = classifier::cross_entropy_grads(
                        &state,
                        &f,
                        label_cols[i],
                        cfg.temperature,
                    )?;
                    batch_loss += scale * ce.loss;
                    for (acc, g) in m_grads.iter_mut().zip(&ce.wrt_boundaries) {
                        *acc += scale * g;
                    }
                    for (col_acc, col_g) in w_grads.iter_mut().zip(&ce.wrt_weights) {
                        for (acc, g) in col_acc.iter_mut().zip(col_g) {
                            *acc += scale * g;
                        }
                    }
                    if trainable {
                        for (row, df) in p_grads.iter_mut().zip(&ce.wrt_feature) {
                            for (acc, x) in row.iter_mut().zip(&example.values) {
                                *acc += scale * df * x;
                            }
                        }
                    }
                }

                if alpha > 0.0 {
                    let ic = ic_grads(state.boundaries().values(), &anchors, state.weights())?;
                    batch_loss += alpha * ic.loss;
                    for (acc, g) in m_grads.iter_mut().zip(&ic.wrt_boundaries) {
                        *acc += alpha * g;
                    }
                    for (col_acc, col_g) in w_grads.iter_mut().zip(&ic.wrt_weights) {
                        for (acc, g) in col_acc.iter_mut().zip(col_g) {
                            *acc += alpha * g;
                        }
                    }
                }

                if !batch_loss.is_finite() {
                    return Err(Error::Divergence(format!(
                        "non-finite loss {batch_loss} in base epoch {epoch}"
                    )));
                }

                if cfg.ablation != Ablation::FixedBaseline {
                    let mut boundaries = state.boundaries().clone();
                    boundaries.descent_step(&m_grads, cfg.boundary_lr, cfg.momentum, &mut m_vel)?;
                    state.set_boundaries(boundaries)?;
                }
                state.apply_weight_step(&w_grads, cfg.base_lr, cfg.momentum, &mut w_vel)?;
                if trainable && cfg.base_lr > 0.0 {
                    extractor.apply_gradient(&p_grads, cfg.base_lr, cfg.momentum, &mut p_vel)?;
                }
            }
        }
    }

    extractor.freeze();
    let ckpt = SessionCheckpoint {
        classifier: state,
        extractor,
        session_index: 0,
        class_labels,
        rng_state: RngState {
            master_seed: cfg.seed,
        },
    };
    ckpt.validate()?;
    Ok(ckpt)
}

/// One incremental session: expands the classifier with per-class
/// prototypes, mean-initializes and fine-tunes the new boundaries (the
/// fixed baseline appends ones and skips fine-tuning), and returns the
/// next checkpoint. Old columns and old boundary entries are preserved
/// bit-exactly.
pub fn run_incremental_session(
    ckpt: &SessionCheckpoint,
    session_train: &[LabeledExample],
    cfg: &TrainConfig,
) -> Result<SessionCheckpoint> {
    cfg.validate()?;
    if session_train.is_empty() {
        return Err(Error::EmptyInput(
            "incremental session has no training samples".into(),
        ));
    }
    let grouped = group_by_label(session_train, &ckpt.extractor)?;
    for label in grouped.keys() {
        if ckpt.class_labels.contains(label) {
            return Err(Error::Protocol(format!(
                "label {label} collides with an earlier session"
            )));
        }
    }

    let new_labels: Vec<i64> = grouped.keys().copied().collect();
    let prototypes: Vec<FeatureVector> = grouped
        .values()
        .map(|g| classifier::prototype(g))
        .collect::<Result<_>>()?;

    let session = ckpt.session_index + 1;
    let mut state = ckpt.classifier.clone();
    let expanded = match cfg.ablation {
        Ablation::FixedBaseline => state.boundaries().expand_with_ones(new_labels.len())?,
        _ => state.boundaries().expand_mean_init(new_labels.len())?,
    };
    state.expand(&prototypes, session, expanded)?;

    if cfg.ablation != Ablation::FixedBaseline && cfg.finetune_epochs > 0 {
        let offset = ckpt.class_labels.len();
        let col_of: BTreeMap<i64, usize> = new_labels
            .iter()
            .enumerate()
            .map(|(i, &l)| (l, offset + i))
            .collect();
        let data: Vec<(usize, FeatureVector)> = session_train
            .iter()
            .map(|e| Ok((col_of[&e.label], ckpt.extractor.extract(&e.values)?)))
            .collect::<Result<_>>()?;
        let mut rng = stream_rng(ckpt.rng_state.master_seed, Stream::Batching, session as u64);
        let tuned = finetune_boundaries(&state, &data, cfg, &mut rng)?;
        state.set_boundaries(tuned)?;
    }

    let mut class_labels = ckpt.class_labels.clone();
    class_labels.extend(new_labels);
    let next = SessionCheckpoint {
        classifier: state,
        extractor: ckpt.extractor.clone(),
        session_index: session,
        class_labels,
        rng_state: ckpt.rng_state.clone(),
    };
    next.validate()?;
    Ok(next)
}

/// Evaluates a checkpoint on the cumulative test set: top-1 accuracy via
/// boundary-scaled nearest-class-mean prediction, plus the separation
/// degree and prototype similarity matrix.
pub fn evaluate(
    ckpt: &SessionCheckpoint,
    cumulative_test: &[LabeledExample],
) -> Result<SessionReport> {
    if cumulative_test.is_empty() {
        return Err(Error::Protocol(
            "evaluation needs a non-empty test set".into(),
        ));
    }
    let col_of: BTreeMap<i64, usize> = ckpt
        .class_labels
        .iter()
        .enumerate()
        .map(|(c, &l)| (l, c))
        .collect();

    let mut predictions = Vec::with_capacity(cumulative_test.len());
    let mut truth = Vec::with_capacity(cumulative_test.len());
    for e in cumulative_test {
        let col = *col_of
            .get(&e.label)
            .ok_or_else(|| Error::Protocol(format!("test label {} was never trained", e.label)))?;
        let f = ckpt.extractor.extract(&e.values)?;
        predictions.push(classifier::predict(&ckpt.classifier, &f)?);
        truth.push(col);
    }

    Ok(SessionReport {
        session_index: ckpt.session_index,
        top1_accuracy: metrics::top1_accuracy(&predictions, &truth)?,
        num_test: cumulative_test.len(),
        d_cs: metrics::separation_degree(ckpt.classifier.weights())?,
        similarity_matrix: metrics::similarity_matrix(ckpt.classifier.weights())?,
    })
}

/// Runs the full protocol and returns the per-session reports.
pub fn run_full(
    stream: &FscilStream,
    cfg: &TrainConfig,
    extractor: FeatureExtractor,
) -> Result<Vec<SessionReport>> {
    run_full_with_final(stream, cfg, extractor).map(|(reports, _)| reports)
}

/// Like [`run_full`], also returning the final checkpoint.
pub fn run_full_with_final(
    stream: &FscilStream,
    cfg: &TrainConfig,
    extractor: FeatureExtractor,
) -> Result<(Vec<SessionReport>, SessionCheckpoint)> {
    let mut ckpt = train_base(stream, cfg, extractor)?;
    let mut reports = vec![evaluate(&ckpt, &stream.cumulative_test(0))?];
    for (idx, increment) in stream.increments.iter().enumerate() {
        ckpt = run_incremental_session(&ckpt, &increment.train, cfg)?;
        reports.push(evaluate(&ckpt, &stream.cumulative_test(idx + 1))?);
    }
    Ok((reports, ckpt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SyntheticSpec};

    fn layout(base: usize, incs: &[(usize, usize)]) -> SessionSpec {
        SessionSpec {
            base_class_count: base,
            sessions: incs
                .iter()
                .map(|&(n_way, k_shot)| IncrementSpec { n_way, k_shot })
                .collect(),
            seed: 0,
            shuffle_assignment: false,
        }
    }

    fn toy_stream(seed: u64) -> FscilStream {
        let spec = SyntheticSpec {
            num_classes: 7,
            dim: 8,
            samples_per_base_class: 12,
            test_per_class: 4,
            center_separation: 1.0,
            within_class_std: 0.15,
            std_spread: 0.0,
            center_concentration: 0.0,
            novel_overlap: 0.0,
            seed,
        };
        generate_synthetic(&spec, &layout(3, &[(2, 5), (2, 1)])).unwrap()
    }

    fn identity_for(stream: &FscilStream) -> FeatureExtractor {
        FeatureExtractor::identity(stream.feature_dim).unwrap()
    }

    #[test]
    fn zero_epochs_is_pure_ncm_init() {
        let stream = toy_stream(1);
        let cfg = TrainConfig {
            base_epochs: 0,
            ..TrainConfig::default()
        };
        let ckpt = train_base(&stream, &cfg, identity_for(&stream)).unwrap();
        assert!(ckpt
            .classifier
            .boundaries()
            .values()
            .iter()
            .all(|&m| m == 1.0));

        // columns must equal the unit-normalized class means
        let grouped = group_by_label(&stream.base.train, &ckpt.extractor).unwrap();
        for (c, (_, samples)) in grouped.iter().enumerate() {
            let proto = classifier::prototype(samples).unwrap().normalize().unwrap();
            assert_eq!(ckpt.classifier.weight(c).unwrap(), &proto);
        }
    }

    #[test]
    fn degenerate_arms_produce_identical_checkpoints() {
        let stream = toy_stream(2);
        let common = TrainConfig {
            alpha: 0.0,
            base_lr: 0.0,
            boundary_lr: 0.0,
            base_epochs: 3,
            ..TrainConfig::default()
        };
        let baseline = TrainConfig {
            ablation: Ablation::FixedBaseline,
            ..common.clone()
        };
        let adaptive = TrainConfig {
            ablation: Ablation::AdbIc,
            ..common
        };
        let a = train_base(&stream, &baseline, identity_for(&stream)).unwrap();
        let b = train_base(&stream, &adaptive, identity_for(&stream)).unwrap();
        assert_eq!(a.classifier, b.classifier);
    }

    #[test]
    fn well_separated_base_data_classifies_cleanly() {
        let spec = SyntheticSpec {
            num_classes: 3,
            dim: 8,
            samples_per_base_class: 30,
            test_per_class: 10,
            center_separation: 1.0,
            within_class_std: 0.1,
            std_spread: 0.0,
            center_concentration: 0.0,
            novel_overlap: 0.0,
            seed: 3,
        };
        let stream = generate_synthetic(&spec, &layout(3, &[])).unwrap();
        let cfg = TrainConfig::default();
        let ckpt = train_base(&stream, &cfg, identity_for(&stream)).unwrap();
        let report = evaluate(&ckpt, &stream.cumulative_test(0)).unwrap();
        assert!(report.top1_accuracy >= 0.95, "got {}", report.top1_accuracy);
    }

    #[test]
    fn single_shot_prototype_is_the_sample() {
        let stream = toy_stream(4);
        let cfg = TrainConfig::default();
        let ckpt = train_base(&stream, &cfg, identity_for(&stream)).unwrap();
        // second increment of the toy stream is 2-way 1-shot
        let ckpt = run_incremental_session(&ckpt, &stream.increments[0].train, &cfg).unwrap();
        let ckpt = run_incremental_session(&ckpt, &stream.increments[1].train, &cfg).unwrap();

        let grouped = group_by_label(&stream.increments[1].train, &ckpt.extractor).unwrap();
        for (label, samples) in grouped {
            assert_eq!(samples.len(), 1);
            let col = ckpt.column_of_label(label).unwrap();
            let expected = samples[0].normalize().unwrap();
            assert_eq!(ckpt.classifier.weight(col).unwrap(), &expected);
        }
    }

    #[test]
    fn old_boundaries_and_columns_survive_sessions_bit_exactly() {
        let stream = toy_stream(5);
        let cfg = TrainConfig::default();
        let ckpt0 = train_base(&stream, &cfg, identity_for(&stream)).unwrap();
        let before_m: Vec<u64> = ckpt0
            .classifier
            .boundaries()
            .values()
            .iter()
            .map(|v| v.to_bits())
            .collect();
        let before_w: Vec<Vec<u64>> = ckpt0
            .classifier
            .weights()
            .iter()
            .map(|w| w.values().iter().map(|v| v.to_bits()).collect())
            .collect();

        let ckpt1 = run_incremental_session(&ckpt0, &stream.increments[0].train, &cfg).unwrap();
        let ckpt2 = run_incremental_session(&ckpt1, &stream.increments[1].train, &cfg).unwrap();

        for (c, bits) in before_m.iter().enumerate() {
            assert_eq!(ckpt2.classifier.boundaries().values()[c].to_bits(), *bits);
        }
        for (c, bits) in before_w.iter().enumerate() {
            let after: Vec<u64> = ckpt2
                .classifier
                .weight(c)
                .unwrap()
                .values()
                .iter()
                .map(|v| v.to_bits())
                .collect();
            assert_eq!(&after, bits);
        }
        assert!(
            ckpt2.classifier.boundaries().frozen_mask()[..ckpt1.class_labels.len()]
                .iter()
                .all(|&f| f)
        );
    }

    #[test]
    fn label_collision_is_a_protocol_error() {
        let stream = toy_stream(6);
        let cfg = TrainConfig::default();
        let ckpt = train_base(&stream, &cfg, identity_for(&stream)).unwrap();
        let err = run_incremental_session(&ckpt, &stream.base.train, &cfg).unwrap_err();
        assert!(matches!(err, Error::Protocol(_)));
    }

    #[test]
    fn evaluating_stored_prototypes_is_perfect() {
        let stream = toy_stream(7);
        let cfg = TrainConfig {
            base_epochs: 0,
            ..TrainConfig::default()
        };
        let ckpt = train_base(&stream, &cfg, identity_for(&stream)).unwrap();
        let test: Vec<LabeledExample> = ckpt
            .class_labels
            .iter()
            .enumerate()
            .map(|(c, &label)| LabeledExample {
                label,
                values: ckpt.classifier.weight(c).unwrap().values().to_vec(),
            })
            .collect();
        let report = evaluate(&ckpt, &test).unwrap();
        assert_eq!(report.top1_accuracy, 1.0);
    }

    #[test]
    fn evaluate_rejects_empty_and_unseen() {
        let stream = toy_stream(8);
        let cfg = TrainConfig::default();
        let ckpt = train_base(&stream, &cfg, identity_for(&stream)).unwrap();
        assert!(matches!(evaluate(&ckpt, &[]), Err(Error::Protocol(_))));
        let alien = vec![LabeledExample {
            label: 999,
            values: vec![0.5; stream.feature_dim],
        }];
        assert!(matches!(evaluate(&ckpt, &alien), Err(Error::Protocol(_))));
    }

    #[test]
    fn evaluation_is_pure() {
        let stream = toy_stream(9);
        let cfg = TrainConfig::default();
        let ckpt = train_base(&stream, &cfg, identity_for(&stream)).unwrap();
        let test = stream.cumulative_test(0);
        let a = evaluate(&ckpt, &test).unwrap();
        let b = evaluate(&ckpt, &test).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn full_runs_are_seed_deterministic() {
        let stream = toy_stream(10);
        let cfg = TrainConfig::default();
        let a = run_full(&stream, &cfg, identity_for(&stream)).unwrap();
        let b = run_full(&stream, &cfg, identity_for(&stream)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), stream.session_count());

        let base_only = generate_synthetic(
            &SyntheticSpec {
                num_classes: 3,
                dim: 4,
                samples_per_base_class: 6,
                test_per_class: 2,
                center_separation: 1.0,
                within_class_std: 0.2,
                std_spread: 0.0,
                center_concentration: 0.0,
                novel_overlap: 0.0,
                seed: 1,
            },
            &layout(3, &[]),
        )
        .unwrap();
        let single = run_full(&base_only, &cfg, identity_for(&base_only)).unwrap();
        assert_eq!(single.len(), 1);
    }

    #[test]
    fn checkpoints_round_trip_through_disk() {
        let stream = toy_stream(11);
        let cfg = TrainConfig::default();
        let ckpt = train_base(&stream, &cfg, identity_for(&stream)).unwrap();
        let ckpt = run_incremental_session(&ckpt, &stream.increments[0].train, &cfg).unwrap();

        let dir = std::env::temp_dir().join(format!("adbs-ckpt-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("session.json");
        ckpt.save(&path).unwrap();
        let loaded = SessionCheckpoint::load(&path).unwrap();
        assert_eq!(loaded, ckpt);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn config_validation_catches_bad_values() {
        let bad = TrainConfig {
            temperature: 0.0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            momentum: 1.0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());

        let adb_only = TrainConfig {
            ablation: Ablation::AdbOnly,
            alpha: 5.0,
            ..TrainConfig::default()
        };
        assert_eq!(adb_only.effective_alpha(), 0.0);
    }
}
