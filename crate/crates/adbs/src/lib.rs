//! Adaptive decision boundaries for prototype-based few-shot
//! class-incremental learning.
//!
//! The model is a cosine classifier over unit class prototypes in which
//! every class owns a learnable positive boundary scalar that rescales its
//! similarity score. Base classes are trained with plenty of data; each
//! later session brings a handful of new classes whose prototypes are
//! appended and whose boundaries are mean-initialized and fine-tuned while
//! everything older stays frozen. An inter-class constraint loss keeps
//! boundary scaling from ever lowering the probability of a class at its
//! own prototype, and the crate ships numerical verifiers for both that
//! guarantee and the analytic gradients.
//!
//! # Quick start
//!
//! ```
//! use adbs::data::{generate_synthetic, SyntheticSpec};
//! use adbs::embedding::FeatureExtractor;
//! use adbs::protocol::{run_full, IncrementSpec, SessionSpec, TrainConfig};
//!
//! let sessions = SessionSpec {
//!     base_class_count: 4,
//!     sessions: vec![IncrementSpec { n_way: 2, k_shot: 5 }],
//!     seed: 7,
//!     shuffle_assignment: false,
//! };
//! let spec = SyntheticSpec {
//!     num_classes: 6,
//!     dim: 8,
//!     samples_per_base_class: 40,
//!     test_per_class: 10,
//!     center_separation: 1.0,
//!     within_class_std: 0.2,
//!     std_spread: 0.0,
//!     center_concentration: 0.0,
//!     novel_overlap: 0.0,
//!     seed: 7,
//! };
//! let stream = generate_synthetic(&spec, &sessions).unwrap();
//! let cfg = TrainConfig { seed: 7, ..TrainConfig::default() };
//! let extractor = FeatureExtractor::identity(stream.feature_dim).unwrap();
//! let reports = run_full(&stream, &cfg, extractor).unwrap();
//! assert_eq!(reports.len(), 2);
//! ```
//!
//! The runnable programs under `examples/` walk through each capability;
//! the `adbs` binary wraps the same entry points behind a small CLI.

pub mod boundary;
pub mod classifier;
pub mod cli;
pub mod config;
pub mod data;
pub mod embedding;
pub mod error;
pub mod metrics;
pub mod protocol;
pub mod seeding;
pub mod verify;

pub use boundary::{BoundaryVector, ConstraintReport, ProbabilityPair};
pub use classifier::ClassifierState;
pub use data::{FscilStream, LabeledExample, SyntheticSpec};
pub use embedding::{FeatureExtractor, FeatureVector};
pub use error::{Error, Result};
pub use metrics::SessionReport;
pub use protocol::{Ablation, IncrementSpec, SessionCheckpoint, SessionSpec, TrainConfig};
