//! Feature vectors and pluggable frozen feature extractors.
//!
//! The session protocol never looks at raw inputs directly: everything is
//! mapped through a [`FeatureExtractor`] first. Extractors are cheap,
//! deterministic stand-ins for a pretrained backbone; after the base
//! session they are frozen and behave as pure functions.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::{stream_rng, Stream};

/// A dense embedding `f(x)` of dimension `d >= 1` with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    values: Vec<f64>,
}

impl FeatureVector {
    /// Wraps raw coordinates, rejecting empty or non-finite input.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("feature vector must have d >= 1".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "feature vector",
            });
        }
        Ok(Self { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Dot product; both vectors must have equal dimension.
    pub fn dot(&self, other: &Self) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::ShapeMismatch {
                context: "dot product",
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum())
    }

    /// Returns `v / ||v||`. A zero vector is a degenerate input, never
    /// silently passed through.
    pub fn normalize(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::DegenerateInput(
                "cannot normalize a zero vector".into(),
            ));
        }
        Ok(Self {
            values: self.values.iter().map(|v| v / n).collect(),
        })
    }

    /// Cosine similarity with another vector.
    pub fn cosine(&self, other: &Self) -> Result<f64> {
        let (a, b) = (self.norm(), other.norm());
        if a == 0.0 || b == 0.0 {
            return Err(Error::DegenerateInput(
                "cosine similarity of a zero vector".into(),
            ));
        }
        Ok(self.dot(other)? / (a * b))
    }
}

/// Deterministic feature extractors standing in for a backbone network.
///
/// All kinds are fully determined by their construction arguments; the
/// trainable linear kind additionally carries weights that may be updated
/// during the base session only, after which [`FeatureExtractor::freeze`]
/// makes it permanent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FeatureExtractor {
    /// Passes raw input through unchanged.
    Identity { dim: usize },
    /// Fixed seeded Gaussian projection, entries i.i.d. N(0, 1/d_out) so
    /// norms are approximately preserved.
    RandomProjection {
        input_dim: usize,
        /// Row-major `d_out x d_in`.
        weights: Vec<Vec<f64>>,
        seed: u64,
    },
    /// A single linear layer trained in the base session, then frozen.
    TrainableLinear {
        input_dim: usize,
        weights: Vec<Vec<f64>>,
        frozen: bool,
    },
}

fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize, std: f64) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| {
            (0..cols)
                .map(|_| {
                    let g: f64 = rng.sample(StandardNormal);
                    g * std
                })
                .collect()
        })
        .collect()
}

impl FeatureExtractor {
    pub fn identity(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::EmptyInput("extractor dimension must be >= 1".into()));
        }
        Ok(Self::Identity { dim })
    }

    /// Seeded Gaussian projection; the weights are fully determined by
    /// `(seed, input_dim, output_dim)`.
    pub fn random_projection(input_dim: usize, output_dim: usize, seed: u64) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 {
            return Err(Error::EmptyInput(
                "extractor dimensions must be >= 1".into(),
            ));
        }
        let mut rng = stream_rng(seed, Stream::Init, 1);
        let std = (1.0 / output_dim as f64).sqrt();
        Ok(Self::RandomProjection {
            input_dim,
            weights: gaussian_matrix(&mut rng, output_dim, input_dim, std),
            seed,
        })
    }

    /// Trainable linear layer, initialized like a random projection.
    pub fn trainable_linear(input_dim: usize, output_dim: usize, seed: u64) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 {
            return Err(Error::EmptyInput(
                "extractor dimensions must be >= 1".into(),
            ));
        }
        let mut rng = stream_rng(seed, Stream::Init, 2);
        let std = (1.0 / output_dim as f64).sqrt();
        Ok(Self::TrainableLinear {
            input_dim,
            weights: gaussian_matrix(&mut rng, output_dim, input_dim, std),
            frozen: false,
        })
    }

    /// Builds a trainable linear layer from explicit weights (row-major
    /// `d_out x d_in`).
    pub fn trainable_linear_from_weights(weights: Vec<Vec<f64>>) -> Result<Self> {
        if weights.is_empty() || weights[0].is_empty() {
            return Err(Error::EmptyInput(
                "extractor weights must be non-empty".into(),
            ));
        }
        let input_dim = weights[0].len();
        if weights.iter().any(|row| row.len() != input_dim) {
            return Err(Error::ShapeMismatch {
                context: "extractor weight rows",
                expected: input_dim,
                actual: weights
                    .iter()
                    .map(|r| r.len())
                    .find(|&l| l != input_dim)
                    .unwrap_or(0),
            });
        }
        Ok(Self::TrainableLinear {
            input_dim,
            weights,
            frozen: false,
        })
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Self::Identity { dim } => *dim,
            Self::RandomProjection { input_dim, .. } => *input_dim,
            Self::TrainableLinear { input_dim, .. } => *input_dim,
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Self::Identity { dim } => *dim,
            Self::RandomProjection { weights, .. } => weights.len(),
            Self::TrainableLinear { weights, .. } => weights.len(),
        }
    }

    /// Frozen extractors are pure functions of their input.
    pub fn is_frozen(&self) -> bool {
        match self {
            Self::Identity { .. } | Self::RandomProjection { .. } => true,
            Self::TrainableLinear { frozen, .. } => *frozen,
        }
    }

    /// Marks the extractor permanent; used at the end of the base session.
    pub fn freeze(&mut self) {
        if let Self::TrainableLinear { frozen, .. } = self {
            *frozen = true;
        }
    }

    /// Maps raw input to a feature vector. Deterministic given the
    /// extractor state.
    pub fn extract(&self, raw: &[f64]) -> Result<FeatureVector> {
        if raw.len() != self.input_dim() {
            return Err(Error::ShapeMismatch {
                context: "extractor input",
                expected: self.input_dim(),
                actual: raw.len(),
            });
        }
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "extractor input",
            });
        }
        match self {
            Self::Identity { .. } => FeatureVector::new(raw.to_vec()),
            Self::RandomProjection { weights, .. } | Self::TrainableLinear { weights, .. } => {
                let out = weights
                    .iter()
                    .map(|row| row.iter().zip(raw).map(|(w, x)| w * x).sum())
                    .collect();
                FeatureVector::new(out)
            }
        }
    }

    /// One SGD step on the linear weights: `W -= lr * grad` with an
    /// optional momentum velocity. Errors when called on a frozen or
    /// non-trainable extractor.
    pub(crate) fn apply_gradient(
        &mut self,
        grad: &[Vec<f64>],
        lr: f64,
        momentum: f64,
        velocity: &mut [Vec<f64>],
    ) -> Result<()> {
        match self {
            Self::TrainableLinear {
                weights,
                frozen: false,
                ..
            } => {
                if grad.len() != weights.len() || velocity.len() != weights.len() {
                    return Err(Error::ShapeMismatch {
                        context: "extractor gradient",
                        expected: weights.len(),
                        actual: grad.len(),
                    });
                }
                for ((w_row, g_row), v_row) in weights.iter_mut().zip(grad).zip(velocity) {
                    for ((w, g), v) in w_row.iter_mut().zip(g_row).zip(v_row) {
                        *v = momentum * *v + g;
                        *w -= lr * *v;
                    }
                }
                Ok(())
            }
            _ => Err(Error::Protocol(
                "gradient update on a frozen or non-trainable extractor".into(),
            )),
        }
    }
}
