//! Cosine-logit classifier over unit prototypes with per-class boundary
//! scaling, plus prototype computation and nearest-class-mean inference.
//!
//! The decoupled model keeps one unit-norm weight column per class. A
//! per-class boundary scalar `m_c` multiplies that class's cosine score,
//! so with all boundaries at 1 the model reduces exactly to the plain
//! fixed-boundary prototype classifier.

use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryVector;
use crate::embedding::FeatureVector;
use crate::error::{Error, Result};

/// Classifier state: weight columns `W`, boundary scalars `M`, and the
/// session each class was introduced in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierState {
    dim: usize,
    /// Unit-norm weight column per class.
    columns: Vec<FeatureVector>,
    boundaries: BoundaryVector,
    session_of: Vec<usize>,
}

/// Boundary-weighted, temperature-scaled cosine similarities.
#[derive(Debug, Clone, PartialEq)]
pub struct Logits {
    values: Vec<f64>,
    temperature: f64,
}

impl Logits {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    /// Softmax with max-subtraction; sums to 1 and never overflows.
    pub fn softmax(&self) -> Vec<f64> {
        softmax_stable(&self.values)
    }
}

pub(crate) fn softmax_stable(values: &[f64]) -> Vec<f64> {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = values.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

/// Scaled cosine logits from raw parts:
/// `values[c] = temperature * m[c] * cos(f, weights[c])`.
///
/// Both the feature and every weight column are normalized here, so the
/// function is well-defined (and differentiable) for weights that are not
/// exactly unit norm.
pub fn scaled_cosine_logits(
    m: &[f64],
    weights: &[FeatureVector],
    f: &FeatureVector,
    temperature: f64,
) -> Result<Vec<f64>> {
    if m.len() != weights.len() {
        return Err(Error::ShapeMismatch {
            context: "boundary vector vs weight columns",
            expected: weights.len(),
            actual: m.len(),
        });
    }
    if temperature <= 0.0 || !temperature.is_finite() {
        return Err(Error::Config(format!(
            "temperature must be positive and finite, got {temperature}"
        )));
    }
    let q = f.normalize()?;
    m.iter()
        .zip(weights)
        .map(|(mc, w)| {
            let cos = q.cosine(w)?;
            Ok(temperature * mc * cos)
        })
        .collect()
}

/// Cross-entropy of stable softmax at `label`: `-log softmax(logits)[label]`.
pub fn cross_entropy(logits: &Logits, label: usize) -> Result<f64> {
    cross_entropy_of_values(&logits.values, label)
}

pub(crate) fn cross_entropy_of_values(values: &[f64], label: usize) -> Result<f64> {
    if label >= values.len() {
        return Err(Error::IndexOutOfRange {
            index: label,
            len: values.len(),
        });
    }
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_sum: f64 = values.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    Ok(log_sum - (values[label] - max))
}

/// Analytic gradients of the classification loss through the scaled
/// cosine logits.
#[derive(Debug, Clone)]
pub struct CeGradients {
    /// The loss value the gradients belong to.
    pub loss: f64,
    /// dL/dm, one entry per class.
    pub wrt_boundaries: Vec<f64>,
    /// dL/dW through the column normalization, one column per class.
    pub wrt_weights: Vec<Vec<f64>>,
    /// dL/df through the feature normalization.
    pub wrt_feature: Vec<f64>,
}

/// Gradients of `cross_entropy(scaled_cosine_logits(m, weights, f), label)`
/// with respect to `m`, the raw weight columns, and the raw feature.
///
/// With residuals `r_c = softmax_c - 1{c=label}`:
/// `dL/dm_c = s * cos_c * r_c`.
pub fn cross_entropy_grads_raw(
    m: &[f64],
    weights: &[FeatureVector],
    f: &FeatureVector,
    label: usize,
    temperature: f64,
) -> Result<CeGradients> {
    let values = scaled_cosine_logits(m, weights, f, temperature)?;
    if label >= values.len() {
        return Err(Error::IndexOutOfRange {
            index: label,
            len: values.len(),
        });
    }
    let loss = cross_entropy_of_values(&values, label)?;
    let probs = softmax_stable(&values);
    let q = f.normalize()?;
    let f_norm = f.norm();
    let dim = f.dim();

    let mut wrt_boundaries = vec![0.0; m.len()];
    let mut wrt_weights = Vec::with_capacity(m.len());
    let mut d_query = vec![0.0; dim];

    for (c, w) in weights.iter().enumerate() {
        let w_norm = w.norm();
        if w_norm == 0.0 {
            return Err(Error::DegenerateInput(format!(
                "weight column {c} is a zero vector"
            )));
        }
        let u: Vec<f64> = w.values().iter().map(|v| v / w_norm).collect();
        let cos: f64 = q.values().iter().zip(&u).map(|(a, b)| a * b).sum();
        let residual = probs[c] - if c == label { 1.0 } else { 0.0 };

        wrt_boundaries[c] = residual * temperature * cos;

        // d cos / d w = (q - cos * u) / ||w||, tangent to the unit sphere.
        let scale = residual * temperature * m[c] / w_norm;
        let col: Vec<f64> = q
            .values()
            .iter()
            .zip(&u)
            .map(|(qi, ui)| scale * (qi - cos * ui))
            .collect();
        wrt_weights.push(col);

        let fs = residual * temperature * m[c];
        for (dq, ui) in d_query.iter_mut().zip(&u) {
            *dq += fs * ui;
        }
    }

    let radial: f64 = d_query.iter().zip(q.values()).map(|(a, b)| a * b).sum();
    let wrt_feature = d_query
        .iter()
        .zip(q.values())
        .map(|(dq, qi)| (dq - radial * qi) / f_norm)
        .collect();

    Ok(CeGradients {
        loss,
        wrt_boundaries,
        wrt_weights,
        wrt_feature,
    })
}

/// Arithmetic mean of the sample features (the raw, pre-normalization
/// prototype; the classifier stores its unit-normalized form).
pub fn prototype(samples: &[FeatureVector]) -> Result<FeatureVector> {
    let first = samples
        .first()
        .ok_or_else(|| Error::EmptyInput("prototype of zero samples".into()))?;
    let dim = first.dim();
    let mut sum = vec![0.0; dim];
    for s in samples {
        if s.dim() != dim {
            return Err(Error::ShapeMismatch {
                context: "prototype samples",
                expected: dim,
                actual: s.dim(),
            });
        }
        for (acc, v) in sum.iter_mut().zip(s.values()) {
            *acc += v;
        }
    }
    let k = samples.len() as f64;
    FeatureVector::new(sum.into_iter().map(|v| v / k).collect())
}

impl ClassifierState {
    /// Initial state from base-session prototypes: unit-normalized columns,
    /// boundaries all ones, every class tagged session 0.
    pub fn from_prototypes(prototypes: &[FeatureVector], clamp_floor: f64) -> Result<Self> {
        if prototypes.is_empty() {
            return Err(Error::EmptyInput(
                "classifier needs at least one class".into(),
            ));
        }
        let dim = prototypes[0].dim();
        let mut columns = Vec::with_capacity(prototypes.len());
        for p in prototypes {
            if p.dim() != dim {
                return Err(Error::ShapeMismatch {
                    context: "prototype dimensions",
                    expected: dim,
                    actual: p.dim(),
                });
            }
            columns.push(p.normalize()?);
        }
        let boundaries = BoundaryVector::init_base(prototypes.len(), clamp_floor)?;
        Ok(Self {
            dim,
            session_of: vec![0; columns.len()],
            columns,
            boundaries,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.columns.len()
    }

    pub fn weights(&self) -> &[FeatureVector] {
        &self.columns
    }

    pub fn weight(&self, class: usize) -> Result<&FeatureVector> {
        self.columns.get(class).ok_or(Error::IndexOutOfRange {
            index: class,
            len: self.columns.len(),
        })
    }

    pub fn boundaries(&self) -> &BoundaryVector {
        &self.boundaries
    }

    pub fn session_of(&self) -> &[usize] {
        &self.session_of
    }

    /// Replaces the boundary vector after fine-tuning; the length must
    /// match the class count.
    pub fn set_boundaries(&mut self, boundaries: BoundaryVector) -> Result<()> {
        if boundaries.len() != self.columns.len() {
            return Err(Error::ShapeMismatch {
                context: "boundary vector",
                expected: self.columns.len(),
                actual: boundaries.len(),
            });
        }
        self.boundaries = boundaries;
        Ok(())
    }

    /// Appends unit-normalized prototype columns for a new session.
    ///
    /// The caller supplies the already-expanded boundary vector (see the
    /// boundary module); existing columns and boundary entries are
    /// preserved bit-exactly. Appending zero prototypes leaves the state
    /// unchanged.
    pub fn expand(
        &mut self,
        prototypes: &[FeatureVector],
        session: usize,
        boundaries: BoundaryVector,
    ) -> Result<()> {
        if prototypes.is_empty() {
            return Ok(());
        }
        let current_max = self.session_of.iter().copied().max().unwrap_or(0);
        if session <= current_max {
            return Err(Error::Protocol(format!(
                "session {session} does not advance past session {current_max}"
            )));
        }
        if boundaries.len() != self.columns.len() + prototypes.len() {
            return Err(Error::ShapeMismatch {
                context: "expanded boundary vector",
                expected: self.columns.len() + prototypes.len(),
                actual: boundaries.len(),
            });
        }
        for (old, new) in self.boundaries.values().iter().zip(boundaries.values()) {
            if old.to_bits() != new.to_bits() {
                return Err(Error::Protocol(
                    "expansion must preserve existing boundary entries".into(),
                ));
            }
        }
        for p in prototypes {
            if p.dim() != self.dim {
                return Err(Error::ShapeMismatch {
                    context: "prototype dimensions",
                    expected: self.dim,
                    actual: p.dim(),
                });
            }
            self.columns.push(p.normalize()?);
            self.session_of.push(session);
        }
        self.boundaries = boundaries;
        Ok(())
    }

    /// One SGD step on the raw columns followed by re-normalization.
    pub(crate) fn apply_weight_step(
        &mut self,
        grads: &[Vec<f64>],
        lr: f64,
        momentum: f64,
        velocity: &mut [Vec<f64>],
    ) -> Result<()> {
        if grads.len() != self.columns.len() {
            return Err(Error::ShapeMismatch {
                context: "weight gradient",
                expected: self.columns.len(),
                actual: grads.len(),
            });
        }
        for ((col, grad), vel) in self.columns.iter_mut().zip(grads).zip(velocity.iter_mut()) {
            let mut raw: Vec<f64> = col.values().to_vec();
            for ((w, g), v) in raw.iter_mut().zip(grad).zip(vel.iter_mut()) {
                *v = momentum * *v + g;
                *w -= lr * *v;
            }
            *col = FeatureVector::new(raw)?.normalize()?;
        }
        Ok(())
    }

    /// Structural invariants; used when loading checkpoints.
    pub fn validate(&self) -> Result<()> {
        if self.columns.is_empty() {
            return Err(Error::EmptyInput("classifier has no classes".into()));
        }
        if self.boundaries.len() != self.columns.len()
            || self.session_of.len() != self.columns.len()
        {
            return Err(Error::ShapeMismatch {
                context: "classifier state lengths",
                expected: self.columns.len(),
                actual: self.boundaries.len(),
            });
        }
        for col in &self.columns {
            if col.dim() != self.dim {
                return Err(Error::ShapeMismatch {
                    context: "classifier column dimension",
                    expected: self.dim,
                    actual: col.dim(),
                });
            }
            if (col.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::DegenerateInput(
                    "classifier column is not unit norm".into(),
                ));
            }
        }
        if self.session_of.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Protocol(
                "session tags must be nondecreasing in class index".into(),
            ));
        }
        self.boundaries.validate()
    }
}

/// Boundary-weighted cosine logits for a classifier state.
pub fn logits(state: &ClassifierState, f: &FeatureVector, temperature: f64) -> Result<Logits> {
    let values = scaled_cosine_logits(state.boundaries.values(), &state.columns, f, temperature)?;
    Ok(Logits {
        values,
        temperature,
    })
}

/// Analytic cross-entropy gradients for a classifier state.
pub fn cross_entropy_grads(
    state: &ClassifierState,
    f: &FeatureVector,
    label: usize,
    temperature: f64,
) -> Result<CeGradients> {
    cross_entropy_grads_raw(
        state.boundaries.values(),
        &state.columns,
        f,
        label,
        temperature,
    )
}

/// Boundary-scaled nearest-class-mean prediction:
/// `argmax_c m_c * cos(f, w_c)`, ties broken by the lowest class index.
pub fn predict(state: &ClassifierState, f: &FeatureVector) -> Result<usize> {
    let q = f.normalize()?;
    let m = state.boundaries.values();
    let mut best = 0usize;
    let mut best_score = f64::NEG_INFINITY;
    for (c, w) in state.columns.iter().enumerate() {
        let score = m[c] * q.dot(w)?;
        if score > best_score {
            best = c;
            best_score = score;
        }
    }
    Ok(best)
}
