//! Adaptive decision boundary lifecycle and the inter-class constraint.
//!
//! Each class owns a positive scalar boundary `m_c` that multiplies its
//! cosine score. Base classes start at 1 (which makes the model identical
//! to the fixed-boundary classifier), new classes are initialized to the
//! mean of all existing boundaries, old boundaries are frozen for good
//! once their session ends, and the unfrozen ones are fine-tuned by
//! gradient descent.
//!
//! The inter-class constraint couples boundaries and prototypes: for
//! classes `i != j` the quantity
//!
//! ```text
//! t[i][j] = (1 - m_i) * <p_i, w_i> + (m_j - 1) * <p_i, w_j>
//! ```
//!
//! must stay non-positive, which guarantees that boundary scaling never
//! lowers the probability of the correct class at its own prototype. The
//! hinge sum over all pairs of `t[i][j]` is the IC loss; the verifier
//! below evaluates the terms directly, and [`compare_probabilities`]
//! exposes the probability pair the guarantee is stated about.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::{
    cross_entropy_grads_raw, scaled_cosine_logits, softmax_stable, ClassifierState,
};
use crate::embedding::FeatureVector;
use crate::error::{Error, Result};
use crate::protocol::TrainConfig;

/// Per-class boundary scalars with freeze bookkeeping.
///
/// Entries marked frozen are never written again, bit for bit. All entries
/// stay at or above `clamp_floor`, so a boundary can shrink close to zero
/// but can never flip the sign of a similarity score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryVector {
    m: Vec<f64>,
    frozen: Vec<bool>,
    clamp_floor: f64,
}

impl BoundaryVector {
    /// Base-session initialization: all ones, nothing frozen.
    pub fn init_base(num_classes: usize, clamp_floor: f64) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::EmptyInput("boundary vector needs >= 1 class".into()));
        }
        Self::from_values(
            vec![1.0; num_classes],
            vec![false; num_classes],
            clamp_floor,
        )
    }

    /// Builds a boundary vector from explicit values, validating the floor.
    pub fn from_values(m: Vec<f64>, frozen: Vec<bool>, clamp_floor: f64) -> Result<Self> {
        if m.is_empty() {
            return Err(Error::EmptyInput("boundary vector needs >= 1 class".into()));
        }
        if frozen.len() != m.len() {
            return Err(Error::ShapeMismatch {
                context: "boundary frozen mask",
                expected: m.len(),
                actual: frozen.len(),
            });
        }
        let v = Self {
            m,
            frozen,
            clamp_floor,
        };
        v.validate()?;
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.m
    }

    pub fn frozen_mask(&self) -> &[bool] {
        &self.frozen
    }

    pub fn clamp_floor(&self) -> f64 {
        self.clamp_floor
    }

    /// Appends `num_new` entries set to the arithmetic mean of all
    /// existing entries (including entries appended and tuned in earlier
    /// sessions), freezing everything that was already present.
    pub fn expand_mean_init(&self, num_new: usize) -> Result<Self> {
        if self.m.is_empty() {
            return Err(Error::Protocol(
                "cannot expand an empty boundary vector".into(),
            ));
        }
        if num_new == 0 {
            return Err(Error::EmptyInput("expansion needs >= 1 new class".into()));
        }
        let mean = self.m.iter().sum::<f64>() / self.m.len() as f64;
        let mut m = self.m.clone();
        m.extend(std::iter::repeat_n(mean, num_new));
        let mut frozen = vec![true; self.m.len()];
        frozen.extend(std::iter::repeat_n(false, num_new));
        Self::from_values(m, frozen, self.clamp_floor)
    }

    /// Fixed-baseline expansion: appends ones and freezes the rest. The
    /// result is exactly what the fixed-boundary model uses.
    pub fn expand_with_ones(&self, num_new: usize) -> Result<Self> {
        if num_new == 0 {
            return Err(Error::EmptyInput("expansion needs >= 1 new class".into()));
        }
        let mut m = self.m.clone();
        m.extend(std::iter::repeat_n(1.0, num_new));
        let mut frozen = vec![true; self.m.len()];
        frozen.extend(std::iter::repeat_n(false, num_new));
        Self::from_values(m, frozen, self.clamp_floor)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.clamp_floor > 0.0) || !self.clamp_floor.is_finite() {
            return Err(Error::Config(format!(
                "clamp floor must be positive and finite, got {}",
                self.clamp_floor
            )));
        }
        if self.m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "boundary vector",
            });
        }
        if self.m.iter().any(|&v| v < self.clamp_floor) {
            return Err(Error::Config(format!(
                "boundary entry below clamp floor {}",
                self.clamp_floor
            )));
        }
        Ok(())
    }

    /// One masked SGD step: unfrozen entries move against the gradient and
    /// are clamped to the floor; frozen entries are not touched at all.
    pub(crate) fn descent_step(
        &mut self,
        grads: &[f64],
        lr: f64,
        momentum: f64,
        velocity: &mut [f64],
    ) -> Result<()> {
        if grads.len() != self.m.len() || velocity.len() != self.m.len() {
            return Err(Error::ShapeMismatch {
                context: "boundary gradient",
                expected: self.m.len(),
                actual: grads.len(),
            });
        }
        for c in 0..self.m.len() {
            if self.frozen[c] {
                continue;
            }
            velocity[c] = momentum * velocity[c] + grads[c];
            let next = self.m[c] - lr * velocity[c];
            if !next.is_finite() {
                return Err(Error::Divergence(format!(
                    "boundary {c} became non-finite during the update"
                )));
            }
            self.m[c] = next.max(self.clamp_floor);
        }
        Ok(())
    }
}

/// Pairwise constraint terms and whether they all stay non-positive.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintReport {
    terms: Vec<Vec<f64>>,
    satisfied: bool,
    tolerance: f64,
}

impl ConstraintReport {
    pub fn terms(&self) -> &[Vec<f64>] {
        &self.terms
    }

    pub fn satisfied(&self) -> bool {
        self.satisfied
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Largest off-diagonal term; positive values violate the constraint.
    pub fn max_off_diagonal(&self) -> f64 {
        let mut max = f64::NEG_INFINITY;
        for (i, row) in self.terms.iter().enumerate() {
            for (j, &t) in row.iter().enumerate() {
                if i != j && t > max {
                    max = t;
                }
            }
        }
        max
    }

    /// The `(i, j)` pair with the largest term, if any off-diagonal exists.
    pub fn worst_pair(&self) -> Option<(usize, usize)> {
        let mut worst = None;
        let mut max = f64::NEG_INFINITY;
        for (i, row) in self.terms.iter().enumerate() {
            for (j, &t) in row.iter().enumerate() {
                if i != j && t > max {
                    max = t;
                    worst = Some((i, j));
                }
            }
        }
        worst
    }
}

fn pairwise_terms(
    m: &[f64],
    prototypes: &[FeatureVector],
    weights: &[FeatureVector],
) -> Result<Vec<Vec<f64>>> {
    let n = m.len();
    if prototypes.len() != n {
        return Err(Error::ShapeMismatch {
            context: "constraint prototypes",
            expected: n,
            actual: prototypes.len(),
        });
    }
    if weights.len() != n {
        return Err(Error::ShapeMismatch {
            context: "constraint weights",
            expected: n,
            actual: weights.len(),
        });
    }
    // cross[i][j] = <p_i, w_j>
    let mut cross = vec![vec![0.0; n]; n];
    for (i, p) in prototypes.iter().enumerate() {
        for (j, w) in weights.iter().enumerate() {
            cross[i][j] = p.dot(w)?;
        }
    }
    let mut terms = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            terms[i][j] = (1.0 - m[i]) * cross[i][i] + (m[j] - 1.0) * cross[i][j];
        }
    }
    Ok(terms)
}

/// Inter-class constraint loss: the hinge sum
/// `sum_i sum_j max(0, (1 - m_i) <p_i, w_i> + (m_j - 1) <p_i, w_j>)`
/// over all pairs, including `i = j` (whose term is identically zero).
pub fn ic_loss(m: &[f64], prototypes: &[FeatureVector], weights: &[FeatureVector]) -> Result<f64> {
    let terms = pairwise_terms(m, prototypes, weights)?;
    Ok(terms
        .iter()
        .flatten()
        .map(|&t| if t > 0.0 { t } else { 0.0 })
        .sum())
}

/// Subgradients of the IC loss, treating prototypes as constants.
#[derive(Debug, Clone)]
pub struct IcGradients {
    pub loss: f64,
    /// dL/dm, one entry per class.
    pub wrt_boundaries: Vec<f64>,
    /// dL/dW over the raw weight columns.
    pub wrt_weights: Vec<Vec<f64>>,
}

/// Hinge subgradients of [`ic_loss`]: every active pair `(i, j)` (term
/// strictly positive) contributes `-<p_i, w_i>` to `dL/dm_i`, `<p_i, w_j>`
/// to `dL/dm_j`, `(1 - m_i) p_i` to `dL/dw_i` and `(m_j - 1) p_i` to
/// `dL/dw_j`. Terms at exactly zero use the subgradient 0.
pub fn ic_grads(
    m: &[f64],
    prototypes: &[FeatureVector],
    weights: &[FeatureVector],
) -> Result<IcGradients> {
    let terms = pairwise_terms(m, prototypes, weights)?;
    let n = m.len();
    let dim = prototypes.first().map(|p| p.dim()).unwrap_or(0);
    let mut loss = 0.0;
    let mut wrt_boundaries = vec![0.0; n];
    let mut wrt_weights = vec![vec![0.0; dim]; n];

    for i in 0..n {
        // <p_i, w_i> is shared by every term in row i.
        let own = prototypes[i].dot(&weights[i])?;
        for j in 0..n {
            let t = terms[i][j];
            if t <= 0.0 {
                continue;
            }
            loss += t;
            wrt_boundaries[i] -= own;
            wrt_boundaries[j] += prototypes[i].dot(&weights[j])?;
            for (acc, p) in wrt_weights[i].iter_mut().zip(prototypes[i].values()) {
                *acc += (1.0 - m[i]) * p;
            }
            for (acc, p) in wrt_weights[j].iter_mut().zip(prototypes[i].values()) {
                *acc += (m[j] - 1.0) * p;
            }
        }
    }

    Ok(IcGradients {
        loss,
        wrt_boundaries,
        wrt_weights,
    })
}

/// Evaluates every pairwise constraint term; `satisfied` means all
/// off-diagonal terms are at most `tolerance`.
pub fn verify_constraint(
    m: &[f64],
    prototypes: &[FeatureVector],
    weights: &[FeatureVector],
    tolerance: f64,
) -> Result<ConstraintReport> {
    if tolerance < 0.0 || !tolerance.is_finite() {
        return Err(Error::Config(format!(
            "constraint tolerance must be non-negative, got {tolerance}"
        )));
    }
    let terms = pairwise_terms(m, prototypes, weights)?;
    let n = m.len();
    let mut satisfied = true;
    for (i, row) in terms.iter().enumerate() {
        for j in 0..n {
            if i != j && row[j] > tolerance {
                satisfied = false;
            }
        }
    }
    Ok(ConstraintReport {
        terms,
        satisfied,
        tolerance,
    })
}

/// Softmax probabilities of the target class under fixed (all-ones) and
/// adaptive boundaries, at the same temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbabilityPair {
    pub fixed: f64,
    pub adaptive: f64,
}

/// Probability of `target_class` for `query` under the fixed-boundary
/// model and under the given boundaries. When the pairwise constraint
/// holds and the query sits at the class prototype, the adaptive
/// probability can only match or exceed the fixed one.
pub fn compare_probabilities(
    m: &[f64],
    weights: &[FeatureVector],
    query: &FeatureVector,
    target_class: usize,
    temperature: f64,
) -> Result<ProbabilityPair> {
    if target_class >= weights.len() {
        return Err(Error::IndexOutOfRange {
            index: target_class,
            len: weights.len(),
        });
    }
    let ones = vec![1.0; weights.len()];
    let fixed_logits = scaled_cosine_logits(&ones, weights, query, temperature)?;
    let adaptive_logits = scaled_cosine_logits(m, weights, query, temperature)?;
    Ok(ProbabilityPair {
        fixed: softmax_stable(&fixed_logits)[target_class],
        adaptive: softmax_stable(&adaptive_logits)[target_class],
    })
}

/// Fine-tunes the unfrozen boundary entries of `state` on a labeled
/// feature batch stream, holding the classifier weights fixed.
///
/// Runs `cfg.finetune_epochs` epochs of mini-batch descent on the total
/// loss (classification plus `alpha` times the inter-class constraint,
/// with the classifier columns standing in as the constraint prototypes),
/// clamping after every step. Frozen entries come back bit-identical.
pub fn finetune_boundaries(
    state: &ClassifierState,
    data: &[(usize, FeatureVector)],
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<BoundaryVector> {
    if data.is_empty() {
        return Err(Error::Protocol(
            "fine-tuning needs at least one sample".into(),
        ));
    }
    let classes = state.num_classes();
    for (label, f) in data {
        if *label >= classes {
            return Err(Error::IndexOutOfRange {
                index: *label,
                len: classes,
            });
        }
        if f.dim() != state.dim() {
            return Err(Error::ShapeMismatch {
                context: "fine-tuning feature",
                expected: state.dim(),
                actual: f.dim(),
            });
        }
    }

    let alpha = cfg.effective_alpha();
    let weights = state.weights();
    let mut boundaries = state.boundaries().clone();
    let mut velocity = vec![0.0; classes];
    let mut order: Vec<usize> = (0..data.len()).collect();

    for epoch in 0..cfg.finetune_epochs {
        order.shuffle(rng);
        for batch in order.chunks(cfg.batch_size.max(1)) {
            let mut grads = vec![0.0; classes];
            let mut batch_loss = 0.0;
            let scale = 1.0 / batch.len() as f64;
            for &idx in batch {
                let (label, f) = &data[idx];
                let ce = cross_entropy_grads_raw(
                    boundaries.values(),
                    weights,
                    f,
                    *label,
                    cfg.temperature,
                )?;
                batch_loss += scale * ce.loss;
                for (g, d) in grads.iter_mut().zip(&ce.wrt_boundaries) {
                    *g += scale * d;
                }
            }
            if alpha > 0.0 {
                let ic = ic_grads(boundaries.values(), weights, weights)?;
                batch_loss += alpha * ic.loss;
                for (g, d) in grads.iter_mut().zip(&ic.wrt_boundaries) {
                    *g += alpha * d;
                }
            }
            if !batch_loss.is_finite() {
                return Err(Error::Divergence(format!(
                    "non-finite loss {batch_loss} in fine-tuning epoch {epoch}"
                )));
            }
            boundaries.descent_step(&grads, cfg.boundary_lr, cfg.momentum, &mut velocity)?;
        }
    }
    Ok(boundaries)
}
