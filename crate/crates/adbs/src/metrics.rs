//! Evaluation quantities: per-session top-1 accuracy, average accuracy,
//! last-session deltas, the class-separation degree, and prototype
//! similarity matrices.

use serde::{Deserialize, Serialize};

use crate::embedding::FeatureVector;
use crate::error::{Error, Result};

/// Everything reported for one evaluated session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub session_index: usize,
    pub top1_accuracy: f64,
    pub num_test: usize,
    /// Class-separation degree: mean cosine distance over all prototype
    /// pairs, in `[0, 2]`.
    pub d_cs: f64,
    /// Dense cosine similarity matrix of the class prototypes.
    pub similarity_matrix: Vec<Vec<f64>>,
}

/// Fraction of exact matches between predictions and labels.
pub fn top1_accuracy(predictions: &[usize], labels: &[usize]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::EmptyInput("accuracy of zero predictions".into()));
    }
    if predictions.len() != labels.len() {
        return Err(Error::ShapeMismatch {
            context: "accuracy inputs",
            expected: labels.len(),
            actual: predictions.len(),
        });
    }
    let hits = predictions
        .iter()
        .zip(labels)
        .filter(|(p, l)| p == l)
        .count();
    Ok(hits as f64 / predictions.len() as f64)
}

fn require_unit(prototypes: &[FeatureVector]) -> Result<()> {
    for (i, p) in prototypes.iter().enumerate() {
        if (p.norm() - 1.0).abs() > 1e-6 {
            return Err(Error::DegenerateInput(format!(
                "prototype {i} is not unit norm (||p|| = {})",
                p.norm()
            )));
        }
    }
    Ok(())
}

/// Dense pairwise cosine similarity of unit prototypes; symmetric with a
/// unit diagonal.
pub fn similarity_matrix(prototypes: &[FeatureVector]) -> Result<Vec<Vec<f64>>> {
    if prototypes.is_empty() {
        return Err(Error::EmptyInput(
            "similarity matrix of zero prototypes".into(),
        ));
    }
    require_unit(prototypes)?;
    let n = prototypes.len();
    let mut sim = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            sim[i][j] = prototypes[i].cosine(&prototypes[j])?;
        }
    }
    Ok(sim)
}

/// Class-separation degree: the average cosine distance
/// `(1/N^2) * sum_i sum_j (1 - sim(p_i, p_j))` over all pairs including
/// `i = j` (those terms are zero).
pub fn separation_degree(prototypes: &[FeatureVector]) -> Result<f64> {
    let sim = similarity_matrix(prototypes)?;
    let n = prototypes.len() as f64;
    let total: f64 = sim.iter().flatten().map(|s| 1.0 - s).sum();
    Ok(total / (n * n))
}

/// Arithmetic mean of the per-session top-1 accuracies.
pub fn average_accuracy(reports: &[SessionReport]) -> Result<f64> {
    if reports.is_empty() {
        return Err(Error::EmptyInput(
            "average accuracy of zero sessions".into(),
        ));
    }
    Ok(reports.iter().map(|r| r.top1_accuracy).sum::<f64>() / reports.len() as f64)
}

/// Final-session accuracy of the treatment minus that of the control.
pub fn delta_last(treatment: &[SessionReport], control: &[SessionReport]) -> Result<f64> {
    if treatment.is_empty() || control.is_empty() {
        return Err(Error::EmptyInput("delta of zero sessions".into()));
    }
    if treatment.len() != control.len() {
        return Err(Error::ShapeMismatch {
            context: "delta session lists",
            expected: control.len(),
            actual: treatment.len(),
        });
    }
    Ok(treatment.last().unwrap().top1_accuracy - control.last().unwrap().top1_accuracy)
}
