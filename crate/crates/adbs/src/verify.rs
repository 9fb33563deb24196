//! Numerical verifiers.
//!
//! Two kinds of checks live here: central finite-difference validation of
//! the analytic gradients of both losses, and a randomized sweep
//! confirming that whenever the pairwise boundary constraint holds, the
//! adaptive model never lowers the probability of the correct class at
//! its own prototype.
//!
//! The finite-difference side only ever evaluates loss values, so it stays
//! independent of the analytic gradient code it is checking.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::boundary::{compare_probabilities, ic_loss, verify_constraint};
use crate::classifier::{cross_entropy_grads_raw, cross_entropy_of_values, scaled_cosine_logits};
use crate::embedding::FeatureVector;
use crate::error::{Error, Result};
use crate::seeding::{stream_rng, Stream};

/// Magnitude below which gradients are compared absolutely instead of
/// relatively.
const MAGNITUDE_GATE: f64 = 1e-6;

/// Settings for the finite-difference gradient checks.
#[derive(Debug, Clone)]
pub struct GradCheckConfig {
    /// Number of random configurations.
    pub cases: usize,
    /// Central-difference step.
    pub step: f64,
    /// Relative tolerance where the analytic gradient is large.
    pub rel_tol: f64,
    /// Absolute tolerance where the analytic gradient is tiny.
    pub abs_tol: f64,
    /// Hinge terms closer than this to zero cause a resample (constraint
    /// loss only).
    pub kink_margin: f64,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            cases: 100,
            step: 1e-5,
            rel_tol: 1e-4,
            abs_tol: 1e-6,
            kink_margin: 1e-3,
            seed: 0,
        }
    }
}

/// Outcome of one gradient check run.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub cases: usize,
    pub parameters_checked: usize,
    pub failures: usize,
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    /// Description of the worst failing parameter, if any failed.
    pub worst_failure: Option<String>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    fn new() -> Self {
        Self {
            cases: 0,
            parameters_checked: 0,
            failures: 0,
            max_rel_error: 0.0,
            max_abs_error: 0.0,
            worst_failure: None,
        }
    }

    fn record(&mut self, cfg: &GradCheckConfig, analytic: f64, numeric: f64, what: String) {
        self.parameters_checked += 1;
        let abs = (analytic - numeric).abs();
        self.max_abs_error = self.max_abs_error.max(abs);
        let ok = if analytic.abs() > MAGNITUDE_GATE {
            let rel = abs / analytic.abs();
            self.max_rel_error = self.max_rel_error.max(rel);
            rel <= cfg.rel_tol
        } else {
            abs <= cfg.abs_tol
        };
        if !ok {
            self.failures += 1;
            if self.worst_failure.is_none() {
                self.worst_failure = Some(format!(
                    "{what}: analytic {analytic:e}, finite-difference {numeric:e}"
                ));
            }
        }
    }
}

fn gaussian_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn nonzero_feature(rng: &mut ChaCha8Rng, dim: usize) -> FeatureVector {
    loop {
        let v = gaussian_vec(rng, dim);
        if v.iter().map(|x| x * x).sum::<f64>().sqrt() > 0.1 {
            return FeatureVector::new(v).unwrap();
        }
    }
}

fn unit_feature(rng: &mut ChaCha8Rng, dim: usize) -> FeatureVector {
    nonzero_feature(rng, dim).normalize().unwrap()
}

/// Validates the analytic classification-loss gradients (boundaries,
/// weight columns, feature) against central finite differences on seeded
/// random configurations with `d <= 32`, `C <= 10`.
pub fn check_cross_entropy_gradients(cfg: &GradCheckConfig) -> Result<GradCheckReport> {
    let mut rng = stream_rng(cfg.seed, Stream::Verify, 1);
    let mut report = GradCheckReport::new();
    let h = cfg.step;

    for case in 0..cfg.cases {
        let dim = rng.random_range(2..=32usize);
        let classes = rng.random_range(2..=10usize);
        let temperature = rng.random_range(1.0..=16.0);
        let label = rng.random_range(0..classes);
        let m: Vec<f64> = (0..classes).map(|_| rng.random_range(0.5..1.5)).collect();
        let weights: Vec<FeatureVector> = (0..classes)
            .map(|_| nonzero_feature(&mut rng, dim))
            .collect();
        let feature = nonzero_feature(&mut rng, dim);

        let loss = |m: &[f64], weights: &[FeatureVector], f: &FeatureVector| -> Result<f64> {
            let values = scaled_cosine_logits(m, weights, f, temperature)?;
            cross_entropy_of_values(&values, label)
        };
        let analytic = cross_entropy_grads_raw(&m, &weights, &feature, label, temperature)?;

        for c in 0..classes {
            let mut plus = m.clone();
            let mut minus = m.clone();
            plus[c] += h;
            minus[c] -= h;
            let numeric =
                (loss(&plus, &weights, &feature)? - loss(&minus, &weights, &feature)?) / (2.0 * h);
            report.record(
                cfg,
                analytic.wrt_boundaries[c],
                numeric,
                format!("case {case}: dL/dm[{c}]"),
            );
        }

        for c in 0..classes {
            for k in 0..dim {
                let perturb = |delta: f64| -> Result<f64> {
                    let mut cols = weights.clone();
                    let mut raw = cols[c].values().to_vec();
                    raw[k] += delta;
                    cols[c] = FeatureVector::new(raw)?;
                    loss(&m, &cols, &feature)
                };
                let numeric = (perturb(h)? - perturb(-h)?) / (2.0 * h);
                report.record(
                    cfg,
                    analytic.wrt_weights[c][k],
                    numeric,
                    format!("case {case}: dL/dW[{c}][{k}]"),
                );
            }
        }

        for k in 0..dim {
            let perturb = |delta: f64| -> Result<f64> {
                let mut raw = feature.values().to_vec();
                raw[k] += delta;
                loss(&m, &weights, &FeatureVector::new(raw)?)
            };
            let numeric = (perturb(h)? - perturb(-h)?) / (2.0 * h);
            report.record(
                cfg,
                analytic.wrt_feature[k],
                numeric,
                format!("case {case}: dL/df[{k}]"),
            );
        }

        report.cases += 1;
    }
    Ok(report)
}

/// Validates the analytic constraint-loss subgradients against central
/// finite differences, resampling configurations that land within
/// `kink_margin` of a hinge kink.
pub fn check_constraint_gradients(cfg: &GradCheckConfig) -> Result<GradCheckReport> {
    let mut rng = stream_rng(cfg.seed, Stream::Verify, 2);
    let mut report = GradCheckReport::new();
    let h = cfg.step;

    for case in 0..cfg.cases {
        let (m, prototypes, weights) = loop {
            let dim = rng.random_range(2..=32usize);
            let classes = rng.random_range(2..=10usize);
            let m: Vec<f64> = (0..classes).map(|_| rng.random_range(0.3..1.7)).collect();
            let prototypes: Vec<FeatureVector> =
                (0..classes).map(|_| unit_feature(&mut rng, dim)).collect();
            let weights: Vec<FeatureVector> =
                (0..classes).map(|_| unit_feature(&mut rng, dim)).collect();

            // off-diagonal terms too close to the hinge kink are not
            // differentiable; resample those configurations
            let mut near_kink = false;
            for i in 0..classes {
                for j in 0..classes {
                    if i == j {
                        continue;
                    }
                    let own = prototypes[i].dot(&weights[i]).unwrap();
                    let cross = prototypes[i].dot(&weights[j]).unwrap();
                    let term = (1.0 - m[i]) * own + (m[j] - 1.0) * cross;
                    if term.abs() < cfg.kink_margin {
                        near_kink = true;
                    }
                }
            }
            if !near_kink {
                break (m, prototypes, weights);
            }
        };
        let classes = m.len();
        let dim = prototypes[0].dim();

        let analytic = crate::boundary::ic_grads(&m, &prototypes, &weights)?;

        for c in 0..classes {
            let mut plus = m.clone();
            let mut minus = m.clone();
            plus[c] += h;
            minus[c] -= h;
            let numeric = (ic_loss(&plus, &prototypes, &weights)?
                - ic_loss(&minus, &prototypes, &weights)?)
                / (2.0 * h);
            report.record(
                cfg,
                analytic.wrt_boundaries[c],
                numeric,
                format!("case {case}: dL/dm[{c}]"),
            );
        }

        for c in 0..classes {
            for k in 0..dim {
                let perturb = |delta: f64| -> Result<f64> {
                    let mut cols = weights.clone();
                    let mut raw = cols[c].values().to_vec();
                    raw[k] += delta;
                    cols[c] = FeatureVector::new(raw)?;
                    ic_loss(&m, &prototypes, &cols)
                };
                let numeric = (perturb(h)? - perturb(-h)?) / (2.0 * h);
                report.record(
                    cfg,
                    analytic.wrt_weights[c][k],
                    numeric,
                    format!("case {case}: dL/dW[{c}][{k}]"),
                );
            }
        }

        report.cases += 1;
    }
    Ok(report)
}

/// One configuration for the probability sweep: boundaries, unit weight
/// columns (which double as the class prototypes), and a temperature.
#[derive(Debug, Clone)]
pub struct SweepInstance {
    pub boundaries: Vec<f64>,
    pub weights: Vec<FeatureVector>,
    pub temperature: f64,
}

/// Settings for the probability sweep.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    /// Number of random constraint-satisfying instances.
    pub instances: usize,
    /// Numerical slack on the probability inequality.
    pub margin: f64,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            instances: 1000,
            margin: 1e-12,
            seed: 0,
        }
    }
}

/// Outcome of the probability sweep.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    /// Instances whose constraint held and whose probabilities were checked.
    pub checked: usize,
    /// Instances filtered out because the constraint did not hold.
    pub skipped_unsatisfied: usize,
    /// Constraint-satisfying instances where the adaptive probability fell
    /// below the fixed one beyond the margin.
    pub failures: usize,
    /// Smallest observed `p_adaptive - p_fixed` among checked instances.
    pub min_margin: f64,
    pub worst_failure: Option<String>,
}

impl SweepOutcome {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Draws a random instance that satisfies the pairwise constraint by
/// construction: unit prototypes reused as weights, and boundary offsets
/// `m_i = 1 + delta_i` with `min_i delta_i >= max_j delta_j * max(0,
/// cos_ij)`, which makes every off-diagonal term non-positive.
pub fn random_satisfying_instance(rng: &mut ChaCha8Rng) -> SweepInstance {
    let classes = rng.random_range(2..=8usize);
    let dim = rng.random_range(2..=16usize);
    let temperature = rng.random_range(1.0..=16.0);
    let weights: Vec<FeatureVector> = (0..classes).map(|_| unit_feature(rng, dim)).collect();

    let mut max_cos = 0.0f64;
    for i in 0..classes {
        for j in 0..classes {
            if i != j {
                max_cos = max_cos.max(weights[i].dot(&weights[j]).unwrap());
            }
        }
    }

    let style = rng.random_range(0..4u8);
    let boundaries: Vec<f64> = match style {
        // exactly the fixed model
        0 => vec![1.0; classes],
        // one shared offset: terms become delta * (cos_ij - 1) <= 0
        1 => {
            let delta = rng.random_range(0.0..0.5);
            vec![1.0 + delta; classes]
        }
        // per-class offsets inside the provably safe band
        _ => {
            let hi = rng.random_range(0.1..0.5);
            let lo = hi * max_cos.min(1.0);
            (0..classes)
                .map(|_| 1.0 + rng.random_range(lo..=hi))
                .collect()
        }
    };

    SweepInstance {
        boundaries,
        weights,
        temperature,
    }
}

/// A constructed instance that violates the constraint and demonstrably
/// flips the probability inequality; returns the instance and the class
/// whose probability drops.
pub fn violating_instance() -> (SweepInstance, usize) {
    let e0 = FeatureVector::new(vec![1.0, 0.0]).unwrap();
    let e1 = FeatureVector::new(vec![0.0, 1.0]).unwrap();
    (
        SweepInstance {
            // shrinking m_0 below 1 makes the (0, 1) term positive and
            // lowers the probability of class 0 at its own prototype
            boundaries: vec![0.9, 1.0],
            weights: vec![e0, e1],
            temperature: 1.0,
        },
        0,
    )
}

/// Runs the probability sweep over `cfg.instances` random
/// constraint-satisfying instances plus any injected ones. Every instance
/// is first filtered through the constraint verifier; only satisfying
/// instances take part in the probability comparison, for every class
/// with the query at that class's prototype.
pub fn constraint_sweep(cfg: &SweepConfig, injected: &[SweepInstance]) -> Result<SweepOutcome> {
    let mut rng = stream_rng(cfg.seed, Stream::Verify, 3);
    let mut outcome = SweepOutcome {
        checked: 0,
        skipped_unsatisfied: 0,
        failures: 0,
        min_margin: f64::INFINITY,
        worst_failure: None,
    };

    let mut instances: Vec<SweepInstance> = (0..cfg.instances)
        .map(|_| random_satisfying_instance(&mut rng))
        .collect();
    instances.extend_from_slice(injected);

    for (idx, inst) in instances.iter().enumerate() {
        let report = verify_constraint(&inst.boundaries, &inst.weights, &inst.weights, 0.0)?;
        if !report.satisfied() {
            outcome.skipped_unsatisfied += 1;
            continue;
        }
        outcome.checked += 1;
        for (target, query) in inst.weights.iter().enumerate() {
            let pair = compare_probabilities(
                &inst.boundaries,
                &inst.weights,
                query,
                target,
                inst.temperature,
            )?;
            let margin = pair.adaptive - pair.fixed;
            outcome.min_margin = outcome.min_margin.min(margin);
            if margin < -cfg.margin {
                outcome.failures += 1;
                if outcome.worst_failure.is_none() {
                    outcome.worst_failure = Some(format!(
                        "instance {idx}, class {target}: p_adaptive {} < p_fixed {}",
                        pair.adaptive, pair.fixed
                    ));
                }
            }
        }
    }
    if outcome.checked == 0 {
        return Err(Error::EmptyInput(
            "constraint sweep checked zero instances".into(),
        ));
    }
    Ok(outcome)
}
