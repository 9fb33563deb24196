//! Acceptance suite: one test per release criterion, each printing a
//! single PASS line (run with `--nocapture` to see them). Tolerances are
//! pinned here, in code.

use adbs::boundary::{self, BoundaryVector};
use adbs::classifier;
use adbs::config::RunConfig;
use adbs::data::{generate_synthetic, LabeledExample, SyntheticSpec};
use adbs::embedding::{FeatureExtractor, FeatureVector};
use adbs::metrics;
use adbs::protocol::{
    evaluate, run_full, run_incremental_session, train_base, Ablation, IncrementSpec,
    SessionCheckpoint, SessionSpec, TrainConfig,
};
use adbs::verify::{
    check_constraint_gradients, check_cross_entropy_gradients, constraint_sweep,
    violating_instance, GradCheckConfig, SweepConfig,
};

fn layout(base: usize, sessions: &[(usize, usize)]) -> SessionSpec {
    SessionSpec {
        base_class_count: base,
        sessions: sessions
            .iter()
            .map(|&(n_way, k_shot)| IncrementSpec { n_way, k_shot })
            .collect(),
        seed: 0,
        shuffle_assignment: false,
    }
}

fn temp_dir(tag: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("adbs-acceptance-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

/// Plain nearest-class-mean pipeline, written independently of the
/// library's math: group, average, normalize, cosine argmax.
struct NcmOracle {
    prototypes: Vec<(i64, Vec<f64>)>,
}

impl NcmOracle {
    fn new() -> Self {
        Self {
            prototypes: Vec::new(),
        }
    }

    fn extend(&mut self, examples: &[LabeledExample]) {
        let mut labels: Vec<i64> = examples.iter().map(|e| e.label).collect();
        labels.sort_unstable();
        labels.dedup();
        for label in labels {
            let members: Vec<&LabeledExample> =
                examples.iter().filter(|e| e.label == label).collect();
            let dim = members[0].values.len();
            let mut mean = vec![0.0; dim];
            for m in &members {
                for (acc, v) in mean.iter_mut().zip(&m.values) {
                    *acc += v;
                }
            }
            for v in mean.iter_mut() {
                *v /= members.len() as f64;
            }
            let norm = mean.iter().map(|v| v * v).sum::<f64>().sqrt();
            let unit: Vec<f64> = mean.iter().map(|v| v / norm).collect();
            self.prototypes.push((label, unit));
        }
    }

    fn predict(&self, raw: &[f64]) -> i64 {
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        let unit: Vec<f64> = raw.iter().map(|v| v / norm).collect();
        let mut best = self.prototypes[0].0;
        let mut best_cos = f64::NEG_INFINITY;
        for (label, proto) in &self.prototypes {
            let cos: f64 = unit.iter().zip(proto).map(|(a, b)| a * b).sum();
            if cos > best_cos {
                best_cos = cos;
                best = *label;
            }
        }
        best
    }
}

/// Criterion 1: with the fixed baseline, every prediction of a full
/// synthetic run equals the independent plain-NCM pipeline's prediction.
#[test]
fn criterion_1_baseline_equivalence() {
    let started = std::time::Instant::now();
    let spec = SyntheticSpec {
        num_classes: 10,
        dim: 8,
        samples_per_base_class: 40,
        test_per_class: 12,
        center_separation: 1.0,
        within_class_std: 0.4,
        std_spread: 0.5,
        center_concentration: 0.0,
        novel_overlap: 0.0,
        seed: 11,
    };
    let sessions = layout(6, &[(2, 5), (2, 5)]);
    let stream = generate_synthetic(&spec, &sessions).unwrap();

    // pure NCM initialization: zero base epochs, boundaries pinned at one
    let cfg = TrainConfig {
        ablation: Ablation::FixedBaseline,
        base_epochs: 0,
        seed: 11,
        ..TrainConfig::default()
    };
    let extractor = FeatureExtractor::identity(stream.feature_dim).unwrap();
    let mut ckpt = train_base(&stream, &cfg, extractor).unwrap();

    let mut oracle = NcmOracle::new();
    oracle.extend(&stream.base.train);

    let mut compared = 0usize;
    for session in 0..stream.session_count() {
        if session > 0 {
            let train = &stream.increments[session - 1].train;
            ckpt = run_incremental_session(&ckpt, train, &cfg).unwrap();
            oracle.extend(train);
        }
        // monotone class count: base plus n_way per elapsed session
        assert_eq!(ckpt.classifier.num_classes(), 6 + 2 * session);
        for example in stream.cumulative_test(session) {
            let f = ckpt.extractor.extract(&example.values).unwrap();
            let col = classifier::predict(&ckpt.classifier, &f).unwrap();
            let ours = ckpt.label_of_column(col).unwrap();
            let theirs = oracle.predict(&example.values);
            assert_eq!(
                ours, theirs,
                "prediction mismatch in session {session} for a label-{} test point",
                example.label
            );
            compared += 1;
        }
    }
    assert!(compared > 250, "expected a meaningful comparison set");
    assert!(started.elapsed().as_secs() < 5, "runtime budget exceeded");
    println!(
        "PASS: criterion 1 - baseline equals plain NCM on {compared}/{compared} predictions ({:.2?})",
        started.elapsed()
    );
}

/// Criterion 2: analytic gradients of both losses match central finite
/// differences (h = 1e-5) on 100 seeded configurations with d <= 32,
/// C <= 10: relative error <= 1e-4 where |analytic| > 1e-6, else
/// absolute <= 1e-6.
#[test]
fn criterion_2_gradient_oracles() {
    let started = std::time::Instant::now();
    let cfg = GradCheckConfig {
        cases: 100,
        step: 1e-5,
        rel_tol: 1e-4,
        abs_tol: 1e-6,
        kink_margin: 1e-3,
        seed: 7,
    };
    let ce = check_cross_entropy_gradients(&cfg).unwrap();
    assert!(
        ce.passed(),
        "classification-loss gradients failed: {:?}",
        ce.worst_failure
    );
    let ic = check_constraint_gradients(&cfg).unwrap();
    assert!(
        ic.passed(),
        "constraint-loss gradients failed: {:?}",
        ic.worst_failure
    );
    assert!(started.elapsed().as_secs() < 10, "runtime budget exceeded");
    println!(
        "PASS: criterion 2 - {} + {} parameters matched finite differences ({:.2?})",
        ce.parameters_checked,
        ic.parameters_checked,
        started.elapsed()
    );
}

/// Criterion 3: over 1000 seeded constraint-satisfying configurations
/// with the query at each class prototype, the adaptive probability never
/// drops more than 1e-12 below the fixed one; a constructed violating
/// configuration flips the inequality, so the constraint is not vacuous.
#[test]
fn criterion_3_probability_sweep() {
    let started = std::time::Instant::now();
    let outcome = constraint_sweep(
        &SweepConfig {
            instances: 1000,
            margin: 1e-12,
            seed: 13,
        },
        &[],
    )
    .unwrap();
    assert_eq!(outcome.checked, 1000);
    assert_eq!(outcome.skipped_unsatisfied, 0);
    assert!(
        outcome.passed(),
        "sweep failed: {:?}",
        outcome.worst_failure
    );

    let (bad, target) = violating_instance();
    let report =
        boundary::verify_constraint(&bad.boundaries, &bad.weights, &bad.weights, 0.0).unwrap();
    assert!(!report.satisfied(), "the constructed instance must violate");
    let pair = boundary::compare_probabilities(
        &bad.boundaries,
        &bad.weights,
        &bad.weights[target].clone(),
        target,
        bad.temperature,
    )
    .unwrap();
    assert!(
        pair.adaptive < pair.fixed,
        "violating instance must lower the adaptive probability"
    );
    assert!(started.elapsed().as_secs() < 5, "runtime budget exceeded");
    println!(
        "PASS: criterion 3 - 1000/1000 satisfied instances hold (min margin {:.2e}), violation flips to {:.6} < {:.6} ({:.2?})",
        outcome.min_margin, pair.adaptive, pair.fixed, started.elapsed()
    );
}

/// Criterion 4: closed-form spot checks at 1e-6 (and exactness where
/// exactness is claimed).
#[test]
fn criterion_4_closed_form_spot_checks() {
    let e0 = FeatureVector::new(vec![1.0, 0.0]).unwrap();
    let e1 = FeatureVector::new(vec![0.0, 1.0]).unwrap();
    let basis = [e0.clone(), e1.clone()];

    // unit boundaries make the constraint loss exactly zero, for any
    // prototypes and weights
    let p = [
        FeatureVector::new(vec![0.31, -0.7, 0.2])
            .unwrap()
            .normalize()
            .unwrap(),
        FeatureVector::new(vec![0.9, -0.4, 0.1])
            .unwrap()
            .normalize()
            .unwrap(),
    ];
    let w = [
        FeatureVector::new(vec![0.5, 0.5, -0.2]).unwrap(),
        FeatureVector::new(vec![-0.1, 0.8, 0.3]).unwrap(),
    ];
    assert_eq!(boundary::ic_loss(&[1.0, 1.0], &p, &w).unwrap(), 0.0);

    // orthonormal basis, both boundaries at 0.5: two active terms of 0.5
    let ic = boundary::ic_loss(&[0.5, 0.5], &basis, &basis).unwrap();
    assert!((ic - 1.0).abs() < 1e-6, "IC loss {ic} != 1.0");

    // softmax pair at boundaries (1.2, 1.0), temperature 1, query at the
    // first prototype
    let pair = boundary::compare_probabilities(&[1.2, 1.0], &basis, &e0, 0, 1.0).unwrap();
    assert!((pair.fixed - 0.731059).abs() < 1e-6, "fixed {}", pair.fixed);
    assert!(
        (pair.adaptive - 0.768525).abs() < 1e-6,
        "adaptive {}",
        pair.adaptive
    );

    // separation degree of two orthogonal prototypes
    let d = metrics::separation_degree(&basis).unwrap();
    assert!((d - 0.5).abs() < 1e-6, "d_cs {d} != 0.5");

    println!("PASS: criterion 4 - closed-form spot checks match within 1e-6");
}

/// Criterion 5: directional reproduction of the ablation ordering on the
/// reference synthetic benchmark (16-dim features, 10 base classes x 100
/// samples, 4 incremental sessions of 2-way 5-shot, 20 paired seeds):
/// the full method strictly beats the fixed baseline on mean final
/// accuracy and on mean class-separation degree; the boundaries-only arm
/// is reported alongside.
#[test]
fn criterion_5_directional_ablation() {
    let started = std::time::Instant::now();
    let sessions = layout(10, &[(2, 5), (2, 5), (2, 5), (2, 5)]);
    let arms = [Ablation::FixedBaseline, Ablation::AdbOnly, Ablation::AdbIc];
    let mut final_acc = [Vec::new(), Vec::new(), Vec::new()];
    let mut final_dcs = [Vec::new(), Vec::new(), Vec::new()];

    for seed in 0..20u64 {
        let spec = SyntheticSpec {
            num_classes: 18,
            dim: 16,
            samples_per_base_class: 100,
            test_per_class: 50,
            center_separation: 1.0,
            within_class_std: 0.45,
            std_spread: 0.6,
            center_concentration: 0.0,
            novel_overlap: 0.0,
            seed,
        };
        let stream = generate_synthetic(&spec, &sessions).unwrap();
        for (i, &arm) in arms.iter().enumerate() {
            let cfg = TrainConfig {
                ablation: arm,
                seed,
                temperature: 4.0,
                base_epochs: 40,
                base_lr: 0.05,
                boundary_lr: 0.01,
                ..TrainConfig::default()
            };
            let extractor = FeatureExtractor::trainable_linear(16, 16, seed).unwrap();
            let reports = run_full(&stream, &cfg, extractor).unwrap();
            let last = reports.last().unwrap();
            final_acc[i].push(last.top1_accuracy);
            final_dcs[i].push(last.d_cs);
        }
    }

    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let acc = [
        mean(&final_acc[0]),
        mean(&final_acc[1]),
        mean(&final_acc[2]),
    ];
    let dcs = [
        mean(&final_dcs[0]),
        mean(&final_dcs[1]),
        mean(&final_dcs[2]),
    ];
    for (i, &arm) in arms.iter().enumerate() {
        println!(
            "  {arm:<15} mean final top1 {:.4}   mean final d_cs {:.5}",
            acc[i], dcs[i]
        );
    }
    assert!(
        acc[2] > acc[0],
        "adaptive+constraint accuracy {:.4} must strictly beat the fixed baseline {:.4}",
        acc[2],
        acc[0]
    );
    assert!(
        dcs[2] > dcs[0],
        "adaptive+constraint separation {:.5} must exceed the fixed baseline {:.5}",
        dcs[2],
        dcs[0]
    );
    assert!(started.elapsed().as_secs() < 60, "runtime budget exceeded");
    println!(
        "PASS: criterion 5 - ablation direction holds (acc +{:.4}, d_cs +{:.5}, boundaries-only at {:.4}) ({:.2?})",
        acc[2] - acc[0],
        dcs[2] - dcs[0],
        acc[1],
        started.elapsed()
    );
}

/// Criterion 6: protocol invariants - frozen state is bit-identical
/// across sessions, mean-init equals the running mean within 1e-15, and a
/// checkpoint written to disk resumes bit-exactly.
#[test]
fn criterion_6_protocol_invariants() {
    let spec = SyntheticSpec {
        num_classes: 9,
        dim: 8,
        samples_per_base_class: 30,
        test_per_class: 8,
        center_separation: 1.0,
        within_class_std: 0.35,
        std_spread: 0.4,
        center_concentration: 0.0,
        novel_overlap: 0.0,
        seed: 21,
    };
    let sessions = layout(5, &[(2, 5), (2, 3)]);
    let stream = generate_synthetic(&spec, &sessions).unwrap();
    let cfg = TrainConfig {
        seed: 21,
        ..TrainConfig::default()
    };
    let identity = || FeatureExtractor::identity(8).unwrap();

    // bit-exact freezing of old boundaries and old columns
    let ckpt0 = train_base(&stream, &cfg, identity()).unwrap();
    let m_bits: Vec<u64> = ckpt0
        .classifier
        .boundaries()
        .values()
        .iter()
        .map(|v| v.to_bits())
        .collect();
    let w_bits: Vec<Vec<u64>> = ckpt0
        .classifier
        .weights()
        .iter()
        .map(|w| w.values().iter().map(|v| v.to_bits()).collect())
        .collect();
    let ckpt1 = run_incremental_session(&ckpt0, &stream.increments[0].train, &cfg).unwrap();
    let ckpt2 = run_incremental_session(&ckpt1, &stream.increments[1].train, &cfg).unwrap();
    for (c, bits) in m_bits.iter().enumerate() {
        assert_eq!(
            ckpt2.classifier.boundaries().values()[c].to_bits(),
            *bits,
            "boundary {c} changed across sessions"
        );
    }
    for (c, bits) in w_bits.iter().enumerate() {
        let after: Vec<u64> = ckpt2.classifier.weights()[c]
            .values()
            .iter()
            .map(|v| v.to_bits())
            .collect();
        assert_eq!(&after, bits, "column {c} changed across sessions");
    }

    // mean-init equals the running mean within 1e-15
    let b =
        BoundaryVector::from_values(vec![0.42, 0.87, 1.31], vec![true, true, false], 1e-3).unwrap();
    let expanded = b.expand_mean_init(2).unwrap();
    let expected = (0.42 + 0.87 + 1.31) / 3.0;
    for &v in &expanded.values()[3..] {
        assert!((v - expected).abs() <= 1e-15);
    }

    // checkpoint round-trip resumes bit-exactly
    let dir = temp_dir("roundtrip");
    let path = dir.join("session1.json");
    ckpt1.save(&path).unwrap();
    let reloaded = SessionCheckpoint::load(&path).unwrap();
    assert_eq!(reloaded, ckpt1, "checkpoint must reload bit-exactly");
    let resumed = run_incremental_session(&reloaded, &stream.increments[1].train, &cfg).unwrap();
    assert_eq!(
        resumed, ckpt2,
        "resumed run must match the uninterrupted run"
    );
    let direct = evaluate(&ckpt2, &stream.cumulative_test(2)).unwrap();
    let via_resume = evaluate(&resumed, &stream.cumulative_test(2)).unwrap();
    assert_eq!(direct, via_resume);
    std::fs::remove_dir_all(&dir).ok();

    println!(
        "PASS: criterion 6 - frozen state bit-exact, mean-init exact, checkpoint resume bit-exact"
    );
}

/// Criterion 7: two runs of the `run` command with the same config and
/// seed produce byte-identical results.csv and similarity matrices.
#[test]
fn criterion_7_run_determinism() {
    let toml = r#"
seed = 5
num_classes = 8
feature_dim = 8
samples_per_base_class = 25
test_per_class = 6
within_class_std = 0.4
base_classes = 4
num_sessions = 2
n_way = 2
k_shot = 5
base_epochs = 4
finetune_epochs = 5
"#;
    let out_a = temp_dir("det-a");
    let out_b = temp_dir("det-b");
    for out in [&out_a, &out_b] {
        let cfg = RunConfig::from_toml(toml)
            .unwrap()
            .with_overrides(None, Some(out.clone()));
        adbs::cli::cmd_run(&cfg).unwrap();
    }
    let mut compared = 0usize;
    for name in [
        "results.csv",
        "simmatrix_0.csv",
        "simmatrix_1.csv",
        "simmatrix_2.csv",
    ] {
        let a = std::fs::read(out_a.join(name)).unwrap();
        let b = std::fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
        compared += 1;
    }
    std::fs::remove_dir_all(&out_a).ok();
    std::fs::remove_dir_all(&out_b).ok();
    println!("PASS: criterion 7 - {compared} output files byte-identical across reruns");
}
