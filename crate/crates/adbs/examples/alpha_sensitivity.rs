//! Sensitivity of the full method to the constraint weight: sweep alpha
//! over a decade and report mean accuracy on paired seeds.
//!
//! ```bash
//! cargo run --release --example alpha_sensitivity
//! ```

use adbs::data::{generate_synthetic, SyntheticSpec};
use adbs::embedding::FeatureExtractor;
use adbs::metrics::average_accuracy;
use adbs::protocol::{run_full, IncrementSpec, SessionSpec, TrainConfig};

fn main() -> adbs::Result<()> {
    let sessions = SessionSpec {
        base_class_count: 10,
        sessions: vec![
            IncrementSpec {
                n_way: 2,
                k_shot: 5
            };
            4
        ],
        seed: 0,
        shuffle_assignment: false,
    };
    println!("{:<8}{:>14}{:>14}", "alpha", "avg acc", "final acc");
    for alpha in [0.01, 0.02, 0.05, 0.08, 0.1] {
        let mut avg = Vec::new();
        let mut fin = Vec::new();
        for seed in 0..8u64 {
            let spec = SyntheticSpec {
                num_classes: 18,
                dim: 16,
                samples_per_base_class: 100,
                test_per_class: 20,
                center_separation: 1.0,
                within_class_std: 0.45,
                std_spread: 0.6,
                center_concentration: 0.0,
                novel_overlap: 0.0,
                seed,
            };
            let stream = generate_synthetic(&spec, &sessions)?;
            let cfg = TrainConfig {
                alpha,
                seed,
                temperature: 4.0,
                base_epochs: 40,
                base_lr: 0.05,
                boundary_lr: 0.01,
                ..TrainConfig::default()
            };
            let extractor = FeatureExtractor::trainable_linear(16, 16, seed)?;
            let reports = run_full(&stream, &cfg, extractor)?;
            avg.push(average_accuracy(&reports)?);
            fin.push(reports.last().unwrap().top1_accuracy);
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        println!("{alpha:<8}{:>14.4}{:>14.4}", mean(&avg), mean(&fin));
    }
    Ok(())
}
