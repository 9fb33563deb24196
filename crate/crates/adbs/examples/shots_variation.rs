//! Influence of the incremental shot count on per-session accuracy: more
//! shots mean better prototypes and better boundary estimates.
//!
//! ```bash
//! cargo run --release --example shots_variation
//! ```

use adbs::data::{generate_synthetic, SyntheticSpec};
use adbs::embedding::FeatureExtractor;
use adbs::protocol::{run_full, IncrementSpec, SessionSpec, TrainConfig};

fn main() -> adbs::Result<()> {
    println!("{:<8}per-session top1 (base..final)", "k_shot");
    for k_shot in [1usize, 5, 10, 20, 50] {
        let sessions = SessionSpec {
            base_class_count: 10,
            sessions: vec![IncrementSpec { n_way: 2, k_shot }; 4],
            seed: 0,
            shuffle_assignment: false,
        };
        let mut per_session = [0.0f64; 5];
        let n = 8.0;
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
                seed,
                temperature: 8.0,
                boundary_lr: 0.01,
                ..TrainConfig::default()
            };
            let extractor = FeatureExtractor::identity(16)?;
            let reports = run_full(&stream, &cfg, extractor)?;
            for (acc, r) in per_session.iter_mut().zip(&reports) {
                *acc += r.top1_accuracy / n;
            }
        }
        let row: Vec<String> = per_session.iter().map(|a| format!("{a:.3}")).collect();
        println!("{k_shot:<8}{}", row.join("  "));
    }
    Ok(())
}
