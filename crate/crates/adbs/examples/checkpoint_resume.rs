//! Interrupt a run after the first incremental session, reload the
//! checkpoint from disk, and finish - bit-exactly equal to the
//! uninterrupted run.
//!
//! ```bash
//! cargo run --example checkpoint_resume
//! ```

use adbs::data::{generate_synthetic, SyntheticSpec};
use adbs::embedding::FeatureExtractor;
use adbs::protocol::{
    evaluate, run_incremental_session, train_base, IncrementSpec, SessionCheckpoint, SessionSpec,
    TrainConfig,
};

fn main() -> adbs::Result<()> {
    let sessions = SessionSpec {
        base_class_count: 5,
        sessions: vec![
            IncrementSpec {
                n_way: 2,
                k_shot: 5
            };
            2
        ],
        seed: 4,
        shuffle_assignment: false,
    };
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
        seed: 4,
    };
    let stream = generate_synthetic(&spec, &sessions)?;
    let cfg = TrainConfig {
        seed: 4,
        ..TrainConfig::default()
    };

    // uninterrupted run
    let base = train_base(&stream, &cfg, FeatureExtractor::identity(8)?)?;
    let mid = run_incremental_session(&base, &stream.increments[0].train, &cfg)?;
    let done = run_incremental_session(&mid, &stream.increments[1].train, &cfg)?;

    // interrupted run: persist after session 1, reload, resume
    let path = std::env::temp_dir().join("adbs-example-checkpoint.json");
    mid.save(&path)?;
    let reloaded = SessionCheckpoint::load(&path)?;
    println!("checkpoint reloaded from {}", path.display());
    println!("  classes: {}", reloaded.classifier.num_classes());
    println!("  session: {}", reloaded.session_index);
    println!("  reload bit-exact: {}", reloaded == mid);

    let resumed = run_incremental_session(&reloaded, &stream.increments[1].train, &cfg)?;
    println!(
        "  resumed run equals uninterrupted run: {}",
        resumed == done
    );

    let report = evaluate(&resumed, &stream.cumulative_test(2))?;
    println!(
        "final session: top1 {:.4} over {} test points, d_cs {:.4}",
        report.top1_accuracy, report.num_test, report.d_cs
    );
    std::fs::remove_file(&path).ok();
    Ok(())
}
