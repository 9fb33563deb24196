//! Export a stream to the feature CSV format, reload it, and confirm the
//! round trip is exact - the same contract the `gen-data` subcommand and
//! `feature_csv` config key rely on.
//!
//! ```bash
//! cargo run --example feature_csv_roundtrip
//! ```

use adbs::data::{export_feature_csv, generate_synthetic, load_feature_csv, SyntheticSpec};
use adbs::protocol::{IncrementSpec, SessionSpec};

fn main() -> adbs::Result<()> {
    let sessions = SessionSpec {
        base_class_count: 4,
        sessions: vec![IncrementSpec {
            n_way: 2,
            k_shot: 3,
        }],
        seed: 9,
        shuffle_assignment: false,
    };
    let spec = SyntheticSpec {
        num_classes: 6,
        dim: 4,
        samples_per_base_class: 8,
        test_per_class: 3,
        center_separation: 1.0,
        within_class_std: 0.3,
        std_spread: 0.0,
        center_concentration: 0.0,
        novel_overlap: 0.0,
        seed: 9,
    };
    let stream = generate_synthetic(&spec, &sessions)?;

    let path = std::env::temp_dir().join("adbs-example-features.csv");
    export_feature_csv(&stream, &path)?;
    let text = std::fs::read_to_string(&path)?;
    println!("wrote {} ({} lines)", path.display(), text.lines().count());
    println!("first rows:");
    for line in text.lines().take(3) {
        println!("  {line}");
    }

    let reloaded = load_feature_csv(&path, &sessions)?;
    println!("round trip exact: {}", reloaded == stream);
    println!(
        "k_shot enforced: increment holds {} train rows for 2 classes x 3 shots",
        reloaded.increments[0].train.len()
    );
    std::fs::remove_file(&path).ok();
    Ok(())
}
