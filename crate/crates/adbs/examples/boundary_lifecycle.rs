//! The life of a boundary vector: all-ones initialization, mean-value
//! expansion with freezing, and fine-tuning that only ever touches the
//! newest entries.
//!
//! ```bash
//! cargo run --example boundary_lifecycle
//! ```

use adbs::boundary::{finetune_boundaries, BoundaryVector};
use adbs::classifier::ClassifierState;
use adbs::embedding::FeatureVector;
use adbs::protocol::TrainConfig;
use adbs::seeding::{stream_rng, Stream};

fn print_boundaries(step: &str, b: &BoundaryVector) {
    let values: Vec<String> = b
        .values()
        .iter()
        .zip(b.frozen_mask())
        .map(|(v, frozen)| format!("{v:.4}{}", if *frozen { "*" } else { "" }))
        .collect();
    println!("{step:<28} [{}]   (* = frozen)", values.join(", "));
}

fn main() -> adbs::Result<()> {
    // base session: three classes, boundaries start at one
    let boundaries = BoundaryVector::init_base(3, 1e-3)?;
    print_boundaries("base init", &boundaries);

    // pretend base training moved them around
    let tuned = BoundaryVector::from_values(vec![0.85, 1.25, 1.05], vec![false; 3], 1e-3)?;
    print_boundaries("after base training", &tuned);

    // a 2-way session arrives: old entries freeze, new ones start at the
    // mean of everything seen so far
    let expanded = tuned.expand_mean_init(2)?;
    print_boundaries("expanded for session 1", &expanded);

    // fine-tune on the new classes only; the prototypes live on a basis
    // so the example stays easy to read
    let protos: Vec<FeatureVector> = (0..5)
        .map(|i| {
            let mut v = vec![0.0; 5];
            v[i] = 1.0;
            FeatureVector::new(v).unwrap()
        })
        .collect();
    let mut state = ClassifierState::from_prototypes(&protos, 1e-3)?;
    state.set_boundaries(expanded)?;

    let shots = vec![
        (3usize, FeatureVector::new(vec![0.1, 0.0, 0.0, 1.0, 0.3])?),
        (3usize, FeatureVector::new(vec![0.0, 0.2, 0.0, 1.0, 0.1])?),
        (4usize, FeatureVector::new(vec![0.0, 0.0, 0.2, 0.2, 1.0])?),
        (4usize, FeatureVector::new(vec![0.1, 0.0, 0.0, 0.4, 1.0])?),
    ];
    let cfg = TrainConfig {
        boundary_lr: 0.05,
        finetune_epochs: 10,
        temperature: 8.0,
        ..TrainConfig::default()
    };
    let mut rng = stream_rng(cfg.seed, Stream::Batching, 1);
    let after = finetune_boundaries(&state, &shots, &cfg, &mut rng)?;
    print_boundaries("after fine-tuning", &after);

    println!(
        "frozen entries returned bit-identical: {}",
        after.values()[..3]
            .iter()
            .zip(state.boundaries().values())
            .all(|(a, b)| a.to_bits() == b.to_bits())
    );
    Ok(())
}
