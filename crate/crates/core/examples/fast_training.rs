// Fast training: pool every object once under a shared hierarchy, fit a
// linear classifier on the fused vectors, and compare structures on
// held-out objects.
//
// Run with `cargo run --release --example fast_training`.

use dspool::cluster_pool::{PoolStructure, StructureKind};
use dspool::pipeline::{evaluate, fast_train, generate_synthetic, FastTrainConfig, SynthConfig};

pub fn run_example() -> dspool::Result<()> {
    // Only the first view group carries class information; the other two
    // are shared noisy distractors that a global max smears over.
    let mut cfg = SynthConfig::separable(4, 20, 9, 24, 3, 0.1, 5)?;
    cfg.signal_groups = Some(vec![0]);
    cfg.distractor_sigma = Some(0.5);
    let (train, test) = generate_synthetic(&cfg)?.split_per_class(10)?;

    for kind in StructureKind::ALL {
        let (h, clf) = fast_train(&train, &PoolStructure::from(kind), &FastTrainConfig::default())?;
        let acc = evaluate(&test, &h, None, &clf)?;
        println!(
            "{:<14} nodes {:?} held-out accuracy {acc:.3}",
            kind.name(),
            h.node_counts()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(2);
    }
}
