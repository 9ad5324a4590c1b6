// Pool one multi-view object under all four structures and show how the
// node count shrinks level by level.
//
// Run with `cargo run --example recurrent_pooling`.

use dspool::affinity::FeatureMatrix;
use dspool::cluster_pool::{forward, Clustering, PoolStructure, StructureKind};
use dspool::domset::DomSetConfig;
use ndarray::Array2;

/// Twelve views around three aspects, with a little deterministic jitter.
pub fn mug_like() -> dspool::Result<FeatureMatrix> {
    let protos = [[2.0, 1.0, 0.0, 0.0], [0.0, 1.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.5]];
    let x = Array2::from_shape_fn((12, 4), |(v, c)| {
        protos[v / 4][c] + 0.01 * (((v * 5 + c * 3) % 7) as f64)
    });
    FeatureMatrix::new(x)
}

pub fn run_example() -> dspool::Result<()> {
    let x = mug_like()?;
    let cfg = DomSetConfig::default();
    for kind in StructureKind::ALL {
        let structure = PoolStructure::from(kind);
        let (y, trace) = forward(&x, &structure, Clustering::PerObject(&cfg))?;
        println!("{:<14} nodes {:?} -> {:.3}", kind.name(), trace.node_counts(), y);
        for level in &trace.levels {
            println!("    {:?} over {}", level.mode, level.partition);
        }
        if kind == StructureKind::DsAltFMax {
            // the alternating variant keeps clustering until nothing merges
            assert!(trace.levels.len() > 1);
        }
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
