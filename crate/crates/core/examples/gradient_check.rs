// Freeze the clustering of one object and compare the analytic backward
// pass with central differences for every structure.
//
// Run with `cargo run --example gradient_check`.

use dspool::affinity::FeatureMatrix;
use dspool::cluster_pool::{gradient_check, PoolStructure, StructureKind};
use dspool::domset::DomSetConfig;
use dspool::scheme::build_universal_hierarchy;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> dspool::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let protos = [[1.0, 0.2, 0.0, 0.0, 0.1, 0.0], [0.0, 0.0, 1.0, 0.8, 0.0, 0.3]];
    let x = FeatureMatrix::new(Array2::from_shape_fn((8, 6), |(v, c)| {
        protos[v % 2][c] + rng.random_range(0.01..0.2)
    }))?;
    for kind in StructureKind::ALL {
        let h = build_universal_hierarchy(&[&x], &PoolStructure::from(kind), &DomSetConfig::default())?;
        let report = gradient_check(x.view(), &h, 1e-6)?;
        println!(
            "{:<14} nodes {:?} max relative error {:.2e} over {} entries, tied channels {:?}",
            kind.name(),
            h.node_counts(),
            report.max_relative_error,
            report.checked_entries,
            report.tie_channels
        );
        assert!(report.max_relative_error < 1e-4);
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
