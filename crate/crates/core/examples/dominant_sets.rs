// Replicator dynamics, peel-off partitioning and the exact
// dominant-set check on a small planted-clique graph.
//
// Run with `cargo run --example dominant_sets`.

use dspool::affinity::AffinityMatrix;
use dspool::domset::{
    brute_force_dominant_sets, check_dominant_set, extract_dominant_set, peel_partition, DomSetConfig,
};
use ndarray::Array2;

pub fn run_example() -> dspool::Result<()> {
    // 4-clique on {0,1,2,3} plus a sparse tail.
    let mut a = Array2::zeros((7, 7));
    let edges = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3), (3, 4), (4, 5), (5, 6)];
    for (i, j) in edges {
        a[[i, j]] = 1.0;
        a[[j, i]] = 1.0;
    }
    let a = AffinityMatrix::new(a)?;
    let cfg = DomSetConfig::default();

    let first = extract_dominant_set(&a, &cfg)?;
    println!(
        "first set {:?} after {} iterations, cohesiveness {:.4}",
        first.support, first.iterations, first.cohesiveness
    );
    assert_eq!(first.support, vec![0, 1, 2, 3]);
    assert!(check_dominant_set(&first.support, &a, 1e-6)?.is_none());

    let exact = brute_force_dominant_sets(&a, 1e-9)?;
    println!("all dominant sets: {exact:?}");
    assert!(exact.contains(&first.support));

    let p = peel_partition(&a, &cfg)?;
    println!("peel-off partition: {p}");
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(2);
    }
}
