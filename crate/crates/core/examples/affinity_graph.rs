// Build the view-affinity graph of one object and write it to disk.
//
// Run with `cargo run --example affinity_graph`.

use dspool::affinity::{build_affinity, FeatureMatrix};
use dspool::AffinityMatrix;

pub fn run_example() -> dspool::Result<()> {
    // Five views, two visual aspects.
    let x = FeatureMatrix::from_rows(&[
        vec![1.0, 0.0, 0.0],
        vec![1.0, 0.1, 0.0],
        vec![0.9, 0.0, 0.0],
        vec![0.0, 0.0, 1.0],
        vec![0.0, 0.1, 1.0],
    ])?;
    let a = build_affinity(&x);
    println!("affinity of {} views:\n{}", a.len(), a.view());
    assert_eq!(a.get(0, 3), 0.0);
    assert!(a.get(0, 1) > 0.9);

    let dir = std::env::temp_dir().join("dspool-affinity-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("affinity.txt");
    a.write(&path)?;
    assert_eq!(AffinityMatrix::read(&path)?, a);
    println!("written to {}", path.display());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(2);
    }
}
