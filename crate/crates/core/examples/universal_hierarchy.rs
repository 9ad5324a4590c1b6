// Build one clustering hierarchy shared by a whole dataset, save it, and
// replay it on a new object.
//
// Run with `cargo run --example universal_hierarchy`.

use dspool::cluster_pool::{PoolStructure, StructureKind};
use dspool::domset::DomSetConfig;
use dspool::pipeline::{generate_synthetic, SynthConfig};
use dspool::scheme::{apply_hierarchy, build_universal_hierarchy, load_hierarchy, save_hierarchy};

pub fn run_example() -> dspool::Result<()> {
    let data = generate_synthetic(&SynthConfig::separable(3, 5, 9, 18, 3, 0.05, 11)?)?;
    let structure = PoolStructure::new(StructureKind::DsAltFMax, 4)?;
    let h = build_universal_hierarchy(&data.features(), &structure, &DomSetConfig::default())?;
    println!("shared hierarchy, node counts {:?}", h.node_counts());
    for level in h.levels() {
        println!("    {:?} over {}", level.mode, level.partition);
    }

    let dir = std::env::temp_dir().join("dspool-hierarchy-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("hierarchy.json");
    save_hierarchy(&h, &path)?;
    let back = load_hierarchy(&path)?;
    assert_eq!(back, h);

    let (y, _) = apply_hierarchy(&data.objects()[0].features, &back)?;
    println!("first object pooled to {} channels", y.len());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(2);
    }
}
