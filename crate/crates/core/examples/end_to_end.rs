// End-to-end training: learn a per-view front end and the classifier
// jointly, backpropagating through the pooling layer with the hierarchy
// held fixed.
//
// Run with `cargo run --release --example end_to_end`.

use dspool::cluster_pool::StructureKind;
use dspool::domset::DomSetConfig;
use dspool::pipeline::{
    end_to_end_train, evaluate, generate_synthetic, EndToEndConfig, SynthConfig, TrainMode, TrainedModel,
};
use dspool::scheme::build_universal_hierarchy;

pub fn run_example() -> dspool::Result<()> {
    let data = generate_synthetic(&SynthConfig::separable(3, 12, 6, 12, 2, 0.1, 2)?)?;
    let (train, test) = data.split_per_class(8)?;
    let h = build_universal_hierarchy(
        &train.features(),
        &StructureKind::DsAltFMax.into(),
        &DomSetConfig::default(),
    )?;
    let cfg = EndToEndConfig {
        epochs: 60,
        ..EndToEndConfig::default()
    };
    let out = end_to_end_train(&train, &h, &cfg)?;
    let first = out.losses[0];
    let last = *out.losses.last().expect("losses are recorded");
    println!("loss {first:.4} -> {last:.4} over {} epochs", cfg.epochs);
    assert!(last < first);

    let model = TrainedModel {
        mode: TrainMode::E2e,
        hierarchy: h,
        front_end: Some(out.front_end),
        classifier: out.classifier,
    };
    println!(
        "train accuracy {:.3}, held-out accuracy {:.3}",
        model.evaluate(&train)?,
        evaluate(&test, &model.hierarchy, model.front_end.as_ref(), &model.classifier)?
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(2);
    }
}
