//! Command-line front end over the file formats of the crate.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on validation or
//! numerical errors (including a failed gradient check).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::affinity::{build_affinity, AffinityMatrix, FeatureMatrix};
use crate::cluster_pool::{forward, gradient_check, Clustering, PoolStructure, StructureKind, DEFAULT_MAX_DEPTH};
use crate::domset::{peel_partition, DomSetConfig};
use crate::error::{Error, Result};
use crate::io::format_matrix;
use crate::pipeline::{
    contiguous_groups, end_to_end_train_from, fast_train, generate_synthetic, ClassifierConfig, Dataset,
    EndToEndConfig, FastTrainConfig, LinearClassifier, SynthConfig, TrainMode, TrainableFrontEnd, TrainedModel,
};
use crate::scheme::{build_universal_hierarchy, load_hierarchy, save_hierarchy, ClusteringHierarchy};

#[derive(Debug, Parser)]
#[command(
    name = "dspool",
    version,
    about = "Recurrent dominant-set clustering and pooling of multi-view features"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Partition views into dominant sets; prints partition JSON.
    Cluster(ClusterArgs),
    /// Pool one object's views into a single vector.
    Pool(PoolArgs),
    /// Compare the backward pass with central differences.
    Gradcheck(GradcheckArgs),
    /// Build a universal clustering hierarchy from a dataset.
    Hierarchy(HierarchyArgs),
    /// Generate a synthetic multi-view dataset.
    Synth(SynthArgs),
    /// Train a classifier (fast or end-to-end); prints metrics JSON.
    Train(TrainArgs),
    /// Evaluate a trained model on a dataset; prints metrics JSON.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DomSetArgs {
    /// Replicator stopping tolerance (L1 change between iterates).
    #[arg(long, default_value = "1e-8")]
    pub tol: f64,
    /// Replicator iteration cap.
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    /// Minimum converged weight of a cluster member.
    #[arg(long, default_value = "1e-5")]
    pub support_threshold: f64,
}

impl DomSetArgs {
    fn config(&self) -> Result<DomSetConfig> {
        let cfg = DomSetConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            support_threshold: self.support_threshold,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct StructureArgs {
    /// Pooling structure.
    #[arg(long, value_enum)]
    pub structure: StructureName,
    /// Maximum number of clustering recurrences.
    #[arg(long, default_value_t = DEFAULT_MAX_DEPTH)]
    pub depth: usize,
}

impl StructureArgs {
    fn structure(&self) -> Result<PoolStructure> {
        PoolStructure::new(self.structure.into(), self.depth)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StructureName {
    #[value(name = "f-max")]
    FMax,
    #[value(name = "ds-avg-f-max")]
    DsAvgFMax,
    #[value(name = "ds-max-f-avg")]
    DsMaxFAvg,
    #[value(name = "ds-alt-f-max")]
    DsAltFMax,
}

impl From<StructureName> for StructureKind {
    fn from(s: StructureName) -> Self {
        match s {
            StructureName::FMax => StructureKind::FMax,
            StructureName::DsAvgFMax => StructureKind::DsAvgFMax,
            StructureName::DsMaxFAvg => StructureKind::DsMaxFAvg,
            StructureName::DsAltFMax => StructureKind::DsAltFMax,
        }
    }
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    /// Feature matrix file (`n d` header, one view per row).
    #[arg(long, conflicts_with = "affinity", required_unless_present = "affinity")]
    pub features: Option<PathBuf>,
    /// Affinity matrix file (`n n` header).
    #[arg(long)]
    pub affinity: Option<PathBuf>,
    #[command(flatten)]
    pub domset: DomSetArgs,
    /// Write the partition here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PoolArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[command(flatten)]
    pub structure: StructureArgs,
    /// Replay this hierarchy instead of clustering the object itself.
    #[arg(long)]
    pub hierarchy: Option<PathBuf>,
    #[command(flatten)]
    pub domset: DomSetArgs,
    /// Write the pooled vector here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the recurrence trace JSON here.
    #[arg(long)]
    pub trace_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[command(flatten)]
    pub structure: StructureArgs,
    /// Frozen hierarchy; defaults to the object's own clustering.
    #[arg(long)]
    pub hierarchy: Option<PathBuf>,
    #[command(flatten)]
    pub domset: DomSetArgs,
    /// Central-difference step.
    #[arg(long, default_value = "1e-6")]
    pub eps: f64,
    /// Largest acceptable relative error.
    #[arg(long, default_value = "1e-4")]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct HierarchyArgs {
    /// Dataset manifest JSON.
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub structure: StructureArgs,
    #[command(flatten)]
    pub domset: DomSetArgs,
    /// Hierarchy JSON output path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output folder; receives `train/` and, when requested, `test/`.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub classes: usize,
    /// Training objects per class.
    #[arg(long, default_value_t = 40)]
    pub objects_per_class: usize,
    /// Held-out objects per class.
    #[arg(long, default_value_t = 0)]
    pub test_per_class: usize,
    #[arg(long, default_value_t = 12)]
    pub views: usize,
    #[arg(long, default_value_t = 64)]
    pub dim: usize,
    /// Number of contiguous view groups.
    #[arg(long, default_value_t = 3)]
    pub groups: usize,
    /// Noise on views of informative groups.
    #[arg(long, default_value_t = 0.05)]
    pub sigma: f64,
    /// Noise on views of uninformative groups.
    #[arg(long)]
    pub distractor_sigma: Option<f64>,
    /// Informative groups, comma separated (all when omitted).
    #[arg(long, value_delimiter = ',')]
    pub signal_groups: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeName {
    Fast,
    E2e,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub mode: ModeName,
    /// Training manifest JSON.
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub structure: StructureArgs,
    /// Recorded hierarchy to train with; built from the data when omitted.
    #[arg(long)]
    pub hierarchy: Option<PathBuf>,
    #[command(flatten)]
    pub domset: DomSetArgs,
    /// Step size relative to the loss curvature bound [default: 1.0 fast, 0.5 e2e].
    #[arg(long)]
    pub lr: Option<f64>,
    /// Gradient-descent epochs [default: 500 fast, 200 e2e].
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Weight decay on classifier weights.
    #[arg(long, default_value = "1e-4")]
    pub l2: f64,
    /// Uniform perturbation of the identity front end at e2e start.
    #[arg(long, default_value_t = 0.0)]
    pub init_scale: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Model JSON output path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Model JSON written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Evaluation manifest JSON.
    #[arg(long)]
    pub data: PathBuf,
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                1
            } else {
                let _ = write!(stdout, "{text}");
                0
            };
        }
    };
    match execute(cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            2
        }
    }
}

fn require_file(path: &Path) -> Result<()> {
    if !path.is_file() {
        return Err(Error::InvalidInput(format!(
            "{} is not a readable file",
            path.display()
        )));
    }
    Ok(())
}

fn require_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() && !p.is_dir() => Err(Error::InvalidInput(format!(
            "output folder {} does not exist",
            p.display()
        ))),
        _ => Ok(()),
    }
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn load_fixed(path: &Option<PathBuf>, structure: &PoolStructure) -> Result<Option<ClusteringHierarchy>> {
    let Some(path) = path else { return Ok(None) };
    let h = load_hierarchy(path)?;
    if h.structure() != structure.kind {
        return Err(Error::InvalidHierarchy(format!(
            "{} holds a {} hierarchy, not {}",
            path.display(),
            h.structure(),
            structure.kind
        )));
    }
    Ok(Some(h))
}

fn execute(command: Command, stdout: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Cluster(args) => {
            let cfg = args.domset.config()?;
            let path = args
                .features
                .as_ref()
                .or(args.affinity.as_ref())
                .expect("clap requires one input");
            require_file(path)?;
            if let Some(out) = &args.out {
                require_parent(out)?;
            }
            let graph = match &args.features {
                Some(p) => build_affinity(&FeatureMatrix::read(p)?),
                None => AffinityMatrix::read(path)?,
            };
            let partition = peel_partition(&graph, &cfg)?;
            let body = json!({ "clusters": partition.clusters(), "config": cfg });
            emit(args.out.as_deref(), &to_json(&body)?, stdout)?;
            Ok(0)
        }
        Command::Pool(args) => {
            let structure = args.structure.structure()?;
            let cfg = args.domset.config()?;
            require_file(&args.features)?;
            for out in [&args.out, &args.trace_out].into_iter().flatten() {
                require_parent(out)?;
            }
            let x = FeatureMatrix::read(&args.features)?;
            let fixed = load_fixed(&args.hierarchy, &structure)?;
            let clustering = match &fixed {
                Some(h) => Clustering::Fixed(h),
                None => Clustering::PerObject(&cfg),
            };
            let (y, trace) = forward(&x, &structure, clustering)?;
            let row = y.view().insert_axis(ndarray::Axis(0));
            emit(args.out.as_deref(), &format_matrix(row), stdout)?;
            if let Some(path) = &args.trace_out {
                let body = json!({
                    "structure": structure.kind,
                    "max_depth": structure.max_depth,
                    "config": cfg,
                    "node_counts": trace.node_counts(),
                    "trace": trace,
                });
                fs::write(path, to_json(&body)?)?;
            }
            Ok(0)
        }
        Command::Gradcheck(args) => {
            let structure = args.structure.structure()?;
            let cfg = args.domset.config()?;
            require_file(&args.features)?;
            let x = FeatureMatrix::read(&args.features)?;
            let h = match load_fixed(&args.hierarchy, &structure)? {
                Some(h) => h,
                None => build_universal_hierarchy(std::slice::from_ref(&x), &structure, &cfg)?,
            };
            let report = gradient_check(x.view(), &h, args.eps)?;
            let passed = report.max_relative_error < args.threshold;
            let body = json!({
                "structure": structure.kind,
                "node_counts": h.node_counts(),
                "threshold": args.threshold,
                "passed": passed,
                "report": report,
                "config": cfg,
            });
            stdout.write_all(to_json(&body)?.as_bytes())?;
            Ok(if passed { 0 } else { 2 })
        }
        Command::Hierarchy(args) => {
            let structure = args.structure.structure()?;
            let cfg = args.domset.config()?;
            require_file(&args.data)?;
            require_parent(&args.out)?;
            let data = Dataset::load(&args.data)?;
            let h = build_universal_hierarchy(&data.features(), &structure, &cfg)?;
            save_hierarchy(&h, &args.out)?;
            let body = json!({
                "structure": structure.kind,
                "max_depth": structure.max_depth,
                "objects": data.len(),
                "node_counts": h.node_counts(),
                "config": cfg,
            });
            stdout.write_all(to_json(&body)?.as_bytes())?;
            Ok(0)
        }
        Command::Synth(args) => {
            let cfg = SynthConfig {
                classes: args.classes,
                objects_per_class: args.objects_per_class + args.test_per_class,
                n_views: args.views,
                dim: args.dim,
                groups: contiguous_groups(args.views, args.groups)?,
                noise_sigma: args.sigma,
                distractor_sigma: args.distractor_sigma,
                signal_groups: args.signal_groups.clone(),
                seed: args.seed,
            };
            let data = generate_synthetic(&cfg)?;
            let mut manifests = serde_json::Map::new();
            if args.test_per_class > 0 {
                let (train, test) = data.split_per_class(args.objects_per_class)?;
                manifests.insert("train".into(), json!(train.save(args.out_dir.join("train"))?));
                manifests.insert("test".into(), json!(test.save(args.out_dir.join("test"))?));
            } else {
                manifests.insert("train".into(), json!(data.save(args.out_dir.join("train"))?));
            }
            let body = json!({ "manifests": manifests, "config": cfg });
            stdout.write_all(to_json(&body)?.as_bytes())?;
            Ok(0)
        }
        Command::Train(args) => train(args, stdout),
        Command::Eval(args) => {
            require_file(&args.model)?;
            require_file(&args.data)?;
            let model = TrainedModel::load(&args.model)?;
            let data = Dataset::load(&args.data)?;
            let accuracy = model.evaluate(&data)?;
            let body = json!({
                "accuracy": accuracy,
                "objects": data.len(),
                "mode": model.mode,
                "structure": model.hierarchy.structure(),
            });
            stdout.write_all(to_json(&body)?.as_bytes())?;
            Ok(0)
        }
    }
}

fn train(args: TrainArgs, stdout: &mut dyn Write) -> Result<i32> {
    let structure = args.structure.structure()?;
    let cfg = args.domset.config()?;
    require_file(&args.data)?;
    require_parent(&args.out)?;
    let data = Dataset::load(&args.data)?;
    let (model, losses) = match args.mode {
        ModeName::Fast => {
            let defaults = ClassifierConfig::default();
            let fast = FastTrainConfig {
                domset: cfg,
                classifier: ClassifierConfig {
                    learning_rate: args.lr.unwrap_or(defaults.learning_rate),
                    epochs: args.epochs.unwrap_or(defaults.epochs),
                    l2: args.l2,
                },
            };
            let (hierarchy, classifier) = match load_fixed(&args.hierarchy, &structure)? {
                Some(h) => {
                    let pooled = crate::pipeline::pool_dataset(&data, &h, None)?;
                    let mut c = LinearClassifier::zeros(data.classes(), data.dim(), fast.classifier);
                    c.fit(pooled.view(), &data.labels())?;
                    (h, c)
                }
                None => fast_train(&data, &structure, &fast)?,
            };
            let model = TrainedModel {
                mode: TrainMode::Fast,
                hierarchy,
                front_end: None,
                classifier,
            };
            (model, None)
        }
        ModeName::E2e => {
            let defaults = EndToEndConfig::default();
            let e2e = EndToEndConfig {
                learning_rate: args.lr.unwrap_or(defaults.learning_rate),
                epochs: args.epochs.unwrap_or(defaults.epochs),
                l2: args.l2,
                train_front_end: true,
            };
            let hierarchy = match load_fixed(&args.hierarchy, &structure)? {
                Some(h) => h,
                None => build_universal_hierarchy(&data.features(), &structure, &cfg)?,
            };
            let front = TrainableFrontEnd::perturbed_identity(data.dim(), args.init_scale, args.seed);
            let classifier = LinearClassifier::zeros(
                data.classes(),
                data.dim(),
                ClassifierConfig {
                    learning_rate: e2e.learning_rate,
                    epochs: e2e.epochs,
                    l2: e2e.l2,
                },
            );
            let out = end_to_end_train_from(&data, &hierarchy, front, classifier, &e2e)?;
            let model = TrainedModel {
                mode: TrainMode::E2e,
                hierarchy,
                front_end: Some(out.front_end),
                classifier: out.classifier,
            };
            (model, Some(out.losses))
        }
    };
    model.save(&args.out)?;
    let accuracy = model.evaluate(&data)?;
    let body = json!({
        "mode": model.mode,
        "structure": structure.kind,
        "max_depth": structure.max_depth,
        "node_counts": model.hierarchy.node_counts(),
        "train_accuracy": accuracy,
        "initial_loss": losses.as_ref().and_then(|l| l.first()),
        "final_loss": losses.as_ref().and_then(|l| l.last()),
        "classifier": model.classifier.config,
        "domset": cfg,
        "seed": args.seed,
        "init_scale": args.init_scale,
        "objects": data.len(),
    });
    stdout.write_all(to_json(&body)?.as_bytes())?;
    Ok(0)
}
