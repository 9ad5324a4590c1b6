//! Desk-scale training and evaluation around the pooling layer.
//!
//! Two procedures are provided. Fast training builds a universal hierarchy,
//! pools every object once and fits a linear softmax classifier on the fused
//! vectors. End-to-end training keeps the hierarchy fixed and learns a
//! per-view affine front end (with a relu clamp) jointly with the classifier,
//! backpropagating through the pooling layer.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::affinity::FeatureMatrix;
use crate::cluster_pool::{backward, forward_schedule, PoolSchedule, PoolStructure};
use crate::domset::{DomSetConfig, Partition};
use crate::error::{Error, Result};
use crate::scheme::{build_universal_hierarchy, ClusteringHierarchy};

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledObject {
    pub id: String,
    pub label: usize,
    pub features: FeatureMatrix,
}

/// Labelled multi-view objects with a common view count and dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    classes: usize,
    objects: Vec<LabeledObject>,
}

impl Dataset {
    pub fn new(classes: usize, objects: Vec<LabeledObject>) -> Result<Self> {
        let first = objects
            .first()
            .ok_or_else(|| Error::InvalidInput("dataset has no objects".into()))?;
        if classes == 0 {
            return Err(Error::InvalidInput("dataset needs at least one class".into()));
        }
        let (n, d) = (first.features.n_views(), first.features.dim());
        for o in &objects {
            if o.label >= classes {
                return Err(Error::InvalidInput(format!(
                    "object {} has label {} but there are {classes} classes",
                    o.id, o.label
                )));
            }
            if (o.features.n_views(), o.features.dim()) != (n, d) {
                return Err(Error::shape(
                    format!("{n}x{d} features"),
                    format!("{}x{} for object {}", o.features.n_views(), o.features.dim(), o.id),
                ));
            }
        }
        Ok(Dataset { classes, objects })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn objects(&self) -> &[LabeledObject] {
        &self.objects
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn n_views(&self) -> usize {
        self.objects[0].features.n_views()
    }

    pub fn dim(&self) -> usize {
        self.objects[0].features.dim()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.objects.iter().map(|o| o.label).collect()
    }

    pub fn features(&self) -> Vec<&FeatureMatrix> {
        self.objects.iter().map(|o| &o.features).collect()
    }

    /// The first `train_per_class` objects of every class, and the rest.
    pub fn split_per_class(&self, train_per_class: usize) -> Result<(Dataset, Dataset)> {
        let mut seen = vec![0; self.classes];
        let (mut train, mut test) = (Vec::new(), Vec::new());
        for o in &self.objects {
            if seen[o.label] < train_per_class {
                train.push(o.clone());
            } else {
                test.push(o.clone());
            }
            seen[o.label] += 1;
        }
        Ok((Dataset::new(self.classes, train)?, Dataset::new(self.classes, test)?))
    }

    /// Reads a manifest; feature paths are relative to the manifest's folder.
    pub fn load(manifest: impl AsRef<Path>) -> Result<Self> {
        let manifest = manifest.as_ref();
        let raw: ManifestJson = serde_json::from_str(&fs::read_to_string(manifest)?)?;
        let base = manifest.parent().map(Path::to_path_buf).unwrap_or_default();
        let objects = raw
            .objects
            .into_iter()
            .map(|o| {
                let path = base.join(&o.features);
                let features =
                    FeatureMatrix::read(&path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
                Ok(LabeledObject {
                    id: o.id,
                    label: o.label,
                    features,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(raw.classes, objects)
    }

    /// Writes `manifest.json` plus one feature file per object into `dir`
    /// and returns the manifest path.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<PathBuf> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir.join("features"))?;
        let mut entries = Vec::with_capacity(self.objects.len());
        for o in &self.objects {
            let rel = format!("features/{}.txt", o.id);
            o.features.write(dir.join(&rel))?;
            entries.push(ManifestObject {
                id: o.id.clone(),
                label: o.label,
                features: rel,
            });
        }
        let manifest = ManifestJson {
            classes: self.classes,
            objects: entries,
        };
        let path = dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(path)
    }
}

#[derive(Serialize, Deserialize)]
struct ManifestObject {
    id: String,
    label: usize,
    features: String,
}

#[derive(Serialize, Deserialize)]
struct ManifestJson {
    classes: usize,
    objects: Vec<ManifestObject>,
}

/// Parameters of the synthetic multi-view generator.
///
/// Views are split into groups and feature channels into as many contiguous
/// blocks; the prototype of group `g` is supported on block `g` only, so
/// prototypes of different groups are orthogonal. Groups listed in
/// `signal_groups` get one prototype per class, the others share a single
/// class-independent prototype. Each view is its group prototype plus
/// gaussian noise, clamped at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub classes: usize,
    pub objects_per_class: usize,
    pub n_views: usize,
    pub dim: usize,
    pub groups: Partition,
    pub noise_sigma: f64,
    /// Noise on views of non-signal groups; defaults to `noise_sigma`.
    pub distractor_sigma: Option<f64>,
    /// Groups carrying class information; all groups when `None`.
    pub signal_groups: Option<Vec<usize>>,
    pub seed: u64,
}

impl SynthConfig {
    /// `groups` equal contiguous view groups, every group informative.
    pub fn separable(
        classes: usize,
        objects_per_class: usize,
        n_views: usize,
        dim: usize,
        groups: usize,
        noise_sigma: f64,
        seed: u64,
    ) -> Result<Self> {
        Ok(SynthConfig {
            classes,
            objects_per_class,
            n_views,
            dim,
            groups: contiguous_groups(n_views, groups)?,
            noise_sigma,
            distractor_sigma: None,
            signal_groups: None,
            seed,
        })
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(m.to_string()));
        if self.classes == 0 || self.objects_per_class == 0 || self.n_views == 0 || self.dim == 0 {
            return bad("classes, objects per class, views and dimension must be positive");
        }
        if self.groups.n_nodes() != self.n_views {
            return bad("view groups must partition the views");
        }
        if self.groups.len() > self.dim {
            return bad("need at least one feature channel per view group");
        }
        let sigmas = [Some(self.noise_sigma), self.distractor_sigma];
        if sigmas.iter().flatten().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return bad("noise levels must be finite and nonnegative");
        }
        if let Some(sg) = &self.signal_groups {
            if sg.iter().any(|&g| g >= self.groups.len()) {
                return bad("signal group index out of range");
            }
        }
        Ok(())
    }
}

/// Splits `n` views into `groups` contiguous groups of near-equal size.
pub fn contiguous_groups(n: usize, groups: usize) -> Result<Partition> {
    if groups == 0 || groups > n {
        return Err(Error::InvalidInput(format!(
            "cannot split {n} views into {groups} groups"
        )));
    }
    Partition::new(
        (0..groups)
            .map(|g| (g * n / groups..(g + 1) * n / groups).collect())
            .collect(),
    )
}

/// Deterministic synthetic dataset; object `i` has label `i mod classes`.
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let g_count = cfg.groups.len();
    let block = |c: usize| c * g_count / cfg.dim;
    let informative: BTreeSet<usize> = match &cfg.signal_groups {
        Some(sg) => sg.iter().copied().collect(),
        None => (0..g_count).collect(),
    };

    // prototypes[class][group]
    let shared: Vec<Array1<f64>> = (0..g_count)
        .map(|g| {
            Array1::from_shape_fn(
                cfg.dim,
                |c| {
                    if block(c) == g {
                        rng.random_range(0.2..1.2)
                    } else {
                        0.0
                    }
                },
            )
        })
        .collect();
    let mut prototypes = vec![shared.clone(); cfg.classes];
    for class_protos in prototypes.iter_mut() {
        for &g in &informative {
            class_protos[g] =
                Array1::from_shape_fn(
                    cfg.dim,
                    |c| {
                        if block(c) == g {
                            rng.random_range(0.2..1.2)
                        } else {
                            0.0
                        }
                    },
                );
        }
    }

    let group_of = cfg.groups.labels();
    let sigma_of = |v: usize| {
        if informative.contains(&group_of[v]) {
            cfg.noise_sigma
        } else {
            cfg.distractor_sigma.unwrap_or(cfg.noise_sigma)
        }
    };
    let mut objects = Vec::with_capacity(cfg.classes * cfg.objects_per_class);
    for i in 0..cfg.classes * cfg.objects_per_class {
        let label = i % cfg.classes;
        let mut x = Array2::zeros((cfg.n_views, cfg.dim));
        for v in 0..cfg.n_views {
            let proto = &prototypes[label][group_of[v]];
            let sigma = sigma_of(v);
            for c in 0..cfg.dim {
                let noise = if sigma > 0.0 {
                    Normal::new(0.0, sigma)
                        .map_err(|e| Error::InvalidInput(e.to_string()))?
                        .sample(&mut rng)
                } else {
                    0.0
                };
                x[[v, c]] = (proto[c] + noise).max(0.0);
            }
        }
        objects.push(LabeledObject {
            id: format!("obj{i:05}"),
            label,
            features: FeatureMatrix::new(x)?,
        });
    }
    Dataset::new(cfg.classes, objects)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    /// Step size relative to the curvature bound of the loss.
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            learning_rate: 1.0,
            epochs: 500,
            l2: 1e-4,
        }
    }
}

/// L2-regularised multinomial logistic regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearClassifier {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub config: ClassifierConfig,
}

/// Gradients of the mean cross-entropy (plus weight decay) of a classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierGradient {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    /// Gradient with respect to every input row.
    pub inputs: Array2<f64>,
}

fn softmax(logits: ArrayView1<'_, f64>) -> Array1<f64> {
    let top = logits.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let e = logits.mapv(|z| (z - top).exp());
    let s = e.sum();
    e / s
}

/// Index of the largest entry; ties go to the smallest index.
pub fn argmax(v: ArrayView1<'_, f64>) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Curvature bound of the mean softmax cross-entropy over rows `xs`.
fn curvature(xs: ArrayView2<'_, f64>, l2: f64) -> f64 {
    let max_sq = xs.rows().into_iter().map(|r| r.dot(&r)).fold(0.0, f64::max);
    0.5 * (max_sq + 1.0) + l2
}

impl LinearClassifier {
    pub fn zeros(classes: usize, dim: usize, config: ClassifierConfig) -> Self {
        LinearClassifier {
            weights: Array2::zeros((classes, dim)),
            bias: Array1::zeros(classes),
            config,
        }
    }

    pub fn classes(&self) -> usize {
        self.weights.nrows()
    }

    pub fn dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn logits(&self, y: ArrayView1<'_, f64>) -> Array1<f64> {
        self.weights.dot(&y) + &self.bias
    }

    pub fn predict(&self, y: ArrayView1<'_, f64>) -> usize {
        argmax(self.logits(y).view())
    }

    /// Mean cross-entropy plus `l2/2 |W|^2` and its gradients.
    pub fn loss_and_gradient(&self, xs: ArrayView2<'_, f64>, labels: &[usize]) -> Result<(f64, ClassifierGradient)> {
        if xs.nrows() != labels.len() || xs.ncols() != self.dim() {
            return Err(Error::shape(
                format!("{} rows of dimension {}", labels.len(), self.dim()),
                format!("{}x{}", xs.nrows(), xs.ncols()),
            ));
        }
        let n = labels.len() as f64;
        let mut loss = 0.0;
        let mut dlogits = Array2::zeros((labels.len(), self.classes()));
        for (i, (x, &label)) in xs.rows().into_iter().zip(labels).enumerate() {
            if label >= self.classes() {
                return Err(Error::InvalidInput(format!(
                    "label {label} outside {} classes",
                    self.classes()
                )));
            }
            let p = softmax(self.logits(x).view());
            loss -= p[label].max(f64::MIN_POSITIVE).ln();
            let mut row = dlogits.row_mut(i);
            row.assign(&(p / n));
            row[label] -= 1.0 / n;
        }
        loss = loss / n + 0.5 * self.config.l2 * self.weights.iter().map(|w| w * w).sum::<f64>();
        let weights = dlogits.t().dot(&xs) + &(self.config.l2 * &self.weights);
        let bias = dlogits.sum_axis(Axis(0));
        let inputs = dlogits.dot(&self.weights);
        Ok((loss, ClassifierGradient { weights, bias, inputs }))
    }

    fn apply(&mut self, grad: &ClassifierGradient, step: f64) {
        self.weights.scaled_add(-step, &grad.weights);
        self.bias.scaled_add(-step, &grad.bias);
    }

    /// Full-batch gradient descent; returns the loss before every epoch
    /// followed by the final loss.
    pub fn fit(&mut self, xs: ArrayView2<'_, f64>, labels: &[usize]) -> Result<Vec<f64>> {
        let step = self.config.learning_rate / curvature(xs, self.config.l2);
        let mut history = Vec::with_capacity(self.config.epochs + 1);
        for epoch in 0..=self.config.epochs {
            let (loss, grad) = self.loss_and_gradient(xs, labels)?;
            check_finite(loss, epoch, &history)?;
            history.push(loss);
            if epoch < self.config.epochs {
                self.apply(&grad, step);
            }
        }
        Ok(history)
    }
}

fn check_finite(loss: f64, epoch: usize, history: &[f64]) -> Result<()> {
    if loss.is_finite() {
        return Ok(());
    }
    Err(Error::Divergence(format!(
        "loss became {loss} at epoch {epoch}; last finite loss {:?}",
        history.last()
    )))
}

/// Per-view affine map followed by a relu clamp, shared by all views.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainableFrontEnd {
    /// `d_in x d_out`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl TrainableFrontEnd {
    pub fn identity(dim: usize) -> Self {
        TrainableFrontEnd {
            weights: Array2::eye(dim),
            bias: Array1::zeros(dim),
        }
    }

    /// Identity plus uniform perturbation in `[-scale, scale]`.
    pub fn perturbed_identity(dim: usize, scale: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = Self::identity(dim);
        f.weights
            .mapv_inplace(|w| w + scale * (2.0 * rng.random::<f64>() - 1.0));
        f
    }

    pub fn input_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.ncols()
    }

    /// Pre-activations `X W + b`.
    pub fn pre_activation(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.input_dim() {
            return Err(Error::shape(format!("{} input channels", self.input_dim()), x.ncols()));
        }
        Ok(x.dot(&self.weights) + &self.bias)
    }

    pub fn apply(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        let h = self.pre_activation(x.view())?.mapv(|v| v.max(0.0));
        FeatureMatrix::new(h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndToEndConfig {
    /// Step size relative to the classifier curvature bound.
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    pub train_front_end: bool,
}

impl Default for EndToEndConfig {
    fn default() -> Self {
        EndToEndConfig {
            learning_rate: 0.5,
            epochs: 200,
            l2: 1e-4,
            train_front_end: true,
        }
    }
}

/// Gradients of the end-to-end objective.
#[derive(Debug, Clone, PartialEq)]
pub struct EndToEndGradient {
    pub front_weights: Array2<f64>,
    pub front_bias: Array1<f64>,
    pub classifier: ClassifierGradient,
    /// Fused vectors the classifier saw, one row per object.
    pub pooled: Array2<f64>,
}

/// Mean cross-entropy of the whole pipeline and its parameter gradients,
/// with the clustering frozen to `schedule`.
pub fn end_to_end_objective(
    data: &Dataset,
    schedule: &PoolSchedule,
    front: &TrainableFrontEnd,
    classifier: &LinearClassifier,
) -> Result<(f64, EndToEndGradient)> {
    let mut pooled = Array2::zeros((data.len(), front.output_dim()));
    let mut cache = Vec::with_capacity(data.len());
    for (i, o) in data.objects().iter().enumerate() {
        let pre = front.pre_activation(o.features.view())?;
        let h = pre.mapv(|v| v.max(0.0));
        let (y, trace) = forward_schedule(h.view(), schedule)?;
        pooled.row_mut(i).assign(&y);
        cache.push((pre, trace));
    }
    let (loss, cgrad) = classifier.loss_and_gradient(pooled.view(), &data.labels())?;

    let mut front_weights = Array2::zeros(front.weights.raw_dim());
    let mut front_bias = Array1::zeros(front.output_dim());
    for (i, (o, (pre, trace))) in data.objects().iter().zip(&cache).enumerate() {
        let dh = backward(cgrad.inputs.row(i), trace)?;
        let dpre = dh * &pre.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
        front_weights += &o.features.view().t().dot(&dpre);
        front_bias += &dpre.sum_axis(Axis(0));
    }
    Ok((
        loss,
        EndToEndGradient {
            front_weights,
            front_bias,
            classifier: cgrad,
            pooled,
        },
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EndToEndOutcome {
    pub front_end: TrainableFrontEnd,
    pub classifier: LinearClassifier,
    /// Loss before every epoch, then the final loss.
    pub losses: Vec<f64>,
}

/// Joint full-batch gradient descent through the fixed hierarchy, starting
/// from an identity front end and a zero classifier.
pub fn end_to_end_train(
    train: &Dataset,
    hierarchy: &ClusteringHierarchy,
    cfg: &EndToEndConfig,
) -> Result<EndToEndOutcome> {
    let front = TrainableFrontEnd::identity(train.dim());
    let classifier = LinearClassifier::zeros(
        train.classes(),
        train.dim(),
        ClassifierConfig {
            learning_rate: cfg.learning_rate,
            epochs: cfg.epochs,
            l2: cfg.l2,
        },
    );
    end_to_end_train_from(train, hierarchy, front, classifier, cfg)
}

/// [`end_to_end_train`] from explicit initial parameters.
pub fn end_to_end_train_from(
    train: &Dataset,
    hierarchy: &ClusteringHierarchy,
    mut front: TrainableFrontEnd,
    mut classifier: LinearClassifier,
    cfg: &EndToEndConfig,
) -> Result<EndToEndOutcome> {
    if hierarchy.views_per_object() != train.n_views() {
        return Err(Error::shape(
            format!("{} views per object", hierarchy.views_per_object()),
            train.n_views(),
        ));
    }
    if front.output_dim() != classifier.dim() || front.input_dim() != train.dim() {
        return Err(Error::shape(
            format!("front end {}->{}", train.dim(), classifier.dim()),
            format!("{}->{}", front.input_dim(), front.output_dim()),
        ));
    }
    classifier.config.l2 = cfg.l2;
    let mut losses = Vec::with_capacity(cfg.epochs + 1);
    for epoch in 0..=cfg.epochs {
        let (loss, grad) = end_to_end_objective(train, hierarchy.schedule(), &front, &classifier)?;
        check_finite(loss, epoch, &losses)?;
        losses.push(loss);
        if epoch == cfg.epochs {
            break;
        }
        let step = cfg.learning_rate / curvature(grad.pooled.view(), cfg.l2);
        classifier.apply(&grad.classifier, step);
        if cfg.train_front_end {
            front.weights.scaled_add(-step, &grad.front_weights);
            front.bias.scaled_add(-step, &grad.front_bias);
        }
    }
    Ok(EndToEndOutcome {
        front_end: front,
        classifier,
        losses,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct FastTrainConfig {
    pub domset: DomSetConfig,
    pub classifier: ClassifierConfig,
}

/// Fused vectors of every object under `hierarchy`, one row per object.
pub fn pool_dataset(
    data: &Dataset,
    hierarchy: &ClusteringHierarchy,
    front: Option<&TrainableFrontEnd>,
) -> Result<Array2<f64>> {
    let dim = front.map_or(data.dim(), TrainableFrontEnd::output_dim);
    let mut pooled = Array2::zeros((data.len(), dim));
    for (i, o) in data.objects().iter().enumerate() {
        let y = match front {
            Some(f) => forward_schedule(f.apply(&o.features)?.view(), hierarchy.schedule())?.0,
            None => forward_schedule(o.features.view(), hierarchy.schedule())?.0,
        };
        pooled.row_mut(i).assign(&y);
    }
    Ok(pooled)
}

/// Builds the universal hierarchy on the training objects and fits the
/// classifier on their fused vectors. No feature learning takes place.
pub fn fast_train(
    train: &Dataset,
    structure: &PoolStructure,
    cfg: &FastTrainConfig,
) -> Result<(ClusteringHierarchy, LinearClassifier)> {
    let labels = train.labels();
    if labels.iter().collect::<BTreeSet<_>>().len() < 2 {
        log::warn!("training set contains a single class; the classifier will be trivial");
    }
    let hierarchy = build_universal_hierarchy(&train.features(), structure, &cfg.domset)?;
    let pooled = pool_dataset(train, &hierarchy, None)?;
    let mut classifier = LinearClassifier::zeros(train.classes(), train.dim(), cfg.classifier);
    classifier.fit(pooled.view(), &labels)?;
    Ok((hierarchy, classifier))
}

/// Fraction of objects whose predicted class matches the label.
pub fn evaluate(
    test: &Dataset,
    hierarchy: &ClusteringHierarchy,
    front: Option<&TrainableFrontEnd>,
    classifier: &LinearClassifier,
) -> Result<f64> {
    let pooled = pool_dataset(test, hierarchy, front)?;
    if pooled.ncols() != classifier.dim() {
        return Err(Error::shape(
            format!("{} classifier inputs", classifier.dim()),
            pooled.ncols(),
        ));
    }
    let correct = pooled
        .rows()
        .into_iter()
        .zip(test.objects())
        .filter(|(y, o)| classifier.predict(*y) == o.label)
        .count();
    Ok(correct as f64 / test.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainMode {
    Fast,
    E2e,
}

/// Everything needed to classify new objects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub mode: TrainMode,
    pub hierarchy: ClusteringHierarchy,
    pub front_end: Option<TrainableFrontEnd>,
    pub classifier: LinearClassifier,
}

impl TrainedModel {
    pub fn evaluate(&self, test: &Dataset) -> Result<f64> {
        evaluate(test, &self.hierarchy, self.front_end.as_ref(), &self.classifier)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, serde_json::to_string(self)? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}
