//! Recurrent clustering and pooling.
//!
//! One recurrence clusters the current nodes into dominant sets and replaces
//! every cluster by a channel-wise max or mean of its members. Recurrences
//! repeat until the clustering stops merging nodes, then a full-stride pool
//! fuses the surviving nodes into a single vector.
//!
//! Given fixed cluster assignments the layer is piecewise linear, and the
//! backward pass only has to undo the pooling (`f_p^-1`) and the row
//! selection (`C^T`) of every cluster, accumulating over clusters.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::affinity::{build_affinity_view, FeatureMatrix};
use crate::domset::{peel_partition, DomSetConfig, Partition};
use crate::error::{Error, Result};
use crate::scheme::ClusteringHierarchy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PoolMode {
    #[serde(rename = "max")]
    Max,
    #[serde(rename = "avg", alias = "average")]
    Average,
}

impl PoolMode {
    pub fn flip(self) -> Self {
        match self {
            PoolMode::Max => PoolMode::Average,
            PoolMode::Average => PoolMode::Max,
        }
    }
}

impl fmt::Display for PoolMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PoolMode::Max => "max",
            PoolMode::Average => "avg",
        })
    }
}

/// The pooling structures compared by the layer, named
/// `<within-cluster>-<final>`: plain full-stride max, two variants with a
/// single clustering-and-pooling phase, and the alternating variant that
/// recurs until the clusters are stable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StructureKind {
    #[serde(rename = "f-max")]
    FMax,
    #[serde(rename = "ds-avg-f-max")]
    DsAvgFMax,
    #[serde(rename = "ds-max-f-avg")]
    DsMaxFAvg,
    #[serde(rename = "ds-alt-f-max")]
    DsAltFMax,
}

impl StructureKind {
    pub const ALL: [StructureKind; 4] = [
        StructureKind::FMax,
        StructureKind::DsAvgFMax,
        StructureKind::DsMaxFAvg,
        StructureKind::DsAltFMax,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StructureKind::FMax => "f-max",
            StructureKind::DsAvgFMax => "ds-avg-f-max",
            StructureKind::DsMaxFAvg => "ds-max-f-avg",
            StructureKind::DsAltFMax => "ds-alt-f-max",
        }
    }

    /// Whether the structure clusters at all.
    pub fn uses_clustering(self) -> bool {
        self != StructureKind::FMax
    }

    /// Upper bound on clustering phases, before the depth limit applies.
    pub fn phase_cap(self) -> Option<usize> {
        match self {
            StructureKind::FMax => Some(0),
            StructureKind::DsAvgFMax | StructureKind::DsMaxFAvg => Some(1),
            StructureKind::DsAltFMax => None,
        }
    }

    /// Within-cluster pool mode of recurrence `t` (zero based). The
    /// alternating variant starts with max.
    pub fn level_mode(self, t: usize) -> Option<PoolMode> {
        match self {
            StructureKind::FMax => None,
            StructureKind::DsAvgFMax => Some(PoolMode::Average),
            StructureKind::DsMaxFAvg => Some(PoolMode::Max),
            StructureKind::DsAltFMax => Some(if t.is_multiple_of(2) {
                PoolMode::Max
            } else {
                PoolMode::Average
            }),
        }
    }

    pub fn final_mode(self) -> PoolMode {
        match self {
            StructureKind::DsMaxFAvg => PoolMode::Average,
            _ => PoolMode::Max,
        }
    }
}

impl fmt::Display for StructureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StructureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        let norm = if norm == "(ds-alt)-f-max" {
            "ds-alt-f-max".to_string()
        } else {
            norm
        };
        StructureKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "unknown structure {s:?}; expected one of f-max, ds-avg-f-max, ds-max-f-avg, ds-alt-f-max"
                ))
            })
    }
}

pub const DEFAULT_MAX_DEPTH: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolStructure {
    pub kind: StructureKind,
    pub max_depth: usize,
}

impl PoolStructure {
    pub fn new(kind: StructureKind, max_depth: usize) -> Result<Self> {
        if max_depth == 0 {
            return Err(Error::InvalidInput("recurrence depth must be at least 1".into()));
        }
        Ok(PoolStructure { kind, max_depth })
    }

    /// Clustering phases this structure may run.
    pub fn phase_limit(&self) -> usize {
        self.kind.phase_cap().map_or(self.max_depth, |c| c.min(self.max_depth))
    }
}

impl From<StructureKind> for PoolStructure {
    fn from(kind: StructureKind) -> Self {
        PoolStructure {
            kind,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

/// One-hot row selection `C` (`c_k x n`): row `i` selects input `members[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    members: Vec<usize>,
    n_inputs: usize,
}

impl ClusterAssignment {
    pub fn new(members: Vec<usize>, n_inputs: usize) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidInput("cluster assignment selects no rows".into()));
        }
        let mut seen = vec![false; n_inputs];
        for &m in &members {
            if m >= n_inputs {
                return Err(Error::Index(format!("row {m} outside {n_inputs} inputs")));
            }
            if std::mem::replace(&mut seen[m], true) {
                return Err(Error::Index(format!("row {m} selected twice")));
            }
        }
        Ok(ClusterAssignment { members, n_inputs })
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    /// `c_k`.
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    /// Dense one-hot matrix.
    pub fn to_matrix(&self) -> Array2<f64> {
        let mut c = Array2::zeros((self.members.len(), self.n_inputs));
        for (i, &m) in self.members.iter().enumerate() {
            c[[i, m]] = 1.0;
        }
        c
    }
}

/// `C X`: the member rows of one cluster, in assignment order.
pub fn gather_cluster(c: &ClusterAssignment, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if x.nrows() != c.n_inputs {
        return Err(Error::shape(format!("{} input rows", c.n_inputs), x.nrows()));
    }
    let d = x.ncols();
    Ok(Array2::from_shape_fn((c.len(), d), |(i, j)| x[[c.members[i], j]]))
}

/// `C^T G`: scatters member-row gradients back onto all input rows.
pub fn scatter_cluster(c: &ClusterAssignment, grad: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if grad.nrows() != c.len() {
        return Err(Error::shape(format!("{} member rows", c.len()), grad.nrows()));
    }
    let mut out = Array2::zeros((c.n_inputs, grad.ncols()));
    for (i, &m) in c.members.iter().enumerate() {
        out.row_mut(m).assign(&grad.row(i));
    }
    Ok(out)
}

/// What the backward pass needs to undo one within-cluster pool.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "pool", rename_all = "lowercase")]
pub enum Routing {
    /// Per channel, the position (within the cluster) of the winning row.
    Max {
        argmax: Vec<usize>,
    },
    Average {
        size: usize,
    },
}

impl Routing {
    pub fn cluster_size(&self) -> Option<usize> {
        match self {
            Routing::Max { .. } => None,
            Routing::Average { size } => Some(*size),
        }
    }
}

/// Channel-wise pool of the member rows. Max ties go to the smallest row.
pub fn within_cluster_pool(m: ArrayView2<'_, f64>, mode: PoolMode) -> Result<(Array1<f64>, Routing)> {
    let (rows, d) = m.dim();
    if rows == 0 {
        return Err(Error::InvalidInput("cannot pool an empty cluster".into()));
    }
    match mode {
        PoolMode::Max => {
            let mut out = m.row(0).to_owned();
            let mut argmax = vec![0; d];
            for r in 1..rows {
                for c in 0..d {
                    if m[[r, c]] > out[c] {
                        out[c] = m[[r, c]];
                        argmax[c] = r;
                    }
                }
            }
            Ok((out, Routing::Max { argmax }))
        }
        PoolMode::Average => {
            let mut out = m.row(0).to_owned();
            for r in 1..rows {
                out += &m.row(r);
            }
            out /= rows as f64;
            Ok((out, Routing::Average { size: rows }))
        }
    }
}

/// `f_p^-1`: spreads the gradient of a pooled vector over the member rows.
pub fn unpool(routing: &Routing, grad: ArrayView1<'_, f64>, rows: usize) -> Result<Array2<f64>> {
    let d = grad.len();
    let mut out = Array2::zeros((rows, d));
    match routing {
        Routing::Max { argmax } => {
            if argmax.len() != d {
                return Err(Error::shape(format!("{} channels", argmax.len()), d));
            }
            for (c, &r) in argmax.iter().enumerate() {
                if r >= rows {
                    return Err(Error::Index(format!("argmax row {r} outside a cluster of {rows}")));
                }
                out[[r, c]] = grad[c];
            }
        }
        Routing::Average { size } => {
            if *size != rows {
                return Err(Error::shape(format!("cluster of {size}"), rows));
            }
            let share = grad.mapv(|g| g / *size as f64);
            for mut row in out.rows_mut() {
                row.assign(&share);
            }
        }
    }
    Ok(out)
}

/// One recurrence of a fixed clustering program.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Level {
    pub partition: Partition,
    pub mode: PoolMode,
}

/// A fixed clustering program: per-recurrence partitions and pool modes,
/// then a full-stride pool. Partition `t` covers exactly the nodes produced
/// by recurrence `t - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolSchedule {
    n_views: usize,
    levels: Vec<Level>,
    final_mode: PoolMode,
}

impl PoolSchedule {
    pub fn new(n_views: usize, levels: Vec<Level>, final_mode: PoolMode) -> Result<Self> {
        if n_views == 0 {
            return Err(Error::InvalidHierarchy("schedule needs at least one view".into()));
        }
        let mut nodes = n_views;
        for (t, level) in levels.iter().enumerate() {
            if level.partition.n_nodes() != nodes {
                return Err(Error::InvalidHierarchy(format!(
                    "level {t} partitions {} nodes but {nodes} reach it",
                    level.partition.n_nodes()
                )));
            }
            nodes = level.partition.len();
        }
        Ok(PoolSchedule {
            n_views,
            levels,
            final_mode,
        })
    }

    /// Full-stride pooling only.
    pub fn flat(n_views: usize, final_mode: PoolMode) -> Self {
        PoolSchedule {
            n_views,
            levels: Vec::new(),
            final_mode,
        }
    }

    pub fn n_views(&self) -> usize {
        self.n_views
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn final_mode(&self) -> PoolMode {
        self.final_mode
    }

    /// `n_0, n_1, ..., n_T`.
    pub fn node_counts(&self) -> Vec<usize> {
        std::iter::once(self.n_views)
            .chain(self.levels.iter().map(|l| l.partition.len()))
            .collect()
    }

    /// Whether every pool in the program averages.
    pub fn is_average_only(&self) -> bool {
        self.final_mode == PoolMode::Average && self.levels.iter().all(|l| l.mode == PoolMode::Average)
    }
}

impl AsRef<PoolSchedule> for PoolSchedule {
    fn as_ref(&self) -> &PoolSchedule {
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelTrace {
    pub n_in: usize,
    pub partition: Partition,
    pub mode: PoolMode,
    /// One entry per cluster, in partition order.
    pub routing: Vec<Routing>,
}

/// Everything the backward pass needs from a forward call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceTrace {
    pub n_views: usize,
    pub dim: usize,
    pub levels: Vec<LevelTrace>,
    /// Number of nodes entering the full-stride pool.
    pub final_nodes: usize,
    pub final_mode: PoolMode,
    pub final_routing: Routing,
}

impl RecurrenceTrace {
    pub fn node_counts(&self) -> Vec<usize> {
        std::iter::once(self.n_views)
            .chain(self.levels.iter().map(|l| l.partition.len()))
            .collect()
    }

    /// The clustering program this trace followed.
    pub fn schedule(&self) -> PoolSchedule {
        PoolSchedule {
            n_views: self.n_views,
            levels: self
                .levels
                .iter()
                .map(|l| Level {
                    partition: l.partition.clone(),
                    mode: l.mode,
                })
                .collect(),
            final_mode: self.final_mode,
        }
    }
}

/// Where each recurrence's partition comes from.
#[derive(Debug, Clone, Copy)]
pub enum Clustering<'a> {
    /// Cluster every object on its own affinity graph.
    PerObject(&'a DomSetConfig),
    /// Replay a recorded hierarchy.
    Fixed(&'a ClusteringHierarchy),
}

pub(crate) fn pool_level(
    x: ArrayView2<'_, f64>,
    partition: &Partition,
    mode: PoolMode,
) -> Result<(Array2<f64>, Vec<Routing>)> {
    let n = x.nrows();
    if partition.n_nodes() != n {
        return Err(Error::shape(format!("partition over {} nodes", partition.n_nodes()), n));
    }
    let mut out = Array2::zeros((partition.len(), x.ncols()));
    let mut routing = Vec::with_capacity(partition.len());
    for (k, members) in partition.clusters().iter().enumerate() {
        let c = ClusterAssignment::new(members.clone(), n)?;
        let m = gather_cluster(&c, x)?;
        let (pooled, r) = within_cluster_pool(m.view(), mode)?;
        out.row_mut(k).assign(&pooled);
        routing.push(r);
    }
    Ok((out, routing))
}

fn finish(
    x: Array2<f64>,
    n_views: usize,
    levels: Vec<LevelTrace>,
    final_mode: PoolMode,
) -> Result<(Array1<f64>, RecurrenceTrace)> {
    let (pooled, final_routing) = within_cluster_pool(x.view(), final_mode)?;
    let trace = RecurrenceTrace {
        n_views,
        dim: x.ncols(),
        levels,
        final_nodes: x.nrows(),
        final_mode,
        final_routing,
    };
    Ok((pooled, trace))
}

/// Runs the layer on one object.
///
/// Per-object clustering recomputes the affinity graph from the pooled
/// vectors at each recurrence and stops once the partition is all
/// singletons, a single node remains, or the structure's phase limit is
/// reached (one phase for the avg and max variants, `max_depth` for the
/// alternating one). A
/// fixed hierarchy replays its recorded partitions and modes and must have
/// been built for the same structure.
pub fn forward(
    x0: &FeatureMatrix,
    structure: &PoolStructure,
    clustering: Clustering<'_>,
) -> Result<(Array1<f64>, RecurrenceTrace)> {
    match clustering {
        Clustering::Fixed(h) => {
            if h.structure() != structure.kind {
                return Err(Error::InvalidHierarchy(format!(
                    "hierarchy was built for {} but {} was requested",
                    h.structure(),
                    structure.kind
                )));
            }
            if h.levels().len() > structure.phase_limit() {
                return Err(Error::InvalidHierarchy(format!(
                    "hierarchy has {} levels, deeper than the allowed {}",
                    h.levels().len(),
                    structure.phase_limit()
                )));
            }
            forward_schedule(x0.view(), h.as_ref())
        }
        Clustering::PerObject(cfg) => forward_per_object(x0, structure, cfg),
    }
}

fn forward_per_object(
    x0: &FeatureMatrix,
    structure: &PoolStructure,
    cfg: &DomSetConfig,
) -> Result<(Array1<f64>, RecurrenceTrace)> {
    let mut x = x0.view().to_owned();
    let mut levels = Vec::new();
    for t in 0..structure.phase_limit() {
        let n = x.nrows();
        if n == 1 {
            break;
        }
        let partition = peel_partition(&build_affinity_view(x.view()), cfg)?;
        let mode = structure.kind.level_mode(t).expect("clustering structure");
        let (next, routing) = pool_level(x.view(), &partition, mode)?;
        let stable = partition.is_all_singletons();
        levels.push(LevelTrace {
            n_in: n,
            partition,
            mode,
            routing,
        });
        x = next;
        if stable {
            break;
        }
    }
    finish(x, x0.n_views(), levels, structure.kind.final_mode())
}

/// Runs a fixed clustering program. Inputs need not be nonnegative, which
/// lets gradient checks perturb entries freely.
pub fn forward_schedule(x0: ArrayView2<'_, f64>, schedule: &PoolSchedule) -> Result<(Array1<f64>, RecurrenceTrace)> {
    if x0.nrows() != schedule.n_views {
        return Err(Error::shape(format!("{} views", schedule.n_views), x0.nrows()));
    }
    if x0.ncols() == 0 {
        return Err(Error::InvalidInput("feature dimension must be positive".into()));
    }
    let mut x = x0.to_owned();
    let mut levels = Vec::with_capacity(schedule.levels.len());
    for level in &schedule.levels {
        let n = x.nrows();
        let (next, routing) = pool_level(x.view(), &level.partition, level.mode)?;
        levels.push(LevelTrace {
            n_in: n,
            partition: level.partition.clone(),
            mode: level.mode,
            routing,
        });
        x = next;
    }
    finish(x, schedule.n_views, levels, schedule.final_mode)
}

/// Gradient of the loss with respect to the layer input, given the gradient
/// with respect to the fused output.
pub fn backward(dy: ArrayView1<'_, f64>, trace: &RecurrenceTrace) -> Result<Array2<f64>> {
    if dy.len() != trace.dim {
        return Err(Error::shape(format!("gradient of length {}", trace.dim), dy.len()));
    }
    let all: Vec<usize> = (0..trace.final_nodes).collect();
    let c = ClusterAssignment::new(all, trace.final_nodes)?;
    let mut grad = scatter_cluster(&c, unpool(&trace.final_routing, dy, trace.final_nodes)?.view())?;

    for level in trace.levels.iter().rev() {
        if grad.nrows() != level.partition.len() {
            return Err(Error::shape(
                format!("{} cluster rows", level.partition.len()),
                grad.nrows(),
            ));
        }
        let mut prev = Array2::zeros((level.n_in, trace.dim));
        for (k, (members, routing)) in level.partition.clusters().iter().zip(&level.routing).enumerate() {
            let c = ClusterAssignment::new(members.clone(), level.n_in)?;
            let dm = unpool(routing, grad.row(k), c.len())?;
            prev += &scatter_cluster(&c, dm.view())?;
        }
        grad = prev;
    }
    Ok(grad)
}

/// Outcome of comparing [`backward`] against central differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub max_absolute_error: f64,
    pub checked_entries: usize,
    /// Channels whose max pools are within the tie margin; excluded from the
    /// comparison because the gradient there is only a subgradient.
    pub tie_channels: Vec<usize>,
    pub eps: f64,
}

/// Test loss used by [`gradient_check`]: `sum_c y_c^2 / 2 + b_c y_c`.
pub fn check_loss(y: ArrayView1<'_, f64>) -> (f64, Array1<f64>) {
    let bias = Array1::from_shape_fn(y.len(), |c| 1.0 + 0.5 * (c % 3) as f64);
    let loss = y.iter().zip(&bias).map(|(y, b)| 0.5 * y * y + b * y).sum();
    (loss, &y + &bias)
}

/// Per-channel gap between the largest and second-largest member value;
/// infinite for a single row.
pub fn max_margin(m: ArrayView2<'_, f64>) -> Array1<f64> {
    Array1::from_shape_fn(m.ncols(), |c| {
        let mut best = f64::NEG_INFINITY;
        let mut second = f64::NEG_INFINITY;
        for &v in m.column(c) {
            if v > best {
                second = best;
                best = v;
            } else if v > second {
                second = v;
            }
        }
        best - second
    })
}

/// Channels in which some max pool of the program has a margin below
/// `margin` on input `x0`.
pub fn tied_channels(x0: ArrayView2<'_, f64>, schedule: &PoolSchedule, margin: f64) -> Result<Vec<usize>> {
    let d = x0.ncols();
    let mut tied = vec![false; d];
    let mut x = x0.to_owned();
    let mut mark = |m: ArrayView2<'_, f64>| {
        for (c, gap) in max_margin(m).iter().enumerate() {
            if *gap <= margin {
                tied[c] = true;
            }
        }
    };
    for level in schedule.levels() {
        if level.mode == PoolMode::Max {
            for members in level.partition.clusters() {
                let c = ClusterAssignment::new(members.clone(), x.nrows())?;
                mark(gather_cluster(&c, x.view())?.view());
            }
        }
        x = pool_level(x.view(), &level.partition, level.mode)?.0;
    }
    if schedule.final_mode() == PoolMode::Max {
        mark(x.view());
    }
    Ok((0..d).filter(|&c| tied[c]).collect())
}

/// Compares [`backward`] with central differences of [`check_loss`], with
/// the clustering frozen to `schedule`.
pub fn gradient_check(
    x0: ArrayView2<'_, f64>,
    schedule: impl AsRef<PoolSchedule>,
    eps: f64,
) -> Result<GradCheckReport> {
    let schedule = schedule.as_ref();
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    let (y, trace) = forward_schedule(x0, schedule)?;
    let (_, dy) = check_loss(y.view());
    let analytic = backward(dy.view(), &trace)?;
    let tie_channels = tied_channels(x0, schedule, 4.0 * eps)?;

    let loss_at = |x: &Array2<f64>| -> Result<f64> {
        let (y, _) = forward_schedule(x.view(), schedule)?;
        Ok(check_loss(y.view()).0)
    };
    let mut x = x0.to_owned();
    let mut max_rel: f64 = 0.0;
    let mut max_abs: f64 = 0.0;
    let mut checked = 0;
    for c in 0..x0.ncols() {
        if tie_channels.contains(&c) {
            continue;
        }
        for r in 0..x0.nrows() {
            let orig = x[[r, c]];
            x[[r, c]] = orig + eps;
            let up = loss_at(&x)?;
            x[[r, c]] = orig - eps;
            let down = loss_at(&x)?;
            x[[r, c]] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let exact = analytic[[r, c]];
            let abs = (numeric - exact).abs();
            let scale = numeric.abs().max(exact.abs());
            let rel = if scale > 1e-10 { abs / scale } else { abs };
            max_rel = max_rel.max(rel);
            max_abs = max_abs.max(abs);
            checked += 1;
        }
    }
    Ok(GradCheckReport {
        max_relative_error: max_rel,
        max_absolute_error: max_abs,
        checked_entries: checked,
        tie_channels,
        eps,
    })
}
