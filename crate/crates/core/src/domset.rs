//! Dominant-set extraction.
//!
//! A dominant set is extracted with discrete replicator dynamics started
//! from the barycenter of the simplex; the support of the limit point is the
//! cluster. A full partition is obtained by peeling: extract, remove the
//! support, repeat on the remaining induced subgraph.
//!
//! The combinatorial definition (recursive vertex weights and the two
//! membership conditions) is implemented separately by [`WeightOracle`] and
//! [`verify_dominant_set`]. It is exponential in the subset size and exists
//! to check the dynamics, not to replace them.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::affinity::AffinityMatrix;
use crate::error::{Error, Result};

/// Largest subset the recursive weight oracle accepts.
pub const ORACLE_CAP: usize = 12;

/// Largest graph [`brute_force_partition`] enumerates.
pub const BRUTE_FORCE_MAX_N: usize = 10;

const SIMPLEX_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomSetConfig {
    /// Stop once the L1 distance between successive iterates drops below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Vertices with a converged weight above this belong to the support.
    pub support_threshold: f64,
}

impl Default for DomSetConfig {
    fn default() -> Self {
        DomSetConfig {
            tol: 1e-8,
            max_iter: 10_000,
            support_threshold: 1e-5,
        }
    }
}

impl DomSetConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidInput(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidInput("max_iter must be at least 1".into()));
        }
        if !(self.support_threshold > 0.0 && self.support_threshold < 1.0) {
            return Err(Error::InvalidInput(format!(
                "support_threshold must lie in (0, 1), got {}",
                self.support_threshold
            )));
        }
        Ok(())
    }
}

/// A point on the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexVector(Vec<f64>);

impl SimplexVector {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidInput("simplex vector must be nonempty".into()));
        }
        if x.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput(
                "simplex components must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = x.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidInput(format!("simplex components sum to {sum}")));
        }
        Ok(SimplexVector(x))
    }

    /// The barycenter.
    pub fn uniform(m: usize) -> Self {
        assert!(m > 0, "simplex dimension must be positive");
        SimplexVector(vec![1.0 / m as f64; m])
    }

    /// The vertex of the simplex at `i`.
    pub fn vertex(m: usize, i: usize) -> Self {
        let mut x = vec![0.0; m];
        x[i] = 1.0;
        SimplexVector(x)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The quadratic form `x . A x`.
    pub fn cohesiveness(&self, a: &AffinityMatrix) -> f64 {
        let ax = mat_vec(a, &self.0);
        self.0.iter().zip(&ax).map(|(x, y)| x * y).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominantSetResult {
    /// Vertex indices of the extracted set, ascending.
    pub support: Vec<usize>,
    pub characteristic: SimplexVector,
    pub cohesiveness: f64,
    pub iterations: usize,
}

/// Ordered, disjoint, nonempty clusters covering `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPartition", into = "RawPartition")]
pub struct Partition {
    clusters: Vec<Vec<usize>>,
    n: usize,
}

#[derive(Serialize, Deserialize)]
struct RawPartition {
    clusters: Vec<Vec<usize>>,
}

impl TryFrom<RawPartition> for Partition {
    type Error = Error;

    fn try_from(raw: RawPartition) -> Result<Self> {
        Partition::new(raw.clusters)
    }
}

impl From<Partition> for RawPartition {
    fn from(p: Partition) -> Self {
        RawPartition { clusters: p.clusters }
    }
}

impl Partition {
    /// Validates the clusters; members of each cluster are sorted ascending
    /// while the cluster order is kept.
    pub fn new(mut clusters: Vec<Vec<usize>>) -> Result<Self> {
        let n: usize = clusters.iter().map(Vec::len).sum();
        let mut seen = vec![false; n];
        for (k, c) in clusters.iter_mut().enumerate() {
            if c.is_empty() {
                return Err(Error::InvalidPartition(format!("cluster {k} is empty")));
            }
            c.sort_unstable();
            for &v in c.iter() {
                if v >= n {
                    return Err(Error::InvalidPartition(format!(
                        "index {v} in cluster {k} is outside 0..{n}"
                    )));
                }
                if std::mem::replace(&mut seen[v], true) {
                    return Err(Error::InvalidPartition(format!("index {v} appears twice")));
                }
            }
        }
        if n == 0 {
            return Err(Error::InvalidPartition("partition covers no nodes".into()));
        }
        Ok(Partition { clusters, n })
    }

    pub fn singletons(n: usize) -> Self {
        Partition {
            clusters: (0..n).map(|i| vec![i]).collect(),
            n,
        }
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }

    /// Number of clusters.
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Number of nodes covered.
    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn is_all_singletons(&self) -> bool {
        self.clusters.len() == self.n
    }

    /// The partition as a set of sets, ignoring cluster order.
    pub fn as_sets(&self) -> BTreeSet<BTreeSet<usize>> {
        self.clusters.iter().map(|c| c.iter().copied().collect()).collect()
    }

    /// Cluster index of every node.
    pub fn labels(&self) -> Vec<usize> {
        let mut labels = vec![0; self.n];
        for (k, c) in self.clusters.iter().enumerate() {
            for &v in c {
                labels[v] = k;
            }
        }
        labels
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .clusters
            .iter()
            .map(|c| {
                let inner: Vec<String> = c.iter().map(usize::to_string).collect();
                format!("{{{}}}", inner.join(","))
            })
            .collect();
        write!(f, "[{}]", parts.join(" "))
    }
}

fn mat_vec(a: &AffinityMatrix, x: &[f64]) -> Vec<f64> {
    let a = a.view();
    a.rows()
        .into_iter()
        .map(|row| row.iter().zip(x).map(|(a, x)| a * x).sum())
        .collect()
}

fn check_index_set(s: &[usize], n: usize) -> Result<()> {
    if s.is_empty() {
        return Err(Error::Index("vertex set must be nonempty".into()));
    }
    let mut seen = BTreeSet::new();
    for &v in s {
        if v >= n {
            return Err(Error::Index(format!("vertex {v} outside a graph of {n} vertices")));
        }
        if !seen.insert(v) {
            return Err(Error::Index(format!("vertex {v} repeated in set")));
        }
    }
    Ok(())
}

/// Similarity of `j` to `i` relative to the mean similarity of `i` to `S`.
pub fn relative_similarity(s: &[usize], i: usize, j: usize, a: &AffinityMatrix) -> Result<f64> {
    check_index_set(s, a.len())?;
    if !s.contains(&i) {
        return Err(Error::Index(format!("vertex {i} is not in the set")));
    }
    if j >= a.len() || s.contains(&j) {
        return Err(Error::Index(format!(
            "vertex {j} must be a graph vertex outside the set"
        )));
    }
    let mean = s.iter().map(|&k| a.get(i, k)).sum::<f64>() / s.len() as f64;
    Ok(a.get(i, j) - mean)
}

/// Memoised evaluator of the recursive vertex weights `w_S(i)`.
///
/// Subsets are bit masks over a local vertex list of at most 64 entries.
pub struct WeightOracle<'a> {
    a: &'a AffinityMatrix,
    verts: Vec<usize>,
    memo: HashMap<(u64, u32), f64>,
}

impl<'a> WeightOracle<'a> {
    pub fn new(a: &'a AffinityMatrix, verts: Vec<usize>) -> Result<Self> {
        if verts.len() > 64 {
            return Err(Error::InvalidInput("weight oracle handles at most 64 vertices".into()));
        }
        check_index_set(&verts, a.len())?;
        Ok(WeightOracle {
            a,
            verts,
            memo: HashMap::new(),
        })
    }

    /// Oracle over the whole graph.
    pub fn over_graph(a: &'a AffinityMatrix) -> Result<Self> {
        Self::new(a, (0..a.len()).collect())
    }

    fn mask_of(&self, s: &[usize]) -> Result<u64> {
        let mut mask = 0u64;
        for &v in s {
            let pos = self
                .verts
                .iter()
                .position(|&u| u == v)
                .ok_or_else(|| Error::Index(format!("vertex {v} not covered by the oracle")))?;
            mask |= 1 << pos;
        }
        Ok(mask)
    }

    fn check_cap(mask: u64) -> Result<()> {
        let size = mask.count_ones() as usize;
        if size > ORACLE_CAP {
            return Err(Error::OracleCap { size, cap: ORACLE_CAP });
        }
        Ok(())
    }

    /// `w_S(i)` with `S` and `i` given as graph vertex labels.
    pub fn weight(&mut self, s: &[usize], i: usize) -> Result<f64> {
        check_index_set(s, self.a.len())?;
        if !s.contains(&i) {
            return Err(Error::Index(format!("vertex {i} is not in the set")));
        }
        let mask = self.mask_of(s)?;
        Self::check_cap(mask)?;
        let pos = self.mask_of(&[i])?.trailing_zeros();
        Ok(self.weight_mask(mask, pos))
    }

    /// `W(S)`, the sum of the member weights.
    pub fn total(&mut self, s: &[usize]) -> Result<f64> {
        check_index_set(s, self.a.len())?;
        let mask = self.mask_of(s)?;
        Self::check_cap(mask)?;
        Ok(self.total_mask(mask))
    }

    fn total_mask(&mut self, mask: u64) -> f64 {
        bits(mask).map(|p| self.weight_mask(mask, p)).sum()
    }

    fn weight_mask(&mut self, mask: u64, pos: u32) -> f64 {
        if mask.count_ones() == 1 {
            return 1.0;
        }
        if let Some(&w) = self.memo.get(&(mask, pos)) {
            return w;
        }
        let rest = mask & !(1u64 << pos);
        let size = rest.count_ones() as f64;
        let vi = self.verts[pos as usize];
        let mut w = 0.0;
        for q in bits(rest) {
            let vq = self.verts[q as usize];
            let mean = bits(rest).map(|k| self.a.get(vq, self.verts[k as usize])).sum::<f64>() / size;
            let phi = self.a.get(vq, vi) - mean;
            w += phi * self.weight_mask(rest, q);
        }
        self.memo.insert((mask, pos), w);
        w
    }
}

fn bits(mask: u64) -> impl Iterator<Item = u32> {
    let mut m = mask;
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let p = m.trailing_zeros();
            m &= m - 1;
            Some(p)
        }
    })
}

/// `w_S(i)`.
pub fn subset_weight(s: &[usize], i: usize, a: &AffinityMatrix) -> Result<f64> {
    check_index_set(s, a.len())?;
    if s.len() > ORACLE_CAP {
        return Err(Error::OracleCap {
            size: s.len(),
            cap: ORACLE_CAP,
        });
    }
    WeightOracle::new(a, s.to_vec())?.weight(s, i)
}

/// `W(S)`.
pub fn total_weight(s: &[usize], a: &AffinityMatrix) -> Result<f64> {
    check_index_set(s, a.len())?;
    if s.len() > ORACLE_CAP {
        return Err(Error::OracleCap {
            size: s.len(),
            cap: ORACLE_CAP,
        });
    }
    WeightOracle::new(a, s.to_vec())?.total(s)
}

/// Which membership condition a candidate set violates.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Some nonempty subset `T` has `W(T) <= tol`.
    SubsetWeight { subset: Vec<usize>, total: f64 },
    /// A member has `w_S(i) <= tol`.
    InternalWeight { vertex: usize, weight: f64 },
    /// An outside vertex has `w_{S+i}(i) >= tol`.
    ExternalWeight { vertex: usize, weight: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SubsetWeight { subset, total } => {
                write!(f, "W({subset:?}) = {total:e} is not positive")
            }
            Violation::InternalWeight { vertex, weight } => {
                write!(f, "internal weight of {vertex} is {weight:e}, not positive")
            }
            Violation::ExternalWeight { vertex, weight } => {
                write!(f, "external vertex {vertex} would join with weight {weight:e}")
            }
        }
    }
}

/// Checks the dominant-set conditions, returning the first violated one.
///
/// Internal quantities (`W(T)` for every nonempty `T` in `S`, and `w_S(i)`
/// for members) must exceed `tol`; the join weight `w_{S+j}(j)` of every
/// outside vertex must stay below `tol`. Weights within `tol` of zero
/// therefore count against membership on both sides, so pairs with zero
/// affinity never form a set while an outside vertex with an exactly zero
/// join weight does not break one.
pub fn check_dominant_set(s: &[usize], a: &AffinityMatrix, tol: f64) -> Result<Option<Violation>> {
    check_index_set(s, a.len())?;
    if tol.is_nan() || tol < 0.0 {
        return Err(Error::InvalidInput(format!("tol must be nonnegative, got {tol}")));
    }
    let n = a.len();
    let externals: Vec<usize> = (0..n).filter(|v| !s.contains(v)).collect();
    let needed = if externals.is_empty() { s.len() } else { s.len() + 1 };
    if needed > ORACLE_CAP {
        return Err(Error::OracleCap {
            size: needed,
            cap: ORACLE_CAP,
        });
    }

    // Members occupy the low bits so subsets of S are submasks of `full`.
    let mut verts = s.to_vec();
    if n <= 64 {
        verts.extend(&externals);
        let mut oracle = WeightOracle::new(a, verts)?;
        return Ok(check_with_oracle(&mut oracle, s.len(), externals.len()).with_tol(tol));
    }
    let mut oracle = WeightOracle::new(a, verts.clone())?;
    if let Some(v) = check_with_oracle(&mut oracle, s.len(), 0).with_tol(tol) {
        return Ok(Some(v));
    }
    for &j in &externals {
        let mut local = verts.clone();
        local.push(j);
        let mut oracle = WeightOracle::new(a, local)?;
        if let Some(v) = check_with_oracle(&mut oracle, s.len(), 1).with_tol(tol) {
            return Ok(Some(v));
        }
    }
    Ok(None)
}

// Extreme weights found while checking; the tolerance is applied afterwards.
struct RawCheck {
    subset_min: (u64, f64),
    internal_min: (u32, f64),
    external_max: Option<(u32, f64)>,
    verts: Vec<usize>,
}

impl RawCheck {
    fn with_tol(self, tol: f64) -> Option<Violation> {
        let label = |mask: u64| -> Vec<usize> { bits(mask).map(|p| self.verts[p as usize]).collect() };
        if self.subset_min.1 <= tol {
            return Some(Violation::SubsetWeight {
                subset: label(self.subset_min.0),
                total: self.subset_min.1,
            });
        }
        if self.internal_min.1 <= tol {
            return Some(Violation::InternalWeight {
                vertex: self.verts[self.internal_min.0 as usize],
                weight: self.internal_min.1,
            });
        }
        match self.external_max {
            Some((p, w)) if w >= tol => Some(Violation::ExternalWeight {
                vertex: self.verts[p as usize],
                weight: w,
            }),
            _ => None,
        }
    }
}

fn check_with_oracle(oracle: &mut WeightOracle<'_>, members: usize, externals: usize) -> RawCheck {
    let full = (1u64 << members) - 1;
    let mut subset_min = (full, f64::INFINITY);
    let mut sub = full;
    while sub != 0 {
        let w = oracle.total_mask(sub);
        if w < subset_min.1 {
            subset_min = (sub, w);
        }
        sub = (sub - 1) & full;
    }
    let mut internal_min = (0u32, f64::INFINITY);
    for p in bits(full) {
        let w = oracle.weight_mask(full, p);
        if w < internal_min.1 {
            internal_min = (p, w);
        }
    }
    let mut external_max: Option<(u32, f64)> = None;
    for e in 0..externals {
        let p = (members + e) as u32;
        let w = oracle.weight_mask(full | (1u64 << p), p);
        if external_max.is_none_or(|(_, best)| w > best) {
            external_max = Some((p, w));
        }
    }
    RawCheck {
        subset_min,
        internal_min,
        external_max,
        verts: oracle.verts.clone(),
    }
}

/// `true` iff `s` satisfies the dominant-set conditions up to `tol`.
pub fn verify_dominant_set(s: &[usize], a: &AffinityMatrix, tol: f64) -> Result<bool> {
    Ok(check_dominant_set(s, a, tol)?.is_none())
}

/// Every vertex subset of a small graph that verifies as a dominant set,
/// in increasing bit-mask order of the subsets.
pub fn brute_force_partition(a: &AffinityMatrix) -> Result<Vec<Vec<usize>>> {
    brute_force_dominant_sets(a, BRUTE_FORCE_TOL)
}

/// Tolerance used by [`brute_force_partition`].
pub const BRUTE_FORCE_TOL: f64 = 1e-9;

pub fn brute_force_dominant_sets(a: &AffinityMatrix, tol: f64) -> Result<Vec<Vec<usize>>> {
    let n = a.len();
    if n == 0 || n > BRUTE_FORCE_MAX_N {
        return Err(Error::InvalidInput(format!(
            "brute force enumeration needs 1..={BRUTE_FORCE_MAX_N} vertices, got {n}"
        )));
    }
    let mut found = Vec::new();
    for mask in 1u64..(1 << n) {
        let s: Vec<usize> = bits(mask).map(|p| p as usize).collect();
        if verify_dominant_set(&s, a, tol)? {
            found.push(s);
        }
    }
    Ok(found)
}

/// One discrete replicator update `x_i <- x_i (Ax)_i / (x . Ax)`.
pub fn replicator_step(x: &SimplexVector, a: &AffinityMatrix) -> Result<SimplexVector> {
    if x.len() != a.len() {
        return Err(Error::shape(format!("simplex of length {}", a.len()), x.len()));
    }
    let ax = mat_vec(a, &x.0);
    let payoff: f64 = x.0.iter().zip(&ax).map(|(x, y)| x * y).sum();
    if payoff.is_nan() {
        return Err(Error::Numerical("x.Ax is NaN".into()));
    }
    if payoff <= 0.0 {
        return Err(Error::Degenerate(payoff));
    }
    Ok(SimplexVector(
        x.0.iter().zip(&ax).map(|(x, y)| x * y / payoff).collect(),
    ))
}

/// Runs replicator dynamics from the barycenter and reads off the support.
///
/// Graphs without any positive edge (and hence no positive payoff at the
/// barycenter) yield the lowest-index vertex as a singleton.
pub fn extract_dominant_set(a: &AffinityMatrix, cfg: &DomSetConfig) -> Result<DominantSetResult> {
    let m = a.len();
    if m == 0 {
        return Err(Error::InvalidInput("cannot extract from an empty graph".into()));
    }
    let singleton = |iterations| DominantSetResult {
        support: vec![0],
        characteristic: SimplexVector::vertex(m, 0),
        cohesiveness: 0.0,
        iterations,
    };
    if m == 1 {
        return Ok(singleton(0));
    }

    let mut x = SimplexVector::uniform(m);
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        let next = match replicator_step(&x, a) {
            Ok(next) => next,
            Err(Error::Degenerate(_)) => return Ok(singleton(iterations)),
            Err(e) => return Err(e),
        };
        iterations += 1;
        let change: f64 = x.0.iter().zip(&next.0).map(|(p, q)| (p - q).abs()).sum();
        x = next;
        if change.is_nan() {
            return Err(Error::Numerical("replicator iterate became NaN".into()));
        }
        if change < cfg.tol {
            break;
        }
    }

    let mut support: Vec<usize> = (0..m).filter(|&i| x.0[i] > cfg.support_threshold).collect();
    if support.is_empty() {
        let best = (0..m)
            .max_by(|&i, &j| x.0[i].total_cmp(&x.0[j]).then(j.cmp(&i)))
            .unwrap_or(0);
        support.push(best);
    }
    let cohesiveness = x.cohesiveness(a);
    Ok(DominantSetResult {
        support,
        characteristic: x,
        cohesiveness,
        iterations,
    })
}

/// Peels dominant sets off the graph until every vertex is assigned.
/// Clusters appear in extraction order.
pub fn peel_partition(a: &AffinityMatrix, cfg: &DomSetConfig) -> Result<Partition> {
    let n = a.len();
    if n == 0 {
        return Err(Error::InvalidInput("cannot partition an empty graph".into()));
    }
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut clusters = Vec::new();
    while !remaining.is_empty() {
        let sub = a.induced(&remaining);
        let found = extract_dominant_set(&sub, cfg)?;
        let cluster: Vec<usize> = found.support.iter().map(|&p| remaining[p]).collect();
        let mut keep = vec![true; remaining.len()];
        for &p in &found.support {
            keep[p] = false;
        }
        remaining = remaining
            .iter()
            .zip(&keep)
            .filter_map(|(&v, &k)| k.then_some(v))
            .collect();
        clusters.push(cluster);
    }
    Partition::new(clusters)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn graph(a: Array2<f64>) -> AffinityMatrix {
        AffinityMatrix::new(a).unwrap()
    }

    fn random_graph(rng: &mut impl Rng, n: usize) -> AffinityMatrix {
        let mut a = Array2::zeros((n, n));
        for i in 0..n {
            for j in (i + 1)..n {
                let w: f64 = rng.random();
                a[[i, j]] = w;
                a[[j, i]] = w;
            }
        }
        graph(a)
    }

    fn uniform_graph(n: usize, c: f64) -> AffinityMatrix {
        graph(Array2::from_shape_fn((n, n), |(i, j)| if i == j { 0.0 } else { c }))
    }

    fn from_edges(n: usize, edges: &[(usize, usize)], w: f64) -> AffinityMatrix {
        let mut a = Array2::zeros((n, n));
        for &(i, j) in edges {
            a[[i, j]] = w;
            a[[j, i]] = w;
        }
        graph(a)
    }

    // Direct transcription of the recursive weight without memoisation.
    fn naive_phi(s: &[usize], i: usize, j: usize, a: &AffinityMatrix) -> f64 {
        a.get(i, j) - s.iter().map(|&k| a.get(i, k)).sum::<f64>() / s.len() as f64
    }

    fn naive_weight(s: &[usize], i: usize, a: &AffinityMatrix) -> f64 {
        if s.len() == 1 {
            return 1.0;
        }
        let rest: Vec<usize> = s.iter().copied().filter(|&v| v != i).collect();
        rest.iter()
            .map(|&j| naive_phi(&rest, j, i, a) * naive_weight(&rest, j, a))
            .sum()
    }

    fn subsets(n: usize) -> impl Iterator<Item = Vec<usize>> {
        (1u32..(1 << n)).map(move |m| (0..n).filter(|i| m & (1 << i) != 0).collect())
    }

    // 0/1 graph on 8 vertices whose unique maximum clique is {0,1,2,3}.
    fn planted_clique() -> AffinityMatrix {
        let mut edges = vec![];
        for i in 0..4 {
            for j in (i + 1)..4 {
                edges.push((i, j));
            }
        }
        edges.extend([(3, 4), (4, 5), (5, 6), (6, 7), (0, 7), (1, 5)]);
        from_edges(8, &edges, 1.0)
    }

    #[test]
    fn relative_similarity_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_graph(&mut rng, 5);
        assert_eq!(relative_similarity(&[2], 2, 4, &a).unwrap(), a.get(2, 4));

        let u = uniform_graph(4, 0.8);
        approx::assert_relative_eq!(relative_similarity(&[0, 1], 0, 3, &u).unwrap(), 0.4);

        let s = [0, 3, 4];
        for &i in &s {
            for j in [1, 2] {
                approx::assert_relative_eq!(
                    relative_similarity(&s, i, j, &a).unwrap(),
                    naive_phi(&s, i, j, &a),
                    max_relative = 1e-14
                );
            }
        }
    }

    #[test]
    fn relative_similarity_rejects_bad_indices() {
        let a = uniform_graph(4, 1.0);
        assert!(relative_similarity(&[0, 1], 2, 3, &a).is_err());
        assert!(relative_similarity(&[0, 1], 0, 1, &a).is_err());
        assert!(relative_similarity(&[], 0, 1, &a).is_err());
        assert!(relative_similarity(&[0], 0, 9, &a).is_err());
    }

    #[test]
    fn subset_weight_small_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_graph(&mut rng, 5);
        assert_eq!(subset_weight(&[3], 3, &a).unwrap(), 1.0);
        approx::assert_relative_eq!(subset_weight(&[1, 4], 4, &a).unwrap(), a.get(1, 4));
        approx::assert_relative_eq!(total_weight(&[1, 4], &a).unwrap(), 2.0 * a.get(1, 4));
        assert_eq!(total_weight(&[2], &a).unwrap(), 1.0);
    }

    #[test]
    fn memoised_weights_match_naive_recursion() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_graph(&mut rng, 5);
        let mut oracle = WeightOracle::over_graph(&a).unwrap();
        for s in subsets(5) {
            let mut naive_total = 0.0;
            for &i in &s {
                let expected = naive_weight(&s, i, &a);
                naive_total += expected;
                approx::assert_relative_eq!(
                    oracle.weight(&s, i).unwrap(),
                    expected,
                    epsilon = 1e-14,
                    max_relative = 1e-12
                );
                approx::assert_relative_eq!(
                    subset_weight(&s, i, &a).unwrap(),
                    expected,
                    epsilon = 1e-14,
                    max_relative = 1e-12
                );
            }
            approx::assert_relative_eq!(
                total_weight(&s, &a).unwrap(),
                naive_total,
                epsilon = 1e-14,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn oracle_cap_is_enforced() {
        let a = uniform_graph(14, 1.0);
        let s: Vec<usize> = (0..13).collect();
        assert!(matches!(
            subset_weight(&s, 0, &a),
            Err(Error::OracleCap { size: 13, .. })
        ));
        assert!(matches!(total_weight(&s, &a), Err(Error::OracleCap { .. })));
        let s: Vec<usize> = (0..12).collect();
        assert!(matches!(
            verify_dominant_set(&s, &a, 1e-6),
            Err(Error::OracleCap { size: 13, .. })
        ));
        assert!(verify_dominant_set(&(0..12).collect::<Vec<_>>(), &uniform_graph(12, 1.0), 1e-6).unwrap());
    }

    #[test]
    fn verify_on_four_node_graph() {
        let mut a = Array2::from_shape_fn((4, 4), |(i, j)| if i == j { 0.0 } else { 0.05 });
        a[[0, 1]] = 1.0;
        a[[1, 0]] = 1.0;
        let a = graph(a);
        assert!(verify_dominant_set(&[0, 1], &a, 1e-6).unwrap());
        assert!(!verify_dominant_set(&[0, 1, 2], &a, 1e-6).unwrap());
        let found = brute_force_partition(&a).unwrap();
        assert!(found.contains(&vec![0, 1]));
    }

    #[test]
    fn zero_graph_singletons_are_boundary_cases() {
        let a = AffinityMatrix::zeros(3);
        assert!(verify_dominant_set(&[0], &a, 1e-9).unwrap());
        assert!(!verify_dominant_set(&[0], &a, 0.0).unwrap());
        assert_eq!(brute_force_partition(&a).unwrap(), vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn check_reports_the_violated_condition() {
        let mut a = Array2::from_shape_fn((4, 4), |(i, j)| if i == j { 0.0 } else { 0.05 });
        a[[0, 1]] = 1.0;
        a[[1, 0]] = 1.0;
        let a = graph(a);
        assert!(matches!(
            check_dominant_set(&[0], &a, 1e-6).unwrap(),
            Some(Violation::ExternalWeight { vertex: 1, .. })
        ));
        assert!(matches!(
            check_dominant_set(&[0, 1, 2], &a, 1e-6).unwrap(),
            Some(Violation::SubsetWeight { .. } | Violation::InternalWeight { .. })
        ));
    }

    #[test]
    fn planted_clique_is_recovered() {
        let a = planted_clique();
        assert!(verify_dominant_set(&[0, 1, 2, 3], &a, 1e-6).unwrap());
        let r = extract_dominant_set(&a, &DomSetConfig::default()).unwrap();
        assert_eq!(r.support, vec![0, 1, 2, 3]);
        approx::assert_relative_eq!(r.cohesiveness, 0.75, epsilon = 1e-6);
        let all = brute_force_partition(&a).unwrap();
        assert!(all.contains(&vec![0, 1, 2, 3]));
        // Only maximal cliques of the graph verify.
        for s in &all {
            for (x, &i) in s.iter().enumerate() {
                for &j in &s[x + 1..] {
                    assert_eq!(a.get(i, j), 1.0, "{s:?} is not a clique");
                }
            }
        }
    }

    #[test]
    fn two_vertex_graph_has_one_dominant_set() {
        let a = graph(array![[0.0, 0.3], [0.3, 0.0]]);
        assert_eq!(brute_force_partition(&a).unwrap(), vec![vec![0, 1]]);
    }

    #[test]
    fn brute_force_size_guard() {
        assert!(brute_force_partition(&AffinityMatrix::zeros(11)).is_err());
    }

    #[test]
    fn replicator_step_cases() {
        let u = uniform_graph(5, 0.7);
        let x = SimplexVector::uniform(5);
        let next = replicator_step(&x, &u).unwrap();
        for v in next.as_slice() {
            approx::assert_relative_eq!(*v, 0.2, max_relative = 1e-15);
        }
        let e = SimplexVector::vertex(5, 2);
        assert!(matches!(replicator_step(&e, &u), Err(Error::Degenerate(_))));
        assert!(replicator_step(&SimplexVector::uniform(4), &u).is_err());
    }

    #[test]
    fn extraction_edge_cases() {
        let cfg = DomSetConfig::default();
        assert_eq!(
            extract_dominant_set(&AffinityMatrix::zeros(1), &cfg).unwrap().support,
            vec![0]
        );
        assert_eq!(
            extract_dominant_set(&AffinityMatrix::zeros(3), &cfg).unwrap().support,
            vec![0]
        );
        assert_eq!(
            extract_dominant_set(&uniform_graph(6, 2.0), &cfg).unwrap().support,
            (0..6).collect::<Vec<_>>()
        );
    }

    #[test]
    fn peel_cases() {
        let cfg = DomSetConfig::default();
        assert_eq!(
            peel_partition(&AffinityMatrix::zeros(3), &cfg).unwrap().clusters(),
            &[vec![0], vec![1], vec![2]]
        );
        let u = uniform_graph(5, 1.3);
        assert_eq!(peel_partition(&u, &cfg).unwrap().clusters(), &[vec![0, 1, 2, 3, 4]]);
        assert!(verify_dominant_set(&[0, 1, 2, 3, 4], &u, 1e-6).unwrap());

        let block = from_edges(5, &[(0, 1), (0, 2), (1, 2), (3, 4)], 1.0);
        let p = peel_partition(&block, &cfg).unwrap();
        assert_eq!(p.clusters(), &[vec![0, 1, 2], vec![3, 4]]);
        let oracle = brute_force_partition(&block).unwrap();
        assert!(oracle.contains(&vec![0, 1, 2]));
        assert!(verify_dominant_set(&[3, 4], &block, 1e-6).unwrap());
    }

    #[test]
    fn partition_validation_and_json() {
        assert!(Partition::new(vec![vec![0, 1], vec![1, 2]]).is_err());
        assert!(Partition::new(vec![vec![0, 3]]).is_err());
        assert!(Partition::new(vec![vec![0], vec![]]).is_err());
        assert!(Partition::new(vec![]).is_err());
        let p = Partition::new(vec![vec![5, 1, 0], vec![2, 3], vec![4]]).unwrap();
        assert_eq!(
            serde_json::to_string(&p).unwrap(),
            r#"{"clusters":[[0,1,5],[2,3],[4]]}"#
        );
        let back: Partition = serde_json::from_str(r#"{"clusters": [[0,1,5],[2,3],[4]]}"#).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<Partition>(r#"{"clusters": [[0,1],[1]]}"#).is_err());
        assert_eq!(p.labels(), vec![0, 0, 1, 1, 2, 0]);
    }

    proptest! {
        #[test]
        fn replicator_preserves_simplex_and_raises_payoff(seed in any::<u64>(), n in 2usize..9, steps in 1usize..40) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_graph(&mut rng, n);
            let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
            let total: f64 = raw.iter().sum();
            let mut x = SimplexVector::new(raw.iter().map(|v| v / total).collect()).unwrap_or_else(|_| SimplexVector::uniform(n));
            let mut payoff = x.cohesiveness(&a);
            for _ in 0..steps {
                x = replicator_step(&x, &a).unwrap();
                let sum: f64 = x.as_slice().iter().sum();
                prop_assert!((sum - 1.0).abs() <= 1e-12);
                prop_assert!(x.as_slice().iter().all(|v| *v >= 0.0));
                let next = x.cohesiveness(&a);
                prop_assert!(next >= payoff - 1e-12, "payoff dropped {payoff} -> {next}");
                payoff = next;
            }
        }

        #[test]
        fn peel_is_a_disjoint_cover(seed in any::<u64>(), n in 1usize..12, density in 0.0f64..1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut a = Array2::zeros((n, n));
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.random::<f64>() < density {
                        let w: f64 = rng.random();
                        a[[i, j]] = w;
                        a[[j, i]] = w;
                    }
                }
            }
            let p = peel_partition(&graph(a), &DomSetConfig::default()).unwrap();
            prop_assert_eq!(p.n_nodes(), n);
            Partition::new(p.clusters().to_vec()).unwrap();
        }

        #[test]
        fn peel_is_permutation_equivariant(seed in any::<u64>(), n in 2usize..10) {
            use rand::seq::SliceRandom;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_graph(&mut rng, n);
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let cfg = DomSetConfig::default();
            let base = peel_partition(&a, &cfg).unwrap();
            let moved = peel_partition(&a.permuted(&perm), &cfg).unwrap();
            // Relabel the permuted result back to original vertex names.
            let relabelled: BTreeSet<BTreeSet<usize>> = moved
                .clusters()
                .iter()
                .map(|c| c.iter().map(|&v| perm[v]).collect())
                .collect();
            prop_assert_eq!(base.as_sets(), relabelled);
        }
    }
}
