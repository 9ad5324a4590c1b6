//! View-similarity graphs.
//!
//! Every view of an object is summarised by a nonnegative activation vector.
//! Two views are connected by an edge weighted with the inner product of
//! their vectors; the graph has no self-loops.

use std::path::Path;

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::io;

/// `n` views by `d` nonnegative, finite feature components.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix(Array2<f64>);

impl FeatureMatrix {
    pub fn new(data: Array2<f64>) -> Result<Self> {
        let (n, d) = data.dim();
        if n == 0 || d == 0 {
            return Err(Error::InvalidInput(format!(
                "feature matrix must be at least 1x1, got {n}x{d}"
            )));
        }
        if let Some(((r, c), v)) = data.indexed_iter().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidInput(format!(
                "feature ({r}, {c}) = {v} is not a finite nonnegative value"
            )));
        }
        Ok(FeatureMatrix(data))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidInput("ragged feature rows".into()));
        }
        let flat = rows.iter().flatten().copied().collect();
        Self::new(Array2::from_shape_vec((n, d), flat).map_err(|e| Error::InvalidInput(e.to_string()))?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::new(io::read_matrix(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        io::write_matrix(path, self.0.view())
    }

    /// Number of views.
    pub fn n_views(&self) -> usize {
        self.0.nrows()
    }

    /// Feature dimension.
    pub fn dim(&self) -> usize {
        self.0.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.0.row(i)
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }
}

/// Symmetric, nonnegative, zero-diagonal similarity matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix(Array2<f64>);

impl AffinityMatrix {
    pub fn new(data: Array2<f64>) -> Result<Self> {
        let (n, m) = data.dim();
        if n != m {
            return Err(Error::shape("square matrix".to_string(), format!("{n}x{m}")));
        }
        for ((i, j), &v) in data.indexed_iter() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "affinity ({i}, {j}) = {v} is not a finite nonnegative value"
                )));
            }
            if i == j && v != 0.0 {
                return Err(Error::InvalidInput(format!(
                    "affinity diagonal ({i}, {i}) = {v} must be zero"
                )));
            }
            if v != data[[j, i]] {
                return Err(Error::InvalidInput(format!("affinity is not symmetric at ({i}, {j})")));
            }
        }
        Ok(AffinityMatrix(data))
    }

    pub fn zeros(n: usize) -> Self {
        AffinityMatrix(Array2::zeros((n, n)))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::new(io::read_matrix(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        io::write_matrix(path, self.0.view())
    }

    /// Number of vertices.
    pub fn len(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[[i, j]]
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    /// Induced subgraph on `vertices`, in the given order.
    pub fn induced(&self, vertices: &[usize]) -> AffinityMatrix {
        let m = vertices.len();
        AffinityMatrix(Array2::from_shape_fn((m, m), |(a, b)| {
            self.0[[vertices[a], vertices[b]]]
        }))
    }

    /// Applies a vertex relabelling: entry `(i, j)` of the result is entry
    /// `(perm[i], perm[j])` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> AffinityMatrix {
        self.induced(perm)
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }
}

/// Inner-product similarity graph over the rows of `features`.
///
/// Products are accumulated left to right, so appending zero columns leaves
/// every entry bit-identical.
pub fn build_affinity(features: &FeatureMatrix) -> AffinityMatrix {
    build_affinity_view(features.view())
}

pub(crate) fn build_affinity_view(x: ArrayView2<'_, f64>) -> AffinityMatrix {
    let n = x.nrows();
    let mut a = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let w = x.row(i).iter().zip(x.row(j)).map(|(p, q)| p * q).sum();
            a[[i, j]] = w;
            a[[j, i]] = w;
        }
    }
    AffinityMatrix(a)
}

/// Entrywise arithmetic mean of equally sized affinity matrices.
pub fn average_affinities(mats: &[AffinityMatrix]) -> Result<AffinityMatrix> {
    let first = mats
        .first()
        .ok_or_else(|| Error::InvalidInput("cannot average an empty list of affinities".into()))?;
    let n = first.len();
    let mut sum = Array2::<f64>::zeros((n, n));
    for (k, m) in mats.iter().enumerate() {
        if m.len() != n {
            return Err(Error::shape(
                format!("{n}x{n} affinity"),
                format!("{0}x{0} at position {k}", m.len()),
            ));
        }
        sum += &m.0;
    }
    sum /= mats.len() as f64;
    Ok(AffinityMatrix(sum))
}
