//! K-nearest-neighbor heat-kernel graph, residual matrix and Gram target.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::symmetrize;
use crate::tensor::DenseTensor;

/// Heat-kernel bandwidth.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Epsilon {
    Fixed(f64),
    /// Median squared distance over all retained neighbor pairs.
    MedianKnnSqDist,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffinityConfig {
    pub k_neighbors: usize,
    pub epsilon: Epsilon,
}

impl AffinityConfig {
    pub fn new(k_neighbors: usize) -> Self {
        AffinityConfig {
            k_neighbors,
            epsilon: Epsilon::MedianKnnSqDist,
        }
    }
}

/// Row-sparse `n x n` weights.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMatrix {
    pub n: usize,
    /// `(column, weight)` pairs sorted by column.
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl WeightMatrix {
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                m[(i, j)] += w;
            }
        }
        m
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.rows[i].iter().map(|&(_, w)| w).sum()
    }
}

/// Neighbor lists with their squared distances, nearest first.
#[derive(Clone, Debug, PartialEq)]
pub struct KnnSets {
    pub indices: Vec<Vec<usize>>,
    pub sq_dists: Vec<Vec<f64>>,
}

/// Stacks vectorized samples as the columns of a `d x N` matrix.
pub fn samples_to_matrix(samples: &[DenseTensor]) -> Result<DMatrix<f64>> {
    let first = samples
        .first()
        .ok_or_else(|| Error::InvalidArgument("no samples".into()))?;
    let d = first.numel();
    let mut data = Vec::with_capacity(d * samples.len());
    for (i, s) in samples.iter().enumerate() {
        if s.dims() != first.dims() {
            return Err(Error::ShapeMismatch(format!(
                "sample {i} has shape {:?}, sample 0 has {:?}",
                s.dims(),
                first.dims()
            )));
        }
        data.extend_from_slice(s.data());
    }
    Ok(DMatrix::from_vec(d, samples.len(), data))
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// The `k` nearest other columns of `data` for every column.
pub fn knn_sets(data: &DMatrix<f64>, k: usize) -> Result<KnnSets> {
    let n = data.ncols();
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= K < N, got K = {k}, N = {n}"
        )));
    }
    let d = data.nrows();
    let col = |i: usize| &data.as_slice()[i * d..(i + 1) * d];
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = sq_dist(col(i), col(j));
            dist[i * n + j] = v;
            dist[j * n + i] = v;
        }
    }
    let mut indices = Vec::with_capacity(n);
    let mut sq_dists = Vec::with_capacity(n);
    for i in 0..n {
        let row = &dist[i * n..(i + 1) * n];
        let mut cand: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        cand.sort_by(|&a, &b| row[a].partial_cmp(&row[b]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
        cand.truncate(k);
        sq_dists.push(cand.iter().map(|&j| row[j]).collect());
        indices.push(cand);
    }
    Ok(KnnSets { indices, sq_dists })
}

/// Resolves the bandwidth. A zero median (many duplicates) falls back to the
/// mean positive retained distance, then to 1.
pub fn resolve_epsilon(eps: Epsilon, knn: &KnnSets) -> Result<f64> {
    match eps {
        Epsilon::Fixed(e) if e > 0.0 && e.is_finite() => Ok(e),
        Epsilon::Fixed(e) => Err(Error::InvalidArgument(format!("epsilon must be positive, got {e}"))),
        Epsilon::MedianKnnSqDist => {
            let mut all: Vec<f64> = knn.sq_dists.iter().flatten().copied().collect();
            all.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
            let m = all.len();
            let median = if m % 2 == 1 {
                all[m / 2]
            } else {
                0.5 * (all[m / 2 - 1] + all[m / 2])
            };
            if median > 0.0 {
                return Ok(median);
            }
            let pos: Vec<f64> = all.into_iter().filter(|&x| x > 0.0).collect();
            if pos.is_empty() {
                Ok(1.0)
            } else {
                Ok(pos.iter().sum::<f64>() / pos.len() as f64)
            }
        }
    }
}

/// Unnormalized heat-kernel weights `F` and the bandwidth actually used.
pub fn affinity(data: &DMatrix<f64>, cfg: &AffinityConfig) -> Result<(WeightMatrix, f64)> {
    let knn = knn_sets(data, cfg.k_neighbors)?;
    let eps = resolve_epsilon(cfg.epsilon, &knn)?;
    let rows = knn
        .indices
        .iter()
        .zip(&knn.sq_dists)
        .map(|(idx, dist)| {
            let mut row: Vec<(usize, f64)> =
                idx.iter().zip(dist).map(|(&j, &s)| (j, (-s / eps).exp())).collect();
            row.sort_by_key(|&(j, _)| j);
            row
        })
        .collect();
    Ok((
        WeightMatrix {
            n: data.ncols(),
            rows,
        },
        eps,
    ))
}

/// `S = F + F^T` with each row scaled to sum to one.
pub fn symmetrize_normalize(f: &WeightMatrix) -> Result<WeightMatrix> {
    let mut dense: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); f.n];
    for (i, row) in f.rows.iter().enumerate() {
        for &(j, w) in row {
            *dense[i].entry(j).or_insert(0.0) += w;
            *dense[j].entry(i).or_insert(0.0) += w;
        }
    }
    let mut rows = Vec::with_capacity(f.n);
    for (i, map) in dense.into_iter().enumerate() {
        let sum: f64 = map.values().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(Error::Numeric(format!("row {i} of F + F^T sums to {sum}")));
        }
        rows.push(map.into_iter().map(|(j, w)| (j, w / sum)).collect());
    }
    Ok(WeightMatrix { n: f.n, rows })
}

/// `Y = D - D S^T`: column `i` is `v_i - sum_j S_ij v_j`.
pub fn build_residual(data: &DMatrix<f64>, s: &WeightMatrix) -> Result<DMatrix<f64>> {
    if s.n != data.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "weights are {}x{}, data has {} samples",
            s.n,
            s.n,
            data.ncols()
        )));
    }
    let mut y = data.clone();
    for (i, row) in s.rows.iter().enumerate() {
        for &(j, w) in row {
            let src = data.column(j).into_owned();
            y.column_mut(i).axpy(-w, &src, 1.0);
        }
    }
    Ok(y)
}

/// `Z = Y Y^T`, explicitly symmetrized.
pub fn build_gram(y: &DMatrix<f64>) -> DMatrix<f64> {
    symmetrize(&(y * y.transpose()))
}

/// Graph-stage outputs kept for reporting.
#[derive(Clone, Debug)]
pub struct GraphOutput {
    pub s: WeightMatrix,
    pub epsilon: f64,
    pub z: DMatrix<f64>,
}

/// affinity, normalization, residual and Gram target in one call.
pub fn build_graph(data: &DMatrix<f64>, cfg: &AffinityConfig) -> Result<GraphOutput> {
    let (f, epsilon) = affinity(data, cfg)?;
    let s = symmetrize_normalize(&f)?;
    let y = build_residual(data, &s)?;
    Ok(GraphOutput {
        z: build_gram(&y),
        s,
        epsilon,
    })
}
