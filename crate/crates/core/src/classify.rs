//! K-nearest-neighbor classification of embedded samples.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tt::{project_columns, storage_count, StorageCount, TtChain};

/// Points stored one per column, with a label each.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledEmbedding {
    pub coords: DMatrix<f64>,
    pub labels: Vec<i64>,
}

impl LabeledEmbedding {
    pub fn new(coords: DMatrix<f64>, labels: Vec<i64>) -> Result<Self> {
        if coords.ncols() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} points but {} labels",
                coords.ncols(),
                labels.len()
            )));
        }
        Ok(LabeledEmbedding { coords, labels })
    }
}

/// Majority vote over the `k` nearest training points. Distance ties go to
/// the lower training index; vote ties go to whichever tied class appears
/// first in the neighbor ordering.
pub fn knn_classify(train: &LabeledEmbedding, test: &DMatrix<f64>, k: usize) -> Result<Vec<i64>> {
    let n = train.labels.len();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("need 1 <= K <= {n}, got {k}")));
    }
    if test.nrows() != train.coords.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "test points have dimension {}, training points {}",
            test.nrows(),
            train.coords.nrows()
        )));
    }
    let d = test.nrows();
    let tr = train.coords.as_slice();
    let mut out = Vec::with_capacity(test.ncols());
    let mut dist = vec![0.0; n];
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for col in test.column_iter() {
        let q = col.as_slice();
        for (j, dj) in dist.iter_mut().enumerate() {
            *dj = tr[j * d..(j + 1) * d]
                .iter()
                .zip(q)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
        }
        order.clear();
        order.extend(0..n);
        let cmp = |a: &usize, b: &usize| dist[*a].partial_cmp(&dist[*b]).unwrap_or(Ordering::Equal).then(a.cmp(b));
        if k < n {
            order.select_nth_unstable_by(k - 1, cmp);
            order.truncate(k);
        }
        order.sort_by(cmp);

        let mut votes: BTreeMap<i64, (usize, usize)> = BTreeMap::new();
        for (rank, &j) in order.iter().enumerate() {
            votes.entry(train.labels[j]).or_insert((0, rank)).0 += 1;
        }
        let (&label, _) = votes
            .iter()
            .max_by(|a, b| a.1 .0.cmp(&b.1 .0).then(b.1 .1.cmp(&a.1 .1)))
            .unwrap();
        out.push(label);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfusionEntry {
    pub truth: i64,
    pub predicted: i64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub error_rate: f64,
    pub errors: usize,
    pub n_test: usize,
    pub confusion: Vec<ConfusionEntry>,
    /// Stored parameters over raw training storage `d * N_train`.
    pub rho: f64,
    pub storage: Option<StorageCount>,
    pub predictions: Vec<i64>,
    pub embed_seconds: f64,
    pub classify_seconds: f64,
}

/// Embeds both sets through `chain` (or uses raw vectors when `None`) and
/// classifies the test columns.
pub fn evaluate(
    chain: Option<&TtChain>,
    train: &DMatrix<f64>,
    train_labels: &[i64],
    test: &DMatrix<f64>,
    test_labels: &[i64],
    k: usize,
) -> Result<EvalResult> {
    if test.ncols() != test_labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} test samples but {} labels",
            test.ncols(),
            test_labels.len()
        )));
    }
    let t0 = Instant::now();
    let (train_emb, test_emb) = match chain {
        Some(c) => (project_columns(c, train)?, project_columns(c, test)?),
        None => (train.clone(), test.clone()),
    };
    let embed_seconds = t0.elapsed().as_secs_f64();
    let reference = LabeledEmbedding::new(train_emb, train_labels.to_vec())?;

    let t1 = Instant::now();
    let predictions = knn_classify(&reference, &test_emb, k)?;
    let classify_seconds = t1.elapsed().as_secs_f64();

    let mut counts: BTreeMap<(i64, i64), usize> = BTreeMap::new();
    for (&t, &p) in test_labels.iter().zip(&predictions) {
        *counts.entry((t, p)).or_insert(0) += 1;
    }
    let errors = test_labels.iter().zip(&predictions).filter(|(t, p)| t != p).count();
    let n_test = test_labels.len();
    let raw = (train.nrows() * train.ncols()) as f64;
    let storage = chain.map(|c| storage_count(c, train.ncols()));
    let rho = storage.as_ref().map_or(1.0, |s| s.total as f64 / raw);
    Ok(EvalResult {
        error_rate: if n_test == 0 { 0.0 } else { errors as f64 / n_test as f64 },
        errors,
        n_test,
        confusion: counts
            .into_iter()
            .map(|((truth, predicted), count)| ConfusionEntry {
                truth,
                predicted,
                count,
            })
            .collect(),
        rho,
        storage,
        predictions,
        embed_seconds,
        classify_seconds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn emb(points: &[f64], labels: &[i64]) -> LabeledEmbedding {
        LabeledEmbedding::new(DMatrix::from_row_slice(1, points.len(), points), labels.to_vec()).unwrap()
    }

    #[test]
    fn exact_match_with_one_neighbor() {
        let train = emb(&[0.0, 1.0, 5.0], &[3, 4, 5]);
        let test = DMatrix::from_row_slice(1, 3, &[5.0, 0.0, 1.0]);
        assert_eq!(knn_classify(&train, &test, 1).unwrap(), vec![5, 3, 4]);
    }

    #[test]
    fn majority_of_three() {
        let train = emb(&[0.0, 0.5, 1.0, 3.0, 3.2], &[1, 2, 1, 2, 2]);
        // nearest three to 0.6: 0.5 (2), 1.0 (1), 0.0 (1)
        let test = DMatrix::from_row_slice(1, 1, &[0.6]);
        assert_eq!(knn_classify(&train, &test, 3).unwrap(), vec![1]);
    }

    #[test]
    fn k_equals_n_gives_global_majority() {
        let train = emb(&[0.0, 1.0, 2.0, 3.0, 4.0], &[7, 7, 9, 9, 9]);
        let test = DMatrix::from_row_slice(1, 3, &[-10.0, 0.0, 100.0]);
        assert_eq!(knn_classify(&train, &test, 5).unwrap(), vec![9, 9, 9]);
        assert!(knn_classify(&train, &test, 6).is_err());
    }

    #[test]
    fn tie_rules() {
        // equidistant neighbors: lower index wins
        let train = emb(&[-1.0, 1.0], &[4, 2]);
        let test = DMatrix::from_row_slice(1, 1, &[0.0]);
        assert_eq!(knn_classify(&train, &test, 1).unwrap(), vec![4]);
        // 1-1 vote: nearest neighbor's class
        let train = emb(&[0.3, -0.1], &[8, 6]);
        assert_eq!(knn_classify(&train, &test, 2).unwrap(), vec![6]);
    }

    #[test]
    fn raw_evaluation_has_unit_rho() {
        let train = DMatrix::from_row_slice(2, 4, &[0.0, 0.1, 5.0, 5.1, 0.0, 0.1, 5.0, 5.1]);
        let test = DMatrix::from_row_slice(2, 2, &[0.05, 4.9, 0.0, 5.0]);
        let r = evaluate(None, &train, &[0, 0, 1, 1], &test, &[0, 0], 1).unwrap();
        assert_eq!(r.rho, 1.0);
        assert_eq!(r.errors, 1);
        assert_eq!(r.error_rate, 0.5);
        assert_eq!(
            r.confusion,
            vec![
                ConfusionEntry { truth: 0, predicted: 0, count: 1 },
                ConfusionEntry { truth: 0, predicted: 1, count: 1 }
            ]
        );
    }
}
