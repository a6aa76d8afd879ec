//! Small dense helpers shared by the TT and solver code.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// `max |X^T X - I|`.
pub fn orthonormality_error(x: &DMatrix<f64>) -> f64 {
    let g = x.tr_mul(x);
    let mut worst = 0.0f64;
    for j in 0..g.ncols() {
        for i in 0..g.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

/// Flips each column so its largest-magnitude entry is positive (first one on ties).
pub fn fix_column_signs(m: &mut DMatrix<f64>) {
    for mut col in m.column_iter_mut() {
        let mut best = 0.0f64;
        let mut sign = 1.0;
        for &v in col.iter() {
            if v.abs() > best {
                best = v.abs();
                sign = v.signum();
            }
        }
        if sign < 0.0 {
            col.neg_mut();
        }
    }
}

/// Left singular vectors and singular values, ordered by decreasing value.
///
/// Wide matrices are handled through the SVD of the transpose so that only
/// the small factor is ever formed.
pub fn left_singular(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let (rows, cols) = m.shape();
    let (u, s) = if rows <= cols {
        let svd = m.transpose().svd(false, true);
        let vt = svd
            .v_t
            .ok_or_else(|| Error::Numeric("SVD did not return singular vectors".into()))?;
        (vt.transpose(), svd.singular_values)
    } else {
        let svd = m.clone().svd(true, false);
        let u = svd
            .u
            .ok_or_else(|| Error::Numeric("SVD did not return singular vectors".into()))?;
        (u, svd.singular_values)
    };
    if s.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("SVD produced non-finite singular values".into()));
    }
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
    let sorted = DMatrix::from_fn(u.nrows(), order.len(), |i, j| u[(i, order[j])]);
    let values = order.iter().map(|&j| s[j]).collect();
    Ok((sorted, values))
}

/// Thin QR with a non-negative diagonal in `R`.
pub fn qr_positive(m: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let qr = m.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for j in 0..r.nrows() {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
            r.row_mut(j).neg_mut();
        }
    }
    (q, r)
}

/// Full symmetric eigendecomposition, eigenvalues ascending.
///
/// Ties keep the decomposition's own output order; eigenvector signs are fixed
/// by [`fix_column_signs`].
pub fn symmetric_eigen_ascending(z: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let eig = z.clone().symmetric_eigen();
    let vals = eig.eigenvalues;
    if vals.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("eigendecomposition produced non-finite values".into()));
    }
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
    let mut vecs = DMatrix::from_fn(z.nrows(), order.len(), |i, j| eig.eigenvectors[(i, order[j])]);
    fix_column_signs(&mut vecs);
    Ok((DVector::from_iterator(order.len(), order.iter().map(|&j| vals[j])), vecs))
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}
