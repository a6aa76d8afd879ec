//! Dataset ingestion (IDX and CSV), class filtering, noise and per-class splits.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::error::{HarnessError, Result};

/// Samples stored one vectorized sample per column, mode-1-fastest over `sample_dims`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub data: DMatrix<f64>,
    pub labels: Vec<i64>,
    pub sample_dims: Vec<usize>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    /// Keeps only the listed classes, preserving order.
    pub fn filter_classes(&self, classes: &[i64]) -> Dataset {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| classes.contains(&self.labels[i])).collect();
        self.select(&keep)
    }

    pub fn select(&self, idx: &[usize]) -> Dataset {
        Dataset {
            data: self.data.select_columns(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            sample_dims: self.sample_dims.clone(),
        }
    }

    pub fn class_counts(&self) -> BTreeMap<i64, usize> {
        let mut m = BTreeMap::new();
        for &l in &self.labels {
            *m.entry(l).or_insert(0) += 1;
        }
        m
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IdxError {
    #[error("{path}: truncated header")]
    TruncatedHeader { path: String },
    #[error("{path}: wrong magic number {found:#010x}, expected {expected:#010x}")]
    WrongMagic { path: String, found: u32, expected: u32 },
    #[error("{path}: truncated payload, expected {expected} bytes, found {found}")]
    TruncatedPayload { path: String, expected: usize, found: usize },
    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },
}

impl From<IdxError> for HarnessError {
    fn from(e: IdxError) -> Self {
        HarnessError::Data(e.to_string())
    }
}

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn be_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_be_bytes(bytes[at..at + 4].try_into().unwrap())
}

/// Validates the magic and dimension header; returns dims and payload.
fn parse_idx<'a>(bytes: &'a [u8], magic: u32, path: &str) -> std::result::Result<(Vec<usize>, &'a [u8]), IdxError> {
    if bytes.len() < 4 {
        return Err(IdxError::TruncatedHeader { path: path.into() });
    }
    let found = be_u32(bytes, 0);
    if found != magic {
        return Err(IdxError::WrongMagic {
            path: path.into(),
            found,
            expected: magic,
        });
    }
    let ndim = (magic & 0xff) as usize;
    let header = 4 + 4 * ndim;
    if bytes.len() < header {
        return Err(IdxError::TruncatedHeader { path: path.into() });
    }
    let dims: Vec<usize> = (0..ndim).map(|k| be_u32(bytes, 4 + 4 * k) as usize).collect();
    let expected: usize = dims.iter().product();
    let payload = &bytes[header..];
    if payload.len() < expected {
        return Err(IdxError::TruncatedPayload {
            path: path.into(),
            expected,
            found: payload.len(),
        });
    }
    Ok((dims, &payload[..expected]))
}

/// Images as `rows x cols` samples scaled by 1/255. Element `(r, c)` sits at
/// offset `r + rows * c`, so a reshape such as `[4, 7, 4, 7]` splits the row
/// index over the first two modes and the column index over the last two.
pub fn parse_idx_images(bytes: &[u8], path: &str) -> std::result::Result<Dataset, IdxError> {
    let (dims, payload) = parse_idx(bytes, IDX_IMAGES_MAGIC, path)?;
    let (n, rows, cols) = (dims[0], dims[1], dims[2]);
    let d = rows * cols;
    let mut data = DMatrix::zeros(d, n);
    for s in 0..n {
        let img = &payload[s * d..(s + 1) * d];
        let mut col = data.column_mut(s);
        for r in 0..rows {
            for c in 0..cols {
                col[r + rows * c] = img[r * cols + c] as f64 / 255.0;
            }
        }
    }
    Ok(Dataset {
        data,
        labels: Vec::new(),
        sample_dims: vec![rows, cols],
    })
}

pub fn parse_idx_labels(bytes: &[u8], path: &str) -> std::result::Result<Vec<i64>, IdxError> {
    let (_, payload) = parse_idx(bytes, IDX_LABELS_MAGIC, path)?;
    Ok(payload.iter().map(|&b| b as i64).collect())
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| HarnessError::io(format!("reading {}", path.display()), e))
}

pub fn load_idx(images: &Path, labels: &Path) -> Result<Dataset> {
    let mut ds = parse_idx_images(&read(images)?, &images.display().to_string())?;
    let lab = parse_idx_labels(&read(labels)?, &labels.display().to_string())?;
    if lab.len() != ds.data.ncols() {
        return Err(IdxError::CountMismatch {
            images: ds.data.ncols(),
            labels: lab.len(),
        }
        .into());
    }
    ds.labels = lab;
    Ok(ds)
}

/// One sample per row; `label_column` (0-based) is split off as an integer
/// label. A non-numeric first row is taken as a header.
pub fn load_csv(path: &Path, label_column: usize) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(format!("reading {}", path.display()), e))?;
    parse_csv(&text, label_column)
}

pub fn parse_csv(text: &str, label_column: usize) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<csv::StringRecord> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| HarnessError::Data(format!("csv: {e}")))?;
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        rows.push(rec);
    }
    let numeric = |rec: &csv::StringRecord| rec.iter().all(|c| c.parse::<f64>().is_ok());
    if rows.first().is_some_and(|r| !numeric(r)) {
        rows.remove(0);
    }
    let width = rows
        .first()
        .map(|r| r.len())
        .ok_or_else(|| HarnessError::Data("csv has no data rows".into()))?;
    if label_column >= width {
        return Err(HarnessError::Config(format!(
            "label_column {label_column} out of range for {width} columns"
        )));
    }
    if width < 2 {
        return Err(HarnessError::Data("csv rows need a label and at least one value".into()));
    }
    let d = width - 1;
    let mut values = Vec::with_capacity(d * rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    for (i, rec) in rows.iter().enumerate() {
        let line = i + 1;
        if rec.len() != width {
            return Err(HarnessError::Data(format!(
                "csv row {line} has {} fields, expected {width}",
                rec.len()
            )));
        }
        for (j, cell) in rec.iter().enumerate() {
            let v: f64 = cell
                .parse()
                .map_err(|_| HarnessError::Data(format!("csv row {line}, column {j}: non-numeric cell {cell:?}")))?;
            if j == label_column {
                if v.fract() != 0.0 {
                    return Err(HarnessError::Data(format!("csv row {line}: label {v} is not an integer")));
                }
                labels.push(v as i64);
            } else {
                values.push(v);
            }
        }
    }
    Ok(Dataset {
        data: DMatrix::from_vec(d, labels.len(), values),
        labels,
        sample_dims: vec![d],
    })
}

/// Mean per-entry power `mean_i ||x_i||^2 / d`.
pub fn signal_power(data: &DMatrix<f64>) -> f64 {
    if data.ncols() == 0 {
        return 0.0;
    }
    data.norm_squared() / (data.nrows() * data.ncols()) as f64
}

/// Adds i.i.d. Gaussian noise with variance `signal_power / 10^(snr_db / 10)`,
/// where the signal power is measured on `data` itself.
pub fn add_noise<R: Rng>(data: &DMatrix<f64>, snr_db: Option<f64>, rng: &mut R) -> Result<DMatrix<f64>> {
    let Some(snr) = snr_db else {
        return Ok(data.clone());
    };
    if !snr.is_finite() {
        return Err(HarnessError::Config(format!("noise SNR must be finite, got {snr}")));
    }
    add_noise_with_power(data, signal_power(data), snr, rng)
}

pub fn add_noise_with_power<R: Rng>(data: &DMatrix<f64>, power: f64, snr_db: f64, rng: &mut R) -> Result<DMatrix<f64>> {
    let variance = power / 10f64.powf(snr_db / 10.0);
    let normal = Normal::new(0.0, variance.sqrt()).map_err(|e| HarnessError::Config(format!("noise: {e}")))?;
    Ok(data.map(|v| v + normal.sample(rng)))
}

/// Train/test indices drawn per class without replacement; classes in ascending order.
pub fn split_per_class<R: Rng>(
    labels: &[i64],
    n_train: usize,
    n_test: usize,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut by_class: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (class, mut idx) in by_class {
        if idx.len() < n_train + n_test {
            return Err(HarnessError::Data(format!(
                "class {class} has {} samples, {n_train} train + {n_test} test requested",
                idx.len()
            )));
        }
        idx.shuffle(rng);
        train.extend_from_slice(&idx[..n_train]);
        test.extend_from_slice(&idx[n_train..n_train + n_test]);
    }
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn idx_bytes(magic: u32, dims: &[u32], payload: &[u8]) -> Vec<u8> {
        let mut b = magic.to_be_bytes().to_vec();
        for d in dims {
            b.extend_from_slice(&d.to_be_bytes());
        }
        b.extend_from_slice(payload);
        b
    }

    #[test]
    fn images_are_scaled_and_laid_out() {
        let bytes = idx_bytes(IDX_IMAGES_MAGIC, &[2, 2, 3], &[0, 1, 2, 3, 4, 5, 255, 0, 0, 0, 0, 51]);
        let ds = parse_idx_images(&bytes, "x").unwrap();
        assert_eq!(ds.sample_dims, vec![2, 3]);
        // element (r, c) of image 0 is byte r*3 + c
        let col: Vec<f64> = ds.data.column(0).iter().copied().collect();
        let expect: Vec<f64> = [0, 3, 1, 4, 2, 5].iter().map(|&v| v as f64 / 255.0).collect();
        assert_eq!(col, expect);
        assert_eq!(ds.data[(0, 1)], 1.0);
        assert_eq!(ds.data[(5, 1)], 0.2);
    }

    #[test]
    fn labels_fixture() {
        let bytes = idx_bytes(IDX_LABELS_MAGIC, &[3], &[1, 2, 1]);
        assert_eq!(parse_idx_labels(&bytes, "y").unwrap(), vec![1, 2, 1]);
    }

    #[test]
    fn idx_errors_are_distinct() {
        assert_eq!(
            parse_idx_labels(&[], "e").unwrap_err(),
            IdxError::TruncatedHeader { path: "e".into() }
        );
        assert!(matches!(
            parse_idx_images(&idx_bytes(IDX_LABELS_MAGIC, &[1], &[0]), "m"),
            Err(IdxError::WrongMagic { .. })
        ));
        assert!(matches!(
            parse_idx_images(&idx_bytes(IDX_IMAGES_MAGIC, &[2, 2, 2], &[0; 5]), "t"),
            Err(IdxError::TruncatedPayload { expected: 8, found: 5, .. })
        ));
        assert!(matches!(
            parse_idx_images(&IDX_IMAGES_MAGIC.to_be_bytes()[..], "h"),
            Err(IdxError::TruncatedHeader { .. })
        ));
    }

    #[test]
    fn csv_variants() {
        let ds = parse_csv("1,0.5,2\n0,3,4\n", 0).unwrap();
        assert_eq!(ds.labels, vec![1, 0]);
        assert_eq!(ds.data.column(0).as_slice(), &[0.5, 2.0]);
        assert_eq!(ds.data.column(1).as_slice(), &[3.0, 4.0]);

        let ds = parse_csv("a,b,label\n1,2,7\n", 2).unwrap();
        assert_eq!(ds.labels, vec![7]);
        assert_eq!(ds.data.column(0).as_slice(), &[1.0, 2.0]);

        assert!(matches!(parse_csv("1,2,3\n1,2\n", 0), Err(HarnessError::Data(_))));
        assert!(matches!(parse_csv("1,2,3\n1,x,3\n", 0), Err(HarnessError::Data(_))));
    }

    #[test]
    fn noise_power_and_determinism() {
        let data = DMatrix::from_fn(50, 1000, |i, j| ((i * 1000 + j) as f64 * 0.013).sin());
        let power = signal_power(&data);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noisy = add_noise(&data, Some(0.0), &mut rng).unwrap();
        let noise_power = signal_power(&(&noisy - &data));
        assert!((noise_power / power - 1.0).abs() < 0.05);

        let a = add_noise(&data, Some(10.0), &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = add_noise(&data, Some(10.0), &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert_eq!(add_noise(&data, None, &mut rng).unwrap(), data);
    }

    #[test]
    fn split_is_per_class_and_disjoint() {
        let labels = vec![1, 2, 1, 2, 1, 2, 1, 2, 3];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let sub: Vec<i64> = labels[..8].to_vec();
        let (tr, te) = split_per_class(&sub, 2, 1, &mut rng).unwrap();
        assert_eq!(tr.len(), 4);
        assert_eq!(te.len(), 2);
        assert!(tr.iter().all(|i| !te.contains(i)));
        assert!(split_per_class(&labels, 2, 1, &mut rng).is_err());
    }
}
