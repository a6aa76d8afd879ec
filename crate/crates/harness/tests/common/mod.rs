#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn idx_bytes(magic: u32, dims: &[u32], payload: &[u8]) -> Vec<u8> {
    let mut out = magic.to_be_bytes().to_vec();
    for d in dims {
        out.extend(d.to_be_bytes());
    }
    out.extend_from_slice(payload);
    out
}

/// Writes `images`/`labels` IDX files for `per_class` noisy copies of one
/// random prototype per class.
pub fn write_blobs(dir: &Path, classes: u8, per_class: usize, rows: usize, cols: usize, seed: u64) -> (PathBuf, PathBuf) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let protos: Vec<Vec<f64>> = (0..classes)
        .map(|_| (0..rows * cols).map(|_| rng.random_range(40.0..215.0)).collect())
        .collect();
    let mut pixels = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..per_class {
        for (c, p) in protos.iter().enumerate() {
            pixels.extend(p.iter().map(|&v| (v + rng.random_range(-30.0..30.0)).round().clamp(0.0, 255.0) as u8));
            labels.push(c as u8);
        }
    }
    let n = labels.len() as u32;
    let img = dir.join("images.idx");
    let lab = dir.join("labels.idx");
    fs::write(&img, idx_bytes(0x803, &[n, rows as u32, cols as u32], &pixels)).unwrap();
    fs::write(&lab, idx_bytes(0x801, &[n], &labels)).unwrap();
    (img, lab)
}

/// Config over the blob files with `extra` spliced into the top-level object.
pub fn write_config(dir: &Path, extra: &str) -> PathBuf {
    let text = format!(
        r#"{{
  "dataset": {{"format": "idx", "image_path": "images.idx", "label_path": "labels.idx"}},
  "reshape": [2, 3, 2, 3],
  "n_train_per_class": 8,
  "n_test_per_class": 4,
  "tau_list": [0.9, 0.5],
  "k_graph": 4,
  "trials": 2,
  "seed": 11,
  "max_sweeps": 4,
  "output_path": "out/report.json"{extra}
}}"#
    );
    let path = dir.join("config.json");
    fs::write(&path, text).unwrap();
    path
}

pub fn fixture(extra: &str) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    write_blobs(dir.path(), 3, 14, 6, 6, 5);
    let cfg = write_config(dir.path(), extra);
    (dir, cfg)
}
