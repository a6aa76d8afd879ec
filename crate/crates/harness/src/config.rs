//! Experiment configuration (JSON, unknown keys rejected).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use ttnpe_core::{Epsilon, Variant};

use crate::data::{load_csv, load_idx, Dataset};
use crate::error::{HarnessError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Idx,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub format: DataFormat,
    /// IDX image file, or the CSV file.
    #[serde(alias = "path")]
    pub image_path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_column: Option<usize>,
}

/// Either a fixed bandwidth or `"median"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EpsilonSetting {
    Value(f64),
    Policy(String),
}

impl Default for EpsilonSetting {
    fn default() -> Self {
        EpsilonSetting::Policy("median".into())
    }
}

impl EpsilonSetting {
    pub fn resolve(&self) -> Result<Epsilon> {
        match self {
            EpsilonSetting::Value(v) if *v > 0.0 && v.is_finite() => Ok(Epsilon::Fixed(*v)),
            EpsilonSetting::Value(v) => Err(HarnessError::Config(format!("epsilon must be positive, got {v}"))),
            EpsilonSetting::Policy(p) if p == "median" => Ok(Epsilon::MedianKnnSqDist),
            EpsilonSetting::Policy(p) => Err(HarnessError::Config(format!(
                "epsilon must be a number or \"median\", got {p:?}"
            ))),
        }
    }
}

fn default_variant() -> Variant {
    Variant::Atn
}
fn default_trials() -> usize {
    1
}
fn default_max_sweeps() -> usize {
    50
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub class_filter: Option<Vec<i64>>,
    pub reshape: Vec<usize>,
    pub n_train_per_class: usize,
    pub n_test_per_class: usize,
    pub tau_list: Vec<f64>,
    #[serde(default = "default_variant")]
    pub variant: Variant,
    pub k_graph: usize,
    #[serde(default)]
    pub k_classify: Option<usize>,
    #[serde(default)]
    pub epsilon: EpsilonSetting,
    #[serde(default)]
    pub noise_snr_db: Option<Vec<f64>>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_sweeps")]
    pub max_sweeps: usize,
    pub output_path: PathBuf,
}

impl ExperimentConfig {
    /// Parses and validates; relative paths are resolved against `base_dir`.
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        for p in [
            Some(&mut cfg.dataset.image_path),
            cfg.dataset.label_path.as_mut(),
            Some(&mut cfg.output_path),
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("reading {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_json(&text, base)
    }

    pub fn k_classify(&self) -> usize {
        self.k_classify.unwrap_or(self.k_graph)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(HarnessError::Config(m));
        if self.reshape.is_empty() || self.reshape.contains(&0) {
            return fail(format!("reshape must be non-empty positive dims, got {:?}", self.reshape));
        }
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        if self.tau_list.is_empty() {
            return fail("tau_list is empty".into());
        }
        if let Some(t) = self.tau_list.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
            return fail(format!("tau values must lie in (0, 1], got {t}"));
        }
        if self.k_graph == 0 || self.k_classify() == 0 {
            return fail("k_graph and k_classify must be positive".into());
        }
        if self.n_train_per_class == 0 {
            return fail("n_train_per_class must be positive".into());
        }
        if self.max_sweeps == 0 {
            return fail("max_sweeps must be positive".into());
        }
        if let Some(snr) = &self.noise_snr_db {
            if snr.iter().any(|s| !s.is_finite()) {
                return fail("noise_snr_db entries must be finite".into());
            }
        }
        match self.dataset.format {
            DataFormat::Idx if self.dataset.label_path.is_none() => {
                return fail("idx datasets need dataset.label_path".into())
            }
            DataFormat::Csv if self.dataset.label_column.is_none() => {
                return fail("csv datasets need dataset.label_column".into())
            }
            _ => {}
        }
        self.epsilon.resolve()?;
        Ok(())
    }

    /// Loads the dataset, applies the class filter and checks the reshape.
    pub fn load_dataset(&self) -> Result<Dataset> {
        let ds = match self.dataset.format {
            DataFormat::Idx => load_idx(&self.dataset.image_path, self.dataset.label_path.as_ref().unwrap())?,
            DataFormat::Csv => load_csv(&self.dataset.image_path, self.dataset.label_column.unwrap())?,
        };
        let ds = match &self.class_filter {
            Some(c) => ds.filter_classes(c),
            None => ds,
        };
        let prod: usize = self.reshape.iter().product();
        if prod != ds.dim() {
            return Err(HarnessError::Config(format!(
                "reshape {:?} has {prod} entries, samples have {}",
                self.reshape,
                ds.dim()
            )));
        }
        Ok(ds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "dataset": {"format": "csv", "path": "d.csv", "label_column": 0},
        "reshape": [2, 2], "n_train_per_class": 3, "n_test_per_class": 2,
        "tau_list": [0.5], "k_graph": 2, "output_path": "out/report.json"
    }"#;

    #[test]
    fn defaults_and_relative_paths() {
        let cfg = ExperimentConfig::from_json(BASE, Path::new("/data")).unwrap();
        assert_eq!(cfg.variant, Variant::Atn);
        assert_eq!(cfg.trials, 1);
        assert_eq!(cfg.max_sweeps, 50);
        assert_eq!(cfg.k_classify(), 2);
        assert_eq!(cfg.epsilon.resolve().unwrap(), Epsilon::MedianKnnSqDist);
        assert_eq!(cfg.dataset.image_path, PathBuf::from("/data/d.csv"));
        assert_eq!(cfg.output_path, PathBuf::from("/data/out/report.json"));
    }

    #[test]
    fn rejects_unknown_and_bad_values() {
        let extra = BASE.replacen('{', r#"{"bogus": 1,"#, 1);
        assert!(ExperimentConfig::from_json(&extra, Path::new(".")).is_err());
        let bad_tau = BASE.replace("[0.5]", "[1.5]");
        assert!(ExperimentConfig::from_json(&bad_tau, Path::new(".")).is_err());
        let eps = BASE.replace(r#""k_graph": 2"#, r#""k_graph": 2, "epsilon": "mean""#);
        assert!(ExperimentConfig::from_json(&eps, Path::new(".")).is_err());
        let eps = BASE.replace(r#""k_graph": 2"#, r#""k_graph": 2, "epsilon": 0.25"#);
        let cfg = ExperimentConfig::from_json(&eps, Path::new(".")).unwrap();
        assert_eq!(cfg.epsilon.resolve().unwrap(), Epsilon::Fixed(0.25));
        let tn = BASE.replace(r#""k_graph": 2"#, r#""k_graph": 2, "variant": "tn""#);
        assert_eq!(ExperimentConfig::from_json(&tn, Path::new(".")).unwrap().variant, Variant::Tn);
    }
}
