//! JSON persistence for fitted TT subspaces.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;
use crate::tt::{TtChain, TtCore};

pub const FORMAT_VERSION: u32 = 1;
const ORDER: &str = "mode1-fastest";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoreRecord {
    pub shape: [usize; 3],
    pub order: String,
    pub data: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format_version: u32,
    pub mode_dims: Vec<usize>,
    pub ranks: Vec<usize>,
    pub tau: Option<f64>,
    pub cores: Vec<CoreRecord>,
}

impl ModelFile {
    pub fn from_chain(chain: &TtChain, tau: Option<f64>) -> Self {
        ModelFile {
            format_version: FORMAT_VERSION,
            mode_dims: chain.mode_dims(),
            ranks: chain.ranks(),
            tau,
            cores: chain
                .cores()
                .iter()
                .map(|c| {
                    let (a, b, d) = c.dims();
                    CoreRecord {
                        shape: [a, b, d],
                        order: ORDER.to_string(),
                        data: c.tensor().data().to_vec(),
                    }
                })
                .collect(),
        }
    }

    pub fn to_chain(&self) -> Result<TtChain> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported format_version {} (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        let mut cores = Vec::with_capacity(self.cores.len());
        for (k, rec) in self.cores.iter().enumerate() {
            if rec.order != ORDER {
                return Err(Error::Format(format!("core {}: unknown element order {:?}", k + 1, rec.order)));
            }
            let t = DenseTensor::new(rec.shape.to_vec(), rec.data.clone())
                .map_err(|e| Error::Format(format!("core {}: {e}", k + 1)))?;
            cores.push(TtCore::new(t)?);
        }
        let chain = TtChain::new(cores)?;
        if chain.mode_dims() != self.mode_dims || chain.ranks() != self.ranks {
            return Err(Error::Format("mode_dims/ranks disagree with the stored cores".into()));
        }
        Ok(chain)
    }
}

pub fn save_model(path: &Path, chain: &TtChain, tau: Option<f64>) -> Result<()> {
    let json = serde_json::to_string_pretty(&ModelFile::from_chain(chain, tau))?;
    fs::write(path, json)?;
    Ok(())
}

/// Returns the chain and the `tau` it was fitted with, if recorded.
pub fn load_model(path: &Path) -> Result<(TtChain, Option<f64>)> {
    let text = fs::read_to_string(path)?;
    let file: ModelFile = serde_json::from_str(&text)?;
    Ok((file.to_chain()?, file.tau))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tt::{tt_svd, TtSvdConfig};

    fn chain() -> TtChain {
        let data = DenseTensor::from_fn(vec![2, 3, 2, 5], |i| {
            ((i[0] * 7 + i[1] * 3 + i[2] * 11 + i[3] * 5) as f64 * 0.731).sin() / 3.0
        })
        .unwrap();
        tt_svd(&data, &TtSvdConfig::new(1e-3)).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let c = chain();
        save_model(&path, &c, Some(0.1)).unwrap();
        let (back, tau) = load_model(&path).unwrap();
        assert_eq!(tau, Some(0.1));
        for (a, b) in c.cores().iter().zip(back.cores()) {
            let same = a
                .tensor()
                .data()
                .iter()
                .zip(b.tensor().data())
                .all(|(x, y)| x.to_bits() == y.to_bits());
            assert!(same);
        }
    }

    #[test]
    fn rejects_unknown_version() {
        let mut f = ModelFile::from_chain(&chain(), None);
        f.format_version = 2;
        assert!(matches!(f.to_chain(), Err(Error::Format(_))));
    }

    #[test]
    fn rejects_inconsistent_metadata() {
        let mut f = ModelFile::from_chain(&chain(), None);
        f.ranks[0] += 1;
        assert!(f.to_chain().is_err());
        let mut g = ModelFile::from_chain(&chain(), None);
        g.cores[0].data.pop();
        assert!(g.to_chain().is_err());
    }
}
