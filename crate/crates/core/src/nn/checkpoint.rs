//! JSON tensor dump of a trained model.
//!
//! ```json
//! {
//!   "format": "dgat-checkpoint",
//!   "version": 1,
//!   "config": { "mode": "dgat", "aggregation": "plain", "layers": 2, ... },
//!   "preprocessing": { "gamma": 1.0, "alpha": 1.0, "eps0": 1e-8,
//!                      "rewire_mode": "none", "epsilon": 0.0 },
//!   "tensors": [ { "name": "layers.0.w_node", "shape": [2, 64], "data": [...] }, ... ]
//! }
//! ```
//!
//! `data` is row-major. Tensors appear in the order of
//! [`Model::named_tensors`].

use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::layer::LayerParams;
use super::model::{Model, ModelConfig};
use super::AttentionMode;
use crate::error::{Error, Result};
use crate::rewire::RewireMode;

pub const CHECKPOINT_FORMAT: &str = "dgat-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// How the message-passing graph was derived from the raw graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Preprocessing {
    pub gamma: f64,
    pub alpha: f64,
    pub eps0: f64,
    pub rewire_mode: RewireMode,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorRecord {
    pub name: String,
    pub shape: [usize; 2],
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config: ModelConfig,
    pub preprocessing: Option<Preprocessing>,
    pub tensors: Vec<TensorRecord>,
}

impl Checkpoint {
    pub fn from_model(model: &Model, preprocessing: Option<Preprocessing>) -> Checkpoint {
        let tensors = model
            .named_tensors()
            .into_iter()
            .map(|(name, t)| TensorRecord {
                name,
                shape: [t.nrows(), t.ncols()],
                data: t.iter().copied().collect(),
            })
            .collect();
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            config: model.config,
            preprocessing,
            tensors,
        }
    }

    pub fn to_model(&self) -> Result<Model> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(Error::Format(format!(
                "not a checkpoint: format '{}'",
                self.format
            )));
        }
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!(
                "checkpoint version {} unsupported (expected {})",
                self.version, CHECKPOINT_VERSION
            )));
        }
        let c = self.config;
        c.validate()?;
        let mut records = self.tensors.iter();
        let mut next = |l: usize, name: &str| -> Result<Array2<f64>> {
            let want = format!("layers.{l}.{name}");
            let r = records
                .next()
                .ok_or_else(|| Error::Format(format!("missing tensor {want}")))?;
            if r.name != want {
                return Err(Error::Format(format!(
                    "expected tensor {want}, found {}",
                    r.name
                )));
            }
            Array2::from_shape_vec((r.shape[0], r.shape[1]), r.data.clone())
                .map_err(|e| Error::Format(format!("tensor {want}: {e}")))
        };
        let dgat = c.mode == AttentionMode::Dgat;
        let mut layers = Vec::with_capacity(c.layers);
        for l in 0..c.layers {
            let w_node = next(l, "w_node")?;
            let att_src = next(l, "att_src")?;
            let att_dst = next(l, "att_dst")?;
            let w_edge = if dgat { Some(next(l, "w_edge")?) } else { None };
            let att_edge = if dgat {
                Some(next(l, "att_edge")?)
            } else {
                None
            };
            let w_out = next(l, "w_out")?;
            layers.push(LayerParams {
                heads: c.heads,
                hidden: c.hidden,
                edge_dim: c.edge_dim,
                w_node,
                att_src,
                att_dst,
                w_edge,
                att_edge,
                w_out,
            });
        }
        if let Some(extra) = records.next() {
            return Err(Error::Format(format!("unexpected tensor {}", extra.name)));
        }
        let model = Model { config: c, layers };
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_vec(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        let bytes = fs::read(path)?;
        let value: serde_json::Value = serde_json::from_slice(&bytes)?;
        match value.get("format").and_then(|f| f.as_str()) {
            Some(CHECKPOINT_FORMAT) => {}
            other => return Err(Error::Format(format!("not a checkpoint: format {other:?}"))),
        }
        match value.get("version").and_then(|v| v.as_u64()) {
            Some(v) if v == CHECKPOINT_VERSION as u64 => {}
            other => {
                return Err(Error::Format(format!(
                    "checkpoint version {other:?} unsupported (expected {CHECKPOINT_VERSION})"
                )))
            }
        }
        Ok(serde_json::from_value(value)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Aggregation;

    #[test]
    fn round_trip_is_exact() {
        for mode in [AttentionMode::Gat, AttentionMode::Dgat] {
            let m = Model::init(ModelConfig::new(mode, Aggregation::Sep, 3, 4), 11).unwrap();
            let ck = Checkpoint::from_model(&m, None);
            let json = serde_json::to_string(&ck).unwrap();
            let back: Checkpoint = serde_json::from_str(&json).unwrap();
            assert_eq!(back.to_model().unwrap(), m);
        }
    }

    #[test]
    fn wrong_version_is_rejected() {
        let m = Model::init(
            ModelConfig::new(AttentionMode::Gat, Aggregation::Plain, 2, 2),
            0,
        )
        .unwrap();
        let mut ck = Checkpoint::from_model(&m, None);
        ck.version = 99;
        assert!(matches!(ck.to_model(), Err(Error::Format(_))));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ck.json");
        ck.save(&path).unwrap();
        assert!(matches!(Checkpoint::load(&path), Err(Error::Format(_))));
    }

    #[test]
    fn tampered_shape_is_rejected() {
        let m = Model::init(
            ModelConfig::new(AttentionMode::Gat, Aggregation::Plain, 2, 2),
            0,
        )
        .unwrap();
        let mut ck = Checkpoint::from_model(&m, None);
        ck.tensors[0].shape = [1, ck.tensors[0].data.len()];
        assert!(ck.to_model().is_err());
    }
}
