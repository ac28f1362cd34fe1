//! Model serialization on top of the tensor container.
//!
//! A model file holds, in this order:
//! - `"config"`: rank-1 `[4]` = (head count, lambda, normalize as 0/1, reserved 0)
//! - `"temps"`: rank-1 `[H]` temperatures, `+inf` encoding the max-pooling head
//! - `"head{h}.weights"`: rank-2 `[C, d]` per head, `h` counted from 0
//!
//! Weights are stored as 32-bit floats. When the normalize flag is set, rows
//! are re-normalized in f64 after widening, since 32-bit rounding perturbs
//! unit norms by more than the model invariant tolerates.

use std::path::Path;

use crate::error::{Error, Result};
use crate::io::tensor_file::{self, TensorEntry};
use crate::multihead::{normalize_rows, HeadConfig, MultiHeadModel};
use crate::tensor::{Temperature, Tensor};

/// Container entries describing a model, in the canonical order.
pub fn model_entries(model: &MultiHeadModel) -> Result<Vec<TensorEntry>> {
    let cfg = model.config();
    let config_payload = vec![
        cfg.heads() as f32,
        cfg.lambda() as f32,
        if cfg.normalize() { 1.0 } else { 0.0 },
        0.0,
    ];
    let mut entries = vec![
        TensorEntry::new("config", vec![4], config_payload)?,
        TensorEntry::new(
            "temps",
            vec![cfg.heads()],
            cfg.temperatures().iter().map(|t| t.as_f64() as f32).collect(),
        )?,
    ];
    for (h, head) in model.heads().iter().enumerate() {
        entries.push(TensorEntry::from_tensor(
            format!("head{h}.weights"),
            head.as_tensor(),
        )?);
    }
    Ok(entries)
}

/// Reconstructs a model from container entries.
pub fn model_from_entries(entries: &[TensorEntry]) -> Result<MultiHeadModel> {
    let config = tensor_file::find_entry(entries, "config").ok_or_else(|| Error::InvalidModel {
        message: "missing \"config\" entry".to_string(),
    })?;
    if config.dims() != [4] {
        return Err(Error::InvalidModel {
            message: format!("\"config\" must have shape [4], got {:?}", config.dims()),
        });
    }
    let heads_f = config.data()[0];
    if heads_f < 1.0 || heads_f.fract() != 0.0 {
        return Err(Error::InvalidModel {
            message: format!("head count must be a positive integer, got {heads_f}"),
        });
    }
    let heads = heads_f as usize;
    let lambda = config.data()[1] as f64;
    let normalize = match config.data()[2] {
        v if v == 0.0 => false,
        v if v == 1.0 => true,
        v => {
            return Err(Error::InvalidModel {
                message: format!("normalize flag must be 0 or 1, got {v}"),
            })
        }
    };

    let temps_entry = tensor_file::find_entry(entries, "temps").ok_or_else(|| Error::InvalidModel {
        message: "missing \"temps\" entry".to_string(),
    })?;
    if temps_entry.dims() != [heads] {
        return Err(Error::InvalidModel {
            message: format!(
                "\"temps\" must have shape [{heads}], got {:?}",
                temps_entry.dims()
            ),
        });
    }
    let temperatures: Vec<Temperature> = temps_entry
        .data()
        .iter()
        .map(|&t| {
            Temperature::from_f64(t as f64).map_err(|_| Error::InvalidModel {
                message: format!("invalid temperature {t}"),
            })
        })
        .collect::<Result<_>>()?;

    let cfg = HeadConfig::new(heads, lambda, temperatures, normalize).map_err(|e| {
        Error::InvalidModel {
            message: format!("bad config entry: {e}"),
        }
    })?;

    let mut blocks = Vec::with_capacity(heads);
    for h in 0..heads {
        let name = format!("head{h}.weights");
        let entry = tensor_file::find_entry(entries, &name).ok_or_else(|| Error::InvalidModel {
            message: format!("missing {name:?} entry"),
        })?;
        if entry.dims().len() != 2 {
            return Err(Error::InvalidModel {
                message: format!("{name:?} must be rank 2, got {:?}", entry.dims()),
            });
        }
        let weights = crate::attention::ClassifierWeights::new(Tensor::new(
            entry.dims().to_vec(),
            entry.widened(),
        )?)?;
        blocks.push(if normalize { normalize_rows(&weights)? } else { weights });
    }
    MultiHeadModel::new(cfg, blocks)
}

pub fn save_model(path: impl AsRef<Path>, model: &MultiHeadModel) -> Result<()> {
    tensor_file::write_tensor_file(path, &model_entries(model)?)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<MultiHeadModel> {
    model_from_entries(&tensor_file::read_tensor_file(path)?)
}
