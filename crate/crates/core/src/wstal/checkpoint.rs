//! Parameter checkpoint format: one JSON header line (model config, named
//! parameter shapes in payload order, optimizer step count), a newline, then
//! the raw little-endian f64 payload of each parameter concatenated in the
//! order listed by the header.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::model::{init_model, ModelParams};
use crate::error::CoreError;
use crate::numcore::Matrix;

#[derive(Debug, Serialize, Deserialize)]
struct ShapeEntry {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    shapes: Vec<ShapeEntry>,
    step_count: u64,
}

pub fn save_checkpoint(
    path: &Path,
    params: &ModelParams,
    step_count: u64,
) -> Result<(), CoreError> {
    let all = params.params();
    let header = Header {
        config: params.config,
        shapes: all
            .iter()
            .map(|p| ShapeEntry {
                name: p.name.clone(),
                rows: p.value.rows(),
                cols: p.value.cols(),
            })
            .collect(),
        step_count,
    };
    let mut bytes = serde_json::to_vec(&header)?;
    bytes.push(b'\n');
    for p in &all {
        for &v in p.value.data() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, bytes).map_err(|e| CoreError::io(path.display().to_string(), e))
}

pub fn load_checkpoint(path: &Path) -> Result<(ModelParams, u64), CoreError> {
    let bytes = fs::read(path).map_err(|e| CoreError::io(path.display().to_string(), e))?;
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| CoreError::Format("checkpoint missing header line".into()))?;
    let header: Header = serde_json::from_slice(&bytes[..nl])?;
    let mut params = init_model(&header.config)?;
    let mut offset = nl + 1;
    for (param, shape) in params.params_mut().into_iter().zip(&header.shapes) {
        if param.name != shape.name
            || param.value.rows() != shape.rows
            || param.value.cols() != shape.cols
        {
            return Err(CoreError::Format(format!(
                "checkpoint shape {}:{}x{} does not match model {}:{}x{}",
                shape.name,
                shape.rows,
                shape.cols,
                param.name,
                param.value.rows(),
                param.value.cols()
            )));
        }
        let n = shape.rows * shape.cols;
        let end = offset + 8 * n;
        if end > bytes.len() {
            return Err(CoreError::Format(format!(
                "checkpoint truncated: need {} bytes, have {}",
                end,
                bytes.len()
            )));
        }
        let data: Vec<f64> = bytes[offset..end]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        param.value = Matrix::from_vec(shape.rows, shape.cols, data)?;
        offset = end;
    }
    if offset != bytes.len() {
        return Err(CoreError::Format(format!(
            "checkpoint has {} trailing bytes",
            bytes.len() - offset
        )));
    }
    Ok((params, header.step_count))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wstal::config::AttentionVariant;

    #[test]
    fn round_trip_preserves_values() {
        let cfg = ModelConfig {
            input_dim: 8,
            num_classes: 3,
            num_layers: 2,
            attention_variant: AttentionVariant::TwoLogit,
            init_seed: 5,
        };
        let params = init_model(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt");
        save_checkpoint(&path, &params, 123).unwrap();
        let (loaded, steps) = load_checkpoint(&path).unwrap();
        assert_eq!(steps, 123);
        for (a, b) in params.params().iter().zip(loaded.params()) {
            assert_eq!(a.name, b.name);
            assert_eq!(a.value, b.value);
        }
    }
}
