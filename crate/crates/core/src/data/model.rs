use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{AidError, Result};
use crate::subsolvers::KernelKind;

pub const MODEL_FORMAT: &str = "aid-model/1";

/// Problem-specific parameters of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    Lad {
        beta: Vec<f64>,
    },
    LinearSvm {
        w: Vec<f64>,
        b: f64,
    },
    /// Decision function `Σ_j coef_j K(support_j, x) + b`.
    KernelSvm {
        kernel: KernelKind,
        support: Vec<Vec<f64>>,
        coef: Vec<f64>,
        b: f64,
    },
    S3vm {
        w: Vec<f64>,
        b: f64,
        /// Assigned labels of the unlabeled training entries, in data order.
        d: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub seed: u64,
    pub config_digest: String,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedModel {
    pub format: String,
    /// Number of feature columns the model expects.
    pub dims: usize,
    pub params: ModelParams,
    pub metadata: ModelMetadata,
}

impl SavedModel {
    pub fn new(dims: usize, params: ModelParams, metadata: ModelMetadata) -> Self {
        SavedModel { format: MODEL_FORMAT.to_string(), dims, params, metadata }
    }
}

pub fn save_model(model: &SavedModel, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, model_to_string(model)?)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SavedModel> {
    model_from_str(&fs::read_to_string(path)?)
}

pub fn model_to_string(model: &SavedModel) -> Result<String> {
    let mut s = serde_json::to_string_pretty(model).map_err(|e| AidError::ModelFormat(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn model_from_str(text: &str) -> Result<SavedModel> {
    let model: SavedModel = serde_json::from_str(text).map_err(|e| AidError::ModelFormat(e.to_string()))?;
    if model.format != MODEL_FORMAT {
        return Err(AidError::ModelFormat(format!("unsupported format {:?}", model.format)));
    }
    Ok(model)
}

/// Hex SHA-256 of the JSON encoding of a configuration.
pub fn config_digest<T: Serialize>(config: &T) -> String {
    let json = serde_json::to_vec(config).expect("configurations serialize");
    Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> ModelMetadata {
        ModelMetadata { seed: 9, config_digest: config_digest(&("x", 1)), objective: 0.1 + 0.2, iterations: 3 }
    }

    #[test]
    fn round_trips_are_exact() {
        let models = [
            ModelParams::Lad { beta: vec![0.1, -1.0 / 3.0, 1e-300, 123456789.123456789] },
            ModelParams::LinearSvm { w: vec![std::f64::consts::PI, -0.0], b: 2.0f64.sqrt() },
            ModelParams::S3vm { w: vec![1.0 / 7.0], b: -5e-17, d: vec![1.0, -1.0, 1.0] },
            ModelParams::KernelSvm { kernel: KernelKind::Rbf { gamma: 0.3 }, support: vec![vec![0.1, 0.2]], coef: vec![-0.7], b: 0.0 },
        ];
        for params in models {
            let m = SavedModel::new(2, params, meta());
            let back = model_from_str(&model_to_string(&m).unwrap()).unwrap();
            assert_eq!(m, back);
        }
    }
}
