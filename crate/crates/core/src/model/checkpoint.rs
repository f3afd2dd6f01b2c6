//! Versioned JSON checkpoints with a SHA-256 content checksum.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ModelConfig, ModelParameters};
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "lexstress-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorRecord {
    name: String,
    shape: [usize; 2],
    data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Body {
    config: ModelConfig,
    tensors: Vec<TensorRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    format: String,
    version: u32,
    #[serde(flatten)]
    body: Body,
    checksum: String,
}

fn checksum(body: &Body) -> Result<String> {
    let bytes = serde_json::to_vec(body)?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// A trained model: its configuration and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub params: ModelParameters,
}

impl Checkpoint {
    pub fn new(config: ModelConfig, params: ModelParameters) -> Result<Self> {
        config.validate()?;
        if !params.matches(&config) {
            return Err(Error::Checkpoint(
                "parameter shapes do not match the configuration".into(),
            ));
        }
        Ok(Checkpoint { config, params })
    }

    pub fn to_json(&self) -> Result<String> {
        let body = Body {
            config: self.config.clone(),
            tensors: self
                .params
                .tensors()
                .into_iter()
                .map(|(name, shape, data)| TensorRecord {
                    name: name.to_string(),
                    shape,
                    data: data.to_vec(),
                })
                .collect(),
        };
        let doc = Document {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            checksum: checksum(&body)?,
            body,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Document = serde_json::from_str(text)?;
        if doc.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!(
                "unexpected format `{}`",
                doc.format
            )));
        }
        if doc.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported version {}",
                doc.version
            )));
        }
        let expected = checksum(&doc.body)?;
        if expected != doc.checksum {
            return Err(Error::Checkpoint(
                "checksum mismatch; the file is corrupt or was edited".into(),
            ));
        }
        let config = doc.body.config;
        config.validate()?;
        let mut params = ModelParameters::zeros(&config);
        let shapes: Vec<_> = params.tensors().iter().map(|(n, s, _)| (*n, *s)).collect();
        if shapes.len() != doc.body.tensors.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} tensors, found {}",
                shapes.len(),
                doc.body.tensors.len()
            )));
        }
        for (((name, dst), (_, shape)), rec) in params
            .tensors_mut()
            .into_iter()
            .zip(shapes)
            .zip(&doc.body.tensors)
        {
            if rec.name != name || rec.shape != shape || rec.data.len() != dst.len() {
                return Err(Error::Checkpoint(format!(
                    "tensor `{}` {:?} does not match `{name}` {shape:?} implied by the configuration",
                    rec.name, rec.shape
                )));
            }
            dst.copy_from_slice(&rec.data);
        }
        Checkpoint::new(config, params)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.to_json()
            .and_then(|s| std::fs::write(path, s).map_err(Error::from))
            .map_err(|e| e.in_file(path))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        std::fs::read_to_string(path)
            .map_err(Error::from)
            .and_then(|s| Self::from_json(&s))
            .map_err(|e| e.in_file(path))
    }
}
