use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config_map::{from_config, to_config, ConfigMap};
use crate::cells::{CellConfig, Model, ModelParams};
use crate::error::{Error, Result};
use crate::numerics::Tensor;
use crate::training::TrainConfig;

pub const MAGIC: &[u8; 7] = b"LTCSE1\n";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    #[default]
    F64,
    /// Lossy single-precision export.
    F32,
}

impl Dtype {
    pub fn size(self) -> usize {
        match self {
            Dtype::F64 => 8,
            Dtype::F32 => 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub dtype: Dtype,
    pub byte_offset: u64,
    pub byte_length: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub format_version: u32,
    pub config: ConfigMap,
    pub tensors: Vec<TensorEntry>,
    pub seed: u64,
    /// Non-finite values are stored as null.
    pub metrics: BTreeMap<String, Option<f64>>,
}

/// In-memory checkpoint contents.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub config: ConfigMap,
    pub tensors: BTreeMap<String, Tensor>,
    pub seed: u64,
    pub metrics: BTreeMap<String, Option<f64>>,
    pub dtype: Dtype,
}

impl Checkpoint {
    pub fn from_model(model: &Model, train: &TrainConfig, seed: u64, metrics: BTreeMap<String, f64>) -> Self {
        Self {
            config: to_config(&model.config, train),
            tensors: model
                .params
                .named()
                .into_iter()
                .map(|(n, t)| (n, t.clone()))
                .collect(),
            seed,
            metrics: metrics
                .into_iter()
                .map(|(k, v)| (k, v.is_finite().then_some(v)))
                .collect(),
            dtype: Dtype::F64,
        }
    }

    /// Rebuilds the model and training configuration.
    pub fn model(&self) -> Result<(Model, TrainConfig)> {
        let (cell, train) = from_config(&self.config)?;
        Ok((self.model_for(cell)?, train))
    }

    fn model_for(&self, cell: CellConfig) -> Result<Model> {
        let params = ModelParams::from_named(&cell, self.tensors.clone())
            .map_err(|e| Error::Checkpoint(format!("tensors do not match the stored configuration: {e}")))?;
        Ok(Model { config: cell, params })
    }

    /// Canonical encoding: tensors in name order, contiguous offsets.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut entries = Vec::with_capacity(self.tensors.len());
        let mut blob = Vec::new();
        for (name, t) in &self.tensors {
            let start = blob.len() as u64;
            match self.dtype {
                Dtype::F64 => t.data().iter().for_each(|v| blob.extend_from_slice(&v.to_le_bytes())),
                Dtype::F32 => t
                    .data()
                    .iter()
                    .for_each(|&v| blob.extend_from_slice(&(v as f32).to_le_bytes())),
            }
            entries.push(TensorEntry {
                name: name.clone(),
                shape: t.shape().to_vec(),
                dtype: self.dtype,
                byte_offset: start,
                byte_length: blob.len() as u64 - start,
            });
        }
        let manifest = CheckpointManifest {
            format_version: FORMAT_VERSION,
            config: self.config.clone(),
            tensors: entries,
            seed: self.seed,
            metrics: self.metrics.clone(),
        };
        let json = serde_json::to_vec(&manifest)?;
        let len = u32::try_from(json.len()).map_err(|_| Error::Checkpoint("manifest exceeds 4 GiB".into()))?;
        let mut out = Vec::with_capacity(MAGIC.len() + 4 + json.len() + blob.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(&json);
        out.extend_from_slice(&blob);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
            return Err(Error::Checkpoint("bad magic bytes; not a checkpoint file".into()));
        }
        let header_end = MAGIC.len() + 4;
        if bytes.len() < header_end {
            return Err(Error::LengthMismatch {
                expected: header_end as u64,
                actual: bytes.len() as u64,
            });
        }
        let len = u32::from_le_bytes(bytes[MAGIC.len()..header_end].try_into().expect("4 bytes")) as usize;
        let blob_start = header_end + len;
        if bytes.len() < blob_start {
            return Err(Error::LengthMismatch {
                expected: blob_start as u64,
                actual: bytes.len() as u64,
            });
        }
        let manifest: CheckpointManifest = serde_json::from_slice(&bytes[header_end..blob_start])
            .map_err(|e| Error::Checkpoint(format!("unreadable manifest: {e}")))?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported format_version {} (this build reads {FORMAT_VERSION})",
                manifest.format_version
            )));
        }
        let blob = &bytes[blob_start..];
        let mut by_offset: Vec<&TensorEntry> = manifest.tensors.iter().collect();
        by_offset.sort_by_key(|e| e.byte_offset);
        let mut cursor = 0u64;
        for e in &by_offset {
            let numel: usize = e.shape.iter().product();
            if e.byte_length != (numel * e.dtype.size()) as u64 {
                return Err(Error::Checkpoint(format!(
                    "tensor {} declares {} bytes for shape {:?}",
                    e.name, e.byte_length, e.shape
                )));
            }
            if e.byte_offset < cursor {
                return Err(Error::Checkpoint(format!("tensor {} overlaps its predecessor", e.name)));
            }
            cursor = e.byte_offset + e.byte_length;
        }
        let declared: u64 = manifest.tensors.iter().map(|e| e.byte_length).sum();
        if cursor != declared || blob.len() as u64 != declared {
            return Err(Error::LengthMismatch {
                expected: (blob_start as u64) + cursor.max(declared),
                actual: bytes.len() as u64,
            });
        }
        let mut tensors = BTreeMap::new();
        let mut dtype = Dtype::F64;
        for e in &manifest.tensors {
            let raw = &blob[e.byte_offset as usize..(e.byte_offset + e.byte_length) as usize];
            let data: Vec<f64> = match e.dtype {
                Dtype::F64 => raw
                    .chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                    .collect(),
                Dtype::F32 => {
                    dtype = Dtype::F32;
                    raw.chunks_exact(4)
                        .map(|c| f64::from(f32::from_le_bytes(c.try_into().expect("4 bytes"))))
                        .collect()
                }
            };
            if tensors.insert(e.name.clone(), Tensor::new(&e.shape, data)?).is_some() {
                return Err(Error::Checkpoint(format!("duplicate tensor {}", e.name)));
            }
        }
        Ok(Self {
            config: manifest.config,
            tensors,
            seed: manifest.seed,
            metrics: manifest.metrics,
            dtype,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
