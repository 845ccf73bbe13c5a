//! Binary checkpoint, all integers little-endian:
//!
//! ```text
//! "HFN1"  u32 version
//! u32 len, model config JSON
//! u32 count, then per tensor:
//!     u32 len, name UTF-8 | u8 dtype (0 = f32) | u32 rank, u64 dims | f32 values
//! u32 len, metadata JSON
//! ```

use std::path::Path;

use hyperfuse::layers::StateDict;
use hyperfuse::signals::Target;
use hyperfuse::training::Metrics;
use hyperfuse::{HyperFuseNet, ModelConfig, Rng};
use serde::{Deserialize, Serialize};

pub const MAGIC: &[u8; 4] = b"HFN1";
pub const VERSION: u32 = 1;
const DTYPE_F32: u8 = 0;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("not a checkpoint (magic {0:?})")]
    BadMagic([u8; 4]),
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("unsupported dtype code {0}")]
    Dtype(u8),
    #[error("checkpoint truncated at byte {0}")]
    Truncated(usize),
    #[error("checkpoint does not match its model config: {0}")]
    Mismatch(String),
    #[error("checkpoint field: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Model(#[from] hyperfuse::Error),
}

/// Training provenance stored next to the weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub target: Target,
    pub seed: u64,
    /// Seed of the train/validation/test split.
    pub split_seed: u64,
    pub best_epoch: usize,
    pub best_val_f1: f64,
    pub dataset_size: usize,
    pub test_indices: Vec<usize>,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub tensors: Vec<NamedTensor>,
    pub metadata: Metadata,
}

impl Checkpoint {
    /// Captures parameters and batch-norm running statistics.
    pub fn from_model(model: &HyperFuseNet<f32>, metadata: Metadata) -> Self {
        let tensors = model
            .state()
            .into_iter()
            .map(|(name, t)| NamedTensor {
                name,
                shape: t.shape().to_vec(),
                data: t.to_vec(),
            })
            .collect();
        Self {
            config: model.config().clone(),
            tensors,
            metadata,
        }
    }

    pub fn to_model(&self) -> Result<HyperFuseNet<f32>, CheckpointError> {
        let model = HyperFuseNet::build(&self.config, &mut Rng::new(0))?;
        let state = model.state();
        if state.len() != self.tensors.len() {
            return Err(CheckpointError::Mismatch(format!(
                "{} stored tensors, model has {}",
                self.tensors.len(),
                state.len()
            )));
        }
        for ((name, t), stored) in state.iter().zip(&self.tensors) {
            if *name != stored.name || t.shape() != stored.shape.as_slice() {
                return Err(CheckpointError::Mismatch(format!(
                    "expected {name} {:?}, found {} {:?}",
                    t.shape(),
                    stored.name,
                    stored.shape
                )));
            }
            t.set_data(stored.data.clone())?;
        }
        Ok(model)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, CheckpointError> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        put_blob(&mut out, &serde_json::to_vec(&self.config)?);
        put_u32(&mut out, self.tensors.len());
        for t in &self.tensors {
            put_blob(&mut out, t.name.as_bytes());
            out.push(DTYPE_F32);
            put_u32(&mut out, t.shape.len());
            for &d in &t.shape {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        put_blob(&mut out, &serde_json::to_vec(&self.metadata)?);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        let mut r = Reader { bytes, pos: 0 };
        let magic: [u8; 4] = r.take(4)?.try_into().unwrap();
        if &magic != MAGIC {
            return Err(CheckpointError::BadMagic(magic));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(CheckpointError::Version(version));
        }
        let config: ModelConfig = serde_json::from_slice(r.blob()?)?;
        let count = r.u32()? as usize;
        let mut tensors = Vec::with_capacity(count.min(1024));
        for _ in 0..count {
            let name = String::from_utf8_lossy(r.blob()?).into_owned();
            let dtype = r.take(1)?[0];
            if dtype != DTYPE_F32 {
                return Err(CheckpointError::Dtype(dtype));
            }
            let rank = r.u32()? as usize;
            let shape = (0..rank).map(|_| r.u64().map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
            let numel = shape.iter().try_fold(1usize, |a, &d| a.checked_mul(d));
            let raw = r.take(numel.and_then(|n| n.checked_mul(4)).ok_or(CheckpointError::Truncated(r.pos))?)?;
            let data = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
            tensors.push(NamedTensor { name, shape, data });
        }
        let metadata = serde_json::from_slice(r.blob()?)?;
        Ok(Self {
            config,
            tensors,
            metadata,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&u32::try_from(v).expect("field fits in u32").to_le_bytes());
}

fn put_blob(out: &mut Vec<u8>, bytes: &[u8]) {
    put_u32(out, bytes.len());
    out.extend_from_slice(bytes);
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or(CheckpointError::Truncated(self.pos))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn blob(&mut self) -> Result<&'a [u8], CheckpointError> {
        let n = self.u32()? as usize;
        self.take(n)
    }
}
