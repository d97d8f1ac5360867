//! Model checkpoint container.
//!
//! A checkpoint is a JSON manifest (`*.json`) plus a binary blob with the same
//! stem (`*.bin`). The blob is the concatenation of every tensor as
//! little-endian `f64`, in the order listed in the manifest. The manifest
//! carries the architecture fingerprint (ordered layer specs plus variant
//! metadata), the RNG seed, the epoch counter and the Adam state.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Adam, LayerSpec, ParamStore, Tensor};
use crate::error::{Error, Result};

pub const FORMAT: &str = "chanpred-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Param,
    Buffer,
    AdamM,
    AdamV,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub group: Group,
    pub layer: String,
    pub index: usize,
    pub shape: Vec<usize>,
    /// Offset into the blob, in `f64` elements.
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub byte_order: String,
    pub blob: String,
    pub architecture: Vec<LayerSpec>,
    pub variant: serde_json::Value,
    pub rng_seed: u64,
    pub epoch: usize,
    pub adam_steps: u64,
    pub trained: bool,
    pub tensors: Vec<TensorEntry>,
}

/// Everything needed to resume training or serve inference.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub architecture: Vec<LayerSpec>,
    pub variant: serde_json::Value,
    pub params: ParamStore,
    pub adam: Adam,
    pub epoch: usize,
    pub trained: bool,
}

pub fn blob_path(manifest: &Path) -> PathBuf {
    manifest.with_extension("bin")
}

/// Writes `bytes` to a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

impl Checkpoint {
    pub fn save(&self, manifest_path: &Path) -> Result<()> {
        let mut blob: Vec<u8> = Vec::new();
        let mut entries = Vec::new();
        let mut offset = 0;
        let mut push = |group: Group, layer: &str, index: usize, shape: &[usize], data: &[f64]| {
            entries.push(TensorEntry {
                group,
                layer: layer.to_owned(),
                index,
                shape: shape.to_vec(),
                offset,
            });
            for v in data {
                blob.extend_from_slice(&v.to_le_bytes());
            }
            offset += data.len();
        };
        for (layer, ts) in self.params.iter() {
            for (i, t) in ts.iter().enumerate() {
                push(Group::Param, layer, i, t.shape(), t.data());
            }
        }
        for (layer, ts) in self.params.iter_buffers() {
            for (i, t) in ts.iter().enumerate() {
                push(Group::Buffer, layer, i, t.shape(), t.data());
            }
        }
        for (group, moments) in [(Group::AdamM, &self.adam.m), (Group::AdamV, &self.adam.v)] {
            for (layer, vs) in moments {
                for (i, v) in vs.iter().enumerate() {
                    push(group, layer, i, &[v.len()], v);
                }
            }
        }
        let blob_file = blob_path(manifest_path);
        let manifest = Manifest {
            format: FORMAT.into(),
            version: VERSION,
            byte_order: "little-endian".into(),
            blob: blob_file
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
            architecture: self.architecture.clone(),
            variant: self.variant.clone(),
            rng_seed: self.params.rng_seed,
            epoch: self.epoch,
            adam_steps: self.adam.steps,
            trained: self.trained,
            tensors: entries,
        };
        write_atomic(&blob_file, &blob)?;
        write_atomic(manifest_path, serde_json::to_string_pretty(&manifest)?.as_bytes())
    }

    pub fn load(manifest_path: &Path) -> Result<Self> {
        let text = fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
        let manifest: Manifest = serde_json::from_str(&text)?;
        if manifest.format != FORMAT || manifest.version != VERSION {
            return Err(Error::ArchitectureMismatch(format!(
                "unsupported checkpoint format {} v{}",
                manifest.format, manifest.version
            )));
        }
        let blob_file = manifest_path.with_file_name(&manifest.blob);
        let bytes = fs::read(&blob_file).map_err(|e| Error::io(&blob_file, e))?;
        if bytes.len() % 8 != 0 {
            return Err(Error::Config(format!("{} is not a whole number of f64", blob_file.display())));
        }
        let values: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let mut params = ParamStore::new(manifest.rng_seed);
        let mut adam = Adam {
            steps: manifest.adam_steps,
            ..Adam::default()
        };
        let mut grouped: std::collections::BTreeMap<(Group, String), Vec<(usize, Tensor)>> = Default::default();
        for e in &manifest.tensors {
            let n: usize = e.shape.iter().product();
            let data = values
                .get(e.offset..e.offset + n)
                .ok_or_else(|| Error::Config(format!("tensor {}[{}] overruns the blob", e.layer, e.index)))?;
            let t = Tensor::new(e.shape.clone(), data.to_vec())?;
            grouped.entry((e.group, e.layer.clone())).or_default().push((e.index, t));
        }
        for ((group, layer), mut ts) in grouped {
            ts.sort_by_key(|(i, _)| *i);
            let ts: Vec<Tensor> = ts.into_iter().map(|(_, t)| t).collect();
            match group {
                Group::Param => params.insert(&layer, ts),
                Group::Buffer => params.insert_buffers(&layer, ts),
                Group::AdamM => {
                    adam.m.insert(layer, ts.into_iter().map(Tensor::into_data).collect());
                }
                Group::AdamV => {
                    adam.v.insert(layer, ts.into_iter().map(Tensor::into_data).collect());
                }
            }
        }
        Ok(Checkpoint {
            architecture: manifest.architecture,
            variant: manifest.variant,
            params,
            adam,
            epoch: manifest.epoch,
            trained: manifest.trained,
        })
    }
}
