//! Parameter checkpoints: a JSON manifest plus a little-endian sidecar.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::params::ParamStore;
use super::tensor::{Real, Tensor};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub trainable: bool,
    /// Element offset into the sidecar.
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub precision: String,
    pub data_file: String,
    pub tensors: Vec<TensorEntry>,
    #[serde(default)]
    pub metadata: serde_json::Value,
}

/// Sidecar path for a manifest path: `x.json` → `x.bin`.
pub fn sidecar_path(manifest: &Path) -> PathBuf {
    manifest.with_extension("bin")
}

pub fn save<T: Real>(manifest_path: &Path, store: &ParamStore<T>, metadata: serde_json::Value) -> Result<()> {
    let bin_path = sidecar_path(manifest_path);
    let mut bytes = Vec::new();
    let mut tensors = Vec::new();
    let mut offset = 0;
    for p in store.iter() {
        tensors.push(TensorEntry {
            name: p.name.clone(),
            shape: p.value.shape().to_vec(),
            trainable: p.trainable,
            offset,
        });
        offset += p.value.len();
        for &v in p.value.data() {
            v.write_le(&mut bytes);
        }
    }
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        precision: T::PRECISION.to_string(),
        data_file: bin_path
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_default(),
        tensors,
        metadata,
    };
    if let Some(dir) = manifest_path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(&bin_path, bytes).map_err(|e| Error::io(&bin_path, e))?;
    let text = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(manifest_path, text).map_err(|e| Error::io(manifest_path, e))
}

pub fn read_manifest(manifest_path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported checkpoint format version {}",
            manifest.format_version
        )));
    }
    Ok(manifest)
}

pub fn load<T: Real>(manifest_path: &Path) -> Result<(ParamStore<T>, Manifest)> {
    let manifest = read_manifest(manifest_path)?;
    if manifest.precision != T::PRECISION {
        return Err(Error::Format(format!(
            "checkpoint precision {} does not match {}",
            manifest.precision,
            T::PRECISION
        )));
    }
    let bin_path = manifest_path.with_file_name(&manifest.data_file);
    let bytes = std::fs::read(&bin_path).map_err(|e| Error::io(&bin_path, e))?;
    let mut store = ParamStore::new();
    for entry in &manifest.tensors {
        let n: usize = entry.shape.iter().product();
        let start = entry.offset * T::BYTES;
        let end = start + n * T::BYTES;
        let raw = bytes
            .get(start..end)
            .ok_or_else(|| Error::Format(format!("sidecar too short for {:?}", entry.name)))?;
        let data = raw.chunks_exact(T::BYTES).map(T::read_le).collect();
        store.add(&entry.name, Tensor::new(&entry.shape, data)?, entry.trainable)?;
    }
    Ok((store, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ck.json");
        let mut s = ParamStore::<f32>::new();
        s.add("a", Tensor::matrix(2, 2, vec![1.0, -0.0, f32::MIN_POSITIVE, 1e-38]).unwrap(), true)
            .unwrap();
        s.add("b", Tensor::new(&[3], vec![0.1, 0.2, 0.3]).unwrap(), false).unwrap();
        save(&path, &s, serde_json::json!({"family": "test"})).unwrap();
        let (back, manifest) = load::<f32>(&path).unwrap();
        assert_eq!(manifest.metadata["family"], "test");
        for (x, y) in s.iter().zip(back.iter()) {
            assert_eq!(x.name, y.name);
            assert_eq!(x.trainable, y.trainable);
            let xb: Vec<u32> = x.value.data().iter().map(|v| v.to_bits()).collect();
            let yb: Vec<u32> = y.value.data().iter().map(|v| v.to_bits()).collect();
            assert_eq!(xb, yb);
        }
        assert!(load::<f64>(&path).is_err());
    }
}
