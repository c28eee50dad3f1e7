//! Model directories: `manifest.json` plus `params.bin` (little-endian f64).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::model::{EmbeddingModel, Layout};
use crate::error::{Error, Result};

const FORMAT: &str = "multikb-embedding";
const VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const PARAMS_FILE: &str = "params.bin";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelManifest {
    pub format: String,
    pub version: u32,
    pub layout: Layout,
    pub param_count: usize,
    pub params_sha256: String,
    /// Free-form run metadata such as the config echo and seed.
    #[serde(default)]
    pub meta: serde_json::Value,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub(crate) fn encode(params: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(params.len() * 8);
    for p in params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

pub fn save_model(model: &EmbeddingModel, dir: impl AsRef<Path>, meta: serde_json::Value) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let bytes = encode(model.params());
    let manifest = ModelManifest {
        format: FORMAT.into(),
        version: VERSION,
        layout: model.layout().clone(),
        param_count: model.params().len(),
        params_sha256: sha256_hex(&bytes),
        meta,
    };
    let p = dir.join(PARAMS_FILE);
    fs::write(&p, &bytes).map_err(|e| Error::io(&p, e))?;
    let m = dir.join(MANIFEST_FILE);
    fs::write(&m, serde_json::to_string_pretty(&manifest)? + "\n").map_err(|e| Error::io(&m, e))
}

pub fn load_manifest(dir: impl AsRef<Path>) -> Result<ModelManifest> {
    let m = dir.as_ref().join(MANIFEST_FILE);
    if !m.exists() {
        return Err(Error::MissingArtifact(format!("{} not found", m.display())));
    }
    let text = fs::read_to_string(&m).map_err(|e| Error::io(&m, e))?;
    let manifest: ModelManifest = serde_json::from_str(&text)?;
    if manifest.format != FORMAT || manifest.version != VERSION {
        return Err(Error::domain(format!(
            "{} is not a version {VERSION} embedding manifest",
            m.display()
        )));
    }
    Ok(manifest)
}

pub fn load_model(dir: impl AsRef<Path>) -> Result<EmbeddingModel> {
    let dir = dir.as_ref();
    let manifest = load_manifest(dir)?;
    let params = read_params(&dir.join(PARAMS_FILE), &manifest.params_sha256, manifest.param_count)?;
    EmbeddingModel::from_parts(manifest.layout, params)
}

/// Read a little-endian f64 file and check it against its manifest entry.
pub(crate) fn read_params(p: &Path, sha256: &str, count: usize) -> Result<Vec<f64>> {
    if !p.exists() {
        return Err(Error::MissingArtifact(format!("{} not found", p.display())));
    }
    let bytes = fs::read(p).map_err(|e| Error::io(p, e))?;
    if sha256_hex(&bytes) != sha256 {
        return Err(Error::domain(format!("{} does not match its manifest checksum", p.display())));
    }
    if bytes.len() != count * 8 {
        return Err(Error::domain(format!("{} has the wrong length", p.display())));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect())
}
