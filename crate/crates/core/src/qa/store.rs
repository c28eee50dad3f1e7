//! Question encoders on disk: `qa_manifest.json` plus `qa_params.bin`, so an
//! encoder can share a directory with the embedding it was trained against.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::QaModel;
use crate::embed::{encode_params, read_params, sha256_hex};
use crate::error::{Error, Result};

const FORMAT: &str = "multikb-qa";
const VERSION: u32 = 1;
pub const QA_MANIFEST_FILE: &str = "qa_manifest.json";
pub const QA_PARAMS_FILE: &str = "qa_params.bin";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QaManifest {
    pub format: String,
    pub version: u32,
    pub encoder: QaModel,
    pub param_count: usize,
    pub params_sha256: String,
    #[serde(default)]
    pub meta: serde_json::Value,
}

pub fn save_qa(model: &QaModel, dir: impl AsRef<Path>, meta: serde_json::Value) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let bytes = encode_params(model.params());
    let manifest = QaManifest {
        format: FORMAT.into(),
        version: VERSION,
        encoder: model.clone(),
        param_count: model.params().len(),
        params_sha256: sha256_hex(&bytes),
        meta,
    };
    let p = dir.join(QA_PARAMS_FILE);
    fs::write(&p, &bytes).map_err(|e| Error::io(&p, e))?;
    let m = dir.join(QA_MANIFEST_FILE);
    fs::write(&m, serde_json::to_string_pretty(&manifest)? + "\n").map_err(|e| Error::io(&m, e))
}

pub fn load_qa(dir: impl AsRef<Path>) -> Result<QaModel> {
    let dir = dir.as_ref();
    let m = dir.join(QA_MANIFEST_FILE);
    if !m.exists() {
        return Err(Error::MissingArtifact(format!("{} not found", m.display())));
    }
    let text = fs::read_to_string(&m).map_err(|e| Error::io(&m, e))?;
    let manifest: QaManifest = serde_json::from_str(&text)?;
    if manifest.format != FORMAT || manifest.version != VERSION {
        return Err(Error::domain(format!("{} is not a version {VERSION} encoder manifest", m.display())));
    }
    let mut model = manifest.encoder;
    model.vocab.reindex();
    if model.param_len() != manifest.param_count {
        return Err(Error::domain(format!("{} disagrees with its own shape", m.display())));
    }
    model.params = read_params(&dir.join(QA_PARAMS_FILE), &manifest.params_sha256, manifest.param_count)?;
    Ok(model)
}
