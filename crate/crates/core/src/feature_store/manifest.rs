use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{load_features, FeatureMatrix};
use crate::error::{Error, Result};

/// Sidecar describing a feature file: expected shape and content hash.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub feature_path: PathBuf,
    pub count: usize,
    pub dim: usize,
    /// Lowercase hex SHA-256 of the feature file bytes.
    pub checksum: String,
}

impl DatasetManifest {
    /// Describes an existing feature file.
    pub fn for_file(name: impl Into<String>, feature_path: impl AsRef<Path>) -> Result<Self> {
        let feature_path = feature_path.as_ref();
        let m = load_features(feature_path)?;
        Ok(Self {
            name: name.into(),
            feature_path: feature_path.to_path_buf(),
            count: m.n(),
            dim: m.dim(),
            checksum: sha256_file(feature_path)?,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    /// Loads the referenced features and checks count, dim and checksum.
    /// Relative feature paths resolve against `base_dir`.
    pub fn load_features(&self, base_dir: &Path) -> Result<FeatureMatrix> {
        let path = if self.feature_path.is_absolute() {
            self.feature_path.clone()
        } else {
            base_dir.join(&self.feature_path)
        };
        let actual = sha256_file(&path)?;
        if !actual.eq_ignore_ascii_case(&self.checksum) {
            return Err(Error::Data(format!(
                "{}: checksum mismatch (manifest {}, file {actual})",
                path.display(),
                self.checksum
            )));
        }
        let m = load_features(&path)?;
        if m.n() != self.count || m.dim() != self.dim {
            return Err(Error::Data(format!(
                "{}: shape ({}, {}) does not match manifest ({}, {})",
                path.display(),
                m.n(),
                m.dim(),
                self.count,
                self.dim
            )));
        }
        Ok(m)
    }
}

/// Reads a manifest JSON file and loads its validated features.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<(DatasetManifest, FeatureMatrix)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: DatasetManifest = serde_json::from_str(&text)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let m = manifest.load_features(base)?;
    Ok((manifest, m))
}

pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let read = reader.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if read == 0 {
            break;
        }
        hasher.update(&buf[..read]);
    }
    Ok(hex::encode(hasher.finalize()))
}
