//! Line-oriented feature cache: one JSON object per line, one line per file.
//! Lines are independent, so caches can simply be concatenated.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::apk::{self, sha256_hex};
use crate::axml::decode_manifest;
use crate::features::{ClassLabel, LabeledRecord};
use crate::manifest::{extract_features, is_manifest, ManifestFeatures};

pub const STATUS_OK: &str = "ok";
pub const STATUS_NOT_A_MANIFEST: &str = "NotAManifest";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub sha256: String,
    pub label: ClassLabel,
    pub package: String,
    pub permissions: Vec<String>,
    pub intents: Vec<String>,
    /// `ok`, or the kind of error that stopped extraction.
    pub parse_status: String,
    pub source_path: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl CacheRecord {
    pub fn is_ok(&self) -> bool {
        self.parse_status == STATUS_OK
    }

    pub fn features(&self) -> ManifestFeatures {
        ManifestFeatures {
            app_id: self.package.clone(),
            permissions: self.permissions.iter().cloned().collect(),
            intents: self.intents.iter().cloned().collect(),
        }
    }

    pub fn labeled(&self, label: ClassLabel) -> LabeledRecord {
        LabeledRecord {
            sha256: self.sha256.clone(),
            label,
            features: self.features(),
        }
    }

    fn failed(sha256: String, label: ClassLabel, path: &Path, status: &str) -> Self {
        CacheRecord {
            sha256,
            label,
            package: String::new(),
            permissions: Vec::new(),
            intents: Vec::new(),
            parse_status: status.to_string(),
            source_path: path.display().to_string(),
            warnings: Vec::new(),
        }
    }
}

impl crate::sampling::Digest for CacheRecord {
    fn digest(&self) -> &str {
        &self.sha256
    }
}

/// Runs container extraction, manifest decoding and feature extraction over
/// one file's bytes. Failures become records with a non-`ok` status.
///
/// ZIP content (by magic or `.apk` extension) goes through the central
/// directory; anything else is taken to be a manifest, binary or text.
pub fn extract_bytes(path: &Path, bytes: &[u8], label: ClassLabel) -> CacheRecord {
    let sha256 = sha256_hex(bytes);
    let is_apk = apk::looks_like_zip(bytes)
        || path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("apk"));
    let owned;
    let manifest = if is_apk {
        match apk::manifest_from_zip(path, bytes) {
            Ok(m) => {
                owned = m;
                &owned[..]
            }
            Err(e) => return CacheRecord::failed(sha256, label, path, e.kind()),
        }
    } else {
        bytes
    };
    let decoded = match decode_manifest(manifest) {
        Ok(d) => d,
        Err(e) => return CacheRecord::failed(sha256, label, path, e.kind()),
    };
    if !is_manifest(&decoded.tree) {
        return CacheRecord::failed(sha256, label, path, STATUS_NOT_A_MANIFEST);
    }
    let features = extract_features(&decoded.tree);
    CacheRecord {
        sha256,
        label,
        package: features.app_id,
        permissions: features.permissions.into_iter().collect(),
        intents: features.intents.into_iter().collect(),
        parse_status: STATUS_OK.to_string(),
        source_path: path.display().to_string(),
        warnings: decoded.warnings.iter().map(|w| w.to_string()).collect(),
    }
}

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: invalid cache record: {source}")]
    Parse {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

/// Reads every record of a cache file. A missing file is an empty cache.
pub fn read_cache(path: &Path) -> Result<Vec<CacheRecord>, CacheError> {
    let io = |source| CacheError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io(e)),
    };
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|source| CacheError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            source,
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Appends records, one line each. Existing lines are never touched.
pub fn append_cache(path: &Path, records: &[CacheRecord]) -> Result<(), CacheError> {
    let io = |source| CacheError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("cache records serialize"));
        out.push('\n');
    }
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io)?;
    file.write_all(out.as_bytes()).map_err(io)
}
