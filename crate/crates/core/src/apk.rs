//! APK container access: locate `AndroidManifest.xml` through the ZIP central
//! directory and return its decompressed bytes.

use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::DeflateDecoder;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const MANIFEST_ENTRY: &str = "AndroidManifest.xml";

const LOCAL_HEADER_SIG: u32 = 0x0403_4b50;
const CENTRAL_HEADER_SIG: u32 = 0x0201_4b50;
const EOCD_SIG: u32 = 0x0605_4b50;
const EOCD_LEN: usize = 22;
const MAX_COMMENT: usize = 0xffff;

const METHOD_STORED: u16 = 0;
const METHOD_DEFLATED: u16 = 8;

/// Identity of one sample on disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApkSource {
    pub path: PathBuf,
    pub sha256: String,
    pub size_bytes: u64,
}

impl ApkSource {
    pub fn from_bytes(path: impl Into<PathBuf>, bytes: &[u8]) -> Self {
        ApkSource {
            path: path.into(),
            sha256: sha256_hex(bytes),
            size_bytes: bytes.len() as u64,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Error)]
pub enum ApkError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: not a ZIP archive ({reason})")]
    NotAZip { path: PathBuf, reason: String },
    #[error("{path}: no {MANIFEST_ENTRY} entry")]
    NoManifestEntry { path: PathBuf },
    #[error("{path}: cannot decompress {MANIFEST_ENTRY} ({reason})")]
    DecompressionFailure { path: PathBuf, reason: String },
}

impl ApkError {
    pub fn kind(&self) -> &'static str {
        match self {
            ApkError::Io { .. } => "Io",
            ApkError::NotAZip { .. } => "NotAZip",
            ApkError::NoManifestEntry { .. } => "NoManifestEntry",
            ApkError::DecompressionFailure { .. } => "DecompressionFailure",
        }
    }

    pub fn path(&self) -> &Path {
        match self {
            ApkError::Io { path, .. }
            | ApkError::NotAZip { path, .. }
            | ApkError::NoManifestEntry { path }
            | ApkError::DecompressionFailure { path, .. } => path,
        }
    }
}

/// Reads the file at `path` and pulls out its manifest entry.
pub fn open_apk(path: impl AsRef<Path>) -> Result<(Vec<u8>, ApkSource), ApkError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| ApkError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let manifest = manifest_from_zip(path, &bytes)?;
    Ok((manifest, ApkSource::from_bytes(path, &bytes)))
}

fn le16(b: &[u8], at: usize) -> Option<u16> {
    b.get(at..at + 2).map(|s| u16::from_le_bytes([s[0], s[1]]))
}

fn le32(b: &[u8], at: usize) -> Option<u32> {
    b.get(at..at + 4)
        .map(|s| u32::from_le_bytes([s[0], s[1], s[2], s[3]]))
}

struct CentralEntry {
    method: u16,
    compressed_size: usize,
    uncompressed_size: usize,
    local_header: usize,
}

fn find_eocd(bytes: &[u8]) -> Option<usize> {
    if bytes.len() < EOCD_LEN {
        return None;
    }
    let last = bytes.len() - EOCD_LEN;
    let first = last.saturating_sub(MAX_COMMENT);
    (first..=last)
        .rev()
        .find(|&at| le32(bytes, at) == Some(EOCD_SIG))
}

fn find_manifest(bytes: &[u8]) -> Result<Option<CentralEntry>, String> {
    let eocd = find_eocd(bytes).ok_or("end of central directory not found")?;
    let entries = le16(bytes, eocd + 10).unwrap_or(0) as usize;
    let cd_offset = le32(bytes, eocd + 16).unwrap_or(0) as usize;
    if cd_offset > eocd {
        return Err(format!(
            "central directory offset {cd_offset} past its end record"
        ));
    }
    let mut at = cd_offset;
    for _ in 0..entries {
        if le32(bytes, at) != Some(CENTRAL_HEADER_SIG) {
            return Err(format!("bad central directory header at {at}"));
        }
        let field = |off: usize| le16(bytes, at + off).ok_or("central directory truncated");
        let method = field(10)?;
        let name_len = field(28)? as usize;
        let extra_len = field(30)? as usize;
        let comment_len = field(32)? as usize;
        let compressed_size = le32(bytes, at + 20).ok_or("central directory truncated")? as usize;
        let uncompressed_size = le32(bytes, at + 24).ok_or("central directory truncated")? as usize;
        let local_header = le32(bytes, at + 42).ok_or("central directory truncated")? as usize;
        let name = bytes
            .get(at + 46..at + 46 + name_len)
            .ok_or("central directory truncated")?;
        if name == MANIFEST_ENTRY.as_bytes() {
            return Ok(Some(CentralEntry {
                method,
                compressed_size,
                uncompressed_size,
                local_header,
            }));
        }
        at += 46 + name_len + extra_len + comment_len;
    }
    Ok(None)
}

/// Extracts the manifest entry from an in-memory ZIP. `path` only labels errors.
pub fn manifest_from_zip(path: &Path, bytes: &[u8]) -> Result<Vec<u8>, ApkError> {
    let not_zip = |reason: String| ApkError::NotAZip {
        path: path.to_path_buf(),
        reason,
    };
    let decompress = |reason: String| ApkError::DecompressionFailure {
        path: path.to_path_buf(),
        reason,
    };

    let entry =
        find_manifest(bytes)
            .map_err(not_zip)?
            .ok_or_else(|| ApkError::NoManifestEntry {
                path: path.to_path_buf(),
            })?;

    let lh = entry.local_header;
    if le32(bytes, lh) != Some(LOCAL_HEADER_SIG) {
        return Err(not_zip(format!("bad local header at {lh}")));
    }
    let name_len = le16(bytes, lh + 26).unwrap_or(0) as usize;
    let extra_len = le16(bytes, lh + 28).unwrap_or(0) as usize;
    let start = lh + 30 + name_len + extra_len;
    let payload = bytes
        .get(start..start + entry.compressed_size)
        .ok_or_else(|| decompress("entry data runs past end of file".into()))?;

    let data = match entry.method {
        METHOD_STORED => payload.to_vec(),
        METHOD_DEFLATED => {
            let mut out = Vec::with_capacity(entry.uncompressed_size.min(1 << 24));
            // one byte past the declared size is enough to detect a mismatch
            DeflateDecoder::new(payload)
                .take(entry.uncompressed_size as u64 + 1)
                .read_to_end(&mut out)
                .map_err(|e| decompress(e.to_string()))?;
            out
        }
        other => {
            return Err(decompress(format!(
                "unsupported compression method {other}"
            )))
        }
    };
    if data.len() != entry.uncompressed_size {
        return Err(decompress(format!(
            "expected {} bytes, got {}",
            entry.uncompressed_size,
            data.len()
        )));
    }
    Ok(data)
}

/// Cheap sniff for the ZIP local file header magic.
pub fn looks_like_zip(bytes: &[u8]) -> bool {
    bytes.starts_with(b"PK\x03\x04") || bytes.starts_with(b"PK\x05\x06")
}
