//! Corpus directory walking and per-file extraction with cache reuse.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};

use manifest_ig::apk::sha256_hex;
use manifest_ig::cache::{extract_bytes, CacheRecord};
use manifest_ig::ClassLabel;
use rayon::prelude::*;
use walkdir::WalkDir;

use crate::error::CliError;

/// One file found under a corpus directory, with its extraction outcome.
#[derive(Debug)]
pub struct ScannedFile {
    pub path: PathBuf,
    /// Label from the directory the file was found under.
    pub label: ClassLabel,
    pub record: CacheRecord,
}

#[derive(Debug, Default)]
pub struct Scan {
    /// Files in walk order: malware directory first, then benign, each sorted by path.
    pub files: Vec<ScannedFile>,
    /// Records not yet in the cache, in walk order, one per new digest.
    pub new_records: Vec<CacheRecord>,
    pub cache_hits: usize,
    /// Entries that could not be read at all.
    pub unreadable: Vec<String>,
}

impl Scan {
    /// Counts per parse status over every scanned file, plus `Io` for unreadable entries.
    pub fn status_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for f in &self.files {
            *counts.entry(f.record.parse_status.clone()).or_insert(0) += 1;
        }
        if !self.unreadable.is_empty() {
            *counts.entry("Io".to_string()).or_insert(0) += self.unreadable.len();
        }
        counts
    }

    pub fn skipped(&self) -> usize {
        self.files.iter().filter(|f| !f.record.is_ok()).count() + self.unreadable.len()
    }
}

fn list_files(root: &Path, unreadable: &mut Vec<String>) -> Result<Vec<PathBuf>, CliError> {
    std::fs::read_dir(root).map_err(|source| CliError::Io {
        path: root.to_path_buf(),
        source,
    })?;
    let mut files = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        match entry {
            Ok(e) if e.file_type().is_file() => files.push(e.into_path()),
            Ok(_) => {}
            Err(e) => unreadable.push(e.to_string()),
        }
    }
    Ok(files)
}

enum Outcome {
    Hit(CacheRecord),
    New(CacheRecord),
    Unreadable(String),
}

/// Walks every root and extracts each file not already present in `cached`.
/// Must be called inside the worker pool that should bound the fan-out.
pub fn scan(
    roots: &[(PathBuf, ClassLabel)],
    cached: &HashMap<String, CacheRecord>,
) -> Result<Scan, CliError> {
    let mut scan = Scan::default();
    let mut work = Vec::new();
    for (root, label) in roots {
        for path in list_files(root, &mut scan.unreadable)? {
            work.push((path, *label));
        }
    }

    let outcomes: Vec<Outcome> = work
        .par_iter()
        .map(|(path, label)| match std::fs::read(path) {
            Err(e) => Outcome::Unreadable(format!("{}: {e}", path.display())),
            Ok(bytes) => match cached.get(&sha256_hex(&bytes)) {
                Some(record) => Outcome::Hit(record.clone()),
                None => Outcome::New(extract_bytes(path, &bytes, *label)),
            },
        })
        .collect();

    let mut seen = HashSet::new();
    for ((path, label), outcome) in work.into_iter().zip(outcomes) {
        let record = match outcome {
            Outcome::Unreadable(msg) => {
                scan.unreadable.push(msg);
                continue;
            }
            Outcome::Hit(record) => {
                scan.cache_hits += 1;
                record
            }
            Outcome::New(record) => {
                if seen.insert(record.sha256.clone()) {
                    scan.new_records.push(record.clone());
                }
                record
            }
        };
        scan.files.push(ScannedFile {
            path,
            label,
            record,
        });
    }
    Ok(scan)
}
