//! Labeled binary feature vectors over a shared, sorted vocabulary.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use bitvec::vec::BitVec;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ig::ClassDistribution;
use crate::manifest::ManifestFeatures;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassLabel {
    Malware,
    Benign,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 2] = [ClassLabel::Malware, ClassLabel::Benign];

    pub fn other(self) -> Self {
        match self {
            ClassLabel::Malware => ClassLabel::Benign,
            ClassLabel::Benign => ClassLabel::Malware,
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassLabel::Malware => "malware",
            ClassLabel::Benign => "benign",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Permission,
    Intent,
}

impl Category {
    pub const ALL: [Category; 2] = [Category::Permission, Category::Intent];

    /// Label used in rendered tables.
    pub fn plural(self) -> &'static str {
        match self {
            Category::Permission => "Permissions",
            Category::Intent => "Intents",
        }
    }

    fn namespace_prefix(self) -> &'static str {
        match self {
            Category::Permission => "permission:",
            Category::Intent => "intent:",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::Permission => "permission",
            Category::Intent => "intent",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FeatureError {
    #[error("no feature records supplied")]
    EmptyInput,
    #[error("`{name}` occurs both as a permission and as an intent")]
    NameCollisionAcrossCategories { name: String },
    #[error("sample {sha256} appears more than once")]
    DuplicateSample { sha256: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabEntry {
    pub name: String,
    pub category: Category,
}

/// Every distinct feature name in a corpus, ascending by name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeatureVocabulary {
    entries: Vec<VocabEntry>,
    index: HashMap<String, usize>,
}

impl FeatureVocabulary {
    fn from_map(names: BTreeMap<String, Category>) -> Self {
        let entries: Vec<_> = names
            .into_iter()
            .map(|(name, category)| VocabEntry { name, category })
            .collect();
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.name.clone(), i))
            .collect();
        FeatureVocabulary { entries, index }
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn get(&self, j: usize) -> Option<&VocabEntry> {
        self.entries.get(j)
    }

    /// Keeps entries for which `keep` holds, preserving order.
    fn retain(self, mut keep: impl FnMut(usize, &VocabEntry) -> bool) -> Self {
        let kept = self
            .entries
            .into_iter()
            .enumerate()
            .filter(|(i, e)| keep(*i, e))
            .map(|(_, e)| (e.name, e.category))
            .collect();
        Self::from_map(kept)
    }
}

pub fn build_vocabulary(records: &[ManifestFeatures]) -> Result<FeatureVocabulary, FeatureError> {
    if records.is_empty() {
        return Err(FeatureError::EmptyInput);
    }
    let mut names = BTreeMap::new();
    for record in records {
        let tagged = record
            .permissions
            .iter()
            .map(|n| (n, Category::Permission))
            .chain(record.intents.iter().map(|n| (n, Category::Intent)));
        for (name, category) in tagged {
            match names.get(name) {
                Some(&existing) if existing != category => {
                    return Err(FeatureError::NameCollisionAcrossCategories { name: name.clone() })
                }
                Some(_) => {}
                None => {
                    names.insert(name.clone(), category);
                }
            }
        }
    }
    Ok(FeatureVocabulary::from_map(names))
}

/// One labeled app as a presence/absence bit vector over the vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub sha256: String,
    pub label: ClassLabel,
    pub vector: BitVec,
    /// App features with no vocabulary entry.
    pub oov_count: usize,
}

pub fn vectorize(
    sha256: &str,
    features: &ManifestFeatures,
    vocab: &FeatureVocabulary,
    label: ClassLabel,
) -> Instance {
    let mut vector = BitVec::repeat(false, vocab.len());
    let mut oov_count = 0;
    let tagged = features
        .permissions
        .iter()
        .map(|n| (n, Category::Permission))
        .chain(features.intents.iter().map(|n| (n, Category::Intent)));
    for (name, category) in tagged {
        match vocab.position(name) {
            Some(j) if vocab.entries[j].category == category => vector.set(j, true),
            _ => oov_count += 1,
        }
    }
    Instance {
        sha256: sha256.to_string(),
        label,
        vector,
        oov_count,
    }
}

/// The per-instance values of one feature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureColumn {
    pub index: usize,
    pub values: BitVec,
}

impl FeatureColumn {
    pub fn new(index: usize, values: impl IntoIterator<Item = bool>) -> Self {
        FeatureColumn {
            index,
            values: values.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn support(&self) -> usize {
        self.values.count_ones()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledRecord {
    pub sha256: String,
    pub label: ClassLabel,
    pub features: ManifestFeatures,
}

#[derive(Debug, Clone, Default)]
pub struct AssembleOptions {
    /// Drop features declared by fewer than this many apps.
    pub min_support: usize,
    /// Prefix names with `permission:` / `intent:` so the categories can never collide.
    pub namespace_categories: bool,
    /// Keep only features of this category.
    pub category: Option<Category>,
}

/// The labeled collection that entropy and information gain are computed over.
#[derive(Debug, Clone)]
pub struct Dataset {
    vocabulary: FeatureVocabulary,
    instances: Vec<Instance>,
    class_counts: ClassDistribution,
}

impl Dataset {
    pub fn vocabulary(&self) -> &FeatureVocabulary {
        &self.vocabulary
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn class_counts(&self) -> ClassDistribution {
        self.class_counts
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = ClassLabel> + '_ {
        self.instances.iter().map(|i| i.label)
    }

    pub fn column(&self, j: usize) -> FeatureColumn {
        FeatureColumn::new(j, self.instances.iter().map(|i| i.vector[j]))
    }

    pub fn oov_count(&self) -> usize {
        self.instances.iter().map(|i| i.oov_count).sum()
    }

    /// Builds a dataset from labels and explicit columns, bypassing manifest
    /// extraction. Feature `j` is named `names[j]`; every column must have one
    /// bit per label.
    pub fn from_columns(
        labels: &[ClassLabel],
        features: &[(String, Category)],
        columns: &[Vec<bool>],
    ) -> Result<Self, FeatureError> {
        let mut names = BTreeMap::new();
        for (name, category) in features {
            if names.insert(name.clone(), *category).is_some() {
                return Err(FeatureError::NameCollisionAcrossCategories { name: name.clone() });
            }
        }
        let vocabulary = FeatureVocabulary::from_map(names);
        let instances = labels
            .iter()
            .enumerate()
            .map(|(i, &label)| {
                let mut vector = BitVec::repeat(false, vocabulary.len());
                for ((name, _), column) in features.iter().zip(columns) {
                    let j = vocabulary.position(name).expect("name was inserted");
                    vector.set(j, column[i]);
                }
                Instance {
                    sha256: format!("{i:064x}"),
                    label,
                    vector,
                    oov_count: 0,
                }
            })
            .collect();
        Ok(Self::new(vocabulary, instances))
    }

    fn new(vocabulary: FeatureVocabulary, instances: Vec<Instance>) -> Self {
        let class_counts = ClassDistribution::from_labels(instances.iter().map(|i| i.label));
        Dataset {
            vocabulary,
            instances,
            class_counts,
        }
    }
}

fn namespaced(features: &ManifestFeatures) -> ManifestFeatures {
    let tag = |set: &std::collections::BTreeSet<String>, c: Category| {
        set.iter()
            .map(|n| format!("{}{n}", c.namespace_prefix()))
            .collect()
    };
    ManifestFeatures {
        app_id: features.app_id.clone(),
        permissions: tag(&features.permissions, Category::Permission),
        intents: tag(&features.intents, Category::Intent),
    }
}

pub fn assemble_dataset(records: &[LabeledRecord]) -> Result<Dataset, FeatureError> {
    assemble_dataset_with(records, &AssembleOptions::default())
}

pub fn assemble_dataset_with(
    records: &[LabeledRecord],
    options: &AssembleOptions,
) -> Result<Dataset, FeatureError> {
    if records.is_empty() {
        return Err(FeatureError::EmptyInput);
    }
    let mut seen = HashSet::new();
    for r in records {
        if !seen.insert(r.sha256.as_str()) {
            return Err(FeatureError::DuplicateSample {
                sha256: r.sha256.clone(),
            });
        }
    }

    let features: Vec<ManifestFeatures> = records
        .iter()
        .map(|r| {
            let mut f = if options.namespace_categories {
                namespaced(&r.features)
            } else {
                r.features.clone()
            };
            match options.category {
                Some(Category::Permission) => f.intents.clear(),
                Some(Category::Intent) => f.permissions.clear(),
                None => {}
            }
            f
        })
        .collect();

    let mut vocabulary = build_vocabulary(&features)?;
    if options.min_support > 0 {
        let mut support = vec![0usize; vocabulary.len()];
        for f in &features {
            for name in f.permissions.iter().chain(&f.intents) {
                if let Some(j) = vocabulary.position(name) {
                    support[j] += 1;
                }
            }
        }
        vocabulary = vocabulary.retain(|j, _| support[j] >= options.min_support);
    }

    let instances = records
        .par_iter()
        .zip(features.par_iter())
        .map(|(r, f)| vectorize(&r.sha256, f, &vocabulary, r.label))
        .collect();
    Ok(Dataset::new(vocabulary, instances))
}
