//! Entropy, conditional entropy and Information Gain over binary features,
//! in bits.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{Category, ClassLabel, Dataset, FeatureColumn};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IgError {
    #[error("class distribution has zero total")]
    ZeroTotal,
    #[error("feature column has {column} values, dataset has {instances} instances")]
    LengthMismatch { column: usize, instances: usize },
    #[error("dataset has no features to rank")]
    EmptyVocabulary,
}

/// Class counts of a dataset or of a subset of it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassDistribution {
    pub malware: u64,
    pub benign: u64,
}

impl ClassDistribution {
    pub fn from_labels(labels: impl IntoIterator<Item = ClassLabel>) -> Self {
        let mut dist = ClassDistribution::default();
        for label in labels {
            dist.add(label);
        }
        dist
    }

    pub fn add(&mut self, label: ClassLabel) {
        match label {
            ClassLabel::Malware => self.malware += 1,
            ClassLabel::Benign => self.benign += 1,
        }
    }

    pub fn count(&self, label: ClassLabel) -> u64 {
        match label {
            ClassLabel::Malware => self.malware,
            ClassLabel::Benign => self.benign,
        }
    }

    pub fn total(&self) -> u64 {
        self.malware + self.benign
    }

    pub fn swapped(&self) -> Self {
        ClassDistribution {
            malware: self.benign,
            benign: self.malware,
        }
    }
}

/// Shannon entropy with 0·log2(0) taken as 0.
pub fn entropy(dist: ClassDistribution) -> Result<f64, IgError> {
    let total = dist.total();
    if total == 0 {
        return Err(IgError::ZeroTotal);
    }
    let total = total as f64;
    let mut h = 0.0;
    for count in [dist.malware, dist.benign] {
        if count > 0 {
            let p = count as f64 / total;
            h -= p * p.log2();
        }
    }
    Ok(h)
}

/// Class counts of the instances with feature value 0 and with value 1.
fn split(dataset: &Dataset, column: &FeatureColumn) -> Result<[ClassDistribution; 2], IgError> {
    if column.len() != dataset.len() {
        return Err(IgError::LengthMismatch {
            column: column.len(),
            instances: dataset.len(),
        });
    }
    let mut parts = [ClassDistribution::default(); 2];
    for (label, bit) in dataset.labels().zip(column.values.iter().by_vals()) {
        parts[bit as usize].add(label);
    }
    Ok(parts)
}

fn weighted(parts: &[ClassDistribution; 2], total: u64) -> f64 {
    parts
        .iter()
        .filter(|part| part.total() > 0)
        .map(|part| {
            let weight = part.total() as f64 / total as f64;
            weight * entropy(*part).expect("non-empty subset")
        })
        .sum()
}

/// H(D|v): size-weighted entropy of the value-0 and value-1 subsets.
pub fn conditional_entropy(dataset: &Dataset, column: &FeatureColumn) -> Result<f64, IgError> {
    let parts = split(dataset, column)?;
    if dataset.is_empty() {
        return Err(IgError::ZeroTotal);
    }
    Ok(weighted(&parts, dataset.len() as u64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore {
    pub feature: String,
    pub category: Category,
    pub ig: f64,
    pub h_dataset: f64,
    pub h_conditional: f64,
}

pub fn information_gain(
    dataset: &Dataset,
    column: &FeatureColumn,
) -> Result<FeatureScore, IgError> {
    let h_dataset = entropy(dataset.class_counts())?;
    let h_conditional = conditional_entropy(dataset, column)?;
    let entry = dataset
        .vocabulary()
        .get(column.index)
        .ok_or(IgError::LengthMismatch {
            column: column.index,
            instances: dataset.vocabulary().len(),
        })?;
    Ok(FeatureScore {
        feature: entry.name.clone(),
        category: entry.category,
        // rounding can leave a difference of a few ulps below zero
        ig: (h_dataset - h_conditional).max(0.0),
        h_dataset,
        h_conditional,
    })
}

/// Highest gain first; equal gains ordered by feature name.
pub fn rank_order(a: &FeatureScore, b: &FeatureScore) -> std::cmp::Ordering {
    b.ig.total_cmp(&a.ig)
        .then_with(|| a.feature.cmp(&b.feature))
}

pub fn rank_features(dataset: &Dataset) -> Result<Vec<FeatureScore>, IgError> {
    if dataset.vocabulary().is_empty() {
        return Err(IgError::EmptyVocabulary);
    }
    let mut scores = (0..dataset.vocabulary().len())
        .into_par_iter()
        .map(|j| information_gain(dataset, &dataset.column(j)))
        .collect::<Result<Vec<_>, _>>()?;
    scores.sort_by(rank_order);
    Ok(scores)
}

/// Unweighted mean gain per category over every scored feature. Categories
/// without features are absent.
pub fn category_means(scores: &[FeatureScore]) -> BTreeMap<Category, f64> {
    let mut sums: BTreeMap<Category, (f64, usize)> = BTreeMap::new();
    for s in scores {
        let e = sums.entry(s.category).or_default();
        e.0 += s.ig;
        e.1 += 1;
    }
    sums.into_iter()
        .map(|(c, (sum, n))| (c, sum / n as f64))
        .collect()
}
