//! Permission and intent feature extraction from Android manifests, labeled
//! binary feature vectors, and Information Gain ranking of those features.
//!
//! The pipeline runs `apk` → `axml` → `manifest` per app, then
//! `features` → `ig` → `report` per corpus.

pub mod apk;
pub mod axml;
pub mod cache;
pub mod features;
pub mod ig;
pub mod manifest;
pub mod report;
pub mod sampling;

pub use apk::{open_apk, ApkError, ApkSource};
pub use axml::{decode_manifest, DecodeError, XmlTree};
pub use features::{
    assemble_dataset, assemble_dataset_with, build_vocabulary, vectorize, AssembleOptions,
    Category, ClassLabel, Dataset, FeatureColumn, FeatureError, FeatureVocabulary, Instance,
    LabeledRecord,
};
pub use ig::{
    category_means, conditional_entropy, entropy, information_gain, rank_features,
    ClassDistribution, FeatureScore, IgError,
};
pub use manifest::{extract_features, ManifestFeatures};
pub use report::{
    read_report, render_category_comparison, render_top_table, write_report, AnalysisReport,
    Format, ReportError,
};
pub use sampling::{sample_balanced, BalancedSample, SamplingError};
