//! Analysis reports: the JSON document, top-N tables, and the per-corpus
//! category comparison grid.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::Category;
use crate::ig::{category_means, rank_order, ClassDistribution, FeatureScore};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Plain,
    Markdown,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plain" => Ok(Format::Plain),
            "markdown" | "md" => Ok(Format::Markdown),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format `{other}` (plain, markdown, csv)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusInfo {
    pub name: String,
    pub date_range: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub skipped_files: u64,
    pub oov_count: u64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub corpus: CorpusInfo,
    pub generated_at: String,
    pub seed: u64,
    pub class_counts: ClassDistribution,
    pub vocabulary_size: usize,
    pub top_n: usize,
    pub scores: Vec<FeatureScore>,
    pub category_means: BTreeMap<Category, f64>,
    pub diagnostics: Diagnostics,
}

impl AnalysisReport {
    /// Builds a report, putting `scores` in rank order and deriving the
    /// category means from all of them.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        corpus: CorpusInfo,
        seed: u64,
        class_counts: ClassDistribution,
        vocabulary_size: usize,
        top_n: usize,
        mut scores: Vec<FeatureScore>,
        diagnostics: Diagnostics,
        generated_at: String,
    ) -> Self {
        scores.sort_by(rank_order);
        let category_means = category_means(&scores);
        AnalysisReport {
            schema_version: SCHEMA_VERSION,
            corpus,
            generated_at,
            seed,
            class_counts,
            vocabulary_size,
            top_n,
            scores,
            category_means,
            diagnostics,
        }
    }

    /// Permissions mean minus Intents mean, when both categories are present.
    pub fn category_delta(&self) -> Option<f64> {
        let p = self.category_means.get(&Category::Permission)?;
        let i = self.category_means.get(&Category::Intent)?;
        Some(p - i)
    }
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: invalid report: {source}")]
    Invalid {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: report schema version {found} is not supported (expected {SCHEMA_VERSION})")]
    SchemaVersion { path: PathBuf, found: i64 },
}

pub fn report_to_json(report: &AnalysisReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
    s.push('\n');
    s
}

pub fn write_report(report: &AnalysisReport, path: &Path) -> Result<(), ReportError> {
    std::fs::write(path, report_to_json(report)).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_report(path: &Path) -> Result<AnalysisReport, ReportError> {
    let text = std::fs::read_to_string(path).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let invalid = |source| ReportError::Invalid {
        path: path.to_path_buf(),
        source,
    };
    let value: serde_json::Value = serde_json::from_str(&text).map_err(invalid)?;
    let found = value
        .get("schema_version")
        .and_then(|v| v.as_i64())
        .unwrap_or(-1);
    if found != SCHEMA_VERSION as i64 {
        return Err(ReportError::SchemaVersion {
            path: path.to_path_buf(),
            found,
        });
    }
    serde_json::from_value(value).map_err(invalid)
}

fn score4(x: f64) -> String {
    format!("{x:.4}")
}

fn md_cell(s: &str) -> String {
    s.replace('|', "\\|")
}

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv of UTF-8 input")
}

/// Space-padded columns; the last column is not padded.
fn aligned(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let header: Vec<String> = header.iter().map(|s| s.to_string()).collect();
    for row in std::iter::once(&header).chain(rows) {
        let last = row.len() - 1;
        for (i, cell) in row.iter().enumerate() {
            if i == last {
                out.push_str(cell);
            } else {
                let _ = write!(out, "{cell:<width$}  ", width = widths[i]);
            }
        }
        out.push('\n');
    }
    out
}

fn markdown(header: &[&str], align: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = format!("| {} |\n|{}|\n", header.join(" | "), align.join("|"));
    for row in rows {
        let cells: Vec<_> = row.iter().map(|c| md_cell(c)).collect();
        let _ = writeln!(out, "| {} |", cells.join(" | "));
    }
    out
}

/// Top `n` rows of the ranking as (IG Score, Feature, Category). Plain and
/// Markdown round scores to 4 decimals; CSV keeps full precision.
pub fn render_top_table(report: &AnalysisReport, n: usize, format: Format) -> String {
    let top = &report.scores[..n.min(report.scores.len())];
    let cells =
        |s: &FeatureScore, ig: String| vec![ig, s.feature.clone(), s.category.plural().to_string()];
    match format {
        Format::Plain => {
            let rows: Vec<_> = top.iter().map(|s| cells(s, score4(s.ig))).collect();
            aligned(&["IG Score", "Feature", "Category"], &rows)
        }
        Format::Markdown => {
            let rows: Vec<_> = top.iter().map(|s| cells(s, score4(s.ig))).collect();
            markdown(
                &["IG Score", "Feature", "Category"],
                &["---:", "---", "---"],
                &rows,
            )
        }
        Format::Csv => {
            let rows: Vec<_> = top.iter().map(|s| cells(s, s.ig.to_string())).collect();
            csv_text(&["ig", "feature", "category"], &rows)
        }
    }
}

const NOT_AVAILABLE: &str = "n/a";

/// One row per report, in input order: corpus, Permissions mean, Intents
/// mean, and their difference.
pub fn render_category_comparison(reports: &[AnalysisReport], format: Format) -> String {
    let fmt = |x: Option<f64>| match (x, format) {
        (None, _) => NOT_AVAILABLE.to_string(),
        (Some(x), Format::Csv) => x.to_string(),
        (Some(x), _) => score4(x),
    };
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                r.corpus.name.clone(),
                fmt(r.category_means.get(&Category::Permission).copied()),
                fmt(r.category_means.get(&Category::Intent).copied()),
                fmt(r.category_delta()),
            ]
        })
        .collect();
    match format {
        Format::Plain => aligned(&["Corpus", "Permissions", "Intents", "Delta (P-I)"], &rows),
        Format::Markdown => markdown(
            &["Corpus", "Permissions", "Intents", "Delta (P-I)"],
            &["---", "---:", "---:", "---:"],
            &rows,
        ),
        Format::Csv => csv_text(&["corpus", "permissions", "intents", "delta"], &rows),
    }
}

/// Whitespace-separated data for gnuplot `with histograms`; missing means are `NaN`.
pub fn render_gnuplot_data(reports: &[AnalysisReport]) -> String {
    let mut out = String::from("# corpus permissions intents\n");
    for r in reports {
        let cell = |c| {
            r.category_means
                .get(&c)
                .map_or_else(|| "NaN".to_string(), |x: &f64| x.to_string())
        };
        let name = r.corpus.name.replace('"', "'");
        let _ = writeln!(
            out,
            "\"{name}\" {} {}",
            cell(Category::Permission),
            cell(Category::Intent)
        );
    }
    out
}
