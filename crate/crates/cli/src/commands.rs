use std::collections::HashMap;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat};
use manifest_ig::cache::{append_cache, read_cache, CacheRecord};
use manifest_ig::report::{render_gnuplot_data, CorpusInfo, Diagnostics};
use manifest_ig::{
    assemble_dataset_with, rank_features, read_report, render_category_comparison,
    render_top_table, sample_balanced, write_report, AnalysisReport, AssembleOptions, ClassLabel,
    LabeledRecord,
};

use crate::error::CliError;
use crate::scan::{scan, Scan};
use crate::{AnalyzeArgs, CompareArgs, CorpusArgs, ExtractArgs, SampleSize};

fn pool(jobs: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {jobs} workers: {e}")))
}

fn roots(corpus: &CorpusArgs, need_both: bool) -> Result<Vec<(PathBuf, ClassLabel)>, CliError> {
    let roots: Vec<_> = [
        (&corpus.malware_dir, ClassLabel::Malware),
        (&corpus.benign_dir, ClassLabel::Benign),
    ]
    .into_iter()
    .filter_map(|(dir, label)| dir.clone().map(|d| (d, label)))
    .collect();
    if roots.is_empty() || (need_both && roots.len() < 2) {
        let which = if need_both { "both" } else { "at least one of" };
        return Err(CliError::Usage(format!(
            "{which} --malware-dir and --benign-dir required"
        )));
    }
    Ok(roots)
}

fn load_cache(
    path: Option<&Path>,
) -> Result<(Vec<CacheRecord>, HashMap<String, CacheRecord>), CliError> {
    let records = match path {
        Some(p) => read_cache(p)?,
        None => Vec::new(),
    };
    let mut by_digest = HashMap::new();
    for r in &records {
        by_digest
            .entry(r.sha256.clone())
            .or_insert_with(|| r.clone());
    }
    Ok((records, by_digest))
}

fn summarize(scan: &Scan) {
    let counts: Vec<String> = scan
        .status_counts()
        .into_iter()
        .map(|(status, n)| format!("{status}={n}"))
        .collect();
    eprintln!(
        "scanned {} files: {} extracted, {} from cache, {} skipped [{}]",
        scan.files.len() + scan.unreadable.len(),
        scan.new_records.len(),
        scan.cache_hits,
        scan.skipped(),
        counts.join(" ")
    );
    for msg in &scan.unreadable {
        eprintln!("warning: {msg}");
    }
}

pub fn extract(args: &ExtractArgs) -> Result<(), CliError> {
    let cache = args
        .corpus
        .cache
        .as_deref()
        .ok_or_else(|| CliError::Usage("extract needs --cache or MANIFEST_IG_CACHE".into()))?;
    let roots = roots(&args.corpus, false)?;
    let (_, cached) = load_cache(Some(cache))?;
    let scan = pool(args.corpus.jobs)?.install(|| scan(&roots, &cached))?;
    append_cache(cache, &scan.new_records)?;
    summarize(&scan);
    Ok(())
}

/// Report timestamp: `SOURCE_DATE_EPOCH` when set, else the epoch itself, so
/// identical inputs give identical bytes.
fn generated_at() -> Result<String, CliError> {
    let secs = match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(v) => v
            .trim()
            .parse::<i64>()
            .map_err(|_| CliError::Usage(format!("SOURCE_DATE_EPOCH `{v}` is not an integer")))?,
        Err(_) => 0,
    };
    let at = DateTime::from_timestamp(secs, 0)
        .ok_or_else(|| CliError::Usage(format!("SOURCE_DATE_EPOCH {secs} out of range")))?;
    Ok(at.to_rfc3339_opts(SecondsFormat::Secs, true))
}

struct Pools {
    malware: Vec<CacheRecord>,
    benign: Vec<CacheRecord>,
    skipped: u64,
    warnings: Vec<String>,
}

impl Pools {
    fn from_labeled<'a>(items: impl Iterator<Item = (ClassLabel, &'a CacheRecord)>) -> Self {
        let mut pools = Pools {
            malware: Vec::new(),
            benign: Vec::new(),
            skipped: 0,
            warnings: Vec::new(),
        };
        for (label, record) in items {
            if !record.is_ok() {
                pools.skipped += 1;
                continue;
            }
            let mut record = record.clone();
            record.label = label;
            match label {
                ClassLabel::Malware => pools.malware.push(record),
                ClassLabel::Benign => pools.benign.push(record),
            }
        }
        // a digest counts once per class however many copies were found
        for pool in [&mut pools.malware, &mut pools.benign] {
            pool.sort_by(|a, b| a.sha256.cmp(&b.sha256));
            pool.dedup_by(|a, b| a.sha256 == b.sha256);
        }
        pools
    }
}

fn gather(args: &AnalyzeArgs) -> Result<Pools, CliError> {
    let cache = args.corpus.cache.as_deref();
    if args.features_from_cache_only {
        if args.corpus.malware_dir.is_some() || args.corpus.benign_dir.is_some() {
            return Err(CliError::Usage(
                "--features-from-cache-only takes labels from the cache; drop --malware-dir/--benign-dir".into(),
            ));
        }
        let cache = cache.ok_or_else(|| {
            CliError::Usage("--features-from-cache-only needs --cache or MANIFEST_IG_CACHE".into())
        })?;
        let (records, _) = load_cache(Some(cache))?;
        eprintln!("loaded {} cache records", records.len());
        return Ok(Pools::from_labeled(records.iter().map(|r| (r.label, r))));
    }

    let roots = roots(&args.corpus, true)?;
    let (_, cached) = load_cache(cache)?;
    let scan = pool(args.corpus.jobs)?.install(|| scan(&roots, &cached))?;
    if let Some(cache) = cache {
        append_cache(cache, &scan.new_records)?;
    }
    summarize(&scan);
    let mut pools = Pools::from_labeled(scan.files.iter().map(|f| (f.label, &f.record)));
    pools.skipped += scan.unreadable.len() as u64;
    for f in &scan.files {
        for w in &f.record.warnings {
            pools.warnings.push(format!("{}: {w}", f.path.display()));
        }
    }
    pools.warnings.extend(scan.unreadable.iter().cloned());
    Ok(pools)
}

pub fn analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let generated_at = generated_at()?;
    let pools = gather(args)?;
    let (malware, benign) = match args.n_per_class {
        SampleSize::All => (pools.malware, pools.benign),
        SampleSize::PerClass(n) => {
            let sample = sample_balanced(&pools.malware, &pools.benign, n, args.seed)?;
            (sample.malware, sample.benign)
        }
    };
    let records: Vec<LabeledRecord> = malware
        .iter()
        .map(|r| r.labeled(ClassLabel::Malware))
        .chain(benign.iter().map(|r| r.labeled(ClassLabel::Benign)))
        .collect();

    let options = AssembleOptions {
        min_support: args.min_support,
        namespace_categories: args.namespace_categories,
        category: args.category.map(Into::into),
    };
    let workers = pool(args.corpus.jobs)?;
    let (dataset, scores) = workers.install(|| -> Result<_, CliError> {
        let dataset = assemble_dataset_with(&records, &options)?;
        let scores = rank_features(&dataset)?;
        Ok((dataset, scores))
    })?;

    let report = AnalysisReport::new(
        CorpusInfo {
            name: args.name.clone(),
            date_range: args.date_range.clone(),
        },
        args.seed,
        dataset.class_counts(),
        dataset.vocabulary().len(),
        args.top as usize,
        scores,
        Diagnostics {
            skipped_files: pools.skipped,
            oov_count: dataset.oov_count() as u64,
            warnings: pools.warnings,
        },
        generated_at,
    );
    if let Some(out) = &args.out {
        write_report(&report, out)?;
    }
    let counts = report.class_counts;
    eprintln!(
        "analyzed {} malware + {} benign apps, {} features",
        counts.malware, counts.benign, report.vocabulary_size
    );
    print!(
        "{}",
        render_top_table(&report, report.top_n, args.format.into())
    );
    Ok(())
}

pub fn compare(args: &CompareArgs) -> Result<(), CliError> {
    let reports = args
        .reports
        .iter()
        .map(|p| read_report(p))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(path) = &args.gnuplot {
        std::fs::write(path, render_gnuplot_data(&reports)).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
    }
    print!(
        "{}",
        render_category_comparison(&reports, args.format.into())
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(sha: &str, status: &str) -> CacheRecord {
        CacheRecord {
            sha256: sha.into(),
            label: ClassLabel::Benign,
            package: String::new(),
            permissions: vec!["p".into()],
            intents: Vec::new(),
            parse_status: status.into(),
            source_path: String::new(),
            warnings: Vec::new(),
        }
    }

    #[test]
    fn pools_relabel_dedup_and_count_failures() {
        let a = record("a", "ok");
        let b = record("b", "ok");
        let bad = record("c", "NotAZip");
        let items = [
            (ClassLabel::Malware, &b),
            (ClassLabel::Malware, &a),
            (ClassLabel::Malware, &b),
            (ClassLabel::Benign, &bad),
        ];
        let pools = Pools::from_labeled(items.into_iter());
        let shas: Vec<_> = pools.malware.iter().map(|r| r.sha256.as_str()).collect();
        assert_eq!(shas, ["a", "b"]);
        assert!(pools.malware.iter().all(|r| r.label == ClassLabel::Malware));
        assert!(pools.benign.is_empty());
        assert_eq!(pools.skipped, 1);
    }

    #[test]
    fn roots_require_directories() {
        let corpus = CorpusArgs {
            malware_dir: Some("m".into()),
            benign_dir: None,
            cache: None,
            jobs: 0,
        };
        assert!(roots(&corpus, false).is_ok());
        assert!(matches!(roots(&corpus, true), Err(CliError::Usage(_))));
    }
}
