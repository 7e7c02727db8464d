//! Corpus-level scoring: pairing, batch runs, summary statistics and the
//! size/score rank correlation.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::score::{score_pair_bytes, FidelityReport};

/// One original/translation pairing to be scored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairSpec {
    pub pair_id: String,
    pub orig_path: PathBuf,
    pub trans_path: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryStatus {
    Ok,
    Failed,
}

/// Outcome for one pair: either a report or a failure reason.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub pair_id: String,
    pub orig_path: String,
    pub trans_path: String,
    pub status: EntryStatus,
    /// Byte size of the original document, when readable.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub byte_size: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<FidelityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn ser_2dp<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(crate::score::round2(*v))
}

/// Aggregate statistics over the successfully scored pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusSummary {
    /// Successfully scored pairs; failures are excluded from every mean.
    pub n_pairs: usize,
    pub n_failed: usize,
    #[serde(serialize_with = "ser_2dp")]
    pub mean_code: f64,
    #[serde(serialize_with = "ser_2dp")]
    pub mean_url: f64,
    #[serde(serialize_with = "ser_2dp")]
    pub mean_markdown: f64,
    /// Mean of the per-file aggregates.
    #[serde(serialize_with = "ser_2dp")]
    pub mean_aggregate: f64,
    /// Mean of the three metric means; equals `mean_aggregate` up to float
    /// association, exposed so both averaging orders are on record.
    #[serde(serialize_with = "ser_2dp")]
    pub aggregate_of_means: f64,
    /// Rank correlation between original byte size and each metric. `None`
    /// when undefined (fewer than 3 pairs, or a constant rank vector).
    pub spearman: BTreeMap<String, Option<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusResult {
    pub summary: CorpusSummary,
    pub entries: Vec<CorpusEntry>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus is empty: no pairs to score")]
    Empty,
    #[error("all {0} pairs failed to score")]
    AllFailed(usize),
    #[error("cannot read manifest {path}: {source}")]
    ManifestRead {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest {path}: {message}")]
    ManifestFormat { path: PathBuf, message: String },
    #[error("cannot list directory {path}: {source}")]
    DirRead {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SpearmanError {
    #[error("input lengths differ: {x} vs {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("need at least 3 data points, got {0}")]
    TooFewPoints(usize),
    #[error("correlation undefined: rank variance is zero")]
    Undefined,
}

/// Spearman rank correlation with average ranks for ties. A constant input
/// has zero rank variance and yields [`SpearmanError::Undefined`], which is
/// deliberately distinct from a correlation of 0.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, SpearmanError> {
    if x.len() != y.len() {
        return Err(SpearmanError::LengthMismatch {
            x: x.len(),
            y: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(SpearmanError::TooFewPoints(x.len()));
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);

    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        let dx = a - mx;
        let dy = b - my;
        cov += dx * dy;
        vx += dx * dx;
        vy += dy * dy;
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(SpearmanError::Undefined);
    }
    Ok(cov / (vx * vy).sqrt())
}

/// 1-based ranks; tied values share the mean of the ranks they occupy.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // Positions i..=j hold ranks i+1..=j+1; every tie gets the mean.
        let rank = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Reads a pairing manifest. CSV needs `orig` and `trans` columns plus an
/// optional `pair_id`; JSON is an array of objects with the same fields.
/// Relative paths are resolved against the manifest's directory.
pub fn load_manifest(path: &Path) -> Result<Vec<PairSpec>, CorpusError> {
    let raw = fs::read_to_string(path).map_err(|source| CorpusError::ManifestRead {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let format_err = |message: String| CorpusError::ManifestFormat {
        path: path.to_path_buf(),
        message,
    };

    #[derive(Deserialize)]
    struct Row {
        orig: String,
        trans: String,
        #[serde(default, alias = "id")]
        pair_id: Option<String>,
    }

    let rows: Vec<Row> = match path.extension().and_then(|e| e.to_str()) {
        Some("json") => serde_json::from_str(&raw).map_err(|e| format_err(e.to_string()))?,
        Some("csv") => {
            let mut reader = csv::Reader::from_reader(raw.as_bytes());
            reader
                .deserialize()
                .collect::<Result<Vec<Row>, _>>()
                .map_err(|e| format_err(e.to_string()))?
        }
        other => {
            return Err(format_err(format!(
                "unsupported manifest extension {:?} (expected .csv or .json)",
                other.unwrap_or("none")
            )))
        }
    };

    let mut pairs = Vec::with_capacity(rows.len());
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for row in rows {
        let orig_path = base.join(&row.orig);
        let trans_path = base.join(&row.trans);
        let base_id = row.pair_id.unwrap_or_else(|| {
            orig_path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "pair".to_string())
        });
        let n = seen.entry(base_id.clone()).or_insert(0);
        *n += 1;
        let pair_id = if *n == 1 {
            base_id
        } else {
            format!("{base_id}-{n}")
        };
        pairs.push(PairSpec {
            pair_id,
            orig_path,
            trans_path,
        });
    }
    Ok(pairs)
}

/// Pairs `X.md` with `X.<lang>.md` in one directory (non-recursive), sorted
/// by file name for determinism.
pub fn pair_directory(dir: &Path, lang: &str) -> Result<Vec<PairSpec>, CorpusError> {
    let entries = fs::read_dir(dir).map_err(|source| CorpusError::DirRead {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut names: Vec<String> = entries
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_file())
        .filter_map(|e| e.file_name().to_str().map(String::from))
        .collect();
    names.sort();

    let suffix = format!(".{lang}.md");
    let mut pairs = Vec::new();
    for name in &names {
        if !name.ends_with(".md") || name.ends_with(&suffix) {
            continue;
        }
        let stem = &name[..name.len() - 3];
        let translated = format!("{stem}{suffix}");
        if names.binary_search(&translated).is_ok() {
            pairs.push(PairSpec {
                pair_id: stem.to_string(),
                orig_path: dir.join(name),
                trans_path: dir.join(&translated),
            });
        }
    }
    Ok(pairs)
}

/// Scores every pair (in parallel, result order preserved) and summarizes.
/// Individual unreadable pairs become failed entries; the run errors only
/// when there is nothing to score at all.
pub fn run_corpus(pairs: &[PairSpec]) -> Result<CorpusResult, CorpusError> {
    if pairs.is_empty() {
        return Err(CorpusError::Empty);
    }
    let entries: Vec<CorpusEntry> = pairs.par_iter().map(score_one).collect();
    let n_failed = entries
        .iter()
        .filter(|e| e.status == EntryStatus::Failed)
        .count();
    if n_failed == entries.len() {
        return Err(CorpusError::AllFailed(n_failed));
    }
    let summary = summarize(&entries, n_failed);
    Ok(CorpusResult { summary, entries })
}

fn score_one(pair: &PairSpec) -> CorpusEntry {
    let mut entry = CorpusEntry {
        pair_id: pair.pair_id.clone(),
        orig_path: pair.orig_path.display().to_string(),
        trans_path: pair.trans_path.display().to_string(),
        status: EntryStatus::Failed,
        byte_size: None,
        report: None,
        error: None,
    };
    let orig = match fs::read(&pair.orig_path) {
        Ok(bytes) => bytes,
        Err(e) => {
            entry.error = Some(format!("cannot read {}: {e}", entry.orig_path));
            return entry;
        }
    };
    entry.byte_size = Some(orig.len() as u64);
    let trans = match fs::read(&pair.trans_path) {
        Ok(bytes) => bytes,
        Err(e) => {
            entry.error = Some(format!("cannot read {}: {e}", entry.trans_path));
            return entry;
        }
    };
    match score_pair_bytes(&orig, &trans) {
        Ok(report) => {
            entry.status = EntryStatus::Ok;
            entry.report = Some(report);
        }
        Err(e) => entry.error = Some(e.to_string()),
    }
    entry
}

fn summarize(entries: &[CorpusEntry], n_failed: usize) -> CorpusSummary {
    let scored: Vec<(&CorpusEntry, &FidelityReport)> = entries
        .iter()
        .filter_map(|e| e.report.as_ref().map(|r| (e, r)))
        .collect();
    let n = scored.len() as f64;
    let mean_code = scored.iter().map(|(_, r)| r.code.total).sum::<f64>() / n;
    let mean_url = scored
        .iter()
        .map(|(_, r)| f64::from(r.url.total))
        .sum::<f64>()
        / n;
    let mean_markdown = scored.iter().map(|(_, r)| r.markdown.total).sum::<f64>() / n;
    let mean_aggregate = scored.iter().map(|(_, r)| r.aggregate).sum::<f64>() / n;
    let aggregate_of_means = (mean_code + mean_url + mean_markdown) / 3.0;

    let sizes: Vec<f64> = scored
        .iter()
        .map(|(e, _)| e.byte_size.unwrap_or(0) as f64)
        .collect();
    let mut correlations = BTreeMap::new();
    let metrics: [(&str, Vec<f64>); 4] = [
        ("code", scored.iter().map(|(_, r)| r.code.total).collect()),
        (
            "url",
            scored.iter().map(|(_, r)| f64::from(r.url.total)).collect(),
        ),
        (
            "markdown",
            scored.iter().map(|(_, r)| r.markdown.total).collect(),
        ),
        ("aggregate", scored.iter().map(|(_, r)| r.aggregate).collect()),
    ];
    for (name, values) in metrics {
        correlations.insert(name.to_string(), spearman(&sizes, &values).ok());
    }

    CorpusSummary {
        n_pairs: scored.len(),
        n_failed,
        mean_code,
        mean_url,
        mean_markdown,
        mean_aggregate,
        aggregate_of_means,
        spearman: correlations,
    }
}

/// CSV with one `metric,spearman` row per score dimension.
pub fn correlations_csv(summary: &CorpusSummary) -> String {
    let mut out = String::from("metric,spearman\n");
    for metric in ["code", "url", "markdown", "aggregate"] {
        let cell = match summary.spearman.get(metric) {
            Some(Some(v)) => v.to_string(),
            _ => "undefined".to_string(),
        };
        out.push_str(&format!("{metric},{cell}\n"));
    }
    out
}

/// One JSON object per entry, sorted keys, one line each.
pub fn write_entries_jsonl<W: Write>(entries: &[CorpusEntry], mut w: W) -> std::io::Result<()> {
    for entry in entries {
        let value = serde_json::to_value(entry).expect("entry serializes");
        writeln!(w, "{value}")?;
    }
    Ok(())
}
