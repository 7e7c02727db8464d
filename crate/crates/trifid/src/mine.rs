//! Offline mining of repository activity exports: scale bucketing, the
//! translation-title filter, seasonality and adoption statistics.

use std::collections::BTreeMap;
use std::io::BufRead;

use chrono::{DateTime, Datelike, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    PullRequest,
    Issue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordState {
    Merged,
    Closed,
    Open,
}

/// One pull request or issue from a repository activity export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityRecord {
    pub repo: String,
    pub stars: u64,
    pub forks: u64,
    pub kind: RecordKind,
    pub title: String,
    pub state: RecordState,
    pub created_at: DateTime<Utc>,
    #[serde(default)]
    pub merged_at: Option<DateTime<Utc>>,
}

/// Star-count buckets. Classification keys on stars alone; forks ride along
/// in the records for auditability only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleBucket {
    Small,
    Medium,
    Large,
}

impl ScaleBucket {
    pub fn label(self) -> &'static str {
        match self {
            ScaleBucket::Small => "small",
            ScaleBucket::Medium => "medium",
            ScaleBucket::Large => "large",
        }
    }
}

#[derive(Debug, Error)]
pub enum MineError {
    #[error("reading records: {0}")]
    Io(#[from] std::io::Error),
    #[error("record on line {line}: {message}")]
    BadRecord { line: usize, message: String },
}

/// Buckets a repository by stars. Below 100 stars is out of band: `None`,
/// flagged by callers and excluded from bucketed statistics.
pub fn classify_scale(stars: u64, _forks: u64) -> Option<ScaleBucket> {
    match stars {
        0..=99 => None,
        100..=4999 => Some(ScaleBucket::Small),
        5000..=10000 => Some(ScaleBucket::Medium),
        _ => Some(ScaleBucket::Large),
    }
}

/// Keeps records whose title contains "translate readme", case-insensitively
/// and with runs of whitespace collapsed.
pub fn filter_translation_records(records: &[ActivityRecord]) -> Vec<ActivityRecord> {
    records
        .iter()
        .filter(|r| {
            let squeezed = r
                .title
                .split_whitespace()
                .collect::<Vec<_>>()
                .join(" ")
                .to_lowercase();
            squeezed.contains("translate readme")
        })
        .cloned()
        .collect()
}

/// Reads JSON-lines activity records. Blank lines are skipped; malformed
/// lines and records violating `merged_at iff merged` fail with the line
/// number.
pub fn read_records<R: BufRead>(reader: R) -> Result<Vec<ActivityRecord>, MineError> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ActivityRecord =
            serde_json::from_str(&line).map_err(|e| MineError::BadRecord {
                line: i + 1,
                message: e.to_string(),
            })?;
        let merged = record.state == RecordState::Merged;
        if merged != record.merged_at.is_some() {
            return Err(MineError::BadRecord {
                line: i + 1,
                message: format!(
                    "state is {:?} but merged_at is {}",
                    record.state,
                    if record.merged_at.is_some() {
                        "set"
                    } else {
                        "missing"
                    }
                ),
            });
        }
        records.push(record);
    }
    Ok(records)
}

/// Share of pull requests per calendar month, pooled across years.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthlyHistogram {
    pub pr_count: u64,
    /// True when there were no PRs at all; `shares` is then empty.
    pub no_data: bool,
    /// Keys "01" through "12" (always all twelve when data exists); values
    /// sum to 1 within 1e-9.
    pub shares: BTreeMap<String, f64>,
}

impl MonthlyHistogram {
    /// Share for a 1-based month number, 0.0 when empty.
    pub fn share(&self, month: u32) -> f64 {
        self.shares
            .get(&format!("{month:02}"))
            .copied()
            .unwrap_or(0.0)
    }
}

/// Counts pull requests per calendar month of `created_at` (UTC), pooled
/// across years. Issue records are ignored.
pub fn monthly_histogram(records: &[ActivityRecord]) -> MonthlyHistogram {
    let mut counts = [0u64; 12];
    for record in records {
        if record.kind == RecordKind::PullRequest {
            counts[record.created_at.month0() as usize] += 1;
        }
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return MonthlyHistogram {
            pr_count: 0,
            no_data: true,
            shares: BTreeMap::new(),
        };
    }
    let shares = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| (format!("{:02}", i + 1), c as f64 / total as f64))
        .collect();
    MonthlyHistogram {
        pr_count: total,
        no_data: false,
        shares,
    }
}

/// Merge rate bookkeeping for one repository.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepoAdoption {
    pub merged: u64,
    pub closed: u64,
    /// merged / (merged + closed).
    pub rate: f64,
}

/// Corpus-wide adoption statistics over terminal (merged or closed) pull
/// requests. Open PRs never count; repositories with PR records but no
/// terminal ones are excluded from the rates and listed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdoptionStats {
    pub n_merged: u64,
    pub n_closed: u64,
    /// merged / (merged + closed) over the whole corpus.
    pub overall_merge_share: f64,
    pub per_repo: BTreeMap<String, RepoAdoption>,
    pub mean_rate: f64,
    /// Even-length median is the midpoint average.
    pub median_rate: f64,
    /// Repositories with rate >= 0.80.
    pub repos_high: u64,
    /// Repositories with rate <= 0.20.
    pub repos_low: u64,
    pub excluded_repos: Vec<String>,
}

/// Computes adoption statistics. Returns `None` when no repository has a
/// terminal pull request.
pub fn adoption_stats(records: &[ActivityRecord]) -> Option<AdoptionStats> {
    use std::collections::BTreeSet;

    let mut terminal: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    let mut repos_with_prs: BTreeSet<&str> = BTreeSet::new();
    for record in records {
        if record.kind != RecordKind::PullRequest {
            continue;
        }
        repos_with_prs.insert(&record.repo);
        match record.state {
            RecordState::Merged => terminal.entry(&record.repo).or_default().0 += 1,
            RecordState::Closed => terminal.entry(&record.repo).or_default().1 += 1,
            RecordState::Open => {}
        }
    }
    if terminal.is_empty() {
        return None;
    }

    let mut per_repo = BTreeMap::new();
    let mut rates = Vec::new();
    let mut n_merged = 0;
    let mut n_closed = 0;
    for (repo, (merged, closed)) in &terminal {
        let rate = *merged as f64 / (merged + closed) as f64;
        per_repo.insert(
            repo.to_string(),
            RepoAdoption {
                merged: *merged,
                closed: *closed,
                rate,
            },
        );
        rates.push(rate);
        n_merged += merged;
        n_closed += closed;
    }
    rates.sort_by(f64::total_cmp);

    let excluded_repos = repos_with_prs
        .iter()
        .filter(|r| !terminal.contains_key(**r))
        .map(|r| r.to_string())
        .collect();

    Some(AdoptionStats {
        n_merged,
        n_closed,
        overall_merge_share: n_merged as f64 / (n_merged + n_closed) as f64,
        mean_rate: rates.iter().sum::<f64>() / rates.len() as f64,
        median_rate: median_of_sorted(&rates),
        repos_high: per_repo.values().filter(|a| a.rate >= 0.80).count() as u64,
        repos_low: per_repo.values().filter(|a| a.rate <= 0.20).count() as u64,
        per_repo,
        excluded_repos,
    })
}

pub(crate) fn median_of_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Per-bucket tallies: distinct repositories, PRs and issues.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleRow {
    pub repos: u64,
    pub prs: u64,
    pub issues: u64,
}

/// Scale table over all records, with the below-100-stars out-of-band tail
/// tallied separately.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleSummary {
    pub large: ScaleRow,
    pub medium: ScaleRow,
    pub small: ScaleRow,
    pub out_of_band: ScaleRow,
}

pub fn scale_summary(records: &[ActivityRecord]) -> ScaleSummary {
    use std::collections::BTreeSet;
    let mut seen: BTreeMap<Option<ScaleBucket>, BTreeSet<&str>> = BTreeMap::new();
    let mut summary = ScaleSummary::default();
    for record in records {
        let bucket = classify_scale(record.stars, record.forks);
        let row = match bucket {
            Some(ScaleBucket::Large) => &mut summary.large,
            Some(ScaleBucket::Medium) => &mut summary.medium,
            Some(ScaleBucket::Small) => &mut summary.small,
            None => &mut summary.out_of_band,
        };
        match record.kind {
            RecordKind::PullRequest => row.prs += 1,
            RecordKind::Issue => row.issues += 1,
        }
        seen.entry(bucket).or_default().insert(&record.repo);
    }
    for (bucket, repos) in seen {
        let row = match bucket {
            Some(ScaleBucket::Large) => &mut summary.large,
            Some(ScaleBucket::Medium) => &mut summary.medium,
            Some(ScaleBucket::Small) => &mut summary.small,
            None => &mut summary.out_of_band,
        };
        row.repos = repos.len() as u64;
    }
    summary
}

/// CSV matching the layout scale,repos,prs,issues.
pub fn scale_csv(summary: &ScaleSummary) -> String {
    let mut out = String::from("scale,repos,prs,issues\n");
    for (label, row) in [
        ("large", &summary.large),
        ("medium", &summary.medium),
        ("small", &summary.small),
        ("out_of_band", &summary.out_of_band),
    ] {
        out.push_str(&format!(
            "{label},{},{},{}\n",
            row.repos, row.prs, row.issues
        ));
    }
    out
}

/// CSV with one metric,value row per adoption statistic.
pub fn adoption_csv(stats: &AdoptionStats) -> String {
    let mut out = String::from("metric,value\n");
    out.push_str(&format!("mean_rate,{}\n", stats.mean_rate));
    out.push_str(&format!("median_rate,{}\n", stats.median_rate));
    out.push_str(&format!("repos_rate_ge_80,{}\n", stats.repos_high));
    out.push_str(&format!("repos_rate_le_20,{}\n", stats.repos_low));
    out.push_str(&format!("n_merged,{}\n", stats.n_merged));
    out.push_str(&format!("n_closed,{}\n", stats.n_closed));
    out.push_str(&format!(
        "overall_merge_share,{}\n",
        stats.overall_merge_share
    ));
    out
}
