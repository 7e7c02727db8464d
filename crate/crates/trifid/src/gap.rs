//! Maintenance-gap measurement: how much the English README moved after a
//! translation landed, counted from git history.

use std::path::Path;
use std::process::Command;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SECONDS_PER_DAY: i64 = 86_400;

#[derive(Debug, Error)]
pub enum GapError {
    #[error("git {args:?} in {repo}: {message}")]
    Git {
        repo: String,
        args: Vec<String>,
        message: String,
    },
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot interpret '{0}' as an ISO date or resolve it as a git ref")]
    BadRef(String),
    #[error("unexpected timestamp '{0}' from git")]
    BadTimestamp(String),
}

/// What a filename in a repository root is, README-wise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "lang")]
pub enum ReadmeKind {
    English,
    /// Normalized tag, lowercase with `-` separators (e.g. "es", "zh-cn").
    Translation(String),
}

/// Classifies a filename as the English README, a translated README, or
/// neither. Matching is case-insensitive: `README.md` is English;
/// `README<sep><tag>.md` with sep one of `.`/`-`/`_` and tag a two-letter
/// language code optionally followed by `-`/`_` and a region is a
/// translation.
pub fn classify_readme(filename: &str) -> Option<ReadmeKind> {
    let lower = filename.to_lowercase();
    let stem = lower.strip_suffix(".md")?;
    if stem == "readme" {
        return Some(ReadmeKind::English);
    }
    let rest = stem.strip_prefix("readme")?;
    let mut chars = rest.chars();
    if !matches!(chars.next(), Some('.') | Some('-') | Some('_')) {
        return None;
    }
    let tag = chars.as_str();
    let (lang, region) = match tag.split_once(['-', '_']) {
        Some((l, r)) => (l, Some(r)),
        None => (tag, None),
    };
    if lang.len() != 2 || !lang.chars().all(|c| c.is_ascii_alphabetic()) {
        return None;
    }
    if let Some(region) = region {
        let ok = (2..=8).contains(&region.len())
            && region.chars().all(|c| c.is_ascii_alphanumeric());
        if !ok {
            return None;
        }
        Some(ReadmeKind::Translation(format!("{lang}-{region}")))
    } else {
        Some(ReadmeKind::Translation(lang.to_string()))
    }
}

fn git(repo: &Path, args: &[&str]) -> Result<String, GapError> {
    let output = Command::new("git")
        .arg("-C")
        .arg(repo)
        .args(args)
        .output()
        .map_err(|e| GapError::Git {
            repo: repo.display().to_string(),
            args: args.iter().map(|s| s.to_string()).collect(),
            message: e.to_string(),
        })?;
    if !output.status.success() {
        return Err(GapError::Git {
            repo: repo.display().to_string(),
            args: args.iter().map(|s| s.to_string()).collect(),
            message: String::from_utf8_lossy(&output.stderr).trim().to_string(),
        });
    }
    Ok(String::from_utf8_lossy(&output.stdout).into_owned())
}

/// Counts commits touching `file` with committer time strictly after
/// `start_unix` and at most `start_unix + days * 86400`. Renames are
/// followed. A file with no history at all logs a warning and counts 0.
pub fn commits_in_window(
    repo: &Path,
    file: &str,
    start_unix: i64,
    days: u64,
) -> Result<u64, GapError> {
    let stdout = git(repo, &["log", "--follow", "--format=%ct", "--", file])?;
    if stdout.trim().is_empty() {
        log::warn!(
            "{} has no commits in {}; treating as 0",
            file,
            repo.display()
        );
        return Ok(0);
    }
    let end = start_unix + days as i64 * SECONDS_PER_DAY;
    let mut count = 0;
    for line in stdout.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let t: i64 = line
            .parse()
            .map_err(|_| GapError::BadTimestamp(line.to_string()))?;
        if t > start_unix && t <= end {
            count += 1;
        }
    }
    Ok(count)
}

/// Resolves a window anchor to unix seconds: an RFC 3339 timestamp, a bare
/// ISO date (midnight UTC), or failing those, a git ref whose committer
/// time is used.
pub fn resolve_merge_ref(repo: &Path, reference: &str) -> Result<i64, GapError> {
    if let Ok(t) = reference.parse::<DateTime<Utc>>() {
        return Ok(t.timestamp());
    }
    if let Ok(d) = NaiveDate::parse_from_str(reference, "%Y-%m-%d") {
        return Ok(d.and_hms_opt(0, 0, 0).unwrap().and_utc().timestamp());
    }
    let stdout = git(repo, &["show", "-s", "--format=%ct", reference])
        .map_err(|_| GapError::BadRef(reference.to_string()))?;
    stdout
        .trim()
        .lines()
        .last()
        .unwrap_or("")
        .trim()
        .parse()
        .map_err(|_| GapError::BadTimestamp(stdout.trim().to_string()))
}

/// Post-merge commit activity for one translated README.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileGap {
    pub translation_file: String,
    pub lang: String,
    pub english_file: Option<String>,
    /// Unix seconds; commits strictly after this count.
    pub window_start: i64,
    pub window_days: u64,
    pub translation_commits: u64,
    /// None when there is no English sibling to compare against.
    pub english_commits: Option<u64>,
    /// english_commits - translation_commits; None when incomparable.
    pub lag: Option<i64>,
}

impl FileGap {
    pub fn incomparable(&self) -> bool {
        self.english_commits.is_none()
    }
}

/// Scans the repository root for translated READMEs and measures, for each,
/// how many commits the translation and its English sibling received in the
/// window after `merge_ref`.
pub fn gap_report(
    repo: &Path,
    merge_ref: &str,
    window_days: u64,
) -> Result<Vec<FileGap>, GapError> {
    let start = resolve_merge_ref(repo, merge_ref)?;
    let mut english: Option<String> = None;
    let mut translations: Vec<(String, String)> = Vec::new();
    let entries = std::fs::read_dir(repo).map_err(|e| GapError::Io {
        path: repo.display().to_string(),
        source: e,
    })?;
    for entry in entries {
        let entry = entry.map_err(|e| GapError::Io {
            path: repo.display().to_string(),
            source: e,
        })?;
        let name = entry.file_name().to_string_lossy().into_owned();
        match classify_readme(&name) {
            Some(ReadmeKind::English) => english = Some(name),
            Some(ReadmeKind::Translation(lang)) => translations.push((name, lang)),
            None => {}
        }
    }
    translations.sort();

    let english_commits = match &english {
        Some(file) => Some(commits_in_window(repo, file, start, window_days)?),
        None => None,
    };
    let mut gaps = Vec::new();
    for (file, lang) in translations {
        let translation_commits = commits_in_window(repo, &file, start, window_days)?;
        gaps.push(FileGap {
            translation_file: file,
            lang,
            english_file: english.clone(),
            window_start: start,
            window_days,
            translation_commits,
            english_commits,
            lag: english_commits.map(|e| e as i64 - translation_commits as i64),
        });
    }
    Ok(gaps)
}

/// Distribution summary over comparable lag values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSummary {
    pub n: usize,
    pub n_incomparable: usize,
    /// Midpoint average for even-length inputs.
    pub median: f64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

/// Summarizes lag values; `n_incomparable` is carried through for
/// reporting. Returns None when no comparable values exist.
pub fn summarize_gaps(values: &[f64], n_incomparable: usize) -> Option<GapSummary> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(GapSummary {
        n: sorted.len(),
        n_incomparable,
        median: crate::mine::median_of_sorted(&sorted),
        mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
        min: sorted[0],
        max: sorted[sorted.len() - 1],
    })
}

/// Convenience over a batch of per-file gaps, skipping incomparable ones.
pub fn summarize_file_gaps(gaps: &[FileGap]) -> Option<GapSummary> {
    let values: Vec<f64> = gaps.iter().filter_map(|g| g.lag).map(|l| l as f64).collect();
    let incomparable = gaps.iter().filter(|g| g.incomparable()).count();
    summarize_gaps(&values, incomparable)
}

/// Empirical survival curve as CSV: for each distinct lag, the share of
/// entries with lag >= that value.
pub fn survival_csv(values: &[f64]) -> String {
    let mut out = String::from("lag,share_ge\n");
    if values.is_empty() {
        return out;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        let share = (sorted.len() - i) as f64 / n;
        out.push_str(&format!("{v},{share}\n"));
        while i < sorted.len() && sorted[i] == v {
            i += 1;
        }
    }
    out
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn run(dir: &Path, args: &[&str], envs: &[(&str, String)]) {
        let mut cmd = Command::new(args[0]);
        cmd.args(&args[1..]).current_dir(dir);
        for (k, v) in envs {
            cmd.env(k, v);
        }
        let out = cmd.output().expect("spawn");
        assert!(
            out.status.success(),
            "{args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }

    pub(crate) fn init_repo(dir: &Path) {
        run(dir, &["git", "init", "-q"], &[]);
        run(dir, &["git", "config", "user.name", "t"], &[]);
        run(dir, &["git", "config", "user.email", "t@example.com"], &[]);
        run(dir, &["git", "config", "commit.gpgsign", "false"], &[]);
    }

    pub(crate) fn commit_file(dir: &Path, name: &str, content: &str, unix: i64) {
        std::fs::write(dir.join(name), content).unwrap();
        run(dir, &["git", "add", name], &[]);
        let stamp = format!("{unix} +0000");
        run(
            dir,
            &["git", "commit", "-q", "-m", &format!("update {name}")],
            &[
                ("GIT_AUTHOR_DATE", stamp.clone()),
                ("GIT_COMMITTER_DATE", stamp),
            ],
        );
    }

    #[test]
    fn classify_readme_cases() {
        assert_eq!(classify_readme("README.md"), Some(ReadmeKind::English));
        assert_eq!(classify_readme("readme.MD"), Some(ReadmeKind::English));
        assert_eq!(
            classify_readme("README.es.md"),
            Some(ReadmeKind::Translation("es".into()))
        );
        assert_eq!(
            classify_readme("README_zh-CN.md"),
            Some(ReadmeKind::Translation("zh-cn".into()))
        );
        assert_eq!(
            classify_readme("README-pt_BR.md"),
            Some(ReadmeKind::Translation("pt-br".into()))
        );
        assert_eq!(classify_readme("README.txt"), None);
        assert_eq!(classify_readme("READMEES.md"), None);
        assert_eq!(classify_readme("NOTES.md"), None);
        assert_eq!(classify_readme("README.espanol.md"), None);
        assert_eq!(classify_readme("README..md"), None);
        assert_eq!(classify_readme("README.e.md"), None);
        assert_eq!(classify_readme("README.de5.md"), None);
        assert_eq!(classify_readme("CONTRIBUTING.md"), None);
    }

    #[test]
    fn window_has_strict_lower_bound() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path();
        init_repo(dir);
        let start = 1_700_000_000;
        commit_file(dir, "README.md", "v0", start);
        commit_file(dir, "README.md", "v1", start + 10);
        commit_file(dir, "README.md", "v2", start + 20);
        commit_file(dir, "README.md", "v3", start + 200 * SECONDS_PER_DAY);
        // The commit exactly at the window start is excluded; the one past
        // the 180-day end is too.
        let n = commits_in_window(dir, "README.md", start, 180).unwrap();
        assert_eq!(n, 2);
        // Zero-day window is empty under the strict lower bound.
        let n = commits_in_window(dir, "README.md", start + 10, 0).unwrap();
        assert_eq!(n, 0);
        // End bound is inclusive: a one-day window ending exactly on the
        // start+20 commit counts it, one second earlier does not.
        let before = commits_in_window(dir, "README.md", start + 19 - SECONDS_PER_DAY, 1).unwrap();
        let at_end = commits_in_window(dir, "README.md", start + 20 - SECONDS_PER_DAY, 1).unwrap();
        assert_eq!(before, 2);
        assert_eq!(at_end, 3);
    }

    #[test]
    fn missing_history_counts_zero() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path();
        init_repo(dir);
        commit_file(dir, "README.md", "v0", 1_700_000_000);
        let n = commits_in_window(dir, "README.fr.md", 1_600_000_000, 365).unwrap();
        assert_eq!(n, 0);
    }

    #[test]
    fn follow_tracks_renames() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path();
        init_repo(dir);
        let start = 1_700_000_000;
        commit_file(dir, "README.markdown", "original body with enough text to match", start + 5);
        run(dir, &["git", "mv", "README.markdown", "README.md"], &[]);
        let stamp = format!("{} +0000", start + 15);
        run(
            dir,
            &["git", "commit", "-q", "-m", "rename"],
            &[
                ("GIT_AUTHOR_DATE", stamp.clone()),
                ("GIT_COMMITTER_DATE", stamp),
            ],
        );
        let n = commits_in_window(dir, "README.md", start, 30).unwrap();
        assert_eq!(n, 2);
    }

    #[test]
    fn resolve_ref_dates_and_commits() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path();
        init_repo(dir);
        commit_file(dir, "README.md", "v0", 1_700_000_123);
        assert_eq!(
            resolve_merge_ref(dir, "2023-05-01").unwrap(),
            1_682_899_200
        );
        assert_eq!(
            resolve_merge_ref(dir, "2023-05-01T12:30:00Z").unwrap(),
            1_682_944_200
        );
        assert_eq!(resolve_merge_ref(dir, "HEAD").unwrap(), 1_700_000_123);
        assert!(resolve_merge_ref(dir, "no-such-ref").is_err());
    }

    #[test]
    fn report_counts_english_drift() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path();
        init_repo(dir);
        let start = 1_700_000_000;
        commit_file(dir, "README.md", "v0", start - 100);
        commit_file(dir, "README.de.md", "hallo", start);
        for i in 1..=5 {
            commit_file(dir, "README.md", &format!("v{i}"), start + i * 1000);
        }
        let gaps = gap_report(dir, &start.to_string(), 180).unwrap_err();
        // A bare unix number is not an accepted anchor; use a date form.
        assert!(matches!(gaps, GapError::BadRef(_)));

        let anchor = chrono::DateTime::from_timestamp(start, 0).unwrap().to_rfc3339();
        let gaps = gap_report(dir, &anchor, 180).unwrap();
        assert_eq!(gaps.len(), 1);
        let g = &gaps[0];
        assert_eq!(g.translation_file, "README.de.md");
        assert_eq!(g.lang, "de");
        assert_eq!(g.english_file.as_deref(), Some("README.md"));
        assert_eq!(g.translation_commits, 0);
        assert_eq!(g.english_commits, Some(5));
        assert_eq!(g.lag, Some(5));
        assert!(!g.incomparable());
    }

    #[test]
    fn report_flags_missing_english() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path();
        init_repo(dir);
        commit_file(dir, "README.ja.md", "konnichiwa", 1_700_000_000);
        let gaps = gap_report(dir, "2023-11-01", 90).unwrap();
        assert_eq!(gaps.len(), 1);
        assert!(gaps[0].incomparable());
        assert_eq!(gaps[0].english_commits, None);
        assert_eq!(gaps[0].lag, None);
        assert!(summarize_file_gaps(&gaps).is_none());
    }

    #[test]
    fn summary_median_is_midpoint() {
        let s = summarize_gaps(&[2.0, 8.0, 166.0, 9.0], 1).unwrap();
        assert_eq!(s.median, 8.5);
        assert_eq!(s.mean, 46.25);
        assert_eq!(s.max, 166.0);
        assert_eq!(s.min, 2.0);
        assert_eq!(s.n, 4);
        assert_eq!(s.n_incomparable, 1);
        assert!(summarize_gaps(&[], 0).is_none());
    }

    #[test]
    fn survival_curve_shares() {
        let csv = survival_csv(&[1.0, 1.0, 3.0, 10.0]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "lag,share_ge");
        assert_eq!(lines[1], "1,1");
        assert_eq!(lines[2], "3,0.5");
        assert_eq!(lines[3], "10,0.25");
    }
}
