//! The three fidelity scores and their aggregate.
//!
//! Each score lives in [0, 100]. Code and markdown totals are floats reported
//! to two decimals; the url total is an integer by construction. Detail
//! structs keep full precision in memory so arithmetic invariants hold
//! exactly; rounding happens only when serializing.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::extract::{
    extract_structure, extract_structure_bytes, DocumentStructure, ElementCategory, ExtractError,
};

pub(crate) fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn ser_2dp<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(round2(*v))
}

fn ser_ratios<S: Serializer>(
    m: &BTreeMap<ElementCategory, f64>,
    s: S,
) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut map = s.serialize_map(Some(m.len()))?;
    for (k, v) in m {
        map.serialize_entry(k.key(), &round2(*v))?;
    }
    map.end()
}

/// Code preservation: 50 points for the block-count ratio, 50 for content.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeScoreDetail {
    pub n_orig: usize,
    pub n_trans: usize,
    /// min/max of the block counts; 1.0 when both documents have none.
    #[serde(serialize_with = "ser_2dp")]
    pub r_count: f64,
    #[serde(serialize_with = "ser_2dp")]
    pub count_points: f64,
    /// True when every normalized original block also occurs in the
    /// translation (multiset containment, order-independent; vacuously true
    /// without original blocks).
    pub content_preserved: bool,
    #[serde(serialize_with = "ser_2dp")]
    pub content_points: f64,
    #[serde(serialize_with = "ser_2dp")]
    pub total: f64,
}

/// URL preservation: 70 points prorated over original URLs kept, 30 point
/// bonus melting away with extra URLs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UrlScoreDetail {
    pub preserved: BTreeSet<String>,
    pub missing: BTreeSet<String>,
    pub extra: BTreeSet<String>,
    pub n_preserved: usize,
    pub n_missing: usize,
    pub n_extra: usize,
    /// Number of distinct URLs in the original (`n_preserved + n_missing`).
    pub n_orig_url: usize,
    #[serde(serialize_with = "ser_2dp")]
    pub preserve_points: f64,
    #[serde(serialize_with = "ser_2dp")]
    pub extra_penalty: f64,
    #[serde(serialize_with = "ser_2dp")]
    pub extra_points: f64,
    /// Rounded half-up, then clamped to [0, 100].
    pub total: u32,
}

/// Markdown preservation: mean of seven per-category count ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkdownScoreDetail {
    #[serde(serialize_with = "ser_ratios")]
    pub per_category_ratios: BTreeMap<ElementCategory, f64>,
    #[serde(serialize_with = "ser_2dp")]
    pub total: f64,
}

/// The full scorecard for one original/translation pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub code: CodeScoreDetail,
    pub url: UrlScoreDetail,
    pub markdown: MarkdownScoreDetail,
    /// Unweighted mean of the three totals.
    #[serde(serialize_with = "ser_2dp")]
    pub aggregate: f64,
}

impl FidelityReport {
    /// JSON with alphabetically sorted keys and floats rounded to two
    /// decimals; stable across runs for identical inputs.
    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DocSide {
    Original,
    Translation,
}

impl fmt::Display for DocSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DocSide::Original => write!(f, "original"),
            DocSide::Translation => write!(f, "translation"),
        }
    }
}

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("failed to decode {side} document: {source}")]
    Decode {
        side: DocSide,
        #[source]
        source: ExtractError,
    },
}

/// Scores the code dimension of an extracted pair.
pub fn score_code(orig: &DocumentStructure, trans: &DocumentStructure) -> CodeScoreDetail {
    let n_orig = orig.code_blocks.len();
    let n_trans = trans.code_blocks.len();
    let r_count = if n_orig == 0 && n_trans == 0 {
        1.0
    } else {
        n_orig.min(n_trans) as f64 / n_orig.max(n_trans) as f64
    };
    let count_points = 50.0 * r_count;

    let content_preserved = normalized_blocks_contained(orig, trans);
    let content_points = if content_preserved { 50.0 } else { 0.0 };

    CodeScoreDetail {
        n_orig,
        n_trans,
        r_count,
        count_points,
        content_preserved,
        content_points,
        total: count_points + content_points,
    }
}

/// Multiset containment of normalized original blocks in the translation.
fn normalized_blocks_contained(orig: &DocumentStructure, trans: &DocumentStructure) -> bool {
    let mut available: HashMap<&[String], usize> = HashMap::new();
    for block in &trans.code_blocks {
        *available.entry(block.normalized_lines.as_slice()).or_default() += 1;
    }
    for block in &orig.code_blocks {
        match available.get_mut(block.normalized_lines.as_slice()) {
            Some(n) if *n > 0 => *n -= 1,
            _ => return false,
        }
    }
    true
}

/// Scores the url dimension of an extracted pair.
pub fn score_url(orig: &DocumentStructure, trans: &DocumentStructure) -> UrlScoreDetail {
    score_url_sets(&orig.urls, &trans.urls)
}

/// Scores two URL sets directly. Exact string equality, case-sensitive.
pub fn score_url_sets(orig: &BTreeSet<String>, trans: &BTreeSet<String>) -> UrlScoreDetail {
    let preserved: BTreeSet<String> = orig.intersection(trans).cloned().collect();
    let missing: BTreeSet<String> = orig.difference(trans).cloned().collect();
    let extra: BTreeSet<String> = trans.difference(orig).cloned().collect();
    let n_preserved = preserved.len();
    let n_missing = missing.len();
    let n_extra = extra.len();
    let n_orig_url = n_preserved + n_missing;

    let (preserve_points, extra_penalty) = if n_orig_url == 0 {
        // No original URLs: vacuously preserved, extras go unpunished.
        (70.0, 0.0)
    } else {
        let n = n_orig_url as f64;
        (
            70.0 * n_preserved as f64 / n,
            (30.0 * n_extra as f64 / n).min(30.0),
        )
    };
    let extra_points = 30.0 - extra_penalty;
    let total = round_half_up(preserve_points + extra_points).clamp(0.0, 100.0) as u32;

    UrlScoreDetail {
        preserved,
        missing,
        extra,
        n_preserved,
        n_missing,
        n_extra,
        n_orig_url,
        preserve_points,
        extra_penalty,
        extra_points,
        total,
    }
}

fn round_half_up(x: f64) -> f64 {
    (x + 0.5).floor()
}

/// Scores the markdown dimension of an extracted pair.
pub fn score_markdown(orig: &DocumentStructure, trans: &DocumentStructure) -> MarkdownScoreDetail {
    let mut ratios = BTreeMap::new();
    let mut sum = 0.0;
    for category in ElementCategory::ALL {
        let o = orig.element_counts.get(category);
        let t = trans.element_counts.get(category);
        let r = if o == 0 && t == 0 {
            1.0
        } else {
            o.min(t) as f64 / o.max(t) as f64
        };
        ratios.insert(category, r);
        sum += r;
    }
    MarkdownScoreDetail {
        per_category_ratios: ratios,
        total: sum / 7.0 * 100.0,
    }
}

/// Scores a pair of already-extracted structures.
pub fn score_structures(orig: &DocumentStructure, trans: &DocumentStructure) -> FidelityReport {
    let code = score_code(orig, trans);
    let url = score_url(orig, trans);
    let markdown = score_markdown(orig, trans);
    let aggregate = (code.total + f64::from(url.total) + markdown.total) / 3.0;
    FidelityReport {
        code,
        url,
        markdown,
        aggregate,
    }
}

/// Extracts and scores a pair of documents.
pub fn score_pair(orig_text: &str, trans_text: &str) -> FidelityReport {
    score_structures(&extract_structure(orig_text), &extract_structure(trans_text))
}

/// Byte-level entry point; decoding failures name the offending side.
pub fn score_pair_bytes(orig: &[u8], trans: &[u8]) -> Result<FidelityReport, ScoreError> {
    let orig = extract_structure_bytes(orig).map_err(|source| ScoreError::Decode {
        side: DocSide::Original,
        source,
    })?;
    let trans = extract_structure_bytes(trans).map_err(|source| ScoreError::Decode {
        side: DocSide::Translation,
        source,
    })?;
    Ok(score_structures(&orig, &trans))
}
