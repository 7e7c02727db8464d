//! Python bindings: the scorer, structure extraction, and the small
//! analysis helpers, importable as `trifid_py`.

use std::collections::{BTreeMap, BTreeSet};

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use trifid::corpus::SpearmanError;
use trifid::gap::ReadmeKind;

/// Scorecard for one original/translation pair.
#[pyclass(name = "FidelityReport")]
struct PyFidelityReport {
    #[pyo3(get)]
    code_total: f64,
    #[pyo3(get)]
    url_total: u32,
    #[pyo3(get)]
    markdown_total: f64,
    #[pyo3(get)]
    aggregate: f64,
    #[pyo3(get)]
    code_content_preserved: bool,
    #[pyo3(get)]
    urls_preserved: usize,
    #[pyo3(get)]
    urls_missing: Vec<String>,
    #[pyo3(get)]
    urls_extra: Vec<String>,
    json: String,
}

#[pymethods]
impl PyFidelityReport {
    /// Full report as pretty JSON with sorted keys.
    fn to_json(&self) -> &str {
        &self.json
    }

    fn __repr__(&self) -> String {
        format!(
            "FidelityReport(code={:.2}, url={}, markdown={:.2}, aggregate={:.2})",
            self.code_total, self.url_total, self.markdown_total, self.aggregate
        )
    }
}

impl From<trifid::FidelityReport> for PyFidelityReport {
    fn from(report: trifid::FidelityReport) -> Self {
        let json = serde_json::to_string_pretty(&report.to_json_value())
            .expect("report serializes");
        PyFidelityReport {
            code_total: report.code.total,
            url_total: report.url.total,
            markdown_total: report.markdown.total,
            aggregate: report.aggregate,
            code_content_preserved: report.code.content_preserved,
            urls_preserved: report.url.n_preserved,
            urls_missing: report.url.missing.iter().cloned().collect(),
            urls_extra: report.url.extra.iter().cloned().collect(),
            json,
        }
    }
}

/// Machine-checkable structure of one Markdown document.
#[pyclass(name = "DocumentStructure")]
struct PyDocumentStructure {
    #[pyo3(get)]
    byte_size: usize,
    #[pyo3(get)]
    urls: Vec<String>,
    #[pyo3(get)]
    code_block_count: usize,
    #[pyo3(get)]
    element_counts: BTreeMap<String, u64>,
}

#[pymethods]
impl PyDocumentStructure {
    fn __repr__(&self) -> String {
        format!(
            "DocumentStructure(bytes={}, code_blocks={}, urls={})",
            self.byte_size,
            self.code_block_count,
            self.urls.len()
        )
    }
}

/// Scores a translated Markdown document against its original.
#[pyfunction]
fn score_pair(orig: &str, trans: &str) -> PyFidelityReport {
    trifid::score::score_pair(orig, trans).into()
}

/// Extracts code blocks, URLs and element counts from one document.
#[pyfunction]
fn extract_structure(text: &str) -> PyDocumentStructure {
    let s = trifid::extract::extract_structure(text);
    PyDocumentStructure {
        byte_size: s.byte_size,
        urls: s.urls.iter().cloned().collect(),
        code_block_count: s.code_blocks.len(),
        element_counts: s
            .element_counts
            .iter()
            .map(|(cat, n)| (cat.key().to_string(), n))
            .collect(),
    }
}

/// Comment-insensitive canonical form of code block lines.
#[pyfunction]
fn normalize_code(lines: Vec<String>) -> Vec<String> {
    trifid::extract::normalize_code(&lines)
}

/// The URL component score for explicit URL sets.
#[pyfunction]
fn url_score(orig: Vec<String>, trans: Vec<String>) -> u32 {
    let orig: BTreeSet<String> = orig.into_iter().collect();
    let trans: BTreeSet<String> = trans.into_iter().collect();
    trifid::score::score_url_sets(&orig, &trans).total
}

/// Renders the translation prompt for a language pair.
///
/// Raises ValueError for unknown codes or identical source and target.
#[pyfunction]
fn build_prompt(source: &str, target: &str) -> PyResult<String> {
    trifid::translate::build_prompt(source, target).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Tie-aware rank correlation. Returns None when either side has no rank
/// variance; raises ValueError for mismatched lengths or fewer than three
/// points.
#[pyfunction]
fn spearman(x: Vec<f64>, y: Vec<f64>) -> PyResult<Option<f64>> {
    match trifid::corpus::spearman(&x, &y) {
        Ok(v) => Ok(Some(v)),
        Err(SpearmanError::Undefined) => Ok(None),
        Err(e) => Err(PyValueError::new_err(e.to_string())),
    }
}

/// Star-count bucket label ("small", "medium", "large"), or None below the
/// 100-star floor.
#[pyfunction]
fn classify_scale(stars: u64, forks: u64) -> Option<&'static str> {
    trifid::mine::classify_scale(stars, forks).map(|b| b.label())
}

/// Classifies a README filename: ("english", None), ("translation", tag),
/// or None for non-README files.
#[pyfunction]
fn classify_readme(filename: &str) -> Option<(String, Option<String>)> {
    match trifid::gap::classify_readme(filename)? {
        ReadmeKind::English => Some(("english".to_string(), None)),
        ReadmeKind::Translation(lang) => Some(("translation".to_string(), Some(lang))),
    }
}

#[pymodule]
fn trifid_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFidelityReport>()?;
    m.add_class::<PyDocumentStructure>()?;
    m.add_function(wrap_pyfunction!(score_pair, m)?)?;
    m.add_function(wrap_pyfunction!(extract_structure, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_code, m)?)?;
    m.add_function(wrap_pyfunction!(url_score, m)?)?;
    m.add_function(wrap_pyfunction!(build_prompt, m)?)?;
    m.add_function(wrap_pyfunction!(spearman, m)?)?;
    m.add_function(wrap_pyfunction!(classify_scale, m)?)?;
    m.add_function(wrap_pyfunction!(classify_readme, m)?)?;
    m.add("PROMPT_TEMPLATE", trifid::translate::PROMPT_TEMPLATE)?;
    Ok(())
}
