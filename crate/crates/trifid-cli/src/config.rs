//! TOML configuration. Flags (and their environment fallbacks) always win
//! over config values; config wins over built-in defaults.

use std::path::{Path, PathBuf};

use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub score: ScoreSection,
    pub translate: TranslateSection,
    pub batch: BatchSection,
    pub gap: GapSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreSection {
    pub min_code: Option<f64>,
    pub min_url: Option<f64>,
    pub min_markdown: Option<f64>,
    pub min_aggregate: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TranslateSection {
    pub backend: Option<String>,
    pub cache_dir: Option<PathBuf>,
    pub attempts: Option<u32>,
    pub concurrency: Option<usize>,
    pub timeout_secs: Option<u64>,
    pub min_request_interval_ms: Option<u64>,
    pub unwrap_fences: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatchSection {
    pub lang: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GapSection {
    pub window_days: Option<u64>,
}

/// Loads the config file when a path was given; otherwise the defaults.
pub fn load(path: Option<&Path>) -> Result<Config, String> {
    let Some(path) = path else {
        return Ok(Config::default());
    };
    let raw = std::fs::read_to_string(path)
        .map_err(|e| format!("reading config {}: {e}", path.display()))?;
    toml::from_str(&raw).map_err(|e| format!("parsing config {}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_rejects_typos() {
        let cfg: Config = toml::from_str(
            r#"
[score]
min_url = 95.0

[translate]
backend = "identity"
attempts = 5

[gap]
window_days = 90
"#,
        )
        .unwrap();
        assert_eq!(cfg.score.min_url, Some(95.0));
        assert_eq!(cfg.translate.attempts, Some(5));
        assert_eq!(cfg.gap.window_days, Some(90));
        assert!(cfg.batch.lang.is_none());

        let err = toml::from_str::<Config>("[score]\nmin_ur = 95.0\n");
        assert!(err.is_err());
    }

    #[test]
    fn missing_path_means_defaults() {
        let cfg = load(None).unwrap();
        assert!(cfg.score.min_aggregate.is_none());
    }
}
