//! trifid: score Markdown translation fidelity, drive translation backends,
//! and summarize repository activity, from the shell.
//!
//! Exit codes: 0 success (and all thresholds met), 1 threshold violated,
//! 2 operational error.

mod config;

use std::io::{BufReader, Write};
use std::path::PathBuf;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use trifid::corpus::{
    correlations_csv, load_manifest, pair_directory, run_corpus, write_entries_jsonl,
};
use trifid::extract::ElementCategory;
use trifid::gap::{gap_report, summarize_file_gaps, survival_csv};
use trifid::mine::{
    adoption_csv, adoption_stats, filter_translation_records, monthly_histogram, read_records,
    scale_csv, scale_summary,
};
use trifid::score::score_pair_bytes;
use trifid::translate::mock::IdentityBackend;
use trifid::translate::{
    Backend, HttpBackend, RetryPolicy, SubprocessBackend, TranslationCache, TranslationJob,
    Translator, TranslatorOptions,
};
use trifid::FidelityReport;

#[derive(Parser)]
#[command(
    name = "trifid",
    version,
    about = "Markdown translation fidelity scoring and companion tooling"
)]
struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Show the structure extracted from one Markdown document.
    Inspect(InspectArgs),
    /// Score a translated document against its original.
    Score(ScoreArgs),
    /// Score a corpus of pairs from a manifest or a paired directory.
    Batch(BatchArgs),
    /// Translate a Markdown document through a backend.
    Translate(TranslateArgs),
    /// Summarize a repository activity export (JSONL).
    Mine(MineArgs),
    /// Measure post-merge README drift from a git checkout.
    Gap(GapArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Human,
}

#[derive(Args)]
struct InspectArgs {
    file: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct ScoreArgs {
    orig: PathBuf,
    trans: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(flatten)]
    thresholds: ThresholdArgs,
}

#[derive(Args)]
struct BatchArgs {
    /// CSV or JSON manifest with orig,trans,pair_id columns.
    #[arg(long, conflicts_with = "dir")]
    manifest: Option<PathBuf>,
    /// Directory holding X.md / X.<lang>.md pairs.
    #[arg(long, requires = "lang")]
    dir: Option<PathBuf>,
    /// Language tag used for directory pairing.
    #[arg(long)]
    lang: Option<String>,
    /// Write one JSON entry per pair to this path.
    #[arg(long)]
    entries: Option<PathBuf>,
    /// Write metric,spearman CSV to this path.
    #[arg(long)]
    correlations: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(flatten)]
    thresholds: ThresholdArgs,
}

#[derive(Args)]
struct TranslateArgs {
    file: PathBuf,
    #[arg(long, default_value = "en")]
    source: String,
    #[arg(long)]
    target: String,
    /// "identity", "cmd:<program and args>", or an http(s) endpoint URL.
    #[arg(long, env = "TRIFID_BACKEND")]
    backend: Option<String>,
    #[arg(long, env = "TRIFID_CACHE_DIR")]
    cache_dir: Option<PathBuf>,
    /// Write the translation here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    attempts: Option<u32>,
    #[arg(long)]
    timeout_secs: Option<u64>,
    #[arg(long)]
    min_request_interval_ms: Option<u64>,
    /// Unwrap a response wrapped in one outer code fence.
    #[arg(long)]
    unwrap_fences: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MineFormat {
    Json,
    Csv,
    Human,
}

#[derive(Args)]
struct MineArgs {
    /// JSONL activity export (one pull request or issue per line).
    records: PathBuf,
    /// Keep only records whose title mentions translating the README.
    #[arg(long)]
    filter_translations: bool,
    #[arg(long, value_enum, default_value_t = MineFormat::Json)]
    format: MineFormat,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GapFormat {
    Json,
    Jsonl,
    Human,
}

#[derive(Args)]
struct GapArgs {
    /// Path to a git checkout.
    repo: PathBuf,
    /// Window anchor: RFC 3339 timestamp, YYYY-MM-DD, or a git ref.
    #[arg(long)]
    merge_ref: String,
    #[arg(long)]
    window_days: Option<u64>,
    /// Append a distribution summary (median, mean, min, max).
    #[arg(long)]
    summarize: bool,
    /// Write the lag survival curve as CSV to this path.
    #[arg(long)]
    survival_csv: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = GapFormat::Json)]
    format: GapFormat,
}

#[derive(Args, Default, Clone, Copy)]
struct ThresholdArgs {
    /// Exit 1 when the code score is below this.
    #[arg(long)]
    min_code: Option<f64>,
    /// Exit 1 when the URL score is below this.
    #[arg(long)]
    min_url: Option<f64>,
    /// Exit 1 when the markdown score is below this.
    #[arg(long)]
    min_markdown: Option<f64>,
    /// Exit 1 when the aggregate is below this.
    #[arg(long)]
    min_aggregate: Option<f64>,
}

#[derive(Clone, Copy)]
struct Thresholds {
    code: Option<f64>,
    url: Option<f64>,
    markdown: Option<f64>,
    aggregate: Option<f64>,
}

impl Thresholds {
    fn resolve(args: ThresholdArgs, cfg: &config::ScoreSection) -> Self {
        Thresholds {
            code: args.min_code.or(cfg.min_code),
            url: args.min_url.or(cfg.min_url),
            markdown: args.min_markdown.or(cfg.min_markdown),
            aggregate: args.min_aggregate.or(cfg.min_aggregate),
        }
    }

    fn violations(&self, report: &FidelityReport) -> Vec<String> {
        let mut out = Vec::new();
        let mut check = |name: &str, value: f64, min: Option<f64>| {
            if let Some(min) = min {
                if value < min {
                    out.push(format!("{name} {value:.2} below minimum {min}"));
                }
            }
        };
        check("code", report.code.total, self.code);
        check("url", f64::from(report.url.total), self.url);
        check("markdown", report.markdown.total, self.markdown);
        check("aggregate", report.aggregate, self.aggregate);
        out
    }
}

fn main() {
    // Die quietly when a downstream pager or `head` closes the pipe; the
    // default Rust handler turns that into a println! panic.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("trifid: error: {message}");
            2
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<i32, String> {
    let cfg = config::load(cli.config.as_deref())?;
    match cli.command {
        Command::Inspect(args) => cmd_inspect(args),
        Command::Score(args) => cmd_score(args, &cfg),
        Command::Batch(args) => cmd_batch(args, &cfg),
        Command::Translate(args) => cmd_translate(args, &cfg),
        Command::Mine(args) => cmd_mine(args),
        Command::Gap(args) => cmd_gap(args, &cfg),
    }
}

/// Pretty JSON with alphabetically sorted keys; identical inputs always
/// produce identical bytes.
fn print_json<T: Serialize>(value: &T) -> Result<(), String> {
    let value = serde_json::to_value(value).map_err(|e| format!("serializing output: {e}"))?;
    let text = serde_json::to_string_pretty(&value).map_err(|e| e.to_string())?;
    println!("{text}");
    Ok(())
}

fn read_file(path: &PathBuf) -> Result<Vec<u8>, String> {
    std::fs::read(path).map_err(|e| format!("reading {}: {e}", path.display()))
}

fn cmd_inspect(args: InspectArgs) -> Result<i32, String> {
    let bytes = read_file(&args.file)?;
    let s = trifid::extract::extract_structure_bytes(&bytes)
        .map_err(|e| format!("{}: {e}", args.file.display()))?;
    match args.format {
        Format::Json => print_json(&s)?,
        Format::Human => {
            println!("bytes:       {}", s.byte_size);
            println!("code blocks: {}", s.code_blocks.len());
            for block in &s.code_blocks {
                println!(
                    "  [{}] {} ({} lines, {} after normalization)",
                    block.index,
                    block.info_string.as_deref().unwrap_or("<none>"),
                    block.raw_lines.len(),
                    block.normalized_lines.len()
                );
            }
            println!("urls:        {}", s.urls.len());
            for url in &s.urls {
                println!("  {url}");
            }
            println!("elements:");
            for cat in ElementCategory::ALL {
                println!("  {:<15} {}", cat.key(), s.element_counts.get(cat));
            }
        }
    }
    Ok(0)
}

fn render_report_human(report: &FidelityReport) {
    println!(
        "code:      {:>7.2}   blocks {} -> {}, content {}",
        report.code.total,
        report.code.n_orig,
        report.code.n_trans,
        if report.code.content_preserved {
            "preserved"
        } else {
            "lost"
        }
    );
    println!(
        "url:       {:>7}   preserved {}, missing {}, extra {}",
        report.url.total, report.url.n_preserved, report.url.n_missing, report.url.n_extra
    );
    println!("markdown:  {:>7.2}", report.markdown.total);
    for (cat, ratio) in &report.markdown.per_category_ratios {
        if *ratio < 1.0 {
            println!("  {:<15} {:.2}", cat.key(), ratio);
        }
    }
    println!("aggregate: {:>7.2}", report.aggregate);
}

fn cmd_score(args: ScoreArgs, cfg: &config::Config) -> Result<i32, String> {
    let orig = read_file(&args.orig)?;
    let trans = read_file(&args.trans)?;
    let report = score_pair_bytes(&orig, &trans).map_err(|e| e.to_string())?;
    match args.format {
        Format::Json => print_json(&report)?,
        Format::Human => render_report_human(&report),
    }
    let thresholds = Thresholds::resolve(args.thresholds, &cfg.score);
    let violations = thresholds.violations(&report);
    for v in &violations {
        eprintln!("threshold: {v}");
    }
    Ok(if violations.is_empty() { 0 } else { 1 })
}

fn cmd_batch(args: BatchArgs, cfg: &config::Config) -> Result<i32, String> {
    let pairs = match (&args.manifest, &args.dir) {
        (Some(manifest), None) => load_manifest(manifest).map_err(|e| e.to_string())?,
        (None, Some(dir)) => {
            let lang = args
                .lang
                .clone()
                .or_else(|| cfg.batch.lang.clone())
                .ok_or("--lang is required with --dir")?;
            pair_directory(dir, &lang).map_err(|e| e.to_string())?
        }
        _ => return Err("exactly one of --manifest or --dir is required".into()),
    };
    let result = run_corpus(&pairs).map_err(|e| e.to_string())?;

    if let Some(path) = &args.entries {
        let file = std::fs::File::create(path)
            .map_err(|e| format!("creating {}: {e}", path.display()))?;
        write_entries_jsonl(&result.entries, file)
            .map_err(|e| format!("writing {}: {e}", path.display()))?;
    }
    if let Some(path) = &args.correlations {
        std::fs::write(path, correlations_csv(&result.summary))
            .map_err(|e| format!("writing {}: {e}", path.display()))?;
    }

    match args.format {
        Format::Json => print_json(&result.summary)?,
        Format::Human => {
            let s = &result.summary;
            println!("pairs:     {} scored, {} failed", s.n_pairs, s.n_failed);
            println!("code:      {:.2}", s.mean_code);
            println!("url:       {:.2}", s.mean_url);
            println!("markdown:  {:.2}", s.mean_markdown);
            println!("aggregate: {:.2}", s.mean_aggregate);
            for (metric, rho) in &s.spearman {
                match rho {
                    Some(r) => println!("spearman[{metric} vs size]: {r:.4}"),
                    None => println!("spearman[{metric} vs size]: undefined"),
                }
            }
        }
    }

    let thresholds = Thresholds::resolve(args.thresholds, &cfg.score);
    let mut violations = 0;
    for entry in &result.entries {
        if let Some(report) = &entry.report {
            for v in thresholds.violations(report) {
                eprintln!("threshold: {}: {v}", entry.pair_id);
                violations += 1;
            }
        }
    }
    Ok(if violations == 0 { 0 } else { 1 })
}

fn make_backend(spec: &str, timeout: Duration) -> Result<Box<dyn Backend>, String> {
    if spec == "identity" {
        return Ok(Box::new(IdentityBackend));
    }
    if let Some(rest) = spec.strip_prefix("cmd:") {
        let argv: Vec<String> = rest.split_whitespace().map(String::from).collect();
        if argv.is_empty() {
            return Err("cmd: backend needs a program name".into());
        }
        return Ok(Box::new(
            SubprocessBackend::new(argv).with_timeout(timeout),
        ));
    }
    if spec.starts_with("http://") || spec.starts_with("https://") {
        return Ok(Box::new(
            HttpBackend::with_timeout(spec, timeout).map_err(|e| e.to_string())?,
        ));
    }
    Err(format!(
        "unknown backend '{spec}' (expected \"identity\", \"cmd:<program>\", or an http(s) URL)"
    ))
}

fn cmd_translate(args: TranslateArgs, cfg: &config::Config) -> Result<i32, String> {
    let text = String::from_utf8(read_file(&args.file)?)
        .map_err(|e| format!("{} is not UTF-8: {e}", args.file.display()))?;

    let tc = &cfg.translate;
    let spec = args
        .backend
        .clone()
        .or_else(|| tc.backend.clone())
        .ok_or("no backend: pass --backend, set TRIFID_BACKEND, or configure [translate].backend")?;
    let timeout = Duration::from_secs(args.timeout_secs.or(tc.timeout_secs).unwrap_or(120));
    let backend = make_backend(&spec, timeout)?;
    let backend_id = backend.id().to_string();

    let mut options = TranslatorOptions::default();
    options.retry = RetryPolicy {
        attempts: args.attempts.or(tc.attempts).unwrap_or(3),
        ..RetryPolicy::default()
    };
    if let Some(c) = tc.concurrency {
        options.concurrency = c;
    }
    options.unwrap_fences = args.unwrap_fences || tc.unwrap_fences.unwrap_or(false);
    options.min_request_interval = args
        .min_request_interval_ms
        .or(tc.min_request_interval_ms)
        .map(Duration::from_millis);

    let mut translator = Translator::new(backend).with_options(options);
    if let Some(dir) = args.cache_dir.clone().or_else(|| tc.cache_dir.clone()) {
        let cache = TranslationCache::new(&dir)
            .map_err(|e| format!("opening cache {}: {e}", dir.display()))?;
        translator = translator.with_cache(cache);
    }

    let job =
        TranslationJob::new(text, &args.source, &args.target, &backend_id).map_err(|e| e.to_string())?;
    let out = translator.translate(&job).map_err(|e| e.to_string())?;
    log::info!(
        "translated {} bytes via {backend_id} in {} ms",
        job.source_text.len(),
        out.latency_ms
    );
    match &args.out {
        Some(path) => std::fs::write(path, &out.translated_text)
            .map_err(|e| format!("writing {}: {e}", path.display()))?,
        None => print!("{}", out.translated_text),
    }
    Ok(0)
}

fn cmd_mine(args: MineArgs) -> Result<i32, String> {
    let file = std::fs::File::open(&args.records)
        .map_err(|e| format!("opening {}: {e}", args.records.display()))?;
    let mut records = read_records(BufReader::new(file)).map_err(|e| e.to_string())?;
    if args.filter_translations {
        records = filter_translation_records(&records);
    }
    let scale = scale_summary(&records);
    let adoption = adoption_stats(&records);
    let monthly = monthly_histogram(&records);

    match args.format {
        MineFormat::Json => print_json(&serde_json::json!({
            "n_records": records.len(),
            "scale": scale,
            "adoption": adoption,
            "monthly": monthly,
        }))?,
        MineFormat::Csv => {
            let mut out = scale_csv(&scale);
            if let Some(stats) = &adoption {
                out.push('\n');
                out.push_str(&adoption_csv(stats));
            }
            if !monthly.no_data {
                out.push_str("\nmonth,share\n");
                for (month, share) in &monthly.shares {
                    out.push_str(&format!("{month},{share}\n"));
                }
            }
            print!("{out}");
        }
        MineFormat::Human => {
            println!("records: {}", records.len());
            println!("scale (repos / prs / issues):");
            for (label, row) in [
                ("large", &scale.large),
                ("medium", &scale.medium),
                ("small", &scale.small),
                ("out_of_band", &scale.out_of_band),
            ] {
                println!("  {:<12} {} / {} / {}", label, row.repos, row.prs, row.issues);
            }
            match &adoption {
                Some(stats) => {
                    println!(
                        "adoption: {} merged, {} closed ({:.1}% merged overall)",
                        stats.n_merged,
                        stats.n_closed,
                        stats.overall_merge_share * 100.0
                    );
                    println!(
                        "  per-repo rate mean {:.3} median {:.3}; >=0.8: {}, <=0.2: {}",
                        stats.mean_rate, stats.median_rate, stats.repos_high, stats.repos_low
                    );
                }
                None => println!("adoption: no terminal pull requests"),
            }
            if monthly.no_data {
                println!("monthly: no pull requests");
            } else {
                println!("monthly shares ({} PRs):", monthly.pr_count);
                for (month, share) in &monthly.shares {
                    println!("  {month}: {share:.4}");
                }
            }
        }
    }
    Ok(0)
}

fn cmd_gap(args: GapArgs, cfg: &config::Config) -> Result<i32, String> {
    let window_days = args.window_days.or(cfg.gap.window_days).unwrap_or(180);
    let gaps =
        gap_report(&args.repo, &args.merge_ref, window_days).map_err(|e| e.to_string())?;
    let summary = summarize_file_gaps(&gaps);

    if let Some(path) = &args.survival_csv {
        let lags: Vec<f64> = gaps.iter().filter_map(|g| g.lag).map(|l| l as f64).collect();
        std::fs::write(path, survival_csv(&lags))
            .map_err(|e| format!("writing {}: {e}", path.display()))?;
    }

    match args.format {
        GapFormat::Json => print_json(&serde_json::json!({
            "files": gaps,
            "summary": summary,
        }))?,
        GapFormat::Jsonl => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            for gap in &gaps {
                let line = serde_json::to_value(gap)
                    .and_then(|v| serde_json::to_string(&v))
                    .map_err(|e| e.to_string())?;
                writeln!(w, "{line}").map_err(|e| e.to_string())?;
            }
            if args.summarize {
                if let Some(s) = &summary {
                    let line = serde_json::to_value(s)
                        .and_then(|v| serde_json::to_string(&v))
                        .map_err(|e| e.to_string())?;
                    writeln!(w, "{line}").map_err(|e| e.to_string())?;
                }
            }
        }
        GapFormat::Human => {
            for g in &gaps {
                match g.lag {
                    Some(lag) => println!(
                        "{:<24} {:<8} english {} / translation {} -> lag {}",
                        g.translation_file,
                        g.lang,
                        g.english_commits.unwrap_or(0),
                        g.translation_commits,
                        lag
                    ),
                    None => println!(
                        "{:<24} {:<8} no English sibling (incomparable)",
                        g.translation_file, g.lang
                    ),
                }
            }
            if args.summarize {
                match &summary {
                    Some(s) => println!(
                        "lag over {} files: median {:.1}, mean {:.2}, min {}, max {} ({} incomparable)",
                        s.n, s.median, s.mean, s.min, s.max, s.n_incomparable
                    ),
                    None => println!("no comparable files"),
                }
            }
        }
    }
    Ok(0)
}
