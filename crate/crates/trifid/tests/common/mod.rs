//! Shared helpers for integration tests: fixture paths, independently
//! implemented oracles, and a seeded random Markdown generator.

// Each integration test target compiles this module separately and none
// uses every helper.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use rand::Rng;

pub fn fixture_dir(sub: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(sub)
}

/// URL score recomputed with exact integer arithmetic: no floats, no shared
/// code with the library. S = 70p/N + 30 - min(30, 30e/N), rounded half up
/// and clamped.
pub fn url_oracle(orig: &BTreeSet<String>, trans: &BTreeSet<String>) -> u32 {
    let preserved = orig.iter().filter(|u| trans.contains(*u)).count() as i64;
    let missing = orig.len() as i64 - preserved;
    let extra = trans.iter().filter(|u| !orig.contains(*u)).count() as i64;
    let n = preserved + missing;
    if n == 0 {
        return 100;
    }
    let num = 70 * preserved + 30 * n - (30 * n).min(30 * extra);
    let s = (2 * num + n).div_euclid(2 * n);
    s.clamp(0, 100) as u32
}

/// Rank-correlation oracle: O(n^2) counting ranks plus a direct Pearson,
/// sharing nothing with the library implementation. None mirrors the
/// library's error cases (length mismatch, n < 3, zero variance).
pub fn spearman_oracle(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 3 {
        return None;
    }
    let rx = counting_ranks(x);
    let ry = counting_ranks(y);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some(cov / (vx * vy).sqrt())
}

fn counting_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&a| {
            let less = v.iter().filter(|&&b| b < a).count() as f64;
            let equal = v.iter().filter(|&&b| b == a).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

const WORDS: &[&str] = &[
    "alpha", "beacon", "cedar", "delta", "ember", "fjord", "granite", "harbor", "isotope",
    "juniper", "kestrel", "lattice", "meadow", "nimbus", "orchard", "prism", "quartz", "russet",
    "signal", "timber", "umbra", "vector", "willow", "xenon", "yarrow", "zephyr",
];

const LANGS: &[&str] = &["rust", "python", "sh", "json", "yaml", "text", ""];

pub fn words(rng: &mut impl Rng, n: usize) -> String {
    (0..n)
        .map(|_| WORDS[rng.random_range(0..WORDS.len())])
        .collect::<Vec<_>>()
        .join(" ")
}

/// A pool of `n` distinct URLs to draw subsets from.
pub fn url_pool(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| format!("https://h{i}.example.org/p{i}/doc"))
        .collect()
}

/// Random Markdown document built from headers, paragraphs, lists, quotes,
/// tables, fences, emphasis, inline code, and links. Any output is valid
/// input to the scorer; no structural guarantees are needed.
pub fn random_markdown(rng: &mut impl Rng) -> String {
    let n_blocks = rng.random_range(2..=12);
    let mut blocks = Vec::with_capacity(n_blocks);
    for _ in 0..n_blocks {
        blocks.push(random_block(rng));
    }
    blocks.join("\n\n") + "\n"
}

fn random_block(rng: &mut impl Rng) -> String {
    match rng.random_range(0..9) {
        0 => {
            let level = rng.random_range(1..=6);
            let n = rng.random_range(1..=4);
            format!("{} {}", "#".repeat(level), words(rng, n))
        }
        1 => random_paragraph(rng),
        2 => {
            let marker = ["-", "*", "+"][rng.random_range(0..3)];
            let items = rng.random_range(2..=5);
            (0..items)
                .map(|_| {
                    let n = rng.random_range(2..=5);
                    format!("{marker} {}", words(rng, n))
                })
                .collect::<Vec<_>>()
                .join("\n")
        }
        3 => {
            let items = rng.random_range(2..=4);
            (0..items)
                .map(|i| {
                    let n = rng.random_range(2..=5);
                    format!("{}. {}", i + 1, words(rng, n))
                })
                .collect::<Vec<_>>()
                .join("\n")
        }
        4 => {
            let depth = rng.random_range(1..=3);
            (0..depth)
                .map(|_| {
                    let n = rng.random_range(3..=7);
                    format!("> {}", words(rng, n))
                })
                .collect::<Vec<_>>()
                .join("\n")
        }
        5 => {
            let cols = rng.random_range(2..=4);
            let header: Vec<String> = (0..cols).map(|_| words(rng, 1)).collect();
            let sep: Vec<&str> = (0..cols).map(|_| "---").collect();
            let row: Vec<String> = (0..cols).map(|_| words(rng, 1)).collect();
            format!(
                "| {} |\n| {} |\n| {} |",
                header.join(" | "),
                sep.join(" | "),
                row.join(" | ")
            )
        }
        6 => {
            let lang = LANGS[rng.random_range(0..LANGS.len())];
            let mut lines = vec![format!("```{lang}")];
            for _ in 0..rng.random_range(1..=5) {
                let line = match rng.random_range(0..4) {
                    0 => format!("# {}", words(rng, 3)),
                    1 => format!("$ {}", words(rng, 2)),
                    2 => format!("    {}", words(rng, 3)),
                    _ => format!("{} = {}", words(rng, 1), rng.random_range(0..100)),
                };
                lines.push(line);
            }
            lines.push("```".to_string());
            lines.join("\n")
        }
        7 => format!(
            "[{}]: https://ref{}.example.org/{}",
            words(rng, 1),
            rng.random_range(0..50),
            words(rng, 1)
        ),
        _ => format!(
            "Run `{} --check` then see <https://go{}.example.net/{}>.",
            words(rng, 1),
            rng.random_range(0..50),
            words(rng, 1)
        ),
    }
}

fn random_paragraph(rng: &mut impl Rng) -> String {
    let mut lines = Vec::new();
    for _ in 0..rng.random_range(1..=3) {
        let n = rng.random_range(4..=9);
        let mut line = words(rng, n);
        match rng.random_range(0..5) {
            0 => line.push_str(&format!(" **{}**", words(rng, 1))),
            1 => line.push_str(&format!(" *{}*", words(rng, 1))),
            2 => line.push_str(&format!(" _{}_", words(rng, 1))),
            3 => line.push_str(&format!(" https://p{}.example.com/x", rng.random_range(0..50))),
            _ => {}
        }
        line.push('.');
        lines.push(line);
    }
    lines.join("\n")
}

/// Embeds every URL of a set into a document as autolinks, one per line.
pub fn doc_with_urls(urls: &BTreeSet<String>, filler: &str) -> String {
    let mut out = String::from("# links\n\n");
    out.push_str(filler);
    out.push('\n');
    for url in urls {
        out.push_str(&format!("\nSee <{url}> for details.\n"));
    }
    out
}
