//! Markdown structure extraction.
//!
//! Splits a document into fenced code blocks and prose, then collects URLs
//! and counts structural elements from the prose. The rules are deterministic
//! line and span rules rather than a full CommonMark parse: translated
//! documents routinely contain slightly malformed Markdown, and a pair of
//! documents must be measured with exactly the same yardstick on both sides.

use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The seven structural categories tracked by the markdown score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementCategory {
    Headers,
    Bold,
    Italic,
    Lists,
    NumberedLists,
    Tables,
    Blockquotes,
}

impl ElementCategory {
    pub const ALL: [ElementCategory; 7] = [
        ElementCategory::Headers,
        ElementCategory::Bold,
        ElementCategory::Italic,
        ElementCategory::Lists,
        ElementCategory::NumberedLists,
        ElementCategory::Tables,
        ElementCategory::Blockquotes,
    ];

    pub fn key(self) -> &'static str {
        match self {
            ElementCategory::Headers => "headers",
            ElementCategory::Bold => "bold",
            ElementCategory::Italic => "italic",
            ElementCategory::Lists => "lists",
            ElementCategory::NumberedLists => "numbered_lists",
            ElementCategory::Tables => "tables",
            ElementCategory::Blockquotes => "blockquotes",
        }
    }
}

/// Per-category element counts. Always carries all seven categories.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementCounts {
    pub headers: u64,
    pub bold: u64,
    pub italic: u64,
    pub lists: u64,
    pub numbered_lists: u64,
    pub tables: u64,
    pub blockquotes: u64,
}

impl ElementCounts {
    pub fn get(&self, category: ElementCategory) -> u64 {
        match category {
            ElementCategory::Headers => self.headers,
            ElementCategory::Bold => self.bold,
            ElementCategory::Italic => self.italic,
            ElementCategory::Lists => self.lists,
            ElementCategory::NumberedLists => self.numbered_lists,
            ElementCategory::Tables => self.tables,
            ElementCategory::Blockquotes => self.blockquotes,
        }
    }

    fn add(&mut self, category: ElementCategory, n: u64) {
        match category {
            ElementCategory::Headers => self.headers += n,
            ElementCategory::Bold => self.bold += n,
            ElementCategory::Italic => self.italic += n,
            ElementCategory::Lists => self.lists += n,
            ElementCategory::NumberedLists => self.numbered_lists += n,
            ElementCategory::Tables => self.tables += n,
            ElementCategory::Blockquotes => self.blockquotes += n,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (ElementCategory, u64)> + '_ {
        ElementCategory::ALL.into_iter().map(|c| (c, self.get(c)))
    }

    pub fn total(&self) -> u64 {
        self.iter().map(|(_, n)| n).sum()
    }
}

/// One fenced code block, in document order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeBlock {
    /// Zero-based position among the document's code blocks.
    pub index: usize,
    /// Text after the opening fence (typically a language tag), if any.
    pub info_string: Option<String>,
    /// Verbatim lines between the fences.
    pub raw_lines: Vec<String>,
    /// Lines surviving [`normalize_code`].
    pub normalized_lines: Vec<String>,
}

/// Everything the scorers need to know about one document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentStructure {
    pub code_blocks: Vec<CodeBlock>,
    pub urls: BTreeSet<String>,
    pub element_counts: ElementCounts,
    /// UTF-8 length of the document in bytes.
    pub byte_size: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExtractError {
    #[error("input is not valid UTF-8 (first invalid byte at offset {offset})")]
    InvalidUtf8 { offset: usize },
}

/// Decodes `bytes` as UTF-8 and extracts the document structure.
pub fn extract_structure_bytes(bytes: &[u8]) -> Result<DocumentStructure, ExtractError> {
    let text = std::str::from_utf8(bytes).map_err(|e| ExtractError::InvalidUtf8 {
        offset: e.valid_up_to(),
    })?;
    Ok(extract_structure(text))
}

/// Extracts code blocks, URLs and element counts from a document.
pub fn extract_structure(text: &str) -> DocumentStructure {
    let (code_blocks, prose) = split_fences(text);
    let mut counts = ElementCounts::default();
    let mut urls = BTreeSet::new();

    for raw in prose {
        let kind = classify_line(raw);
        if let Some(category) = kind.category() {
            counts.add(category, 1);
        }

        let masked = mask_inline_code(raw);
        let span_src = if kind == LineKind::List {
            after_list_marker(&masked)
        } else {
            masked.as_str()
        };
        let (bold_star, italic_star) = count_emphasis(span_src, b'*');
        let (bold_under, italic_under) = count_emphasis(span_src, b'_');
        counts.add(ElementCategory::Bold, bold_star + bold_under);
        counts.add(ElementCategory::Italic, italic_star + italic_under);

        collect_urls(&masked, &mut urls);
    }

    DocumentStructure {
        code_blocks,
        urls,
        element_counts: counts,
        byte_size: text.len(),
    }
}

/// Convenience wrapper: the URL set of a document, fences and inline code
/// excluded.
pub fn extract_urls(text: &str) -> BTreeSet<String> {
    extract_structure(text).urls
}

/// Drops lines whose first non-whitespace character is `#`, `$` or `*`
/// (comments, shell prompts, emphasized output) and strips trailing
/// whitespace from the survivors. Order is preserved and the function is
/// idempotent.
pub fn normalize_code<S: AsRef<str>>(lines: &[S]) -> Vec<String> {
    lines
        .iter()
        .filter_map(|line| {
            let line = line.as_ref();
            match line.trim_start().chars().next() {
                Some('#') | Some('$') | Some('*') => None,
                _ => Some(line.trim_end().to_string()),
            }
        })
        .collect()
}

/// Splits the document at fence boundaries. Returns the code blocks and the
/// prose lines outside them; fence lines themselves belong to neither.
fn split_fences(text: &str) -> (Vec<CodeBlock>, Vec<&str>) {
    struct OpenFence {
        ch: char,
        len: usize,
        info: Option<String>,
        lines: Vec<String>,
    }

    let mut blocks = Vec::new();
    let mut prose = Vec::new();
    let mut open: Option<OpenFence> = None;

    let finish = |blocks: &mut Vec<CodeBlock>, fence: OpenFence| {
        let normalized_lines = normalize_code(&fence.lines);
        blocks.push(CodeBlock {
            index: blocks.len(),
            info_string: fence.info,
            raw_lines: fence.lines,
            normalized_lines,
        });
    };

    for line in text.lines() {
        match open.take() {
            Some(mut fence) => {
                if is_closing_fence(line, fence.ch, fence.len) {
                    finish(&mut blocks, fence);
                } else {
                    fence.lines.push(line.to_string());
                    open = Some(fence);
                }
            }
            None => {
                if let Some((ch, len, info)) = opening_fence(line) {
                    open = Some(OpenFence {
                        ch,
                        len,
                        info,
                        lines: Vec::new(),
                    });
                } else {
                    prose.push(line);
                }
            }
        }
    }
    // An unclosed fence runs to end of document and still counts as a block.
    if let Some(fence) = open {
        finish(&mut blocks, fence);
    }

    (blocks, prose)
}

pub(crate) fn opening_fence(line: &str) -> Option<(char, usize, Option<String>)> {
    let t = line.trim_start();
    let ch = t.chars().next()?;
    if ch != '`' && ch != '~' {
        return None;
    }
    let len = t.chars().take_while(|&c| c == ch).count();
    if len < 3 {
        return None;
    }
    let rest = &t[len..];
    // A backtick fence whose info string contains a backtick is an inline
    // code span, not a fence.
    if ch == '`' && rest.contains('`') {
        return None;
    }
    let info = rest.trim();
    let info = (!info.is_empty()).then(|| info.to_string());
    Some((ch, len, info))
}

pub(crate) fn is_closing_fence(line: &str, ch: char, min_len: usize) -> bool {
    let t = line.trim_start();
    if !t.starts_with(ch) {
        return false;
    }
    let len = t.chars().take_while(|&c| c == ch).count();
    len >= min_len && t[len..].trim().is_empty()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LineKind {
    Header,
    Blockquote,
    NumberedList,
    List,
    TableSeparator,
    Plain,
}

impl LineKind {
    fn category(self) -> Option<ElementCategory> {
        match self {
            LineKind::Header => Some(ElementCategory::Headers),
            LineKind::Blockquote => Some(ElementCategory::Blockquotes),
            LineKind::NumberedList => Some(ElementCategory::NumberedLists),
            LineKind::List => Some(ElementCategory::Lists),
            LineKind::TableSeparator => Some(ElementCategory::Tables),
            LineKind::Plain => None,
        }
    }
}

/// Assigns a line to at most one line-anchored category. Checks run in a
/// fixed order so the categories stay mutually exclusive.
fn classify_line(raw: &str) -> LineKind {
    let t = raw.trim_start();
    if t.is_empty() {
        return LineKind::Plain;
    }

    if t.starts_with('#') {
        let n = t.chars().take_while(|&c| c == '#').count();
        if (1..=6).contains(&n) && matches!(t[n..].chars().next(), Some(' ') | Some('\t')) {
            return LineKind::Header;
        }
        return LineKind::Plain;
    }

    if t.starts_with('>') {
        return LineKind::Blockquote;
    }

    let digits = t.chars().take_while(|c| c.is_ascii_digit()).count();
    if digits > 0 {
        let rest = &t[digits..];
        if (rest.starts_with('.') || rest.starts_with(')'))
            && matches!(rest[1..].chars().next(), Some(' ') | Some('\t'))
        {
            return LineKind::NumberedList;
        }
        return LineKind::Plain;
    }

    if (t.starts_with('-') || t.starts_with('+') || t.starts_with('*'))
        && matches!(t[1..].chars().next(), Some(' ') | Some('\t'))
    {
        return LineKind::List;
    }

    if t.chars().all(|c| matches!(c, '|' | '-' | ':' | ' ' | '\t'))
        && t.contains('|')
        && t.contains('-')
    {
        return LineKind::TableSeparator;
    }

    LineKind::Plain
}

/// Blanks inline code spans (backtick run matched by an equally long run on
/// the same line), delimiters included, so later URL and emphasis scans see a
/// gap instead of code.
fn mask_inline_code(line: &str) -> String {
    if !line.contains('`') {
        return line.to_string();
    }
    let mut bytes = line.as_bytes().to_vec();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] != b'`' {
            i += 1;
            continue;
        }
        let run = run_len(&bytes, i, b'`');
        let mut j = i + run;
        let mut close = None;
        while j < bytes.len() {
            if bytes[j] == b'`' {
                let r2 = run_len(&bytes, j, b'`');
                if r2 == run {
                    close = Some(j);
                    break;
                }
                j += r2;
            } else {
                j += 1;
            }
        }
        match close {
            Some(c) => {
                for b in &mut bytes[i..c + run] {
                    *b = b' ';
                }
                i = c + run;
            }
            None => i += run,
        }
    }
    // Only ASCII backtick-delimited ranges were overwritten byte-for-byte,
    // so the buffer is still valid UTF-8.
    String::from_utf8(bytes).expect("masking preserves UTF-8")
}

fn run_len(bytes: &[u8], from: usize, ch: u8) -> usize {
    bytes[from..].iter().take_while(|&&b| b == ch).count()
}

/// For a list-item line, the text after the bullet marker. Keeps a `*` bullet
/// from pairing with emphasis delimiters later in the line.
fn after_list_marker(masked: &str) -> &str {
    let t = masked.trim_start();
    t.get(1..).unwrap_or("")
}

/// Counts `<d><d>…<d><d>` (bold) and `<d>…<d>` (italic) spans for one
/// delimiter byte. Spans are matched leftmost-shortest and never reused:
/// bold is found first, then italics among the leftover single delimiters.
fn count_emphasis(s: &str, delim: u8) -> (u64, u64) {
    if !s.as_bytes().contains(&delim) {
        return (0, 0);
    }
    let mut bytes = s.as_bytes().to_vec();
    let mut bold = 0;
    let mut i = 0;
    while let Some(start) = find_double(&bytes, delim, i) {
        // Interior must be non-empty, so the closer starts at start+3 or later.
        match find_double(&bytes, delim, start + 3) {
            Some(close) => {
                for b in &mut bytes[start..close + 2] {
                    *b = b' ';
                }
                bold += 1;
                i = close + 2;
            }
            None => break,
        }
    }

    let mut italic = 0;
    let mut i = 0;
    while let Some(start) = find_single(&bytes, delim, i) {
        match find_single(&bytes, delim, start + 2) {
            Some(close) => {
                for b in &mut bytes[start..=close] {
                    *b = b' ';
                }
                italic += 1;
                i = close + 1;
            }
            None => break,
        }
    }

    (bold, italic)
}

fn find_double(bytes: &[u8], delim: u8, from: usize) -> Option<usize> {
    let mut i = from;
    while i + 1 < bytes.len() {
        if bytes[i] == delim && bytes[i + 1] == delim {
            return Some(i);
        }
        i += 1;
    }
    None
}

/// Finds a delimiter byte that is not adjacent to another one (i.e. not part
/// of a bold marker).
fn find_single(bytes: &[u8], delim: u8, from: usize) -> Option<usize> {
    let mut i = from;
    while i < bytes.len() {
        if bytes[i] == delim {
            let before = i > 0 && bytes[i - 1] == delim;
            let after = i + 1 < bytes.len() && bytes[i + 1] == delim;
            if !before && !after {
                return Some(i);
            }
        }
        i += 1;
    }
    None
}

static BARE_URL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"https?://[^\s<>\[\]"]+"#).expect("static regex"));
static AUTOLINK: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"<([A-Za-z][A-Za-z0-9+.-]*:[^<>\s]*)>").expect("static regex"));
static REF_DEF: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*\[[^\]]+\]:\s*(\S+)").expect("static regex"));

/// Collects URLs from one masked prose line: inline/image link destinations,
/// autolinks, reference definitions and bare http(s) tokens. Each structured
/// match is blanked before the next scanner runs so a single link never
/// yields two differently-trimmed URL strings.
fn collect_urls(masked: &str, out: &mut BTreeSet<String>) {
    let mut work = masked.to_string();

    if let Some(cap) = REF_DEF.captures(&work) {
        let range = cap.get(1).expect("group 1 in match").range();
        push_dest(&work[range.clone()], out);
        blank(&mut work, range);
    }

    for range in inline_link_ranges(&work) {
        push_dest(&work[range.start + 2..range.end - 1], out);
        blank(&mut work, range);
    }

    let autolinks: Vec<(std::ops::Range<usize>, String)> = AUTOLINK
        .captures_iter(&work)
        .map(|cap| (cap.get(0).expect("whole match").range(), cap[1].to_string()))
        .collect();
    for (range, url) in autolinks {
        let url = url.trim();
        if !url.is_empty() {
            out.insert(url.to_string());
        }
        blank(&mut work, range);
    }

    for m in BARE_URL.find_iter(&work) {
        let url = trim_url_token(m.as_str());
        if !url.is_empty() {
            out.insert(url.to_string());
        }
    }
}

/// Overwrites a byte range with spaces; ranges always start and end at ASCII
/// delimiters, so char boundaries are preserved.
fn blank(s: &mut String, range: std::ops::Range<usize>) {
    let n = range.len();
    s.replace_range(range, &" ".repeat(n));
}

/// Byte ranges of `](dest)` tails of inline and image links, parens balanced.
fn inline_link_ranges(line: &str) -> Vec<std::ops::Range<usize>> {
    let bytes = line.as_bytes();
    let mut ranges = Vec::new();
    let mut i = 0;
    while i + 1 < bytes.len() {
        if bytes[i] == b']' && bytes[i + 1] == b'(' {
            let mut depth = 1usize;
            let mut j = i + 2;
            while j < bytes.len() && depth > 0 {
                match bytes[j] {
                    b'(' => depth += 1,
                    b')' => depth -= 1,
                    _ => {}
                }
                j += 1;
            }
            if depth == 0 {
                ranges.push(i..j);
                i = j;
                continue;
            }
        }
        i += 1;
    }
    ranges
}

/// Normalizes a link destination: trim whitespace, strip wrapping angle
/// brackets, drop a trailing title after the first whitespace.
fn push_dest(dest: &str, out: &mut BTreeSet<String>) {
    let dest = dest.trim();
    let dest = if let Some(stripped) = dest.strip_prefix('<') {
        stripped.split('>').next().unwrap_or("")
    } else {
        dest.split_whitespace().next().unwrap_or("")
    };
    if !dest.is_empty() {
        out.insert(dest.to_string());
    }
}

/// Strips trailing punctuation and unbalanced closers from a bare URL token,
/// so `https://x.io.` and `[t](https://x.io)` both yield `https://x.io`.
fn trim_url_token(token: &str) -> &str {
    let mut t = token;
    while let Some(last) = t.chars().last() {
        let drop = match last {
            '.' | ',' | ';' | ':' | '!' | '?' | '\'' | '"' | '*' | '_' | '~' => true,
            ')' => t.matches('(').count() < t.matches(')').count(),
            '}' => t.matches('{').count() < t.matches('}').count(),
            _ => false,
        };
        if !drop {
            break;
        }
        t = &t[..t.len() - last.len_utf8()];
    }
    t
}
