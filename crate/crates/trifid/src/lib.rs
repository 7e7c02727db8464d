//! TriFid measures how faithfully a translated Markdown document preserves
//! the machine-checkable structure of its original: fenced code blocks,
//! links, and formatting elements. Each dimension scores 0..=100 and the
//! three average into an aggregate.
//!
//! The library also ships the surrounding tooling: corpus batch scoring
//! with rank correlations, a pluggable translation pipeline with caching
//! and retries, activity-export mining, and git-history gap measurement.
//!
//! Quick start:
//!
//! ```
//! let report = trifid::score::score_pair(
//!     "# Title\nSee <https://example.com/docs>.",
//!     "# Titel\nSiehe <https://example.com/docs>.",
//! );
//! assert_eq!(report.aggregate, 100.0);
//! ```

pub mod corpus;
pub mod extract;
pub mod gap;
pub mod mine;
pub mod score;
pub mod translate;

pub use extract::{extract_structure, DocumentStructure, ElementCategory, ElementCounts};
pub use score::{score_pair, score_pair_bytes, FidelityReport};
