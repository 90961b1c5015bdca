//! Upload kinds and their validation.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use reviewlens_core::embedding::PretrainedVectors;
use reviewlens_core::ingest::parse_reviews;
use reviewlens_core::opinion::{orphan_review_ids, parse_conllu};
use reviewlens_core::sentiment::load_base_seeds;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileKind {
    Reviews,
    Conllu,
    Vectors,
    Seeds,
}

impl FileKind {
    pub const ALL: [FileKind; 4] = [Self::Reviews, Self::Conllu, Self::Vectors, Self::Seeds];

    pub fn name(self) -> &'static str {
        match self {
            Self::Reviews => "reviews",
            Self::Conllu => "conllu",
            Self::Vectors => "vectors",
            Self::Seeds => "seeds",
        }
    }

    /// File name inside a project directory.
    pub fn file_name(self) -> &'static str {
        match self {
            Self::Reviews => "reviews.txt",
            Self::Conllu => "reviews.conllu",
            Self::Vectors => "vectors.txt",
            Self::Seeds => "seeds.tsv",
        }
    }
}

impl fmt::Display for FileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FileKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown file kind {s:?}"))
    }
}

/// Acknowledgment of an accepted upload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UploadReport {
    pub kind: FileKind,
    pub lines: usize,
    /// Records accepted: reviews, parsed sentences, vector rows or seeds.
    pub accepted: usize,
    /// Rejected review lines as `line <n>: <kind>`.
    pub skipped: Vec<String>,
    /// Seeds dropped for carrying both polarities.
    pub conflicts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize)]
#[error("{kind} file rejected: {reason}")]
pub struct ValidationFailed {
    pub kind: FileKind,
    pub reason: String,
    /// Review ids referenced by parses but absent from the reviews file.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub orphan_ids: Vec<usize>,
}

/// Checks an upload with the owning parser. `review_ids` are the ids of the
/// project's current reviews, used to align dependency parses.
pub fn validate(
    kind: FileKind,
    text: &str,
    review_ids: Option<&BTreeSet<usize>>,
) -> Result<UploadReport, ValidationFailed> {
    let fail = |reason: String| ValidationFailed {
        kind,
        reason,
        orphan_ids: Vec::new(),
    };
    let lines = text.lines().count();
    let mut report = UploadReport {
        kind,
        lines,
        accepted: 0,
        skipped: Vec::new(),
        conflicts: Vec::new(),
    };
    match kind {
        FileKind::Reviews => {
            let parsed = parse_reviews(text);
            if parsed.reviews.is_empty() {
                return Err(fail("no review line could be parsed".into()));
            }
            report.accepted = parsed.reviews.len();
            report.skipped = parsed.skipped.iter().map(ToString::to_string).collect();
        }
        FileKind::Conllu => {
            let sentences = parse_conllu(text).map_err(|e| fail(e.to_string()))?;
            if let Some(ids) = review_ids {
                let orphans = orphan_review_ids(&sentences, ids);
                if !orphans.is_empty() {
                    return Err(ValidationFailed {
                        kind,
                        reason: format!("{} review ids have no review", orphans.len()),
                        orphan_ids: orphans,
                    });
                }
            }
            report.accepted = sentences.len();
        }
        FileKind::Vectors => {
            let vectors = PretrainedVectors::parse(text).map_err(|e| fail(e.to_string()))?;
            report.accepted = vectors.rows.len();
        }
        FileKind::Seeds => {
            let (lex, r) = load_base_seeds(text).map_err(|e| fail(e.to_string()))?;
            report.accepted = lex.len();
            report.conflicts = r.conflicts;
        }
    }
    Ok(report)
}

/// Ids of the reviews a reviews file would yield.
pub fn review_ids(text: &str) -> BTreeSet<usize> {
    parse_reviews(text).reviews.iter().map(|r| r.review_id).collect()
}
