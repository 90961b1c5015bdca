use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("conllu line {line}: {reason}")]
pub struct ConlluFormatError {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedToken {
    /// 1-based position in the sentence.
    pub index: usize,
    pub surface: String,
    pub lemma: String,
    pub upos: String,
    /// Index of the syntactic head, 0 for the root.
    pub head: usize,
    pub deprel: String,
}

/// One sentence block, with the review it belongs to when the block carries
/// a `# review_id = <n>` comment.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ParsedSentence {
    pub review_id: Option<usize>,
    pub tokens: Vec<ParsedToken>,
}

fn review_id_comment(line: &str) -> Option<&str> {
    let rest = line.strip_prefix('#')?.trim_start();
    let rest = rest.strip_prefix("review_id")?.trim_start();
    Some(rest.strip_prefix('=')?.trim())
}

/// Reads ID, FORM, LEMMA, UPOS, HEAD and DEPREL of every word line.
/// Multiword ranges (`3-4`) and empty nodes (`3.1`) are skipped.
pub fn parse_conllu(doc: &str) -> Result<Vec<ParsedSentence>, ConlluFormatError> {
    let mut sentences = Vec::new();
    let mut current = ParsedSentence::default();
    let mut start_line = 1;

    let finish = |s: ParsedSentence, start: usize, out: &mut Vec<ParsedSentence>| {
        if s.tokens.is_empty() {
            return Ok(());
        }
        let n = s.tokens.len();
        for t in &s.tokens {
            if t.head > n || t.head == t.index {
                return Err(ConlluFormatError {
                    line: start,
                    reason: alloc::format!("token {} has invalid head {}", t.index, t.head),
                });
            }
        }
        out.push(s);
        Ok(())
    };

    for (i, raw) in doc.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            finish(core::mem::take(&mut current), start_line, &mut sentences)?;
            start_line = line_no + 1;
            continue;
        }
        if line.starts_with('#') {
            if let Some(id) = review_id_comment(line) {
                let id = id.parse().map_err(|_| ConlluFormatError {
                    line: line_no,
                    reason: alloc::format!("bad review_id {id:?}"),
                })?;
                current.review_id = Some(id);
            }
            continue;
        }

        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(ConlluFormatError {
                line: line_no,
                reason: alloc::format!("expected 10 columns, found {}", cols.len()),
            });
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let bad = |what: &str| ConlluFormatError {
            line: line_no,
            reason: alloc::format!("bad {what}"),
        };
        let index: usize = cols[0].parse().map_err(|_| bad("ID"))?;
        if index != current.tokens.len() + 1 {
            return Err(bad("ID sequence"));
        }
        let head: usize = cols[6].parse().map_err(|_| bad("HEAD"))?;
        current.tokens.push(ParsedToken {
            index,
            surface: cols[1].to_string(),
            lemma: cols[2].to_string(),
            upos: cols[3].to_string(),
            head,
            deprel: cols[7].to_string(),
        });
    }
    finish(current, start_line, &mut sentences)?;
    Ok(sentences)
}

/// Review ids referenced by the sidecar that are absent from `known`.
pub fn orphan_review_ids(sentences: &[ParsedSentence], known: &BTreeSet<usize>) -> Vec<usize> {
    let ids: BTreeSet<usize> = sentences.iter().filter_map(|s| s.review_id).collect();
    ids.into_iter().filter(|id| !known.contains(id)).collect()
}
