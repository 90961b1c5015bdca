//! Text cleaning, tokenization and stemming of review text.

mod porter;

pub use porter::porter_stem;

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::ingest::RawReview;

/// Tokens longer than this are dropped.
pub const MAX_TOKEN_LEN: usize = 15;

/// Punctuation kept by [`clean_text`].
pub const KEPT_PUNCTUATION: [char; 7] = ['.', ',', '!', '?', '\'', ';', ':'];

const SENTENCE_ENDS: [char; 3] = ['.', '!', '?'];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PreprocessError {
    #[error("review {0} has no tokens after cleaning")]
    EmptyAfterCleaning(usize),
}

/// Where a token came from: sentence index and surface form (case preserved).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenOrigin {
    pub sentence: usize,
    pub surface: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanReview {
    pub review_id: usize,
    pub sentences: Vec<String>,
    pub tokens: Vec<String>,
    pub token_map: Vec<TokenOrigin>,
}

/// Drops non-ASCII characters and symbols other than [`KEPT_PUNCTUATION`],
/// then collapses runs of three or more identical letters to one letter.
pub fn clean_text(text: &str) -> String {
    let filtered = text.chars().filter(|&c| {
        c.is_ascii_alphanumeric() || c.is_ascii_whitespace() || KEPT_PUNCTUATION.contains(&c)
    });

    let chars: Vec<char> = filtered.collect();
    let mut out = String::with_capacity(chars.len());
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let mut run = 1;
        while i + run < chars.len() && chars[i + run] == c {
            run += 1;
        }
        let keep = if c.is_ascii_alphabetic() && run >= 3 { 1 } else { run };
        for _ in 0..keep {
            out.push(c);
        }
        i += run;
    }
    out
}

fn is_token_char(c: char) -> bool {
    c.is_ascii_alphanumeric()
}

/// Lowercases and splits on whitespace and punctuation, collapses
/// consecutive duplicates and drops tokens longer than [`MAX_TOKEN_LEN`].
pub fn tokenize_and_normalize(text: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for raw in text.split(|c: char| !is_token_char(c)) {
        if raw.is_empty() || raw.len() > MAX_TOKEN_LEN {
            continue;
        }
        let tok = raw.to_ascii_lowercase();
        if out.last() != Some(&tok) {
            out.push(tok);
        }
    }
    out
}

/// Splits on `.`, `!` and `?`; returns trimmed, non-empty pieces.
pub fn split_sentences(text: &str) -> Vec<String> {
    text.split(SENTENCE_ENDS)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(ToString::to_string)
        .collect()
}

/// Cleans, tokenizes and stems one surface word. `None` if nothing is left.
pub fn normalize_word(word: &str) -> Option<String> {
    let cleaned = clean_text(word);
    let toks = tokenize_and_normalize(&cleaned);
    match toks.as_slice() {
        [t] => Some(porter_stem(t)),
        _ => None,
    }
}

pub fn preprocess_review(review: &RawReview) -> Result<CleanReview, PreprocessError> {
    let sentences = split_sentences(&review.text);
    let mut tokens: Vec<String> = Vec::new();
    let mut token_map = Vec::new();

    for (si, sentence) in sentences.iter().enumerate() {
        let cleaned = clean_text(sentence);
        let mut prev_lower: Option<String> = None;
        for raw in cleaned.split(|c: char| !is_token_char(c)) {
            if raw.is_empty() || raw.len() > MAX_TOKEN_LEN {
                continue;
            }
            let lower = raw.to_ascii_lowercase();
            if prev_lower.as_ref() == Some(&lower) {
                continue;
            }
            let stem = porter_stem(&lower);
            prev_lower = Some(lower);
            // Stemming can make neighbours equal ("crash crashed"), and
            // sentence boundaries can too; keep the token list free of repeats.
            if tokens.last() == Some(&stem) {
                continue;
            }
            tokens.push(stem);
            token_map.push(TokenOrigin {
                sentence: si,
                surface: raw.to_string(),
            });
        }
    }

    if tokens.is_empty() {
        return Err(PreprocessError::EmptyAfterCleaning(review.review_id));
    }
    Ok(CleanReview {
        review_id: review.review_id,
        sentences,
        tokens,
        token_map,
    })
}
