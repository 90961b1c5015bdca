use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::TopicState;
use crate::preprocess::CleanReview;

pub const MAX_PHRASES: usize = 3;
pub const MAX_SENTENCES: usize = 3;
pub const MIN_SENTENCE_TOKENS: usize = 3;
pub const MAX_SENTENCE_TOKENS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhraseLabel {
    pub phrase: String,
    pub words: [String; 2],
    /// Occurrences in the version's reviews.
    pub count: usize,
    pub score: f64,
    /// Mean sentiment score of the label's words, once scored.
    pub sentiment: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TopicLabels {
    pub phrases: Vec<PhraseLabel>,
    pub sentences: Vec<String>,
}

/// Stemmed tokens of each sentence of a review.
fn sentence_tokens(r: &CleanReview) -> Vec<Vec<&str>> {
    let mut out = alloc::vec![Vec::new(); r.sentences.len()];
    for (tok, origin) in r.tokens.iter().zip(&r.token_map) {
        if let Some(s) = out.get_mut(origin.sentence) {
            s.push(tok.as_str());
        }
    }
    out
}

/// Within-sentence adjacent bigrams whose words are both in the model
/// vocabulary, with their counts.
pub fn bigram_counts<'a>(state: &TopicState, corpus: &'a [CleanReview]) -> BTreeMap<(&'a str, &'a str), usize> {
    let mut counts = BTreeMap::new();
    for r in corpus {
        for s in sentence_tokens(r) {
            for w in s.windows(2) {
                if state.word_index(w[0]).is_some() && state.word_index(w[1]).is_some() {
                    *counts.entry((w[0], w[1])).or_insert(0) += 1;
                }
            }
        }
    }
    counts
}

/// Phrase score `sqrt(phi_k(a1) * phi_k(a2)) * ln(1 + count)`.
pub fn phrase_score(state: &TopicState, k: usize, a1: &str, a2: &str, count: usize) -> f64 {
    libm::sqrt(state.prob(k, a1) * state.prob(k, a2)) * libm::log(1.0 + count as f64)
}

/// Best bigram labels (count >= 2) and representative sentences of topic `k`.
/// Ties break alphabetically.
pub fn label_topic(state: &TopicState, corpus: &[CleanReview], k: usize) -> TopicLabels {
    let mut phrases: Vec<PhraseLabel> = bigram_counts(state, corpus)
        .into_iter()
        .filter(|&(_, c)| c >= 2)
        .map(|((a1, a2), count)| PhraseLabel {
            phrase: format!("{a1} {a2}"),
            words: [a1.into(), a2.into()],
            count,
            score: phrase_score(state, k, a1, a2, count),
            sentiment: None,
        })
        .collect();
    phrases.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.phrase.cmp(&b.phrase)));
    phrases.truncate(MAX_PHRASES);

    let mut seen = BTreeSet::new();
    let mut scored: Vec<(f64, &str)> = Vec::new();
    for r in corpus {
        for (text, toks) in r.sentences.iter().zip(sentence_tokens(r)) {
            if !(MIN_SENTENCE_TOKENS..=MAX_SENTENCE_TOKENS).contains(&toks.len()) {
                continue;
            }
            if !seen.insert(text.as_str()) {
                continue;
            }
            let score = toks.iter().map(|t| state.prob(k, t)).sum::<f64>() / toks.len() as f64;
            scored.push((score, text));
        }
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    let sentences = scored
        .into_iter()
        .take(MAX_SENTENCES)
        .map(|(_, s)| s.into())
        .collect();

    TopicLabels { phrases, sentences }
}
