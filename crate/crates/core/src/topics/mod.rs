//! Version-sensitive topic modeling, emerging-topic detection, topic labels
//! and topic sentiment.

mod emerging;
mod label;
mod lda;
pub mod stopwords;

pub use emerging::{detect_emerging, SIGMA_FLOOR};
pub use label::{bigram_counts, label_topic, phrase_score, PhraseLabel, TopicLabels};
pub use lda::{build_model_vocab, fit_version, prior_for, TopicConfig, TopicDoc, TopicState};

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::sentiment::{Scorer, SentimentLabel};

/// Number of top words used for topic sentiment and word clouds.
pub const TOP_WORDS: usize = 30;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TopicError {
    #[error("no modelable tokens in this version")]
    EmptyCorpus,
    #[error("{k} topics requested but only {distinct} distinct words")]
    KTooLarge { k: usize, distinct: usize },
    #[error("topic count must be at least 2, got {0}")]
    InvalidK(usize),
    #[error("previous version has {found} topics, expected {expected}")]
    KMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WordSentiment {
    pub score: f64,
    pub label: SentimentLabel,
    /// Whether the word was extracted as an opinion word.
    pub opinion: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSentiment {
    pub label: SentimentLabel,
    pub words: BTreeMap<String, WordSentiment>,
    /// Set when no top word could be scored; `label` is then the default.
    pub no_scorable_words: bool,
}

/// Label used when none of a topic's words can be scored.
pub const DEFAULT_TOPIC_LABEL: SentimentLabel = SentimentLabel::SlightlyNegative;

/// Most frequent label; ties go to the more negative label.
pub fn modal_label<I: IntoIterator<Item = SentimentLabel>>(labels: I) -> Option<SentimentLabel> {
    let mut counts: BTreeMap<SentimentLabel, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    // Iterating in ascending (positive -> negative) order with `>=` keeps
    // the last, most negative, of the tied labels.
    let mut best: Option<(SentimentLabel, usize)> = None;
    for (l, c) in counts {
        if best.is_none_or(|(_, bc)| c >= bc) {
            best = Some((l, c));
        }
    }
    best.map(|(l, _)| l)
}

/// Scores the top words of a topic; words the scorer cannot score are
/// skipped.
pub fn topic_sentiment(
    top_words: &[(String, f64)],
    scorer: &Scorer<'_>,
    opinion_vocab: &BTreeSet<String>,
) -> TopicSentiment {
    let mut words = BTreeMap::new();
    for (w, _) in top_words {
        if let Ok(s) = scorer.score(w) {
            words.insert(
                w.clone(),
                WordSentiment {
                    score: s.score,
                    label: s.label,
                    opinion: opinion_vocab.contains(w),
                },
            );
        }
    }
    match modal_label(words.values().map(|s| s.label)) {
        Some(label) => TopicSentiment {
            label,
            words,
            no_scorable_words: false,
        },
        None => TopicSentiment {
            label: DEFAULT_TOPIC_LABEL,
            words,
            no_scorable_words: true,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopWord {
    pub word: String,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSummary {
    pub topic_id: usize,
    pub top_words: Vec<TopWord>,
    pub phrase_labels: Vec<PhraseLabel>,
    pub sentences: Vec<String>,
    pub emerging: bool,
    pub sentiment_label: SentimentLabel,
    pub word_sentiments: BTreeMap<String, WordSentiment>,
    pub no_scorable_words: bool,
}
