//! Issue-river widths, word clouds and prioritized review listings.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::ingest::RawReview;
use crate::preprocess::normalize_word;
use crate::sentiment::{Scorer, SentimentLabel};
use crate::topics::{PhraseLabel, TopicSummary, TOP_WORDS};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalyticsError {
    #[error("date range is inverted: {from} > {to}")]
    InvalidRange { from: NaiveDate, to: NaiveDate },
}

/// Which end of the sentiment scale makes a river branch wider.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RiverOrientation {
    /// `(S + 1) / 2`: negative labels (larger S) are wider.
    #[default]
    NegativeWide,
    /// `(1 - S) / 2`: positive labels are wider.
    PositiveWide,
}

/// Maps a label's sentiment score onto `[0, 1]`.
pub fn score_sen(s: f64, orientation: RiverOrientation) -> f64 {
    let s = s.clamp(-1.0, 1.0);
    match orientation {
        RiverOrientation::NegativeWide => (s + 1.0) / 2.0,
        RiverOrientation::PositiveWide => (1.0 - s) / 2.0,
    }
}

/// `sum_a ln(Count(a)) * Score_sen(a)` over `(count, S(a))` pairs, clamped
/// at zero from below.
pub fn river_width(labels: &[(usize, f64)], orientation: RiverOrientation) -> f64 {
    let mut width = 0.0;
    for &(count, s) in labels {
        width += libm::log(count.max(1) as f64) * score_sen(s, orientation);
    }
    width.max(0.0)
}

/// Mean clamped score of the label's words that the scorer knows; `None`
/// when neither word can be scored.
pub fn phrase_sentiment(label: &PhraseLabel, scorer: &Scorer<'_>) -> Option<f64> {
    let scores: Vec<f64> = label
        .words
        .iter()
        .filter_map(|w| scorer.score(w).ok())
        .map(|s| s.score)
        .collect();
    if scores.is_empty() {
        return None;
    }
    Some((scores.iter().sum::<f64>() / scores.len() as f64).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiverSlice {
    pub version_index: usize,
    pub widths: Vec<f64>,
    pub emerging: Vec<bool>,
}

/// Width inputs of one topic: `(count, S(a))` for each scored phrase label.
/// Labels without a sentiment contribute nothing.
pub fn width_inputs(phrases: &[PhraseLabel]) -> Vec<(usize, f64)> {
    phrases
        .iter()
        .filter_map(|p| p.sentiment.map(|s| (p.count, s)))
        .collect()
}

/// One slice per version; `versions[t]` lists the topic summaries of
/// version `t` in topic order.
pub fn build_river(versions: &[Vec<TopicSummary>], orientation: RiverOrientation) -> Vec<RiverSlice> {
    versions
        .iter()
        .enumerate()
        .map(|(t, topics)| RiverSlice {
            version_index: t,
            widths: topics
                .iter()
                .map(|s| river_width(&width_inputs(&s.phrase_labels), orientation))
                .collect(),
            emerging: topics.iter().map(|s| s.emerging).collect(),
        })
        .collect()
}

/// Word colour class: one of the eight sentiment labels, or neutral for
/// words without a score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CloudLabel {
    StronglyPositive,
    Positive,
    WeaklyPositive,
    SlightlyPositive,
    SlightlyNegative,
    WeaklyNegative,
    Negative,
    StronglyNegative,
    Neutral,
}

impl From<SentimentLabel> for CloudLabel {
    fn from(l: SentimentLabel) -> Self {
        match l {
            SentimentLabel::StronglyPositive => Self::StronglyPositive,
            SentimentLabel::Positive => Self::Positive,
            SentimentLabel::WeaklyPositive => Self::WeaklyPositive,
            SentimentLabel::SlightlyPositive => Self::SlightlyPositive,
            SentimentLabel::SlightlyNegative => Self::SlightlyNegative,
            SentimentLabel::WeaklyNegative => Self::WeaklyNegative,
            SentimentLabel::Negative => Self::Negative,
            SentimentLabel::StronglyNegative => Self::StronglyNegative,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordCloudEntry {
    pub word: String,
    pub weight: f64,
    pub label: CloudLabel,
}

fn word_label(summary: &TopicSummary, word: &str) -> CloudLabel {
    summary
        .word_sentiments
        .get(word)
        .map_or(CloudLabel::Neutral, |s| s.label.into())
}

pub fn word_cloud(summary: &TopicSummary) -> Vec<WordCloudEntry> {
    summary
        .top_words
        .iter()
        .take(TOP_WORDS)
        .map(|w| WordCloudEntry {
            word: w.word.clone(),
            weight: w.probability,
            label: word_label(summary, &w.word),
        })
        .collect()
}

/// A topic word occurrence in review text, as a byte range.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Highlight {
    pub start: usize,
    pub end: usize,
    /// The stem the surface token matched.
    pub word: String,
    pub label: CloudLabel,
}

/// Marks surface words of `text` whose stem is one of the topic's top words.
pub fn highlights(text: &str, summary: &TopicSummary) -> Vec<Highlight> {
    let top: BTreeMap<&str, CloudLabel> = summary
        .top_words
        .iter()
        .take(TOP_WORDS)
        .map(|w| (w.word.as_str(), word_label(summary, &w.word)))
        .collect();
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices().chain(core::iter::once((text.len(), ' '))) {
        match (c.is_alphanumeric(), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if let Some(stem) = normalize_word(&text[s..i]) {
                    if let Some(&label) = top.get(stem.as_str()) {
                        out.push(Highlight {
                            start: s,
                            end: i,
                            word: stem,
                            label,
                        });
                    }
                }
                start = None;
            }
            _ => {}
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrioritizedReview {
    pub review: RawReview,
    pub relevance: f64,
    pub highlights: Vec<Highlight>,
}

/// Relevance descending, then post date descending, then review id ascending.
pub fn priority_order(a: &PrioritizedReview, b: &PrioritizedReview) -> Ordering {
    b.relevance
        .total_cmp(&a.relevance)
        .then_with(|| b.review.post_date.cmp(&a.review.post_date))
        .then_with(|| a.review.review_id.cmp(&b.review.review_id))
}

/// Reviews of a version whose proportion of topic `k` reaches `threshold`.
/// `theta` maps review ids to topic proportions; reviews the topic model
/// did not see (no modelable tokens) are left out.
pub fn prioritize(
    reviews: &[RawReview],
    theta: &BTreeMap<usize, Vec<f64>>,
    summary: &TopicSummary,
    threshold: f64,
) -> Vec<PrioritizedReview> {
    let k = summary.topic_id;
    let mut out: Vec<PrioritizedReview> = reviews
        .iter()
        .filter_map(|r| {
            let relevance = *theta.get(&r.review_id)?.get(k)?;
            (relevance >= threshold).then(|| PrioritizedReview {
                highlights: highlights(&r.text, summary),
                review: r.clone(),
                relevance,
            })
        })
        .collect();
    out.sort_by(priority_order);
    out
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReviewQuery {
    pub text: Option<String>,
    pub min_rating: Option<f64>,
    pub from: Option<NaiveDate>,
    pub to: Option<NaiveDate>,
}

impl ReviewQuery {
    pub fn matches(&self, r: &RawReview) -> bool {
        if let Some(t) = &self.text {
            if !r.text.to_lowercase().contains(&t.to_lowercase()) {
                return false;
            }
        }
        if self.min_rating.is_some_and(|m| r.rating < m) {
            return false;
        }
        if self.from.is_some_and(|f| r.post_date < f) {
            return false;
        }
        if self.to.is_some_and(|t| r.post_date > t) {
            return false;
        }
        true
    }
}

/// Conjunctive filter over a listing; order is preserved.
pub fn search(
    listing: &[PrioritizedReview],
    query: &ReviewQuery,
) -> Result<Vec<PrioritizedReview>, AnalyticsError> {
    if let (Some(from), Some(to)) = (query.from, query.to) {
        if from > to {
            return Err(AnalyticsError::InvalidRange { from, to });
        }
    }
    Ok(listing
        .iter()
        .filter(|p| query.matches(&p.review))
        .cloned()
        .collect())
}
