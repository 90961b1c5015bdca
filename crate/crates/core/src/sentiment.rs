//! Seed-word sentiment scoring.
//!
//! A word's score is its mean cosine similarity to the negative seeds minus
//! its mean similarity to the positive seeds, clamped to `[-1, 1]`. Larger
//! scores are more negative.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::embedding::{cosine_vectors, EmbeddingError, EmbeddingModel};
use crate::preprocess::normalize_word;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "positive" => Some(Self::Positive),
            "negative" => Some(Self::Negative),
            _ => None,
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Positive => "positive",
            Self::Negative => "negative",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Base,
    User,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedEntry {
    pub polarity: Polarity,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SentimentError {
    #[error("seed lexicon line {line}: {reason}")]
    LexiconFormat { line: usize, reason: String },
    #[error("seed {0:?} is listed as both positive and negative")]
    ConflictWithinRequest(String),
    #[error("seed word {0:?} has no usable form")]
    InvalidSeedWord(String),
    #[error("no usable {0} seed words in the embedding vocabulary")]
    NoUsableSeeds(Polarity),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

/// Positive and negative seed stems. Each stem carries exactly one polarity,
/// so the two sets are disjoint by construction.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SeedLexicon {
    entries: BTreeMap<String, SeedEntry>,
}

/// Diagnostics from [`load_base_seeds`].
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LexiconReport {
    /// Stems that appeared with both polarities and were dropped.
    pub conflicts: Vec<String>,
    pub empty: bool,
}

impl SeedLexicon {
    pub fn positives(&self) -> impl Iterator<Item = &str> {
        self.with_polarity(Polarity::Positive)
    }

    pub fn negatives(&self) -> impl Iterator<Item = &str> {
        self.with_polarity(Polarity::Negative)
    }

    pub fn with_polarity(&self, p: Polarity) -> impl Iterator<Item = &str> {
        self.entries
            .iter()
            .filter(move |(_, e)| e.polarity == p)
            .map(|(w, _)| w.as_str())
    }

    pub fn get(&self, stem: &str) -> Option<&SeedEntry> {
        self.entries.get(stem)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn seed_stem(word: &str) -> Option<String> {
    normalize_word(&word.to_lowercase())
}

/// Reads `word<TAB>polarity` rows. `neutral` and `both` rows are ignored.
pub fn load_base_seeds(text: &str) -> Result<(SeedLexicon, LexiconReport), SentimentError> {
    let mut seen: BTreeMap<String, BTreeSet<Polarity>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |reason: &str| SentimentError::LexiconFormat {
            line: i + 1,
            reason: reason.into(),
        };
        let (word, polarity) = line.split_once('\t').ok_or_else(|| err("expected word<TAB>polarity"))?;
        let polarity = match polarity.trim() {
            "neutral" | "both" => continue,
            p => Polarity::parse(p).ok_or_else(|| err("unknown polarity"))?,
        };
        let stem = seed_stem(word.trim()).ok_or_else(|| err("word has no usable form"))?;
        seen.entry(stem).or_default().insert(polarity);
    }

    let mut lex = SeedLexicon::default();
    let mut report = LexiconReport::default();
    for (stem, pols) in seen {
        if pols.len() > 1 {
            report.conflicts.push(stem);
            continue;
        }
        let polarity = *pols.iter().next().expect("non-empty");
        lex.entries.insert(
            stem,
            SeedEntry {
                polarity,
                provenance: Provenance::Base,
            },
        );
    }
    report.empty = lex.is_empty();
    Ok((lex, report))
}

/// Merges developer-supplied seeds; they override base polarity.
pub fn add_user_seeds(
    lex: &SeedLexicon,
    words: &[(String, Polarity)],
) -> Result<SeedLexicon, SentimentError> {
    let mut request: BTreeMap<String, Polarity> = BTreeMap::new();
    for (word, polarity) in words {
        let stem = seed_stem(word).ok_or_else(|| SentimentError::InvalidSeedWord(word.clone()))?;
        match request.get(&stem) {
            Some(p) if p != polarity => return Err(SentimentError::ConflictWithinRequest(stem)),
            _ => {
                request.insert(stem, *polarity);
            }
        }
    }
    let mut out = lex.clone();
    for (stem, polarity) in request {
        match out.entries.get(&stem) {
            Some(e) if e.polarity == polarity => {}
            _ => {
                out.entries.insert(
                    stem,
                    SeedEntry {
                        polarity,
                        provenance: Provenance::User,
                    },
                );
            }
        }
    }
    Ok(out)
}

/// The eight-level sentiment scale, ordered from most positive to most
/// negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SentimentLabel {
    StronglyPositive,
    Positive,
    WeaklyPositive,
    SlightlyPositive,
    SlightlyNegative,
    WeaklyNegative,
    Negative,
    StronglyNegative,
}

impl SentimentLabel {
    pub const ALL: [SentimentLabel; 8] = [
        Self::StronglyPositive,
        Self::Positive,
        Self::WeaklyPositive,
        Self::SlightlyPositive,
        Self::SlightlyNegative,
        Self::WeaklyNegative,
        Self::Negative,
        Self::StronglyNegative,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::StronglyPositive => "Strongly Positive",
            Self::Positive => "Positive",
            Self::WeaklyPositive => "Weakly Positive",
            Self::SlightlyPositive => "Slightly Positive",
            Self::SlightlyNegative => "Slightly Negative",
            Self::WeaklyNegative => "Weakly Negative",
            Self::Negative => "Negative",
            Self::StronglyNegative => "Strongly Negative",
        }
    }
}

impl fmt::Display for SentimentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Eight equal-width, left-closed bins over `[-1, 1]`; the last bin is
/// closed on both ends. Out-of-range input saturates.
pub fn label_of(score: f64) -> SentimentLabel {
    let bin = libm::floor((score + 1.0) / 0.25);
    let idx = if bin.is_nan() || bin < 0.0 {
        0
    } else {
        (bin as usize).min(7)
    };
    SentimentLabel::ALL[idx]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentScore {
    pub word: String,
    /// Unclamped difference of mean similarities, in `[-2, 2]`.
    pub raw: f64,
    pub score: f64,
    pub label: SentimentLabel,
}

/// Scores words against the seeds of a lexicon that are present in a model.
#[derive(Debug, Clone)]
pub struct Scorer<'a> {
    model: &'a EmbeddingModel,
    positives: Vec<&'a [f64]>,
    negatives: Vec<&'a [f64]>,
}

impl<'a> Scorer<'a> {
    /// Seeds missing from the vocabulary (or with zero vectors) are skipped.
    pub fn new(model: &'a EmbeddingModel, lex: &SeedLexicon) -> Result<Self, SentimentError> {
        let usable = |p| -> Vec<&'a [f64]> {
            lex.with_polarity(p)
                .filter_map(|w| model.vector(w))
                .filter(|v| v.iter().any(|&x| x != 0.0))
                .collect()
        };
        let positives = usable(Polarity::Positive);
        let negatives = usable(Polarity::Negative);
        if positives.is_empty() {
            return Err(SentimentError::NoUsableSeeds(Polarity::Positive));
        }
        if negatives.is_empty() {
            return Err(SentimentError::NoUsableSeeds(Polarity::Negative));
        }
        Ok(Self {
            model,
            positives,
            negatives,
        })
    }

    pub fn model(&self) -> &EmbeddingModel {
        self.model
    }

    pub fn usable_seed_counts(&self) -> (usize, usize) {
        (self.positives.len(), self.negatives.len())
    }

    pub fn score(&self, word: &str) -> Result<SentimentScore, SentimentError> {
        let v = self
            .model
            .vector(word)
            .ok_or_else(|| EmbeddingError::OutOfVocab(word.into()))?;
        let mean_sim = |seeds: &[&[f64]]| -> Result<f64, SentimentError> {
            let mut total = 0.0;
            for s in seeds {
                total += cosine_vectors(v, s).ok_or_else(|| EmbeddingError::ZeroVector(word.into()))?;
            }
            Ok(total / seeds.len() as f64)
        };
        let raw = mean_sim(&self.negatives)? - mean_sim(&self.positives)?;
        let score = raw.clamp(-1.0, 1.0);
        Ok(SentimentScore {
            word: word.into(),
            raw,
            score,
            label: label_of(score),
        })
    }
}

/// One-shot scoring of a single word.
pub fn score_word(
    model: &EmbeddingModel,
    lex: &SeedLexicon,
    word: &str,
) -> Result<SentimentScore, SentimentError> {
    Scorer::new(model, lex)?.score(word)
}
