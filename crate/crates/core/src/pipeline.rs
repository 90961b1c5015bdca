//! End-to-end run over one app's reviews: preprocessing, opinion words,
//! embeddings and seed scoring, per-version topics, and the analytics
//! projections, collected into one serializable [`Snapshot`].

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::analytics::{
    build_river, phrase_sentiment, prioritize, word_cloud, RiverOrientation, RiverSlice, WordCloudEntry,
};
use crate::embedding::{train_sgns, EmbeddingError, PretrainedVectors, SgnsConfig};
use crate::ingest::{group_by_version, parse_reviews, RawReview, Version};
use crate::opinion::{
    aspect_frequencies, extract_document_pairs, opinion_vocabulary, orphan_review_ids, parse_conllu,
    ConlluFormatError,
};
use crate::preprocess::{preprocess_review, CleanReview};
use crate::sentiment::{add_user_seeds, load_base_seeds, Polarity, Scorer, SentimentError};
use crate::topics::{
    detect_emerging, fit_version, label_topic, topic_sentiment, TopWord, TopicConfig, TopicDoc, TopicError,
    TopicState, TopicSummary, TOP_WORDS,
};

/// Seed lexicon used when a project supplies none.
pub const BUILTIN_SEEDS: &str = include_str!("../data/base_seeds.tsv");

/// Aspects reported in the snapshot, most frequent first.
pub const MAX_ASPECTS: usize = 50;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedAddition {
    pub word: String,
    pub polarity: Polarity,
}

/// Every tunable of a run. Missing fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectConfig {
    /// Topics per version, at least 2.
    pub k: usize,
    /// Minimum topic proportion for a review to be listed under a topic.
    pub review_threshold: f64,
    /// Previous versions feeding the prior and the emerging-topic history.
    pub window: usize,
    /// Emerging-topic sensitivity in standard deviations.
    pub lambda: f64,
    /// Decay of older versions' weight in the chained prior, in `(0, 1]`.
    pub rho: f64,
    pub prior_strength: f64,
    pub alpha: Option<f64>,
    pub beta0: f64,
    pub iterations: usize,
    pub min_word_count: usize,
    /// Master seed; the embedding and every version's sampler derive from it.
    pub seed: u64,
    pub river_orientation: RiverOrientation,
    /// `embedding.seed` is overwritten by `seed`. When pretrained vectors are
    /// supplied, `embedding.dim` follows their dimension.
    pub embedding: SgnsConfig,
    pub seed_words: Vec<SeedAddition>,
}

impl Default for ProjectConfig {
    fn default() -> Self {
        let t = TopicConfig::default();
        Self {
            k: t.k,
            review_threshold: 0.2,
            window: t.window,
            lambda: 2.0,
            rho: t.chain_decay,
            prior_strength: t.prior_strength,
            alpha: t.alpha,
            beta0: t.beta0,
            iterations: t.iterations,
            min_word_count: t.min_word_count,
            seed: 1,
            river_orientation: RiverOrientation::default(),
            embedding: SgnsConfig::default(),
            seed_words: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid config field {field}: {reason}")]
pub struct ConfigError {
    pub field: &'static str,
    pub reason: &'static str,
}

impl ProjectConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let check = |ok: bool, field, reason| if ok { Ok(()) } else { Err(ConfigError { field, reason }) };
        check(self.k >= 2, "k", "must be at least 2")?;
        check(
            (0.0..=1.0).contains(&self.review_threshold),
            "review_threshold",
            "must lie in [0, 1]",
        )?;
        check(self.lambda.is_finite() && self.lambda >= 0.0, "lambda", "must be finite and >= 0")?;
        check(self.rho > 0.0 && self.rho <= 1.0, "rho", "must lie in (0, 1]")?;
        check(
            self.prior_strength.is_finite() && self.prior_strength >= 0.0,
            "prior_strength",
            "must be finite and >= 0",
        )?;
        check(
            self.alpha.is_none_or(|a| a.is_finite() && a > 0.0),
            "alpha",
            "must be positive",
        )?;
        check(self.beta0.is_finite() && self.beta0 > 0.0, "beta0", "must be positive")?;
        check(self.iterations >= 1, "iterations", "must be at least 1")?;
        check(self.min_word_count >= 1, "min_word_count", "must be at least 1")?;
        let e = &self.embedding;
        check(e.dim >= 1, "embedding.dim", "must be at least 1")?;
        check(e.window >= 1, "embedding.window", "must be at least 1")?;
        check(e.negatives >= 1, "embedding.negatives", "must be at least 1")?;
        check(e.epochs >= 1, "embedding.epochs", "must be at least 1")?;
        check(e.lr0.is_finite() && e.lr0 > 0.0, "embedding.lr0", "must be positive")?;
        Ok(())
    }

    pub fn topic_config(&self, version_index: usize) -> TopicConfig {
        TopicConfig {
            k: self.k,
            window: self.window,
            alpha: self.alpha,
            beta0: self.beta0,
            chain_decay: self.rho,
            prior_strength: self.prior_strength,
            iterations: self.iterations,
            min_word_count: self.min_word_count,
            seed: version_seed(self.seed, version_index),
        }
    }
}

/// Sampler seed of version `t`.
pub fn version_seed(seed: u64, t: usize) -> u64 {
    seed ^ (t as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Raw file contents of a run.
#[derive(Debug, Clone, Copy, Default)]
pub struct PipelineInputs<'a> {
    pub reviews: &'a str,
    pub conllu: &'a str,
    /// Base seed lexicon; [`BUILTIN_SEEDS`] when absent.
    pub seeds: Option<&'a str>,
    pub vectors: Option<&'a str>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("no review line could be parsed")]
    NoReviews,
    #[error(transparent)]
    Conllu(#[from] ConlluFormatError),
    #[error("parses reference unknown review ids {0:?}")]
    OrphanReviewIds(Vec<usize>),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Sentiment(#[from] SentimentError),
    #[error("version {version}: {source}")]
    Topic { version: String, source: TopicError },
}

impl PipelineError {
    /// Stable machine-readable name of the failure.
    pub fn code(&self) -> &'static str {
        match self {
            Self::Config(_) => "InvalidConfig",
            Self::NoReviews => "NoReviews",
            Self::Conllu(_) => "ConlluFormatError",
            Self::OrphanReviewIds(_) => "OrphanReviewIds",
            Self::Embedding(EmbeddingError::EmptyVocab) => "EmptyVocab",
            Self::Embedding(EmbeddingError::DimMismatch { .. }) => "DimMismatch",
            Self::Embedding(EmbeddingError::Format { .. }) => "VectorFormatError",
            Self::Embedding(_) => "EmbeddingError",
            Self::Sentiment(SentimentError::NoUsableSeeds(_)) => "NoUsableSeeds",
            Self::Sentiment(SentimentError::LexiconFormat { .. }) => "LexiconFormatError",
            Self::Sentiment(SentimentError::ConflictWithinRequest(_)) => "ConflictWithinRequest",
            Self::Sentiment(SentimentError::InvalidSeedWord(_)) => "InvalidSeedWord",
            Self::Sentiment(_) => "SentimentError",
            Self::Topic { .. } => "TopicError",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunStats {
    pub total_lines: usize,
    pub parsed_reviews: usize,
    /// `line <n>: <kind>` rows of rejected lines.
    pub skipped: Vec<String>,
    pub empty_after_cleaning: Vec<usize>,
    pub opinion_pairs: usize,
    pub embedding_vocab: usize,
    pub usable_positive_seeds: usize,
    pub usable_negative_seeds: usize,
    pub lexicon_conflicts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicResult {
    pub summary: TopicSummary,
    pub word_cloud: Vec<WordCloudEntry>,
    /// Review ids at the configured threshold, in priority order.
    pub prioritized: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VersionResult {
    pub version: Version,
    pub index_t: usize,
    pub reviews: Vec<RawReview>,
    /// Why the version has no topics, when it could not be modeled.
    pub unmodeled: Option<String>,
    pub log_likelihood: Option<(f64, f64)>,
    pub mean_proportions: Vec<f64>,
    /// Topic proportions keyed by review id.
    pub theta: BTreeMap<usize, Vec<f64>>,
    pub topics: Vec<TopicResult>,
}

/// Result of one run, exported as a single JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub config: ProjectConfig,
    pub stats: RunStats,
    pub aspects: Vec<(String, usize)>,
    pub versions: Vec<VersionResult>,
    pub river: Vec<RiverSlice>,
}

impl Snapshot {
    pub fn version(&self, t: usize) -> Option<&VersionResult> {
        self.versions.get(t)
    }

    pub fn topic(&self, t: usize, k: usize) -> Option<&TopicResult> {
        self.versions.get(t)?.topics.get(k)
    }
}

pub fn run_pipeline(inputs: PipelineInputs<'_>, config: &ProjectConfig) -> Result<Snapshot, PipelineError> {
    config.validate()?;
    let mut stats = RunStats::default();

    let parsed = parse_reviews(inputs.reviews);
    stats.total_lines = parsed.total_lines;
    stats.parsed_reviews = parsed.reviews.len();
    stats.skipped = parsed.skipped.iter().map(ToString::to_string).collect();
    if parsed.reviews.is_empty() {
        return Err(PipelineError::NoReviews);
    }
    let known: BTreeSet<usize> = parsed.reviews.iter().map(|r| r.review_id).collect();
    let corpora = group_by_version(parsed.reviews);

    let clean: Vec<Vec<CleanReview>> = corpora
        .iter()
        .map(|c| {
            c.reviews
                .iter()
                .filter_map(|r| match preprocess_review(r) {
                    Ok(cr) => Some(cr),
                    Err(_) => {
                        stats.empty_after_cleaning.push(r.review_id);
                        None
                    }
                })
                .collect()
        })
        .collect();
    stats.empty_after_cleaning.sort_unstable();

    let sentences = parse_conllu(inputs.conllu)?;
    let orphans = orphan_review_ids(&sentences, &known);
    if !orphans.is_empty() {
        return Err(PipelineError::OrphanReviewIds(orphans));
    }
    let pairs = extract_document_pairs(&sentences);
    stats.opinion_pairs = pairs.len();
    let opinion_vocab = opinion_vocabulary(&pairs);
    let mut aspects = aspect_frequencies(&pairs);
    aspects.truncate(MAX_ASPECTS);

    let pretrained = inputs.vectors.map(PretrainedVectors::parse).transpose()?;
    let mut sgns = config.embedding.clone();
    sgns.seed = config.seed;
    if let Some(p) = pretrained.as_ref().filter(|p| !p.rows.is_empty()) {
        sgns.dim = p.dim;
    }
    let all_clean: Vec<CleanReview> = clean.iter().flatten().cloned().collect();
    let model = train_sgns(&all_clean, pretrained.as_ref(), &sgns)?;
    stats.embedding_vocab = model.vocab().len();

    let (base, report) = load_base_seeds(inputs.seeds.unwrap_or(BUILTIN_SEEDS))?;
    stats.lexicon_conflicts = report.conflicts;
    let additions: Vec<(String, Polarity)> =
        config.seed_words.iter().map(|s| (s.word.clone(), s.polarity)).collect();
    let lexicon = add_user_seeds(&base, &additions)?;
    let scorer = Scorer::new(&model, &lexicon)?;
    (stats.usable_positive_seeds, stats.usable_negative_seeds) = scorer.usable_seed_counts();

    let mut history: Vec<TopicState> = Vec::new();
    let mut versions = Vec::with_capacity(corpora.len());
    let mut river = Vec::with_capacity(corpora.len());
    for (corpus, clean) in corpora.into_iter().zip(&clean) {
        let t = corpus.index_t;
        let cfg = config.topic_config(t);
        let docs: Vec<TopicDoc> = clean
            .iter()
            .map(|c| TopicDoc {
                review_id: c.review_id,
                tokens: c.tokens.clone(),
            })
            .collect();
        let prev = &history[history.len().saturating_sub(config.window)..];
        let state = match fit_version(&docs, t, prev, &cfg) {
            Ok(s) => s,
            Err(e @ (TopicError::EmptyCorpus | TopicError::KTooLarge { .. })) => {
                river.push(RiverSlice {
                    version_index: t,
                    widths: vec![0.0; config.k],
                    emerging: vec![false; config.k],
                });
                versions.push(VersionResult {
                    version: corpus.version,
                    index_t: t,
                    reviews: corpus.reviews,
                    unmodeled: Some(e.to_string()),
                    log_likelihood: None,
                    mean_proportions: Vec::new(),
                    theta: BTreeMap::new(),
                    topics: Vec::new(),
                });
                continue;
            }
            Err(source) => {
                return Err(PipelineError::Topic {
                    version: corpus.version.to_string(),
                    source,
                })
            }
        };

        let emerging = detect_emerging(&state, &history, config.window, config.lambda);
        let summaries: Vec<TopicSummary> = (0..config.k)
            .map(|k| summarize(&state, clean, k, emerging.contains(&k), &scorer, &opinion_vocab))
            .collect();
        let mut slice = build_river(core::slice::from_ref(&summaries), config.river_orientation)
            .pop()
            .expect("one slice");
        slice.version_index = t;
        river.push(slice);

        let theta = state.theta_map();
        let topics = summaries
            .into_iter()
            .map(|summary| TopicResult {
                word_cloud: word_cloud(&summary),
                prioritized: prioritize(&corpus.reviews, &theta, &summary, config.review_threshold)
                    .iter()
                    .map(|p| p.review.review_id)
                    .collect(),
                summary,
            })
            .collect();
        versions.push(VersionResult {
            version: corpus.version,
            index_t: t,
            reviews: corpus.reviews,
            unmodeled: None,
            log_likelihood: Some((state.initial_log_likelihood, state.final_log_likelihood)),
            mean_proportions: state.mean_proportions(),
            theta,
            topics,
        });
        history.push(state);
    }

    Ok(Snapshot {
        config: ProjectConfig {
            embedding: sgns,
            ..config.clone()
        },
        stats,
        aspects,
        versions,
        river,
    })
}

fn summarize(
    state: &TopicState,
    corpus: &[CleanReview],
    k: usize,
    emerging: bool,
    scorer: &Scorer<'_>,
    opinion_vocab: &BTreeSet<String>,
) -> TopicSummary {
    let top = state.top_words(k, TOP_WORDS);
    let mut labels = label_topic(state, corpus, k);
    for p in &mut labels.phrases {
        p.sentiment = phrase_sentiment(p, scorer);
    }
    let sentiment = topic_sentiment(&top, scorer, opinion_vocab);
    TopicSummary {
        topic_id: k,
        top_words: top
            .into_iter()
            .map(|(word, probability)| TopWord { word, probability })
            .collect(),
        phrase_labels: labels.phrases,
        sentences: labels.sentences,
        emerging,
        sentiment_label: sentiment.label,
        word_sentiments: sentiment.words,
        no_scorable_words: sentiment.no_scorable_words,
    }
}

/// Short human-readable run summary.
pub fn describe(snapshot: &Snapshot) -> String {
    let modeled = snapshot.versions.iter().filter(|v| v.unmodeled.is_none()).count();
    format!(
        "{} reviews ({} skipped lines), {} versions ({} modeled), {} topics each",
        snapshot.stats.parsed_reviews,
        snapshot.stats.skipped.len(),
        snapshot.versions.len(),
        modeled,
        snapshot.config.k
    )
}
