//! Per-app word vectors trained with skip-gram negative sampling (SGNS).
//!
//! Training can start from pretrained vectors: any vocabulary word found in
//! the pretrained file starts from that row, the rest start uniform in
//! `[-0.5/d, 0.5/d]`. Context (output) vectors start at zero.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::preprocess::{porter_stem, CleanReview};

/// Corpora below this many tokens train with `min_count = 1`.
pub const SMALL_CORPUS_TOKENS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EmbeddingError {
    #[error("no token reaches the minimum count")]
    EmptyVocab,
    #[error("pretrained vectors have dimension {found}, expected {expected}")]
    DimMismatch { expected: usize, found: usize },
    #[error("word {0:?} is not in the vocabulary")]
    OutOfVocab(String),
    #[error("word {0:?} has a zero vector")]
    ZeroVector(String),
    #[error("vector file line {line}: {reason}")]
    Format { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Vocab {
    words: Vec<String>,
    counts: Vec<u64>,
    #[serde(skip)]
    index: BTreeMap<String, usize>,
}

impl Vocab {
    fn from_entries(entries: Vec<(String, u64)>) -> Self {
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, (w, _))| (w.clone(), i))
            .collect();
        let (words, counts) = entries.into_iter().unzip();
        Self {
            words,
            counts,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn word(&self, i: usize) -> &str {
        &self.words[i]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn count(&self, i: usize) -> u64 {
        self.counts[i]
    }
}

/// Tokens with frequency >= `min_count`, by descending frequency then
/// alphabetically.
pub fn build_vocab(corpus: &[CleanReview], min_count: usize) -> Result<Vocab, EmbeddingError> {
    let min_count = min_count.max(1) as u64;
    let mut freq: BTreeMap<&str, u64> = BTreeMap::new();
    for r in corpus {
        for t in &r.tokens {
            *freq.entry(t.as_str()).or_default() += 1;
        }
    }
    let mut entries: Vec<(String, u64)> = freq
        .into_iter()
        .filter(|&(_, c)| c >= min_count)
        .map(|(w, c)| (w.to_string(), c))
        .collect();
    if entries.is_empty() {
        return Err(EmbeddingError::EmptyVocab);
    }
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(Vocab::from_entries(entries))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SgnsConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub lr0: f64,
    pub min_count: usize,
    pub seed: u64,
}

impl Default for SgnsConfig {
    fn default() -> Self {
        Self {
            dim: 100,
            window: 5,
            negatives: 5,
            epochs: 5,
            lr0: 0.025,
            min_count: 5,
            seed: 1,
        }
    }
}

/// Word vectors in the common text format: one token followed by `d`
/// space-separated decimals per line.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PretrainedVectors {
    pub dim: usize,
    pub rows: Vec<(String, Vec<f64>)>,
}

impl PretrainedVectors {
    pub fn parse(text: &str) -> Result<Self, EmbeddingError> {
        let mut dim = None;
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let err = |reason: &str| EmbeddingError::Format {
                line: i + 1,
                reason: reason.to_string(),
            };
            let mut fields = line.split(' ').filter(|f| !f.is_empty());
            let word = fields.next().ok_or_else(|| err("missing token"))?;
            let values = fields
                .map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite()))
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| err("non-numeric or non-finite value"))?;
            if values.is_empty() {
                return Err(err("no values"));
            }
            match dim {
                None => dim = Some(values.len()),
                Some(d) if d != values.len() => return Err(err("inconsistent dimension")),
                _ => {}
            }
            rows.push((word.to_string(), values));
        }
        Ok(Self {
            dim: dim.unwrap_or(0),
            rows,
        })
    }

    /// Row for each word: exact token match first, otherwise the first row
    /// whose Porter stem equals the word.
    fn lookup(&self) -> BTreeMap<String, usize> {
        let mut exact: BTreeMap<String, usize> = BTreeMap::new();
        let mut stemmed: BTreeMap<String, usize> = BTreeMap::new();
        for (i, (w, _)) in self.rows.iter().enumerate() {
            exact.entry(w.clone()).or_insert(i);
            let lower = w.to_lowercase();
            if lower.bytes().all(|b| b.is_ascii_alphanumeric()) {
                stemmed.entry(porter_stem(&lower)).or_insert(i);
            }
        }
        for (w, i) in stemmed {
            exact.entry(w).or_insert(i);
        }
        exact
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingModel {
    dim: usize,
    vocab: Vocab,
    /// Input vectors, row-major `|vocab| x dim`.
    vectors: Vec<f64>,
    /// Output vectors; empty for models loaded from a vector file.
    #[serde(skip)]
    context_vectors: Vec<f64>,
}

impl EmbeddingModel {
    /// Builds a model from explicit rows, e.g. hand-constructed test spaces.
    pub fn from_rows<S: Into<String>>(rows: Vec<(S, Vec<f64>)>) -> Result<Self, EmbeddingError> {
        let dim = rows.first().map(|r| r.1.len()).unwrap_or(0);
        let mut entries = Vec::with_capacity(rows.len());
        let mut vectors = Vec::with_capacity(rows.len() * dim);
        for (w, v) in rows {
            if v.len() != dim {
                return Err(EmbeddingError::DimMismatch {
                    expected: dim,
                    found: v.len(),
                });
            }
            entries.push((w.into(), 0));
            vectors.extend(v);
        }
        if entries.is_empty() {
            return Err(EmbeddingError::EmptyVocab);
        }
        Ok(Self {
            dim,
            vocab: Vocab::from_entries(entries),
            vectors,
            context_vectors: Vec::new(),
        })
    }

    pub fn from_pretrained(p: &PretrainedVectors) -> Result<Self, EmbeddingError> {
        Self::from_rows(p.rows.clone())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn vector(&self, word: &str) -> Option<&[f64]> {
        let i = self.vocab.get(word)?;
        Some(self.row(i))
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    /// Scales every vector by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.vectors.iter_mut().for_each(|x| *x *= factor);
        out
    }

    /// Writes the input vectors in the text vector format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, w) in self.vocab.words.iter().enumerate() {
            out.push_str(w);
            for x in self.row(i) {
                let _ = write!(out, " {x}");
            }
            out.push('\n');
        }
        out
    }

    pub fn cosine(&self, w1: &str, w2: &str) -> Result<f64, EmbeddingError> {
        let a = self
            .vector(w1)
            .ok_or_else(|| EmbeddingError::OutOfVocab(w1.into()))?;
        let b = self
            .vector(w2)
            .ok_or_else(|| EmbeddingError::OutOfVocab(w2.into()))?;
        cosine_vectors(a, b).ok_or_else(|| {
            let zero = if norm(a) == 0.0 { w1 } else { w2 };
            EmbeddingError::ZeroVector(zero.into())
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Cosine similarity clamped to [-1, 1]; `None` if either vector is zero.
pub fn cosine_vectors(a: &[f64], b: &[f64]) -> Option<f64> {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

/// `ln(sigmoid(x))`, stable for large |x|.
fn log_sigmoid(x: f64) -> f64 {
    -(libm::fmax(-x, 0.0) + libm::log1p(libm::exp(-libm::fabs(x))))
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// SGNS loss of one (center, context, negatives) example:
/// `-ln s(u_o . v_c) - sum_i ln s(-u_i . v_c)`.
pub fn pair_loss(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> f64 {
    let mut loss = -log_sigmoid(dot(context, center));
    for n in negatives {
        loss -= log_sigmoid(-dot(n, center));
    }
    loss
}

/// Gradients of [`pair_loss`].
#[derive(Debug, Clone, PartialEq)]
pub struct PairGradient {
    pub center: Vec<f64>,
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

pub fn pair_gradient(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> PairGradient {
    let g_pos = sigmoid(dot(context, center)) - 1.0;
    let mut g_center: Vec<f64> = context.iter().map(|u| g_pos * u).collect();
    let g_context = center.iter().map(|v| g_pos * v).collect();
    let mut g_negs = Vec::with_capacity(negatives.len());
    for n in negatives {
        let g = sigmoid(dot(n, center));
        for (gc, u) in g_center.iter_mut().zip(n.iter()) {
            *gc += g * u;
        }
        g_negs.push(center.iter().map(|v| g * v).collect());
    }
    PairGradient {
        center: g_center,
        context: g_context,
        negatives: g_negs,
    }
}

/// Cumulative unigram^0.75 distribution for negative sampling.
struct NoiseTable {
    cdf: Vec<f64>,
}

impl NoiseTable {
    fn new(vocab: &Vocab) -> Self {
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = vocab
            .counts
            .iter()
            .map(|&c| {
                acc += libm::pow(c as f64, 0.75);
                acc
            })
            .collect();
        let total = acc;
        cdf.iter_mut().for_each(|x| *x /= total);
        Self { cdf }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        let u: f64 = rng.random();
        self.cdf
            .partition_point(|&x| x <= u)
            .min(self.cdf.len() - 1)
    }
}

struct Trainer<'a> {
    config: &'a SgnsConfig,
    docs: Vec<Vec<usize>>,
    noise: NoiseTable,
    rng: ChaCha8Rng,
    model: EmbeddingModel,
}

impl Trainer<'_> {
    fn total_tokens(&self) -> usize {
        self.docs.iter().map(Vec::len).sum()
    }

    /// Mean pair loss over every (center, context) pair with negatives from
    /// a fixed stream, so successive evaluations are comparable.
    fn mean_loss(&self) -> f64 {
        let dim = self.model.dim;
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed ^ 0x5eed_1055);
        let mut total = 0.0;
        let mut n = 0usize;
        for doc in &self.docs {
            for (pos, &c) in doc.iter().enumerate() {
                let lo = pos.saturating_sub(self.config.window);
                let hi = (pos + self.config.window + 1).min(doc.len());
                for (opos, &o) in doc.iter().enumerate().take(hi).skip(lo) {
                    if opos == pos {
                        continue;
                    }
                    let negs: Vec<&[f64]> = (0..self.config.negatives)
                        .map(|_| self.noise.sample(&mut rng))
                        .filter(|&j| j != o)
                        .map(|j| &self.model.context_vectors[j * dim..(j + 1) * dim])
                        .collect();
                    total += pair_loss(
                        self.model.row(c),
                        &self.model.context_vectors[o * dim..(o + 1) * dim],
                        &negs,
                    );
                    n += 1;
                }
            }
        }
        if n == 0 {
            0.0
        } else {
            total / n as f64
        }
    }

    fn epoch(&mut self, epoch: usize) {
        let dim = self.model.dim;
        let cfg = self.config;
        let total = (self.total_tokens() * cfg.epochs).max(1) as f64;
        let mut seen = self.total_tokens() * epoch;
        let mut grad_center = vec![0.0; dim];
        let mut targets: Vec<(usize, f64)> = Vec::with_capacity(cfg.negatives + 1);

        for d in 0..self.docs.len() {
            let len = self.docs[d].len();
            for pos in 0..len {
                let lr = cfg.lr0 * (1.0 - 0.99 * (seen as f64 / total));
                seen += 1;
                let c = self.docs[d][pos];
                let lo = pos.saturating_sub(cfg.window);
                let hi = (pos + cfg.window + 1).min(len);
                for opos in lo..hi {
                    if opos == pos {
                        continue;
                    }
                    let o = self.docs[d][opos];
                    targets.clear();
                    targets.push((o, 1.0));
                    for _ in 0..cfg.negatives {
                        let j = self.noise.sample(&mut self.rng);
                        if j != o {
                            targets.push((j, 0.0));
                        }
                    }
                    grad_center.iter_mut().for_each(|g| *g = 0.0);
                    let center = &mut self.model.vectors[c * dim..(c + 1) * dim];
                    for &(j, label) in &targets {
                        let ctx = &mut self.model.context_vectors[j * dim..(j + 1) * dim];
                        // d(loss)/d(score) is sigmoid(score) - label for both
                        // positive and negative targets.
                        let g = sigmoid(dot(ctx, center)) - label;
                        for i in 0..dim {
                            grad_center[i] += g * ctx[i];
                            ctx[i] -= lr * g * center[i];
                        }
                    }
                    for i in 0..dim {
                        center[i] -= lr * grad_center[i];
                    }
                }
            }
        }
    }
}

/// Per-epoch mean pair loss; entry 0 is measured before training.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingReport {
    pub min_count: usize,
    pub epoch_losses: Vec<f64>,
}

/// `min_count` after the small-corpus rule.
pub fn effective_min_count(corpus: &[CleanReview], config: &SgnsConfig) -> usize {
    let tokens: usize = corpus.iter().map(|r| r.tokens.len()).sum();
    if tokens < SMALL_CORPUS_TOKENS {
        1
    } else {
        config.min_count.max(1)
    }
}

pub fn train_sgns(
    corpus: &[CleanReview],
    init: Option<&PretrainedVectors>,
    config: &SgnsConfig,
) -> Result<EmbeddingModel, EmbeddingError> {
    train(corpus, init, config, false).map(|(m, _)| m)
}

/// Like [`train_sgns`], also measuring the mean pair loss after every epoch.
pub fn train_sgns_tracked(
    corpus: &[CleanReview],
    init: Option<&PretrainedVectors>,
    config: &SgnsConfig,
) -> Result<(EmbeddingModel, TrainingReport), EmbeddingError> {
    train(corpus, init, config, true)
}

/// The model as it stands before the first update.
pub fn initial_model(
    corpus: &[CleanReview],
    init: Option<&PretrainedVectors>,
    config: &SgnsConfig,
) -> Result<EmbeddingModel, EmbeddingError> {
    trainer(corpus, init, config).map(|t| t.model)
}

fn trainer<'a>(
    corpus: &[CleanReview],
    init: Option<&PretrainedVectors>,
    config: &'a SgnsConfig,
) -> Result<Trainer<'a>, EmbeddingError> {
    let dim = config.dim;
    if let Some(p) = init {
        if !p.rows.is_empty() && p.dim != dim {
            return Err(EmbeddingError::DimMismatch {
                expected: dim,
                found: p.dim,
            });
        }
    }
    let vocab = build_vocab(corpus, effective_min_count(corpus, config))?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let bound = 0.5 / dim as f64;
    let mut vectors = Vec::with_capacity(vocab.len() * dim);
    let pretrained = init.map(|p| (p, p.lookup()));
    for w in vocab.words() {
        match pretrained.as_ref().and_then(|(p, l)| l.get(w).map(|&i| &p.rows[i].1)) {
            Some(row) => vectors.extend_from_slice(row),
            None => vectors.extend((0..dim).map(|_| rng.random_range(-bound..bound))),
        }
    }

    let docs = corpus
        .iter()
        .map(|r| r.tokens.iter().filter_map(|t| vocab.get(t)).collect())
        .collect();
    let noise = NoiseTable::new(&vocab);
    let context_vectors = vec![0.0; vocab.len() * dim];
    Ok(Trainer {
        config,
        docs,
        noise,
        rng,
        model: EmbeddingModel {
            dim,
            vocab,
            vectors,
            context_vectors,
        },
    })
}

fn train(
    corpus: &[CleanReview],
    init: Option<&PretrainedVectors>,
    config: &SgnsConfig,
    track: bool,
) -> Result<(EmbeddingModel, TrainingReport), EmbeddingError> {
    let mut t = trainer(corpus, init, config)?;
    let mut report = TrainingReport {
        min_count: effective_min_count(corpus, config),
        epoch_losses: Vec::new(),
    };
    if track {
        report.epoch_losses.push(t.mean_loss());
    }
    for e in 0..config.epochs {
        t.epoch(e);
        if track {
            report.epoch_losses.push(t.mean_loss());
        }
    }
    Ok((t.model, report))
}
