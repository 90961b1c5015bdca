//! Collapsed Gibbs LDA with topic-word priors chained from earlier versions.
//!
//! For version `t` the prior of word `w` in topic `k` is
//!
//! ```text
//! beta_k(w) = beta0 + s * sum_{i=1..m} gamma_i * phi_k^{t-i}(w),
//! gamma_i   = rho^i / sum_{j=1..m} rho^j,   m = min(W, #previous versions)
//! ```
//!
//! so topic `k` at `t` continues topic `k` of the preceding versions.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::stopwords::stemmed_stopwords;
use super::TopicError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TopicConfig {
    /// Number of topics.
    pub k: usize,
    /// How many previous versions feed the prior (and the emerging-topic
    /// history).
    pub window: usize,
    /// Symmetric document-topic prior; `None` means `50 / k`.
    pub alpha: Option<f64>,
    pub beta0: f64,
    /// Geometric decay of older versions' influence.
    pub chain_decay: f64,
    /// Total pseudo-count mass the chained prior adds per topic.
    pub prior_strength: f64,
    pub iterations: usize,
    /// Minimum in-version frequency for a word to enter the vocabulary.
    pub min_word_count: usize,
    pub seed: u64,
}

impl Default for TopicConfig {
    fn default() -> Self {
        Self {
            k: 10,
            window: 3,
            alpha: None,
            beta0: 0.01,
            chain_decay: 0.5,
            prior_strength: 10.0,
            iterations: 500,
            min_word_count: 2,
            seed: 1,
        }
    }
}

impl TopicConfig {
    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.k as f64)
    }
}

/// One review's stemmed tokens as fed to the topic model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicDoc {
    pub review_id: usize,
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicState {
    pub version_index: usize,
    pub k: usize,
    /// Alphabetically sorted modeling vocabulary.
    pub vocab: Vec<String>,
    /// `k x |vocab|` topic-word distributions.
    pub phi: Vec<Vec<f64>>,
    /// Review ids of the modeled documents, parallel to `theta`.
    pub doc_ids: Vec<usize>,
    pub theta: Vec<Vec<f64>>,
    /// Joint log-likelihood `ln p(w, z)` of the initial and final samples.
    pub initial_log_likelihood: f64,
    pub final_log_likelihood: f64,
}

impl TopicState {
    pub fn word_index(&self, word: &str) -> Option<usize> {
        self.vocab.binary_search_by(|w| w.as_str().cmp(word)).ok()
    }

    /// `phi_k(word)`, zero for words outside the vocabulary.
    pub fn prob(&self, k: usize, word: &str) -> f64 {
        self.word_index(word).map_or(0.0, |i| self.phi[k][i])
    }

    /// Top `n` words of topic `k`, by probability then alphabetically.
    pub fn top_words(&self, k: usize, n: usize) -> Vec<(String, f64)> {
        let mut idx: Vec<usize> = (0..self.vocab.len()).collect();
        idx.sort_by(|&a, &b| {
            self.phi[k][b]
                .total_cmp(&self.phi[k][a])
                .then_with(|| self.vocab[a].cmp(&self.vocab[b]))
        });
        idx.into_iter()
            .take(n)
            .map(|i| (self.vocab[i].clone(), self.phi[k][i]))
            .collect()
    }

    /// Mean topic proportion over documents, per topic.
    pub fn mean_proportions(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.k];
        if self.theta.is_empty() {
            return m;
        }
        for row in &self.theta {
            for (acc, x) in m.iter_mut().zip(row) {
                *acc += x;
            }
        }
        let n = self.theta.len() as f64;
        m.iter_mut().for_each(|x| *x /= n);
        m
    }

    /// Topic proportions keyed by review id.
    pub fn theta_map(&self) -> BTreeMap<usize, Vec<f64>> {
        self.doc_ids.iter().copied().zip(self.theta.iter().cloned()).collect()
    }

    pub fn theta_of(&self, review_id: usize) -> Option<&[f64]> {
        let i = self.doc_ids.iter().position(|&d| d == review_id)?;
        Some(&self.theta[i])
    }
}

/// Vocabulary of a version: non-stopword tokens with at least
/// `min_count` occurrences, sorted.
pub fn build_model_vocab(docs: &[TopicDoc], min_count: usize) -> Vec<String> {
    let stop = stemmed_stopwords();
    let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
    for d in docs {
        for t in &d.tokens {
            if !stop.contains(t) {
                *freq.entry(t).or_default() += 1;
            }
        }
    }
    freq.into_iter()
        .filter(|&(_, c)| c >= min_count.max(1))
        .map(|(w, _)| w.to_string())
        .collect()
}

/// Chained prior, word-major: `beta[w * k + topic]`.
fn chained_prior(vocab: &[String], prev: &[TopicState], cfg: &TopicConfig) -> Result<Vec<f64>, TopicError> {
    let k = cfg.k;
    let mut beta = vec![cfg.beta0; vocab.len() * k];
    let m = cfg.window.min(prev.len());
    if m == 0 {
        return Ok(beta);
    }
    let norm: f64 = (1..=m).map(|j| libm::pow(cfg.chain_decay, j as f64)).sum();
    for i in 1..=m {
        let state = &prev[prev.len() - i];
        if state.k != k {
            return Err(TopicError::KMismatch {
                expected: k,
                found: state.k,
            });
        }
        let gamma = libm::pow(cfg.chain_decay, i as f64) / norm;
        for (w, word) in vocab.iter().enumerate() {
            if let Some(j) = state.word_index(word) {
                for topic in 0..k {
                    beta[w * k + topic] += cfg.prior_strength * gamma * state.phi[topic][j];
                }
            }
        }
    }
    Ok(beta)
}

struct Sampler {
    k: usize,
    v: usize,
    alpha: f64,
    beta: Vec<f64>,
    beta_sum: Vec<f64>,
    docs: Vec<Vec<usize>>,
    z: Vec<Vec<usize>>,
    n_dk: Vec<Vec<u32>>,
    n_wk: Vec<u32>,
    n_k: Vec<u32>,
}

impl Sampler {
    fn new(docs: Vec<Vec<usize>>, v: usize, beta: Vec<f64>, cfg: &TopicConfig, rng: &mut ChaCha8Rng) -> Self {
        let k = cfg.k;
        let mut beta_sum = vec![0.0; k];
        for w in 0..v {
            for t in 0..k {
                beta_sum[t] += beta[w * k + t];
            }
        }
        let mut s = Self {
            k,
            v,
            alpha: cfg.alpha(),
            beta,
            beta_sum,
            z: Vec::with_capacity(docs.len()),
            n_dk: vec![vec![0; k]; docs.len()],
            n_wk: vec![0; v * k],
            n_k: vec![0; k],
            docs,
        };
        for d in 0..s.docs.len() {
            let mut zd = Vec::with_capacity(s.docs[d].len());
            for &w in &s.docs[d] {
                let t = rng.random_range(0..k);
                zd.push(t);
                s.n_dk[d][t] += 1;
                s.n_wk[w * k + t] += 1;
                s.n_k[t] += 1;
            }
            s.z.push(zd);
        }
        s
    }

    fn sweep(&mut self, rng: &mut ChaCha8Rng, p: &mut [f64]) {
        let k = self.k;
        for d in 0..self.docs.len() {
            for i in 0..self.docs[d].len() {
                let w = self.docs[d][i];
                let old = self.z[d][i];
                self.n_dk[d][old] -= 1;
                self.n_wk[w * k + old] -= 1;
                self.n_k[old] -= 1;

                let mut total = 0.0;
                for t in 0..k {
                    total += (self.n_dk[d][t] as f64 + self.alpha)
                        * (self.n_wk[w * k + t] as f64 + self.beta[w * k + t])
                        / (self.n_k[t] as f64 + self.beta_sum[t]);
                    p[t] = total;
                }
                let u = rng.random::<f64>() * total;
                let new = p[..k].iter().position(|&c| u < c).unwrap_or(k - 1);

                self.z[d][i] = new;
                self.n_dk[d][new] += 1;
                self.n_wk[w * k + new] += 1;
                self.n_k[new] += 1;
            }
        }
    }

    /// Collapsed joint log-likelihood `ln p(w | z) + ln p(z)`.
    fn log_likelihood(&self) -> f64 {
        let k = self.k;
        let lg = libm::lgamma;
        let mut ll = 0.0;
        for t in 0..k {
            ll += lg(self.beta_sum[t]) - lg(self.n_k[t] as f64 + self.beta_sum[t]);
        }
        for w in 0..self.v {
            for t in 0..k {
                let b = self.beta[w * k + t];
                ll += lg(self.n_wk[w * k + t] as f64 + b) - lg(b);
            }
        }
        let ka = k as f64 * self.alpha;
        for (d, doc) in self.docs.iter().enumerate() {
            ll += lg(ka) - lg(doc.len() as f64 + ka);
            for t in 0..k {
                ll += lg(self.n_dk[d][t] as f64 + self.alpha) - lg(self.alpha);
            }
        }
        ll
    }

    fn phi(&self) -> Vec<Vec<f64>> {
        let k = self.k;
        (0..k)
            .map(|t| {
                let denom = self.n_k[t] as f64 + self.beta_sum[t];
                let row: Vec<f64> = (0..self.v)
                    .map(|w| (self.n_wk[w * k + t] as f64 + self.beta[w * k + t]) / denom)
                    .collect();
                normalized(row)
            })
            .collect()
    }

    fn theta(&self) -> Vec<Vec<f64>> {
        let ka = self.k as f64 * self.alpha;
        self.n_dk
            .iter()
            .zip(&self.docs)
            .map(|(counts, doc)| {
                let denom = doc.len() as f64 + ka;
                normalized(counts.iter().map(|&c| (c as f64 + self.alpha) / denom).collect())
            })
            .collect()
    }
}

fn normalized(mut row: Vec<f64>) -> Vec<f64> {
    let s: f64 = row.iter().sum();
    row.iter_mut().for_each(|x| *x /= s);
    row
}

/// Fits the topic model of one version given the states of the versions
/// before it (oldest first).
pub fn fit_version(
    docs: &[TopicDoc],
    version_index: usize,
    prev: &[TopicState],
    cfg: &TopicConfig,
) -> Result<TopicState, TopicError> {
    if cfg.k < 2 {
        return Err(TopicError::InvalidK(cfg.k));
    }
    let vocab = build_model_vocab(docs, cfg.min_word_count);
    let index: BTreeMap<&str, usize> = vocab.iter().enumerate().map(|(i, w)| (w.as_str(), i)).collect();

    let mut doc_ids = Vec::new();
    let mut encoded = Vec::new();
    for d in docs {
        let ids: Vec<usize> = d.tokens.iter().filter_map(|t| index.get(t.as_str()).copied()).collect();
        if !ids.is_empty() {
            doc_ids.push(d.review_id);
            encoded.push(ids);
        }
    }
    if encoded.is_empty() {
        return Err(TopicError::EmptyCorpus);
    }
    if cfg.k > vocab.len() {
        return Err(TopicError::KTooLarge {
            k: cfg.k,
            distinct: vocab.len(),
        });
    }

    let beta = chained_prior(&vocab, prev, cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut sampler = Sampler::new(encoded, vocab.len(), beta, cfg, &mut rng);
    let initial_log_likelihood = sampler.log_likelihood();
    let mut p = vec![0.0; cfg.k];
    for _ in 0..cfg.iterations {
        sampler.sweep(&mut rng, &mut p);
    }

    Ok(TopicState {
        version_index,
        k: cfg.k,
        phi: sampler.phi(),
        theta: sampler.theta(),
        initial_log_likelihood,
        final_log_likelihood: sampler.log_likelihood(),
        vocab,
        doc_ids,
    })
}

/// The prior a version would be fitted with; exposed for inspection.
pub fn prior_for(vocab: &[String], prev: &[TopicState], cfg: &TopicConfig) -> Result<Vec<Vec<f64>>, TopicError> {
    let flat = chained_prior(vocab, prev, cfg)?;
    Ok((0..cfg.k)
        .map(|t| (0..vocab.len()).map(|w| flat[w * cfg.k + t]).collect())
        .collect())
}
