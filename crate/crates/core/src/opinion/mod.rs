//! Aspect/opinion word pairs from dependency parses.
//!
//! Three relations are recognised between an aspect word (a noun or pronoun)
//! and an opinion word:
//!
//! | relation           | dependent | head    | example                         |
//! |--------------------|-----------|---------|---------------------------------|
//! | noun of subject    | aspect    | opinion | This *app* **crashed** on launch |
//! | direct object      | aspect    | opinion | I **dislike** the *app*          |
//! | adjective modifier | opinion   | aspect  | Book the **cheapest** *flight*   |

mod conllu;

pub use conllu::{orphan_review_ids, parse_conllu, ConlluFormatError, ParsedSentence, ParsedToken};

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::preprocess::normalize_word;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    NounOfSubject,
    DirectObject,
    AdjectiveModifier,
}

impl Relation {
    fn from_deprel(deprel: &str) -> Option<Self> {
        match deprel {
            "nsubj" => Some(Self::NounOfSubject),
            "obj" | "dobj" => Some(Self::DirectObject),
            "amod" => Some(Self::AdjectiveModifier),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpinionPair {
    /// Lowercased lemma of the aspect word.
    pub aspect: String,
    /// Lowercased, stemmed lemma of the opinion word.
    pub opinion: String,
    pub relation: Relation,
    pub aspect_upos: String,
    pub review_id: Option<usize>,
    pub sentence_index: usize,
}

impl OpinionPair {
    pub fn is_pronoun_aspect(&self) -> bool {
        self.aspect_upos == "PRON"
    }
}

fn is_aspect_pos(upos: &str) -> bool {
    matches!(upos, "NOUN" | "PROPN" | "PRON")
}

/// First- and second-person pronouns name the reviewer or the reader, not
/// something about the app, so they never serve as aspects.
const PERSONAL_PRONOUNS: [&str; 7] = ["i", "me", "we", "us", "you", "u", "ya"];

fn is_aspect(t: &ParsedToken) -> bool {
    is_aspect_pos(&t.upos)
        && !(t.upos == "PRON" && PERSONAL_PRONOUNS.contains(&lemma_of(t).to_lowercase().as_str()))
}

fn lemma_of(t: &ParsedToken) -> &str {
    if t.lemma.is_empty() || t.lemma == "_" {
        &t.surface
    } else {
        &t.lemma
    }
}

/// Extracts pairs from one parsed sentence. Output is ordered by the
/// dependent token's index, so it does not depend on row order.
pub fn extract_pairs(sentence: &[ParsedToken]) -> Vec<OpinionPair> {
    let by_index = |i: usize| sentence.iter().find(|t| t.index == i);
    let mut found: Vec<(usize, OpinionPair)> = Vec::new();

    for dep in sentence {
        let Some(relation) = Relation::from_deprel(&dep.deprel) else {
            continue;
        };
        if dep.head == 0 {
            continue;
        }
        let Some(head) = by_index(dep.head) else {
            continue;
        };
        let (aspect, opinion) = match relation {
            Relation::NounOfSubject | Relation::DirectObject => (dep, head),
            Relation::AdjectiveModifier => (head, dep),
        };
        if !is_aspect(aspect) {
            continue;
        }
        let Some(opinion_word) = normalize_word(&lemma_of(opinion).to_lowercase()) else {
            continue;
        };
        found.push((
            dep.index,
            OpinionPair {
                aspect: lemma_of(aspect).to_lowercase(),
                opinion: opinion_word,
                relation,
                aspect_upos: aspect.upos.clone(),
                review_id: None,
                sentence_index: 0,
            },
        ));
    }
    found.sort_by_key(|(i, _)| *i);
    found.into_iter().map(|(_, p)| p).collect()
}

/// Runs [`extract_pairs`] over a sidecar document, tagging each pair with
/// its review id and the sentence's position within that review.
pub fn extract_document_pairs(sentences: &[ParsedSentence]) -> Vec<OpinionPair> {
    let mut out = Vec::new();
    let mut last_review = None;
    let mut sentence_index = 0;
    for s in sentences {
        if s.review_id == last_review {
            sentence_index += 1;
        } else {
            sentence_index = 0;
            last_review = s.review_id;
        }
        for mut p in extract_pairs(&s.tokens) {
            p.review_id = s.review_id;
            p.sentence_index = sentence_index;
            out.push(p);
        }
    }
    out
}

/// Distinct opinion words of a set of pairs.
pub fn opinion_vocabulary(pairs: &[OpinionPair]) -> BTreeSet<String> {
    pairs.iter().map(|p| p.opinion.clone()).collect()
}

/// Aspect frequencies, pronoun aspects excluded; descending count, then word.
pub fn aspect_frequencies(pairs: &[OpinionPair]) -> Vec<(String, usize)> {
    let mut counts: alloc::collections::BTreeMap<&str, usize> = Default::default();
    for p in pairs.iter().filter(|p| !p.is_pronoun_aspect()) {
        *counts.entry(&p.aspect).or_default() += 1;
    }
    let mut out: Vec<(String, usize)> = counts.into_iter().map(|(a, c)| (a.into(), c)).collect();
    out.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}
