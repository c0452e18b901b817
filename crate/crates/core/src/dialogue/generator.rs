//! Order-2 Markov chain reply generator.
//!
//! Stands behind [`ReplyGenerator`] so a learned model can replace it. The
//! walk is seeded from a stable hash of the conversation id and turn index,
//! which makes the output a pure function of the frame, the turn and the
//! model.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::context::ConversationState;
use crate::nlu::{detokenize, tokenize, SemanticFrame, Stopwords};

use super::retrieval::{idf, term_counts, Document};
use super::{CandidateReply, Source};

pub const MAX_GENERATED_TOKENS: usize = 20;

pub trait ReplyGenerator: Send + Sync {
    fn generate(&self, frame: &SemanticFrame, state: &ConversationState) -> CandidateReply;
}

/// Successor counts; `None` marks the end of a sentence.
type Successors = BTreeMap<Option<String>, u32>;

#[derive(Debug, Clone, Default)]
pub struct MarkovGenerator {
    first: HashMap<String, Successors>,
    pairs: HashMap<(String, String), Successors>,
    df: HashMap<String, usize>,
    documents: usize,
    stopwords: Stopwords,
}

impl MarkovGenerator {
    pub fn build(documents: &[Document], stopwords: Stopwords) -> Self {
        let mut model = Self {
            documents: documents.len(),
            stopwords,
            ..Self::default()
        };
        for doc in documents {
            let tokens = tokenize(&doc.text);
            for word in term_counts(&tokens, &model.stopwords).into_keys() {
                *model.df.entry(word).or_insert(0) += 1;
            }
            let words: Vec<String> = tokens.into_iter().map(|t| t.normalized).collect();
            for (i, word) in words.iter().enumerate() {
                let next = words.get(i + 1).cloned();
                *model
                    .first
                    .entry(word.clone())
                    .or_default()
                    .entry(next.clone())
                    .or_insert(0) += 1;
                if i + 1 < words.len() {
                    let after = words.get(i + 2).cloned();
                    *model
                        .pairs
                        .entry((word.clone(), words[i + 1].clone()))
                        .or_default()
                        .entry(after)
                        .or_insert(0) += 1;
                }
            }
        }
        model
    }

    pub fn is_empty(&self) -> bool {
        self.first.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.first.contains_key(word)
    }

    /// Highest tf-idf content word of the utterance that the chain knows,
    /// earliest occurrence on ties.
    fn seed_word(&self, frame: &SemanticFrame) -> Option<String> {
        let counts = term_counts(&frame.tokens, &self.stopwords);
        let mut best: Option<(&str, f64)> = None;
        for word in self.stopwords.content_words(&frame.tokens) {
            if !self.contains(word) {
                continue;
            }
            let weight = counts[word] as f64 * idf(self.documents, self.df.get(word).copied().unwrap_or(0));
            if best.is_none_or(|(_, w)| weight > w) {
                best = Some((word, weight));
            }
        }
        best.map(|(w, _)| w.to_string())
    }

    fn walk(&self, seed: String, rng: &mut ChaCha8Rng) -> Vec<String> {
        let mut words = vec![seed];
        while words.len() < MAX_GENERATED_TOKENS {
            let successors = match words.as_slice() {
                [only] => self.first.get(only),
                [.., a, b] => self.pairs.get(&(a.clone(), b.clone())),
                [] => None,
            };
            match successors.and_then(|s| draw(s, rng)) {
                Some(next) => words.push(next),
                None => break,
            }
        }
        words
    }
}

fn draw(successors: &Successors, rng: &mut ChaCha8Rng) -> Option<String> {
    let total: u32 = successors.values().sum();
    if total == 0 {
        return None;
    }
    let mut pick = rng.random_range(0..total);
    for (word, count) in successors {
        if pick < *count {
            return word.clone();
        }
        pick -= count;
    }
    None
}

/// 64-bit FNV-1a; stable across platforms and releases.
pub fn stable_hash(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

pub fn turn_seed(conversation_id: &str, turn_index: u64) -> u64 {
    let mut bytes = conversation_id.as_bytes().to_vec();
    bytes.push(0xff);
    bytes.extend_from_slice(&turn_index.to_le_bytes());
    stable_hash(&bytes)
}

/// The reply used when nothing can be generated: asks about the last
/// content word of the utterance.
pub fn echo_candidate(frame: &SemanticFrame, stopwords: &Stopwords) -> CandidateReply {
    let last = frame.tokens.iter().rev().find(|t| stopwords.is_content(t));
    let text = match last {
        Some(t) => format!("Tell me more about {}.", t.surface),
        None => "Tell me more.".to_string(),
    };
    CandidateReply::new(text, Source::Fallback)
}

impl ReplyGenerator for MarkovGenerator {
    fn generate(&self, frame: &SemanticFrame, state: &ConversationState) -> CandidateReply {
        let Some(seed) = self.seed_word(frame) else {
            return echo_candidate(frame, &self.stopwords);
        };
        let mut rng = ChaCha8Rng::seed_from_u64(turn_seed(&state.conversation_id, state.next_index()));
        let words = self.walk(seed, &mut rng);
        CandidateReply::new(detokenize(&words), Source::Generative)
    }
}
