//! Example-based intent classification.
//!
//! An intent's score is the best cosine similarity between the utterance
//! embedding and any of its example embeddings. When either side has no
//! in-vocabulary content word the pair falls back to Jaccard overlap of the
//! content-word sets.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::embedding::{cosine, embed_utterance, EmbeddingTable};
use super::token::{tokenize, Stopwords, Token};

pub const DEFAULT_INTENT_THRESHOLD: f64 = 0.75;

#[derive(Debug, Clone, PartialEq)]
pub struct IntentDefinition {
    pub name: String,
    pub examples: Vec<String>,
    /// Overrides the classifier-wide threshold.
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentScore {
    pub intent: String,
    pub score: f64,
    /// `score >= threshold` for this intent.
    pub matched: bool,
}

#[derive(Debug, Clone)]
struct PreparedExample {
    vector: Option<Vec<f64>>,
    words: BTreeSet<String>,
}

#[derive(Debug, Clone)]
struct PreparedIntent {
    definition: IntentDefinition,
    examples: Vec<PreparedExample>,
}

/// Intents with example vectors computed once at bot load.
#[derive(Debug, Clone)]
pub struct IntentClassifier {
    intents: Vec<PreparedIntent>,
    default_threshold: f64,
}

impl IntentClassifier {
    pub fn new(
        definitions: Vec<IntentDefinition>,
        table: &EmbeddingTable,
        stopwords: &Stopwords,
        default_threshold: f64,
    ) -> Self {
        let intents = definitions
            .into_iter()
            .map(|definition| {
                let examples = definition
                    .examples
                    .iter()
                    .map(|text| {
                        let tokens = tokenize(text);
                        PreparedExample {
                            vector: embed_utterance(&tokens, table, stopwords),
                            words: word_set(&tokens, stopwords),
                        }
                    })
                    .collect();
                PreparedIntent { definition, examples }
            })
            .collect();
        Self {
            intents,
            default_threshold,
        }
    }

    pub fn definitions(&self) -> impl Iterator<Item = &IntentDefinition> {
        self.intents.iter().map(|i| &i.definition)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.intents.iter().any(|i| i.definition.name == name)
    }

    pub fn threshold(&self, name: &str) -> Option<f64> {
        self.intents
            .iter()
            .find(|i| i.definition.name == name)
            .map(|i| i.definition.threshold.unwrap_or(self.default_threshold))
    }

    /// Ranks every intent by similarity, highest first, ties by name.
    pub fn classify(&self, tokens: &[Token], table: &EmbeddingTable, stopwords: &Stopwords) -> Vec<IntentScore> {
        let vector = embed_utterance(tokens, table, stopwords);
        let words = word_set(tokens, stopwords);
        let mut ranking: Vec<IntentScore> = self
            .intents
            .iter()
            .map(|intent| {
                let score = intent
                    .examples
                    .iter()
                    .map(|ex| match (&vector, &ex.vector) {
                        (Some(u), Some(e)) => cosine(u, e),
                        _ => jaccard(&words, &ex.words),
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                let score = if score.is_finite() { score } else { 0.0 };
                let threshold = intent.definition.threshold.unwrap_or(self.default_threshold);
                IntentScore {
                    intent: intent.definition.name.clone(),
                    score,
                    matched: score >= threshold,
                }
            })
            .collect();
        ranking.sort_by(compare_scores);
        ranking
    }
}

fn compare_scores(a: &IntentScore, b: &IntentScore) -> Ordering {
    b.score
        .partial_cmp(&a.score)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.intent.cmp(&b.intent))
}

fn word_set(tokens: &[Token], stopwords: &Stopwords) -> BTreeSet<String> {
    stopwords.content_words(tokens).map(str::to_string).collect()
}

pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}
