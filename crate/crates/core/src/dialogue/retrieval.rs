//! TF-IDF retrieval over a small corpus of short texts.
//!
//! Weights are raw term count times `idf(w) = ln(N / (1 + df(w))) + 1`,
//! computed over content words only. Documents are ranked by cosine
//! similarity with the query vector.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::nlu::{tokenize, SemanticFrame, Stopwords, Token};

use super::{CandidateReply, Source};

pub const DEFAULT_RETRIEVAL_K: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: usize,
    pub text: String,
    pub timestamp: u64,
}

pub fn idf(documents: usize, df: usize) -> f64 {
    (documents as f64 / (1.0 + df as f64)).ln() + 1.0
}

/// Content-word counts in sorted order.
pub fn term_counts(tokens: &[Token], stopwords: &Stopwords) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for word in stopwords.content_words(tokens) {
        *counts.entry(word.to_string()).or_insert(0) += 1;
    }
    counts
}

#[derive(Debug, Clone, Default)]
pub struct RetrievalIndex {
    documents: Vec<Document>,
    vectors: Vec<BTreeMap<String, f64>>,
    norms: Vec<f64>,
    df: BTreeMap<String, usize>,
    stopwords: Stopwords,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDocument<'a> {
    pub document: &'a Document,
    pub score: f64,
}

impl RetrievalIndex {
    pub fn build(documents: Vec<Document>, stopwords: Stopwords) -> Self {
        let counts: Vec<_> = documents
            .iter()
            .map(|d| term_counts(&tokenize(&d.text), &stopwords))
            .collect();
        let mut df = BTreeMap::new();
        for c in &counts {
            for word in c.keys() {
                *df.entry(word.clone()).or_insert(0) += 1;
            }
        }
        let n = documents.len();
        let vectors: Vec<BTreeMap<String, f64>> = counts
            .into_iter()
            .map(|c| {
                c.into_iter()
                    .map(|(w, tf)| {
                        let weight = tf as f64 * idf(n, df[&w]);
                        (w, weight)
                    })
                    .collect()
            })
            .collect();
        let norms = vectors.iter().map(norm).collect();
        Self {
            documents,
            vectors,
            norms,
            df,
            stopwords,
        }
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn stopwords(&self) -> &Stopwords {
        &self.stopwords
    }

    pub fn document_frequency(&self, word: &str) -> usize {
        self.df.get(word).copied().unwrap_or(0)
    }

    pub fn idf(&self, word: &str) -> f64 {
        idf(self.documents.len(), self.document_frequency(word))
    }

    pub fn query_vector(&self, tokens: &[Token]) -> BTreeMap<String, f64> {
        term_counts(tokens, &self.stopwords)
            .into_iter()
            .map(|(w, tf)| {
                let weight = tf as f64 * self.idf(&w);
                (w, weight)
            })
            .collect()
    }

    /// Cosine score of every document, in document order.
    pub fn scores(&self, tokens: &[Token]) -> Vec<f64> {
        let query = self.query_vector(tokens);
        let qn = norm(&query);
        self.vectors
            .iter()
            .zip(&self.norms)
            .map(|(doc, dn)| {
                if qn == 0.0 || *dn == 0.0 {
                    return 0.0;
                }
                let dot: f64 = query.iter().filter_map(|(w, q)| doc.get(w).map(|d| q * d)).sum();
                dot / (qn * dn)
            })
            .collect()
    }

    /// Top `k` documents with a positive score. Ties go to the newer
    /// document, then the smaller id.
    pub fn search(&self, tokens: &[Token], k: usize) -> Vec<ScoredDocument<'_>> {
        let mut hits: Vec<ScoredDocument<'_>> = self
            .scores(tokens)
            .into_iter()
            .zip(&self.documents)
            .filter(|(score, _)| *score > 0.0)
            .map(|(score, document)| ScoredDocument { document, score })
            .collect();
        hits.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .unwrap_or(Ordering::Equal)
                .then_with(|| b.document.timestamp.cmp(&a.document.timestamp))
                .then_with(|| a.document.id.cmp(&b.document.id))
        });
        hits.truncate(k);
        hits
    }
}

fn norm(v: &BTreeMap<String, f64>) -> f64 {
    v.values().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn retrieve_candidates(frame: &SemanticFrame, index: &RetrievalIndex, k: usize) -> Vec<CandidateReply> {
    index
        .search(&frame.tokens, k)
        .into_iter()
        .map(|hit| CandidateReply::new(hit.document.text.clone(), Source::Retrieval))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs(texts: &[&str]) -> Vec<Document> {
        texts
            .iter()
            .enumerate()
            .map(|(id, text)| Document {
                id,
                text: text.to_string(),
                timestamp: id as u64,
            })
            .collect()
    }

    const ROME: [&str; 3] = ["flights to rome are lovely", "i cook pasta", "rome has great pizza"];

    fn stop() -> Stopwords {
        Stopwords::new(["to", "are", "i", "has", "me", "about"])
    }

    #[test]
    fn empty_index() {
        let index = RetrievalIndex::build(vec![], stop());
        assert_eq!(index.len(), 0);
        assert!(index.search(&tokenize("rome"), 3).is_empty());
    }

    #[test]
    fn idf_follows_smoothed_formula() {
        let index = RetrievalIndex::build(docs(&ROME), stop());
        assert_eq!(index.document_frequency("rome"), 2);
        assert!((index.idf("rome") - 1.0).abs() < 1e-15);
        assert!((index.idf("pasta") - ((1.5f64).ln() + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn best_overlap_ranks_first() {
        let index = RetrievalIndex::build(docs(&ROME), stop());
        let hits = index.search(&tokenize("tell me about rome pizza"), 3);
        let ids: Vec<_> = hits.iter().map(|h| h.document.id).collect();
        assert_eq!(ids, [2, 0]);
    }

    #[test]
    fn no_shared_vocabulary_no_hits() {
        let index = RetrievalIndex::build(docs(&ROME), stop());
        assert!(index.search(&tokenize("quantum chromodynamics"), 3).is_empty());
    }

    #[test]
    fn ties_prefer_newer_then_smaller_id() {
        let mut d = docs(&["rome", "rome", "rome"]);
        d[0].timestamp = 10;
        d[1].timestamp = 5;
        d[2].timestamp = 10;
        let index = RetrievalIndex::build(d, stop());
        let ids: Vec<_> = index
            .search(&tokenize("rome"), 3)
            .iter()
            .map(|h| h.document.id)
            .collect();
        assert_eq!(ids, [0, 2, 1]);
    }

    #[test]
    fn document_order_does_not_change_scores() {
        let forward = RetrievalIndex::build(docs(&ROME), stop());
        let mut reversed_docs = docs(&ROME);
        reversed_docs.reverse();
        let reversed = RetrievalIndex::build(reversed_docs, stop());
        let query = tokenize("rome pasta pizza lovely");
        let mut a: Vec<_> = forward
            .search(&query, 3)
            .iter()
            .map(|h| (h.document.id, h.score))
            .collect();
        let mut b: Vec<_> = reversed
            .search(&query, 3)
            .iter()
            .map(|h| (h.document.id, h.score))
            .collect();
        a.sort_by_key(|x| x.0);
        b.sort_by_key(|x| x.0);
        assert_eq!(a, b);
    }
}
