//! Word-vector table and utterance embedding.

use std::collections::HashMap;

use super::token::{Stopwords, Token};

/// Immutable word to vector table. Every vector has length `dim`.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dim: usize,
    entries: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    /// Builds a table, rejecting vectors whose length differs from `dim`.
    pub fn new<I>(dim: usize, entries: I) -> Result<Self, String>
    where
        I: IntoIterator<Item = (String, Vec<f64>)>,
    {
        if dim == 0 {
            return Err("embedding dimension must be positive".to_string());
        }
        let mut table = HashMap::new();
        for (word, vector) in entries {
            if vector.len() != dim {
                return Err(format!(
                    "vector for {word:?} has dimension {}, expected {dim}",
                    vector.len()
                ));
            }
            table.insert(word.to_lowercase(), vector);
        }
        Ok(Self { dim, entries: table })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.entries.get(&word.to_lowercase()).map(Vec::as_slice)
    }

    /// Copy of the table with every vector multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .map(|(w, v)| (w.clone(), v.iter().map(|x| x * factor).collect()))
                .collect(),
        }
    }
}

/// Mean vector of the in-table content tokens, or `None` when no token
/// qualifies (the out-of-vocabulary signal).
pub fn embed_utterance(tokens: &[Token], table: &EmbeddingTable, stopwords: &Stopwords) -> Option<Vec<f64>> {
    let mut sum = vec![0.0; table.dim()];
    let mut count = 0usize;
    for word in stopwords.content_words(tokens) {
        if let Some(v) = table.get(word) {
            for (acc, x) in sum.iter_mut().zip(v) {
                *acc += x;
            }
            count += 1;
        }
    }
    if count == 0 {
        return None;
    }
    let n = count as f64;
    Some(sum.into_iter().map(|x| x / n).collect())
}

/// Cosine similarity; zero when either vector has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nlu::token::tokenize;

    fn toy() -> EmbeddingTable {
        EmbeddingTable::new(
            2,
            [
                ("good".to_string(), vec![1.0, 0.0]),
                ("bad".to_string(), vec![0.0, 1.0]),
                ("Pizzeria".to_string(), vec![0.3, 0.7]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn empty_tokens_embed_to_none() {
        assert_eq!(embed_utterance(&[], &toy(), &Stopwords::default()), None);
    }

    #[test]
    fn single_token_is_its_vector() {
        let v = embed_utterance(&tokenize("pizzeria"), &toy(), &Stopwords::default());
        assert_eq!(v, Some(vec![0.3, 0.7]));
    }

    #[test]
    fn mean_of_two_vectors() {
        let v = embed_utterance(&tokenize("good bad"), &toy(), &Stopwords::default());
        assert_eq!(v, Some(vec![0.5, 0.5]));
    }

    #[test]
    fn stopwords_and_unknown_words_are_skipped() {
        let stop = Stopwords::new(["good"]);
        let v = embed_utterance(&tokenize("good bad unknown!"), &toy(), &stop);
        assert_eq!(v, Some(vec![0.0, 1.0]));
        assert_eq!(embed_utterance(&tokenize("unknown"), &toy(), &stop), None);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let err = EmbeddingTable::new(2, [("x".to_string(), vec![1.0, 2.0, 3.0])]).unwrap_err();
        assert!(err.contains("dimension 3"));
    }

    #[test]
    fn cosine_edges() {
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]), 0.0);
        assert_eq!(cosine(&[0.0, 0.0], &[0.0, 1.0]), 0.0);
        assert!((cosine(&[2.0, 2.0], &[1.0, 1.0]) - 1.0).abs() < 1e-12);
        assert!((cosine(&[1.0, 0.0], &[-3.0, 0.0]) + 1.0).abs() < 1e-12);
    }
}
