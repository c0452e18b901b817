//! Fresh-text sources feeding the retrieval corpus.
//!
//! Only the local-file adapter ships; a network client would implement the
//! same trait.

use std::fs;
use std::path::{Path, PathBuf};

use crate::nlu::{tokenize, Stopwords};

use super::retrieval::{Document, RetrievalIndex};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreshText {
    pub text: String,
    pub timestamp: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum FreshSourceError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

pub trait FreshTextSource: Send + Sync {
    /// Up to `max` recent texts relevant to `query`, newest first.
    fn fetch(&self, query: &str, max: usize) -> Result<Vec<FreshText>, FreshSourceError>;
}

/// Reads `timestamp_ms<TAB>text` lines from a file on every fetch and keeps
/// the ones sharing a content word with the query.
#[derive(Debug, Clone)]
pub struct LocalFileSource {
    path: PathBuf,
    stopwords: Stopwords,
}

impl LocalFileSource {
    pub fn new(path: impl AsRef<Path>, stopwords: Stopwords) -> Self {
        Self {
            path: path.as_ref().to_path_buf(),
            stopwords,
        }
    }
}

impl FreshTextSource for LocalFileSource {
    fn fetch(&self, query: &str, max: usize) -> Result<Vec<FreshText>, FreshSourceError> {
        let content = fs::read_to_string(&self.path).map_err(|source| FreshSourceError::Io {
            path: self.path.clone(),
            source,
        })?;
        let query_tokens = tokenize(query);
        let wanted: Vec<&str> = self.stopwords.content_words(&query_tokens).collect();
        let mut hits = Vec::new();
        for (n, line) in content.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (ts, text) = line.split_once('\t').ok_or_else(|| FreshSourceError::Malformed {
                path: self.path.clone(),
                line: n + 1,
                message: "expected timestamp_ms<TAB>text".to_string(),
            })?;
            let timestamp = ts.parse().map_err(|_| FreshSourceError::Malformed {
                path: self.path.clone(),
                line: n + 1,
                message: format!("invalid timestamp {ts:?}"),
            })?;
            let tokens = tokenize(text);
            if self.stopwords.content_words(&tokens).any(|w| wanted.contains(&w)) {
                hits.push(FreshText {
                    text: text.to_string(),
                    timestamp,
                });
            }
        }
        hits.sort_by_key(|h| std::cmp::Reverse(h.timestamp));
        hits.truncate(max);
        Ok(hits)
    }
}

/// A new index holding the existing documents plus whatever the source
/// returns for `query`. The old index is left untouched.
pub fn ingest_fresh(
    index: &RetrievalIndex,
    source: &dyn FreshTextSource,
    query: &str,
    max: usize,
) -> Result<RetrievalIndex, FreshSourceError> {
    let mut documents = index.documents().to_vec();
    let mut next_id = documents.iter().map(|d| d.id + 1).max().unwrap_or(0);
    for fresh in source.fetch(query, max)? {
        if documents.iter().any(|d| d.text == fresh.text) {
            continue;
        }
        documents.push(Document {
            id: next_id,
            text: fresh.text,
            timestamp: fresh.timestamp,
        });
        next_id += 1;
    }
    Ok(RetrievalIndex::build(documents, index.stopwords().clone()))
}
