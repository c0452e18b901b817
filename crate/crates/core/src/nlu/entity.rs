//! Gazetteer entity linking.
//!
//! Aliases are indexed as normalized token sequences. A left-to-right scan
//! takes the longest alias starting at each position. When an alias is
//! shared by several records the one whose description and alias words
//! overlap most with the rest of the utterance wins, ties by id.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::token::{tokenize, Stopwords, Token};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EntityType {
    Person,
    Org,
    Place,
    Thing,
}

impl EntityType {
    pub const ALL: [EntityType; 4] = [Self::Person, Self::Org, Self::Place, Self::Thing];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Person => "PERSON",
            Self::Org => "ORG",
            Self::Place => "PLACE",
            Self::Thing => "THING",
        }
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown entity type {s:?} (expected PERSON, ORG, PLACE or THING)"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntityRecord {
    pub id: String,
    pub canonical: String,
    pub aliases: Vec<String>,
    pub entity_type: EntityType,
    pub description: String,
}

impl EntityRecord {
    /// Canonical name followed by the declared aliases.
    pub fn all_aliases(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.canonical.as_str()).chain(self.aliases.iter().map(String::as_str))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityMention {
    /// Token index range `[start, end)` in the frame's tokens.
    pub start: usize,
    pub end: usize,
    pub candidates: Vec<String>,
    pub resolved: String,
    pub entity_type: EntityType,
    pub score: f64,
}

#[derive(Debug, Clone)]
pub struct Gazetteer {
    records: Vec<EntityRecord>,
    by_id: HashMap<String, usize>,
    aliases: HashMap<Vec<String>, Vec<usize>>,
    longest_alias: usize,
    signatures: Vec<BTreeSet<String>>,
    stopwords: Stopwords,
}

impl Gazetteer {
    /// Builds the alias index. Records must have unique ids.
    pub fn new(records: Vec<EntityRecord>, stopwords: Stopwords) -> Self {
        let mut by_id = HashMap::new();
        let mut aliases: HashMap<Vec<String>, Vec<usize>> = HashMap::new();
        let mut longest_alias = 0;
        let mut signatures = Vec::with_capacity(records.len());
        for (i, record) in records.iter().enumerate() {
            by_id.insert(record.id.clone(), i);
            let mut signature = BTreeSet::new();
            for alias in record.all_aliases() {
                let key: Vec<String> = tokenize(alias).into_iter().map(|t| t.normalized).collect();
                if key.is_empty() {
                    continue;
                }
                longest_alias = longest_alias.max(key.len());
                let ids = aliases.entry(key).or_default();
                if !ids.contains(&i) {
                    ids.push(i);
                }
                let tokens = tokenize(alias);
                signature.extend(stopwords.content_words(&tokens).map(str::to_string));
            }
            let tokens = tokenize(&record.description);
            signature.extend(stopwords.content_words(&tokens).map(str::to_string));
            signatures.push(signature);
        }
        for ids in aliases.values_mut() {
            ids.sort_by(|a, b| records[*a].id.cmp(&records[*b].id));
        }
        Self {
            records,
            by_id,
            aliases,
            longest_alias,
            signatures,
            stopwords,
        }
    }

    pub fn get(&self, id: &str) -> Option<&EntityRecord> {
        self.by_id.get(id).map(|&i| &self.records[i])
    }

    pub fn records(&self) -> &[EntityRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn link(&self, tokens: &[Token]) -> Vec<EntityMention> {
        let mut spans = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            let max_len = self.longest_alias.min(tokens.len() - i);
            let hit = (1..=max_len).rev().find_map(|len| {
                let mut key: Vec<String> = tokens[i..i + len].iter().map(|t| t.normalized.clone()).collect();
                if let Some(ids) = self.aliases.get(&key) {
                    return Some((len, ids));
                }
                // a possessive still names the entity: "klm's hub"
                let last = key.last_mut()?;
                let stem = last.strip_suffix("'s").filter(|s| !s.is_empty())?.to_string();
                *last = stem;
                self.aliases.get(&key).map(|ids| (len, ids))
            });
            match hit {
                Some((len, ids)) => {
                    spans.push((i, i + len, ids));
                    i += len;
                }
                None => i += 1,
            }
        }
        spans
            .into_iter()
            .map(|(start, end, ids)| self.disambiguate(tokens, start, end, ids))
            .collect()
    }

    fn disambiguate(&self, tokens: &[Token], start: usize, end: usize, ids: &[usize]) -> EntityMention {
        let context: BTreeSet<&str> = tokens
            .iter()
            .enumerate()
            .filter(|(k, t)| (*k < start || *k >= end) && self.stopwords.is_content(t))
            .map(|(_, t)| t.normalized.as_str())
            .collect();
        // ids are sorted by record id, so the first maximum wins ties
        let mut best = (ids[0], 0usize);
        for (n, &idx) in ids.iter().enumerate() {
            let overlap = self.signatures[idx]
                .iter()
                .filter(|w| context.contains(w.as_str()))
                .count();
            if n == 0 || overlap > best.1 {
                best = (idx, overlap);
            }
        }
        let record = &self.records[best.0];
        EntityMention {
            start,
            end,
            candidates: ids.iter().map(|&i| self.records[i].id.clone()).collect(),
            resolved: record.id.clone(),
            entity_type: record.entity_type,
            score: best.1 as f64,
        }
    }
}
