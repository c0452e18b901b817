//! Knowledge-base question answering over (subject, predicate, object) triples.

use std::collections::{HashMap, HashSet};

use crate::nlu::{Gazetteer, SemanticFrame};

use super::{CandidateReply, Source};

const QUESTION_CUES: [&str; 5] = ["who", "what", "where", "when", "how"];
const COPULAS: [&str; 4] = ["is", "are", "was", "were"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TripleObject {
    Entity(String),
    Literal(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeTriple {
    pub subject: String,
    pub predicate: String,
    pub object: TripleObject,
}

/// Content word to predicate names, e.g. `founded -> founded_in`.
#[derive(Debug, Clone, Default)]
pub struct PredicateLexicon(HashMap<String, Vec<String>>);

impl PredicateLexicon {
    pub fn new<I, W, P>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (W, P)>,
        W: AsRef<str>,
        P: Into<String>,
    {
        let mut map: HashMap<String, Vec<String>> = HashMap::new();
        for (word, predicate) in pairs {
            let predicate = predicate.into();
            let entry = map.entry(word.as_ref().to_lowercase()).or_default();
            if !entry.contains(&predicate) {
                entry.push(predicate);
            }
        }
        Self(map)
    }

    pub fn predicates(&self, word: &str) -> &[String] {
        self.0.get(word).map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Debug, Clone, Default)]
pub struct KnowledgeBase {
    pub triples: Vec<KnowledgeTriple>,
    pub lexicon: PredicateLexicon,
}

impl KnowledgeBase {
    /// Answers a question about a mentioned entity, or `None` to fall
    /// through the cascade.
    pub fn answer(&self, frame: &SemanticFrame, gazetteer: &Gazetteer) -> Option<CandidateReply> {
        if frame.mentions.is_empty() {
            return None;
        }
        let words: Vec<&str> = frame.tokens.iter().map(|t| t.normalized.as_str()).collect();
        let cue = words.iter().find(|w| QUESTION_CUES.contains(w));
        let trailing_question = words.last() == Some(&"?");
        if cue.is_none() && !trailing_question {
            return None;
        }

        let inside_mention = |i: usize| frame.mentions.iter().any(|m| i >= m.start && i < m.end);
        let predicates: HashSet<&str> = words
            .iter()
            .enumerate()
            .filter(|(i, _)| !inside_mention(*i))
            .flat_map(|(_, w)| self.lexicon.predicates(w))
            .map(String::as_str)
            .collect();
        let subjects: HashSet<&str> = frame.mentions.iter().map(|m| m.resolved.as_str()).collect();

        let text = if predicates.is_empty() {
            let describes = matches!(cue, Some(&"who") | Some(&"what")) && words.iter().any(|w| COPULAS.contains(w));
            if !describes {
                return None;
            }
            let record = gazetteer.get(&frame.mentions[0].resolved)?;
            if record.description.is_empty() {
                return None;
            }
            record.description.clone()
        } else {
            let triple = self
                .triples
                .iter()
                .find(|t| subjects.contains(t.subject.as_str()) && predicates.contains(t.predicate.as_str()))?;
            match &triple.object {
                TripleObject::Literal(text) => text.clone(),
                TripleObject::Entity(id) => gazetteer
                    .get(id)
                    .map(|r| r.canonical.clone())
                    .unwrap_or_else(|| id.clone()),
            }
        };
        Some(CandidateReply::new(text, Source::Kb))
    }
}
