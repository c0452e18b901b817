//! Keyword-weighted topic detection behind a pluggable trait.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::token::Token;

pub const GENERAL_TOPIC: &str = "general";

#[derive(Debug, Clone, PartialEq)]
pub struct TopicDefinition {
    pub name: String,
    pub keywords: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicScore {
    pub name: String,
    pub confidence: f64,
}

impl TopicScore {
    pub fn general() -> Self {
        Self {
            name: GENERAL_TOPIC.to_string(),
            confidence: 0.0,
        }
    }
}

/// Anything that can label an utterance with a topic and a confidence in [0, 1].
pub trait TopicDetector: Send + Sync {
    fn detect(&self, tokens: &[Token]) -> TopicScore;
}

/// Sums the weights of each topic's keywords present in the utterance and
/// squashes the best raw score with `raw / (1 + raw)`.
#[derive(Debug, Clone, Default)]
pub struct KeywordTopicDetector {
    topics: Vec<TopicDefinition>,
}

impl KeywordTopicDetector {
    pub fn new(topics: Vec<TopicDefinition>) -> Self {
        Self { topics }
    }

    pub fn topics(&self) -> &[TopicDefinition] {
        &self.topics
    }
}

impl TopicDetector for KeywordTopicDetector {
    fn detect(&self, tokens: &[Token]) -> TopicScore {
        let present: HashSet<&str> = tokens.iter().map(|t| t.normalized.as_str()).collect();
        let mut best: Option<(&str, f64)> = None;
        for topic in &self.topics {
            let raw: f64 = topic
                .keywords
                .iter()
                .filter(|(k, _)| present.contains(k.as_str()))
                .map(|(_, w)| w)
                .sum();
            if raw <= 0.0 {
                continue;
            }
            let better = match best {
                None => true,
                Some((name, score)) => raw > score || (raw == score && topic.name.as_str() < name),
            };
            if better {
                best = Some((&topic.name, raw));
            }
        }
        match best {
            Some((name, raw)) => TopicScore {
                name: name.to_string(),
                confidence: raw / (1.0 + raw),
            },
            None => TopicScore::general(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nlu::token::tokenize;

    fn topic(name: &str, kws: &[(&str, f64)]) -> TopicDefinition {
        TopicDefinition {
            name: name.to_string(),
            keywords: kws.iter().map(|(k, w)| (k.to_string(), *w)).collect(),
        }
    }

    #[test]
    fn no_keywords_is_general() {
        let d = KeywordTopicDetector::new(vec![topic("flights", &[("flight", 2.0)])]);
        assert_eq!(d.detect(&tokenize("good morning")), TopicScore::general());
        assert_eq!(KeywordTopicDetector::default().detect(&[]), TopicScore::general());
    }

    #[test]
    fn weights_sum_and_squash() {
        let d = KeywordTopicDetector::new(vec![topic("flights", &[("flight", 2.0), ("seat", 1.0)])]);
        let s = d.detect(&tokenize("book a flight seat"));
        assert_eq!(s.name, "flights");
        assert_eq!(s.confidence, 0.75);
    }

    #[test]
    fn repeated_keywords_count_once() {
        let d = KeywordTopicDetector::new(vec![topic("flights", &[("flight", 1.0)])]);
        assert_eq!(d.detect(&tokenize("flight flight Flight")).confidence, 0.5);
    }

    #[test]
    fn ties_go_to_smaller_name() {
        let d = KeywordTopicDetector::new(vec![
            topic("zoo", &[("animal", 1.0)]),
            topic("farm", &[("animal", 1.0)]),
        ]);
        assert_eq!(d.detect(&tokenize("an animal")).name, "farm");
    }
}
