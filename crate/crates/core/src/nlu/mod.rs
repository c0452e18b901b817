//! Natural language understanding: utterance to [`SemanticFrame`].

pub mod embedding;
pub mod entity;
pub mod intent;
pub mod token;
pub mod topic;

use serde::{Deserialize, Serialize};

pub use self::embedding::{cosine, embed_utterance, EmbeddingTable};
pub use self::entity::{EntityMention, EntityRecord, EntityType, Gazetteer};
pub use self::intent::{IntentClassifier, IntentDefinition, IntentScore, DEFAULT_INTENT_THRESHOLD};
pub use self::token::{detokenize, tokenize, Stopwords, Token};
pub use self::topic::{KeywordTopicDetector, TopicDefinition, TopicDetector, TopicScore};

/// Structured reading of one user utterance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticFrame {
    pub raw: String,
    /// Text after pronoun resolution; `tokens` are taken from this.
    pub resolved: String,
    pub tokens: Vec<Token>,
    pub topic: TopicScore,
    /// Sorted by score descending, ties by intent name.
    pub intents: Vec<IntentScore>,
    pub mentions: Vec<EntityMention>,
}

impl SemanticFrame {
    pub fn top_intent(&self) -> Option<&IntentScore> {
        self.intents.first()
    }

    pub fn intent(&self, name: &str) -> Option<&IntentScore> {
        self.intents.iter().find(|s| s.intent == name)
    }

    /// Surface text of a mention's token span.
    pub fn mention_text(&self, mention: &EntityMention) -> String {
        let surfaces: Vec<&str> = self.tokens[mention.start..mention.end]
            .iter()
            .map(|t| t.surface.as_str())
            .collect();
        detokenize(&surfaces)
    }
}

/// All immutable NLU state of one bot.
pub struct Nlu {
    pub stopwords: Stopwords,
    pub embeddings: EmbeddingTable,
    pub intents: IntentClassifier,
    pub topics: Box<dyn TopicDetector>,
    pub gazetteer: Gazetteer,
}

impl Nlu {
    /// Tokenize, detect topic, classify intents and link entities.
    /// A pure function of its inputs and the loaded bot.
    pub fn analyze(&self, raw: &str, resolved: &str) -> SemanticFrame {
        let tokens = tokenize(resolved);
        let topic = self.topics.detect(&tokens);
        let intents = self.intents.classify(&tokens, &self.embeddings, &self.stopwords);
        let mentions = self.gazetteer.link(&tokens);
        SemanticFrame {
            raw: raw.to_string(),
            resolved: resolved.to_string(),
            tokens,
            topic,
            intents,
            mentions,
        }
    }
}

impl std::fmt::Debug for Nlu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Nlu")
            .field("stopwords", &self.stopwords.len())
            .field("embeddings", &self.embeddings.len())
            .field("entities", &self.gazetteer.len())
            .finish_non_exhaustive()
    }
}
