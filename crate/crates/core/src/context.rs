//! Conversation state and pronoun resolution.

use serde::{Deserialize, Serialize};

use crate::dialogue::Source;
use crate::nlu::{detokenize, tokenize, EntityType, Gazetteer, SemanticFrame};

pub const DEFAULT_COREF_WINDOW: u64 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    User,
    Bot,
}

impl Speaker {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::User => "user",
            Self::Bot => "bot",
        }
    }
}

impl std::str::FromStr for Speaker {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "user" => Ok(Self::User),
            "bot" => Ok(Self::Bot),
            other => Err(format!("unknown speaker {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub index: u64,
    pub speaker: Speaker,
    pub raw: String,
    pub resolved: String,
    /// Strategy that produced a bot turn.
    pub source: Option<Source>,
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SalienceEntry {
    pub entity_id: String,
    pub entity_type: EntityType,
    pub last_turn: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConversationState {
    pub conversation_id: String,
    pub turns: Vec<Turn>,
    /// Most recently mentioned first.
    pub salience: Vec<SalienceEntry>,
}

impl ConversationState {
    pub fn new(conversation_id: impl Into<String>) -> Self {
        Self {
            conversation_id: conversation_id.into(),
            turns: Vec::new(),
            salience: Vec::new(),
        }
    }

    /// Index the next turn will get.
    pub fn next_index(&self) -> u64 {
        self.turns.last().map_or(0, |t| t.index + 1)
    }

    /// The last `k` turns in chronological order.
    pub fn recent_utterances(&self, k: usize) -> &[Turn] {
        &self.turns[self.turns.len().saturating_sub(k)..]
    }

    /// The last `k` bot turns, oldest first.
    pub fn recent_bot_turns(&self, k: usize) -> Vec<&Turn> {
        let mut out: Vec<&Turn> = self
            .turns
            .iter()
            .rev()
            .filter(|t| t.speaker == Speaker::Bot)
            .take(k)
            .collect();
        out.reverse();
        out
    }

    /// Most salient entity within the window accepted by `wanted`.
    fn lookup(&self, window: u64, wanted: impl Fn(EntityType) -> bool) -> Option<&SalienceEntry> {
        let oldest = self.next_index().saturating_sub(window);
        self.salience
            .iter()
            .take_while(|e| e.last_turn >= oldest)
            .find(|e| wanted(e.entity_type))
    }

    /// Appends the user turn and the bot reply, refreshing salience from the
    /// frame's mentions. A later mention in the same utterance is more salient.
    pub fn update(
        &mut self,
        frame: &SemanticFrame,
        reply: &str,
        source: Source,
        user_timestamp: u64,
        bot_timestamp: u64,
    ) {
        let user_index = self.next_index();
        self.turns.push(Turn {
            index: user_index,
            speaker: Speaker::User,
            raw: frame.raw.clone(),
            resolved: frame.resolved.clone(),
            source: None,
            timestamp: user_timestamp,
        });
        self.turns.push(Turn {
            index: user_index + 1,
            speaker: Speaker::Bot,
            raw: reply.to_string(),
            resolved: reply.to_string(),
            source: Some(source),
            timestamp: bot_timestamp,
        });
        for mention in &frame.mentions {
            self.salience.retain(|e| e.entity_id != mention.resolved);
            self.salience.insert(
                0,
                SalienceEntry {
                    entity_id: mention.resolved.clone(),
                    entity_type: mention.entity_type,
                    last_turn: user_index,
                },
            );
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Antecedent {
    Person,
    NonPerson,
    Any,
}

fn pronoun(word: &str) -> Option<(Antecedent, bool)> {
    Some(match word {
        "he" | "him" | "she" | "her" => (Antecedent::Person, false),
        "his" | "hers" => (Antecedent::Person, true),
        "it" => (Antecedent::NonPerson, false),
        "its" => (Antecedent::NonPerson, true),
        "they" | "them" => (Antecedent::Any, false),
        "their" => (Antecedent::Any, true),
        _ => return None,
    })
}

/// Replaces pronouns with the canonical name of the most salient matching
/// entity mentioned within the last `window` turns. Possessives get `'s`.
/// Other tokens pass through unchanged; unresolvable pronouns stay.
pub fn resolve_coreference(raw: &str, state: &ConversationState, gazetteer: &Gazetteer, window: u64) -> String {
    let surfaces: Vec<String> = tokenize(raw)
        .into_iter()
        .map(|token| {
            let Some((antecedent, possessive)) = pronoun(&token.normalized) else {
                return token.surface;
            };
            let entry = state.lookup(window, |ty| match antecedent {
                Antecedent::Person => ty == EntityType::Person,
                Antecedent::NonPerson => ty != EntityType::Person,
                Antecedent::Any => true,
            });
            match entry.and_then(|e| gazetteer.get(&e.entity_id)) {
                Some(record) if possessive => format!("{}'s", record.canonical),
                Some(record) => record.canonical.clone(),
                None => token.surface,
            }
        })
        .collect();
    detokenize(&surfaces)
}
