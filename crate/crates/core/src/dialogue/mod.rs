//! Dialogue manager: the strategy cascade.
//!
//! Stage 1 rule templates, stage 2 knowledge-base answers, stage 3 the
//! union of retrieval, generation and the canned fallback. The first
//! stage that produces anything wins.

pub mod fresh;
pub mod generator;
pub mod kb;
pub mod retrieval;
pub mod template;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::context::ConversationState;
use crate::nlu::SemanticFrame;
use crate::replygen::FilterFlag;
use crate::store::BotDefinition;

pub use self::generator::{MarkovGenerator, ReplyGenerator};
pub use self::kb::{KnowledgeBase, KnowledgeTriple, PredicateLexicon, TripleObject};
pub use self::retrieval::{retrieve_candidates, Document, RetrievalIndex};
pub use self::template::{match_templates, RuleTemplate, TemplateKind};

pub const FALLBACK_TEXT: &str = "I'm not sure I follow — tell me more.";

/// Which strategy produced a reply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Source {
    #[serde(rename = "rule:backstory")]
    RuleBackstory,
    #[serde(rename = "rule:intent")]
    RuleIntent,
    #[serde(rename = "rule:entity")]
    RuleEntity,
    #[serde(rename = "kb")]
    Kb,
    #[serde(rename = "retrieval")]
    Retrieval,
    #[serde(rename = "generative")]
    Generative,
    #[serde(rename = "fallback")]
    Fallback,
}

impl Source {
    pub const ALL: [Source; 7] = [
        Self::RuleBackstory,
        Self::RuleIntent,
        Self::RuleEntity,
        Self::Kb,
        Self::Retrieval,
        Self::Generative,
        Self::Fallback,
    ];

    pub fn default_priority(self) -> i64 {
        match self {
            Self::RuleBackstory => 300,
            Self::RuleIntent => 200,
            Self::RuleEntity => 100,
            Self::Kb => 150,
            Self::Retrieval => 50,
            Self::Generative => 40,
            Self::Fallback => 0,
        }
    }

    /// Position in the cascade; used as a ranking tie-break.
    pub fn stage(self) -> u8 {
        match self {
            Self::RuleBackstory | Self::RuleIntent | Self::RuleEntity => 0,
            Self::Kb => 1,
            Self::Retrieval => 2,
            Self::Generative => 3,
            Self::Fallback => 4,
        }
    }

    pub fn is_rule(self) -> bool {
        self.stage() == 0
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::RuleBackstory => "rule:backstory",
            Self::RuleIntent => "rule:intent",
            Self::RuleEntity => "rule:entity",
            Self::Kb => "kb",
            Self::Retrieval => "retrieval",
            Self::Generative => "generative",
            Self::Fallback => "fallback",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|src| src.as_str() == s)
            .ok_or_else(|| format!("unknown source tag {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateReply {
    pub text: String,
    pub source: Source,
    pub priority: i64,
    /// Filled in by the reply generator.
    pub engagement: f64,
    pub filter_flags: Vec<FilterFlag>,
}

impl CandidateReply {
    pub fn new(text: impl Into<String>, source: Source) -> Self {
        Self::with_priority(text, source, source.default_priority())
    }

    pub fn with_priority(text: impl Into<String>, source: Source, priority: i64) -> Self {
        Self {
            text: text.into(),
            source,
            priority,
            engagement: 0.0,
            filter_flags: Vec::new(),
        }
    }

    pub fn fallback() -> Self {
        Self::new(FALLBACK_TEXT, Source::Fallback)
    }
}

/// Runs the cascade. Never returns an empty list.
pub fn plan(frame: &SemanticFrame, state: &ConversationState, bot: &BotDefinition) -> Vec<CandidateReply> {
    let rules = match_templates(frame, &bot.templates, &bot.nlu.gazetteer);
    if !rules.is_empty() {
        return rules;
    }
    if let Some(answer) = bot.kb.answer(frame, &bot.nlu.gazetteer) {
        return vec![answer];
    }
    let mut out = retrieve_candidates(frame, &bot.index, bot.settings.retrieval_k);
    out.push(bot.generator.generate(frame, state));
    out.push(CandidateReply::fallback());
    out
}
