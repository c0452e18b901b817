//! Persistence: conversation history and bot definitions.

pub mod bot;
pub mod history;

pub use self::bot::{build_corpus_index, load_bot_definition, BotDefinition, BotSettings};
pub use self::history::{
    append_turn, is_valid_conversation_id, FileHistoryStore, HistoryRecord, HistoryStore, MemoryHistoryStore,
};
