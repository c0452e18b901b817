//! Conversational agent engine.
//!
//! A turn flows through four stages:
//!
//! 1. [`context`] resolves pronouns against recently mentioned entities,
//! 2. [`nlu`] parses the resolved text into a [`nlu::SemanticFrame`],
//! 3. [`dialogue`] runs the strategy cascade (rule templates, knowledge base,
//!    retrieval plus generation, canned fallback) to propose candidates,
//! 4. [`replygen`] filters, ranks and realizes the winning candidate.
//!
//! [`engine::Engine`] wires the stages together with persistent history from
//! [`store`].

pub mod clock;
pub mod context;
pub mod dialogue;
pub mod engine;
pub mod error;
pub mod eval;
pub mod nlu;
pub mod replygen;
pub mod store;

pub use crate::engine::{ChatRequest, ChatResponse, Engine};
pub use crate::error::{EngineError, LoadError, LoadErrors, StoreError};
pub use crate::store::BotDefinition;
