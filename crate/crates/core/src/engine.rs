//! One full conversational turn, from raw text to persisted reply.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};

use crate::clock::Clock;
use crate::context::{resolve_coreference, ConversationState, Speaker};
use crate::dialogue::{plan, CandidateReply, Source};
use crate::error::{EngineError, LoadErrors};
use crate::nlu::{EntityType, IntentScore, SemanticFrame};
use crate::replygen::{engagement_score, filter_candidates, rank_candidates, realize, FilterOutcome, RankedReply};
use crate::store::{
    is_valid_conversation_id, load_bot_definition, BotDefinition, BotSettings, HistoryRecord, HistoryStore,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub conversation_id: String,
    pub text: String,
    #[serde(default)]
    pub debug: Option<bool>,
}

impl ChatRequest {
    pub fn new(conversation_id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            conversation_id: conversation_id.into(),
            text: text.into(),
            debug: None,
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if !is_valid_conversation_id(&self.conversation_id) {
            return Err(EngineError::InvalidRequest(
                "conversation_id must be 1-128 characters of [A-Za-z0-9_-]".to_string(),
            ));
        }
        if self.text.trim().is_empty() {
            return Err(EngineError::InvalidRequest("text must not be empty".to_string()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MentionDebug {
    pub text: String,
    pub entity_id: String,
    pub entity_type: EntityType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDebug {
    pub topic: String,
    pub topic_confidence: f64,
    pub top_intent: Option<IntentScore>,
    pub resolved: String,
    pub mentions: Vec<MentionDebug>,
}

impl From<&SemanticFrame> for FrameDebug {
    fn from(frame: &SemanticFrame) -> Self {
        Self {
            topic: frame.topic.name.clone(),
            topic_confidence: frame.topic.confidence,
            top_intent: frame.top_intent().cloned(),
            resolved: frame.resolved.clone(),
            mentions: frame
                .mentions
                .iter()
                .map(|m| MentionDebug {
                    text: frame.mention_text(m),
                    entity_id: m.resolved.clone(),
                    entity_type: m.entity_type,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub reply: String,
    pub source: Source,
    pub rank_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_debug: Option<FrameDebug>,
}

/// Everything computed for one turn before it is persisted.
#[derive(Debug, Clone)]
pub struct TurnOutcome {
    pub frame: SemanticFrame,
    pub candidates: Vec<CandidateReply>,
    pub filtered: FilterOutcome,
    pub ranked: Vec<RankedReply>,
    pub reply: String,
}

impl TurnOutcome {
    pub fn source(&self) -> Source {
        self.ranked[0].candidate.source
    }
}

/// Runs coreference, NLU, the cascade and reply generation for `raw`
/// without touching any store.
pub fn process_turn(bot: &BotDefinition, state: &ConversationState, raw: &str) -> TurnOutcome {
    let resolved = resolve_coreference(raw, state, &bot.nlu.gazetteer, bot.settings.coref_window);
    let frame = bot.nlu.analyze(raw, &resolved);
    let candidates = plan(&frame, state, bot);
    let mut filtered = filter_candidates(candidates.clone(), &bot.filter, &frame);
    for c in &mut filtered.survivors {
        c.engagement = engagement_score(c, &frame, state, &bot.nlu.gazetteer);
    }
    let ranked = rank_candidates(filtered.survivors.clone());
    let reply = realize(&ranked[0].candidate.text);
    TurnOutcome {
        frame,
        candidates,
        filtered,
        ranked,
        reply,
    }
}

/// Rebuilds conversation state from stored history by re-linking each user
/// turn with `bot`.
pub fn state_from_history(bot: &BotDefinition, conversation_id: &str, records: &[HistoryRecord]) -> ConversationState {
    let mut state = ConversationState::new(conversation_id);
    for pair in records.chunks_exact(2) {
        let (user, reply) = (&pair[0], &pair[1]);
        if user.speaker != Speaker::User || reply.speaker != Speaker::Bot {
            break;
        }
        let frame = bot.nlu.analyze(&user.raw, &user.resolved);
        state.update(
            &frame,
            &reply.raw,
            reply.source.unwrap_or(Source::Fallback),
            user.timestamp,
            reply.timestamp,
        );
    }
    state
}

#[derive(Default)]
struct Slot {
    generation: u64,
    state: Option<ConversationState>,
}

struct Snapshot {
    generation: u64,
    bot: Arc<BotDefinition>,
}

/// The conversational engine. Turns sharing a conversation id run one at a
/// time; distinct conversations run concurrently. The bot definition is an
/// immutable snapshot replaced atomically by [`Engine::reload`].
pub struct Engine {
    snapshot: RwLock<Snapshot>,
    store: Arc<dyn HistoryStore>,
    clock: Arc<dyn Clock>,
    conversations: Mutex<HashMap<String, Arc<Mutex<Slot>>>>,
    defaults: BotSettings,
    debug_default: bool,
}

impl Engine {
    pub fn new(bot: BotDefinition, store: Arc<dyn HistoryStore>, clock: Arc<dyn Clock>) -> Self {
        Self::from_shared(Arc::new(bot), store, clock)
    }

    pub fn from_shared(bot: Arc<BotDefinition>, store: Arc<dyn HistoryStore>, clock: Arc<dyn Clock>) -> Self {
        Self {
            snapshot: RwLock::new(Snapshot { generation: 0, bot }),
            store,
            clock,
            conversations: Mutex::new(HashMap::new()),
            defaults: BotSettings::default(),
            debug_default: false,
        }
    }

    /// Settings used as defaults when reloading a bot directory.
    pub fn with_defaults(mut self, defaults: BotSettings) -> Self {
        self.defaults = defaults;
        self
    }

    pub fn with_debug_default(mut self, debug: bool) -> Self {
        self.debug_default = debug;
        self
    }

    pub fn bot(&self) -> Arc<BotDefinition> {
        self.snapshot.read().bot.clone()
    }

    pub fn store(&self) -> &Arc<dyn HistoryStore> {
        &self.store
    }

    pub fn respond(&self, request: &ChatRequest) -> Result<ChatResponse, EngineError> {
        request.validate()?;
        let id = request.conversation_id.as_str();
        let slot = self.conversations.lock().entry(id.to_string()).or_default().clone();
        let mut slot = slot.lock();

        let (generation, bot) = {
            let snap = self.snapshot.read();
            (snap.generation, snap.bot.clone())
        };
        let mut state = match slot.state.take() {
            Some(state) if slot.generation == generation => state,
            _ => state_from_history(&bot, id, &self.store.load(id, None)?),
        };

        let outcome = process_turn(&bot, &state, &request.text);
        let source = outcome.source();
        let user_ts = self.clock.now_ms();
        let bot_ts = self.clock.now_ms();
        let index = state.next_index();
        let records = [
            HistoryRecord {
                conversation_id: id.to_string(),
                index,
                timestamp: user_ts,
                speaker: Speaker::User,
                raw: outcome.frame.raw.clone(),
                resolved: outcome.frame.resolved.clone(),
                source: None,
            },
            HistoryRecord {
                conversation_id: id.to_string(),
                index: index + 1,
                timestamp: bot_ts,
                speaker: Speaker::Bot,
                raw: outcome.reply.clone(),
                resolved: outcome.reply.clone(),
                source: Some(source),
            },
        ];
        if let Err(e) = self.store.append(&records) {
            // the cached state may disagree with disk now; rebuild next turn
            slot.state = None;
            return Err(e.into());
        }
        state.update(&outcome.frame, &outcome.reply, source, user_ts, bot_ts);
        slot.generation = generation;
        slot.state = Some(state);

        let debug = request.debug.unwrap_or(self.debug_default);
        Ok(ChatResponse {
            reply: outcome.reply.clone(),
            source,
            rank_size: outcome.ranked.len(),
            frame_debug: debug.then(|| FrameDebug::from(&outcome.frame)),
        })
    }

    pub fn history(&self, conversation_id: &str, limit: Option<usize>) -> Result<Vec<HistoryRecord>, EngineError> {
        if !is_valid_conversation_id(conversation_id) {
            return Err(EngineError::InvalidRequest(
                "conversation_id must be 1-128 characters of [A-Za-z0-9_-]".to_string(),
            ));
        }
        Ok(self.store.load(conversation_id, limit)?)
    }

    /// Loads `dir` and swaps it in. On failure the current bot stays active.
    pub fn reload(&self, dir: impl AsRef<Path>) -> Result<Arc<BotDefinition>, LoadErrors> {
        let bot = Arc::new(load_bot_definition(dir, &self.defaults)?);
        self.swap(bot.clone());
        Ok(bot)
    }

    pub fn swap(&self, bot: Arc<BotDefinition>) {
        let mut snap = self.snapshot.write();
        snap.generation += 1;
        snap.bot = bot;
    }
}
