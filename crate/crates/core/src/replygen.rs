//! Reply generation: content filter, engagement ranking and realization.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::context::ConversationState;
use crate::dialogue::CandidateReply;
use crate::nlu::intent::jaccard;
use crate::nlu::{tokenize, Gazetteer, SemanticFrame};

pub const MAX_REPLY_TOKENS: usize = 60;
pub const NOVELTY_WINDOW: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterFlag {
    Blocked,
    Empty,
    Echo,
    Overlong,
    Duplicate,
}

impl fmt::Display for FilterFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Blocked => "blocked",
            Self::Empty => "empty",
            Self::Echo => "echo",
            Self::Overlong => "overlong",
            Self::Duplicate => "duplicate",
        })
    }
}

/// Normalized single-token terms a reply may not contain.
#[derive(Debug, Clone, Default)]
pub struct FilterLexicon(HashSet<String>);

impl FilterLexicon {
    pub fn new<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self(terms.into_iter().map(|t| t.as_ref().to_lowercase()).collect())
    }

    pub fn contains(&self, term: &str) -> bool {
        self.0.contains(term)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    /// Emission order is preserved.
    pub survivors: Vec<CandidateReply>,
    pub rejected: Vec<CandidateReply>,
    pub fallback_injected: bool,
}

/// Rejects blocked, empty, echoing, overlong and duplicate candidates. If
/// nothing survives the canned fallback is injected.
pub fn filter_candidates(
    candidates: Vec<CandidateReply>,
    lexicon: &FilterLexicon,
    frame: &SemanticFrame,
) -> FilterOutcome {
    let user = frame.resolved.trim().to_lowercase();
    // Duplicates are judged against higher-priority survivors, so visit
    // candidates by priority while remembering where they came from.
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|a, b| candidates[*b].priority.cmp(&candidates[*a].priority));
    let mut kept_texts: HashSet<String> = HashSet::new();
    let mut verdicts: Vec<Vec<FilterFlag>> = vec![Vec::new(); candidates.len()];
    for i in order {
        let candidate = &candidates[i];
        let folded = candidate.text.trim().to_lowercase();
        let tokens = tokenize(&candidate.text);
        let flags = &mut verdicts[i];
        if tokens.iter().any(|t| lexicon.contains(&t.normalized)) {
            flags.push(FilterFlag::Blocked);
        }
        if tokens.is_empty() {
            flags.push(FilterFlag::Empty);
        }
        if folded == user {
            flags.push(FilterFlag::Echo);
        }
        if tokens.len() > MAX_REPLY_TOKENS {
            flags.push(FilterFlag::Overlong);
        }
        if kept_texts.contains(&folded) {
            flags.push(FilterFlag::Duplicate);
        }
        if flags.is_empty() {
            kept_texts.insert(folded);
        }
    }
    let mut survivors = Vec::new();
    let mut rejected = Vec::new();
    for (mut candidate, flags) in candidates.into_iter().zip(verdicts) {
        if flags.is_empty() {
            survivors.push(candidate);
        } else {
            candidate.filter_flags = flags;
            rejected.push(candidate);
        }
    }
    let fallback_injected = survivors.is_empty();
    if fallback_injected {
        survivors.push(CandidateReply::fallback());
    }
    FilterOutcome {
        survivors,
        rejected,
        fallback_injected,
    }
}

fn length_score(tokens: usize) -> f64 {
    match tokens {
        4..=25 => 1.0,
        1..=3 | 26..=40 => 0.5,
        _ => 0.0,
    }
}

/// `0.4 L + 0.3 E + 0.2 N + 0.1 Q`: length band, entity overlap with the
/// frame, novelty against recent bot turns, and whether it asks a question.
pub fn engagement_score(
    candidate: &CandidateReply,
    frame: &SemanticFrame,
    state: &ConversationState,
    gazetteer: &Gazetteer,
) -> f64 {
    let tokens = tokenize(&candidate.text);
    let length = length_score(tokens.len());

    let frame_entities: BTreeSet<&str> = frame.mentions.iter().map(|m| m.resolved.as_str()).collect();
    let mentions = gazetteer.link(&tokens);
    let candidate_entities: BTreeSet<&str> = mentions.iter().map(|m| m.resolved.as_str()).collect();
    let shared = candidate_entities.intersection(&frame_entities).count();
    let entity = shared as f64 / frame_entities.len().max(1) as f64;

    let words: BTreeSet<String> = tokens.into_iter().map(|t| t.normalized).collect();
    let max_overlap = state
        .recent_bot_turns(NOVELTY_WINDOW)
        .into_iter()
        .map(|turn| {
            let previous: BTreeSet<String> = tokenize(&turn.raw).into_iter().map(|t| t.normalized).collect();
            jaccard(&words, &previous)
        })
        .fold(0.0, f64::max);
    let novelty = 1.0 - max_overlap;

    let question = if candidate.text.trim_end().ends_with('?') {
        1.0
    } else {
        0.0
    };

    (0.4 * length + 0.3 * entity + 0.2 * novelty + 0.1 * question).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedReply {
    pub candidate: CandidateReply,
    /// 1-based.
    pub rank: usize,
}

/// Orders by priority, then engagement, then cascade stage, then emission
/// order.
pub fn rank_candidates(survivors: Vec<CandidateReply>) -> Vec<RankedReply> {
    let mut ordered = survivors;
    ordered.sort_by(|a, b| {
        b.priority
            .cmp(&a.priority)
            .then_with(|| b.engagement.total_cmp(&a.engagement))
            .then_with(|| a.source.stage().cmp(&b.source.stage()))
    });
    ordered
        .into_iter()
        .enumerate()
        .map(|(i, candidate)| RankedReply { candidate, rank: i + 1 })
        .collect()
}

/// Capitalizes the first letter and terminates the sentence.
pub fn realize(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 1);
    let mut capitalized = false;
    for c in text.chars() {
        if !capitalized && c.is_alphabetic() {
            out.extend(c.to_uppercase());
            capitalized = true;
        } else {
            out.push(c);
        }
    }
    if !out.ends_with(['.', '!', '?']) {
        out.push('.');
    }
    out
}
