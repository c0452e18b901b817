//! Rule templates: backstory patterns, intent triggers and entity-type triggers.
//!
//! Pattern language: literal words, `*` (zero or more tokens, greedy) and
//! `<TYPE>` (exactly one linked mention of that entity type). Responses may
//! reference `{entity}`, `{topic}` and `{TYPE}` for a placeholder bound by
//! the pattern.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use crate::nlu::{tokenize, EntityMention, EntityType, Gazetteer, SemanticFrame};

use super::{CandidateReply, Source};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TemplateKind {
    Backstory,
    Intent,
    Entity,
}

impl TemplateKind {
    pub fn source(self) -> Source {
        match self {
            Self::Backstory => Source::RuleBackstory,
            Self::Intent => Source::RuleIntent,
            Self::Entity => Source::RuleEntity,
        }
    }
}

impl FromStr for TemplateKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "backstory" => Ok(Self::Backstory),
            "intent" => Ok(Self::Intent),
            "entity" => Ok(Self::Entity),
            other => Err(format!(
                "unknown template kind {other:?} (expected backstory, intent or entity)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternElement {
    Literal(String),
    Wildcard,
    Placeholder(EntityType),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    elements: Vec<PatternElement>,
}

impl Pattern {
    pub fn elements(&self) -> &[PatternElement] {
        &self.elements
    }

    pub fn placeholders(&self) -> BTreeSet<EntityType> {
        self.elements
            .iter()
            .filter_map(|e| match e {
                PatternElement::Placeholder(t) => Some(*t),
                _ => None,
            })
            .collect()
    }

    /// Matches the whole frame token sequence. On success returns the
    /// mention bound to each placeholder type (first binding wins).
    pub fn match_frame<'f>(&self, frame: &'f SemanticFrame) -> Option<HashMap<EntityType, &'f EntityMention>> {
        let starts: HashMap<usize, &EntityMention> = frame.mentions.iter().map(|m| (m.start, m)).collect();
        let mut failed = HashSet::new();
        let mut bindings = Vec::new();
        if self.match_from(0, 0, frame, &starts, &mut failed, &mut bindings) {
            let mut out = HashMap::new();
            for (ty, m) in bindings {
                out.entry(ty).or_insert(m);
            }
            Some(out)
        } else {
            None
        }
    }

    fn match_from<'f>(
        &self,
        pi: usize,
        ti: usize,
        frame: &'f SemanticFrame,
        starts: &HashMap<usize, &'f EntityMention>,
        failed: &mut HashSet<(usize, usize)>,
        bindings: &mut Vec<(EntityType, &'f EntityMention)>,
    ) -> bool {
        let tokens = &frame.tokens;
        if pi == self.elements.len() {
            return ti == tokens.len();
        }
        if failed.contains(&(pi, ti)) {
            return false;
        }
        let ok = match &self.elements[pi] {
            PatternElement::Literal(word) => {
                ti < tokens.len()
                    && tokens[ti].normalized == *word
                    && self.match_from(pi + 1, ti + 1, frame, starts, failed, bindings)
            }
            PatternElement::Wildcard => (ti..=tokens.len())
                .rev()
                .any(|next| self.match_from(pi + 1, next, frame, starts, failed, bindings)),
            PatternElement::Placeholder(ty) => match starts.get(&ti) {
                Some(m) if m.entity_type == *ty => {
                    bindings.push((*ty, m));
                    let ok = self.match_from(pi + 1, m.end, frame, starts, failed, bindings);
                    if !ok {
                        bindings.pop();
                    }
                    ok
                }
                _ => false,
            },
        };
        if !ok {
            failed.insert((pi, ti));
        }
        ok
    }
}

impl FromStr for Pattern {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut elements = Vec::new();
        for chunk in s.split_whitespace() {
            if chunk == "*" {
                elements.push(PatternElement::Wildcard);
            } else if let Some(inner) = chunk.strip_prefix('<').and_then(|c| c.strip_suffix('>')) {
                elements.push(PatternElement::Placeholder(inner.parse()?));
            } else if chunk.contains('*') || chunk.contains('<') || chunk.contains('>') {
                return Err(format!("malformed pattern element {chunk:?}"));
            } else {
                elements.extend(
                    tokenize(chunk)
                        .into_iter()
                        .map(|t| PatternElement::Literal(t.normalized)),
                );
            }
        }
        if elements.is_empty() {
            return Err("empty pattern".to_string());
        }
        Ok(Self { elements })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slot {
    Entity,
    Topic,
    Placeholder(EntityType),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Part {
    Text(String),
    Slot(Slot),
}

/// Response text with `{...}` slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseTemplate {
    parts: Vec<Part>,
}

impl ResponseTemplate {
    pub fn slots(&self) -> impl Iterator<Item = Slot> + '_ {
        self.parts.iter().filter_map(|p| match p {
            Part::Slot(s) => Some(*s),
            Part::Text(_) => None,
        })
    }

    fn render(&self, mut fill: impl FnMut(Slot) -> Option<String>) -> Option<String> {
        let mut out = String::new();
        for part in &self.parts {
            match part {
                Part::Text(t) => out.push_str(t),
                Part::Slot(s) => out.push_str(&fill(*s)?),
            }
        }
        Some(out)
    }
}

impl FromStr for ResponseTemplate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = Vec::new();
        let mut rest = s;
        while let Some(open) = rest.find(['{', '}']) {
            if rest.as_bytes()[open] == b'}' {
                return Err(format!("unbalanced '}}' in response {s:?}"));
            }
            if open > 0 {
                parts.push(Part::Text(rest[..open].to_string()));
            }
            let after = &rest[open + 1..];
            let close = after
                .find('}')
                .ok_or_else(|| format!("unterminated slot in response {s:?}"))?;
            let name = &after[..close];
            let slot = match name {
                "entity" => Slot::Entity,
                "topic" => Slot::Topic,
                other => Slot::Placeholder(
                    other
                        .parse()
                        .map_err(|_| format!("unknown slot {{{other}}} in response {s:?}"))?,
                ),
            };
            parts.push(Part::Slot(slot));
            rest = &after[close + 1..];
        }
        if !rest.is_empty() {
            parts.push(Part::Text(rest.to_string()));
        }
        if parts.is_empty() {
            return Err("empty response".to_string());
        }
        Ok(Self { parts })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Trigger {
    Pattern(Pattern),
    Intent(String),
    EntityType(EntityType),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleTemplate {
    pub kind: TemplateKind,
    pub trigger: Trigger,
    pub response: ResponseTemplate,
    pub priority: i64,
}

impl RuleTemplate {
    /// Parses one template. `priority` of `None` takes the kind's default.
    pub fn parse(kind: &str, priority: Option<i64>, trigger: &str, response: &str) -> Result<Self, String> {
        let kind: TemplateKind = kind.parse()?;
        let trigger = match kind {
            TemplateKind::Backstory => Trigger::Pattern(trigger.parse()?),
            TemplateKind::Intent => {
                if trigger.is_empty() {
                    return Err("intent template needs an intent name".to_string());
                }
                Trigger::Intent(trigger.to_string())
            }
            TemplateKind::Entity => Trigger::EntityType(trigger.parse()?),
        };
        let response: ResponseTemplate = response.parse()?;
        let bindable: BTreeSet<EntityType> = match &trigger {
            Trigger::Pattern(p) => p.placeholders(),
            Trigger::EntityType(t) => BTreeSet::from([*t]),
            Trigger::Intent(_) => BTreeSet::new(),
        };
        for slot in response.slots() {
            if let Slot::Placeholder(t) = slot {
                if !bindable.contains(&t) {
                    return Err(format!("response slot {{{t}}} is not bound by the trigger"));
                }
            }
        }
        Ok(Self {
            kind,
            trigger,
            priority: priority.unwrap_or_else(|| kind.source().default_priority()),
            response,
        })
    }

    /// Fills the response for `frame`, or `None` when the template does not
    /// fire or a slot has nothing to bind to.
    pub fn fire(&self, frame: &SemanticFrame, gazetteer: &Gazetteer) -> Option<String> {
        let canonical = |m: &EntityMention| {
            gazetteer
                .get(&m.resolved)
                .map(|r| r.canonical.clone())
                .unwrap_or_else(|| frame.mention_text(m))
        };
        let topic = frame.topic.name.clone();
        match &self.trigger {
            Trigger::Pattern(pattern) => {
                let bound = pattern.match_frame(frame)?;
                self.response.render(|slot| match slot {
                    Slot::Entity => frame.mentions.first().map(canonical),
                    Slot::Topic => Some(topic.clone()),
                    Slot::Placeholder(t) => bound.get(&t).map(|m| canonical(m)),
                })
            }
            Trigger::Intent(name) => {
                if !frame.intent(name).is_some_and(|s| s.matched) {
                    return None;
                }
                self.response.render(|slot| match slot {
                    Slot::Entity => frame.mentions.first().map(canonical),
                    Slot::Topic => Some(topic.clone()),
                    Slot::Placeholder(_) => None,
                })
            }
            Trigger::EntityType(ty) => {
                let first = frame.mentions.iter().find(|m| m.entity_type == *ty)?;
                self.response.render(|slot| match slot {
                    Slot::Entity | Slot::Placeholder(_) => Some(canonical(first)),
                    Slot::Topic => Some(topic.clone()),
                })
            }
        }
    }
}

impl fmt::Display for TemplateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Backstory => "backstory",
            Self::Intent => "intent",
            Self::Entity => "entity",
        })
    }
}

/// Every firing template as a candidate, highest priority first, ties in
/// template order.
pub fn match_templates(
    frame: &SemanticFrame,
    templates: &[RuleTemplate],
    gazetteer: &Gazetteer,
) -> Vec<CandidateReply> {
    let mut out: Vec<CandidateReply> = templates
        .iter()
        .filter_map(|t| {
            t.fire(frame, gazetteer)
                .map(|text| CandidateReply::with_priority(text, t.kind.source(), t.priority))
        })
        .collect();
    out.sort_by_key(|c| std::cmp::Reverse(c.priority));
    out
}
