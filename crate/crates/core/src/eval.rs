//! Scripted dialogue evaluation.
//!
//! Cases file: one turn per line,
//! `dialogue_id<TAB>user text<TAB>expected_source[<TAB>expected_substring[<TAB>note]]`,
//! with a blank line between dialogues. Each dialogue runs against a fresh
//! in-memory history and a deterministic clock.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::clock::StepClock;
use crate::dialogue::Source;
use crate::engine::{ChatRequest, Engine};
use crate::error::{EngineError, LoadError};
use crate::store::{BotDefinition, MemoryHistoryStore};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalTurn {
    pub line: usize,
    pub text: String,
    pub expected_source: Source,
    pub expected_substring: Option<String>,
    /// Free-form annotation carried into the report, never scored.
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalCase {
    pub dialogue_id: String,
    pub turns: Vec<EvalTurn>,
}

pub fn parse_cases(content: &str, file: &str) -> Result<Vec<EvalCase>, LoadError> {
    let mut cases: Vec<EvalCase> = Vec::new();
    let mut open = false;
    for (n, line) in content.lines().enumerate() {
        let line_no = n + 1;
        if line.trim().is_empty() {
            open = false;
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if !(3..=5).contains(&fields.len()) {
            return Err(LoadError::new(
                file,
                Some(line_no),
                format!("expected 3 to 5 tab-separated fields, found {}", fields.len()),
            ));
        }
        let dialogue_id = fields[0].trim();
        if dialogue_id.is_empty() {
            return Err(LoadError::new(file, Some(line_no), "empty dialogue id"));
        }
        if fields[1].trim().is_empty() {
            return Err(LoadError::new(file, Some(line_no), "empty user text"));
        }
        let expected_source = fields[2]
            .trim()
            .parse()
            .map_err(|e: String| LoadError::new(file, Some(line_no), e))?;
        let optional = |i: usize| {
            fields
                .get(i)
                .map(|s| s.trim())
                .filter(|s| !s.is_empty())
                .map(str::to_string)
        };
        let turn = EvalTurn {
            line: line_no,
            text: fields[1].to_string(),
            expected_source,
            expected_substring: optional(3),
            note: optional(4),
        };
        match cases.last_mut() {
            Some(case) if open && case.dialogue_id == dialogue_id => case.turns.push(turn),
            _ => cases.push(EvalCase {
                dialogue_id: dialogue_id.to_string(),
                turns: vec![turn],
            }),
        }
        open = true;
    }
    Ok(cases)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TurnResult {
    pub dialogue_id: String,
    pub turn: EvalTurn,
    pub reply: String,
    pub actual_source: Source,
    pub source_ok: bool,
    /// `None` when the case gives no expected substring.
    pub substring_ok: Option<bool>,
}

impl TurnResult {
    pub fn passed(&self) -> bool {
        self.source_ok && self.substring_ok.unwrap_or(true)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub results: Vec<TurnResult>,
}

impl EvalReport {
    pub fn cases(&self) -> usize {
        self.results.len()
    }

    pub fn passed(&self) -> usize {
        self.results.iter().filter(|r| r.passed()).count()
    }

    pub fn all_passed(&self) -> bool {
        self.passed() == self.cases()
    }

    pub fn source_match_rate(&self) -> Option<f64> {
        let n = self.cases();
        (n > 0).then(|| self.results.iter().filter(|r| r.source_ok).count() as f64 / n as f64)
    }

    pub fn substring_match_rate(&self) -> Option<f64> {
        let checked: Vec<bool> = self.results.iter().filter_map(|r| r.substring_ok).collect();
        (!checked.is_empty()).then(|| checked.iter().filter(|ok| **ok).count() as f64 / checked.len() as f64)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for r in &self.results {
            let verdict = if r.passed() { "PASS" } else { "FAIL" };
            let _ = write!(
                out,
                "{verdict} {}:{} {:?} expected {} got {} reply {:?}",
                r.dialogue_id, r.turn.line, r.turn.text, r.turn.expected_source, r.actual_source, r.reply
            );
            if let (Some(sub), Some(false)) = (&r.turn.expected_substring, r.substring_ok) {
                let _ = write!(out, " (missing {sub:?})");
            }
            if let Some(note) = &r.turn.note {
                let _ = write!(out, " note: {note}");
            }
            out.push('\n');
        }
        let rate = |r: Option<f64>| r.map_or("n/a".to_string(), |r| format!("{:.1}%", r * 100.0));
        let _ = writeln!(
            out,
            "{} cases, {} passed, source match {}, substring match {}",
            self.cases(),
            self.passed(),
            rate(self.source_match_rate()),
            rate(self.substring_match_rate())
        );
        out
    }
}

pub fn run_eval(bot: Arc<BotDefinition>, cases: &[EvalCase]) -> Result<EvalReport, EngineError> {
    let mut report = EvalReport::default();
    for (n, case) in cases.iter().enumerate() {
        let engine = Engine::from_shared(
            bot.clone(),
            Arc::new(MemoryHistoryStore::new()),
            Arc::new(StepClock::new(0, 1)),
        );
        let conversation_id = format!("eval-{n}");
        for turn in &case.turns {
            let response = engine.respond(&ChatRequest::new(&conversation_id, &turn.text))?;
            let substring_ok = turn
                .expected_substring
                .as_ref()
                .map(|s| response.reply.contains(s.as_str()));
            report.results.push(TurnResult {
                dialogue_id: case.dialogue_id.clone(),
                turn: turn.clone(),
                source_ok: response.source == turn.expected_source,
                actual_source: response.source,
                reply: response.reply,
                substring_ok,
            });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_dialogues_and_optional_fields() {
        let text =
            "# header\nd1\thello\trule:intent\nd1\tbye\tfallback\tbye\tnote\n\nd1\tagain\tkb\nd2\tx\tretrieval\n";
        let cases = parse_cases(text, "cases.tsv").unwrap();
        assert_eq!(cases.len(), 3);
        assert_eq!(cases[0].turns.len(), 2);
        assert_eq!(cases[0].turns[1].expected_substring.as_deref(), Some("bye"));
        assert_eq!(cases[0].turns[1].note.as_deref(), Some("note"));
        assert_eq!(cases[0].turns[1].line, 3);
        assert_eq!(cases[1].dialogue_id, "d1");
        assert_eq!(cases[2].turns[0].expected_source, Source::Retrieval);
    }

    #[test]
    fn empty_file_has_no_cases() {
        assert!(parse_cases("", "c").unwrap().is_empty());
        let report = EvalReport::default();
        assert!(report.all_passed());
        assert!(report.render().starts_with("0 cases"));
    }

    #[test]
    fn malformed_lines_are_located() {
        let err = parse_cases("d1\thello\n", "cases.tsv").unwrap_err();
        assert_eq!(
            err.to_string(),
            "cases.tsv:1: expected 3 to 5 tab-separated fields, found 2"
        );
        let err = parse_cases("d1\thello\trule:intent\nd1\thi\tbogus\n", "cases.tsv").unwrap_err();
        assert!(err.to_string().starts_with("cases.tsv:2: unknown source tag"));
    }
}
