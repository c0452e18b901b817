//! Append-only conversation history.
//!
//! One file per conversation, `<data_dir>/<conversation_id>.log`, one
//! tab-separated record per line:
//!
//! ```text
//! conversation_id  index  timestamp_ms  speaker  raw  resolved  source
//! ```
//!
//! Text fields escape backslash, tab and newline as `\\`, `\t` and `\n`.
//! User turns carry `-` as their source.

use std::collections::HashMap;
use std::fs::{self, OpenOptions};
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

use crate::context::Speaker;
use crate::dialogue::Source;
use crate::error::StoreError;

const FIELDS: usize = 7;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryRecord {
    pub conversation_id: String,
    pub index: u64,
    pub timestamp: u64,
    pub speaker: Speaker,
    pub raw: String,
    pub resolved: String,
    pub source: Option<Source>,
}

pub fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out
}

pub fn unescape(text: &str) -> Result<String, String> {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some(other) => return Err(format!("invalid escape \\{other}")),
            None => return Err("dangling backslash".to_string()),
        }
    }
    Ok(out)
}

impl HistoryRecord {
    /// The record as one line, without the trailing newline.
    pub fn to_line(&self) -> String {
        let source = self.source.map_or("-", Source::as_str);
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            escape(&self.conversation_id),
            self.index,
            self.timestamp,
            self.speaker.as_str(),
            escape(&self.raw),
            escape(&self.resolved),
            source
        )
    }

    pub fn from_line(line: &str) -> Result<Self, String> {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != FIELDS {
            return Err(format!("expected {FIELDS} fields, found {}", fields.len()));
        }
        let speaker: Speaker = fields[3].parse()?;
        let source = match (speaker, fields[6]) {
            (Speaker::User, "-") => None,
            (Speaker::User, other) => return Err(format!("user turn with source {other:?}")),
            (Speaker::Bot, tag) => Some(tag.parse()?),
        };
        Ok(Self {
            conversation_id: unescape(fields[0])?,
            index: fields[1]
                .parse()
                .map_err(|_| format!("invalid index {:?}", fields[1]))?,
            timestamp: fields[2]
                .parse()
                .map_err(|_| format!("invalid timestamp {:?}", fields[2]))?,
            speaker,
            raw: unescape(fields[4])?,
            resolved: unescape(fields[5])?,
            source,
        })
    }
}

/// Client-chosen conversation ids: 1 to 128 characters of `[A-Za-z0-9_-]`.
pub fn is_valid_conversation_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 128 && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
}

pub trait HistoryStore: Send + Sync {
    /// Appends records of one conversation. The first index must follow the
    /// stored last index (0 for a new conversation) and the rest must be
    /// dense. Either every record is accepted or none is.
    fn append(&self, records: &[HistoryRecord]) -> Result<(), StoreError>;

    /// The last `limit` records (all when `None`) in chronological order.
    fn load(&self, conversation_id: &str, limit: Option<usize>) -> Result<Vec<HistoryRecord>, StoreError>;
}

pub fn append_turn(store: &dyn HistoryStore, record: HistoryRecord) -> Result<(), StoreError> {
    store.append(std::slice::from_ref(&record))
}

fn check_sequence(records: &[HistoryRecord], expected: u64) -> Result<(), StoreError> {
    for (expected, r) in (expected..).zip(records) {
        if r.conversation_id != records[0].conversation_id || r.index != expected {
            return Err(StoreError::Sequencing {
                conversation_id: r.conversation_id.clone(),
                expected,
                got: r.index,
            });
        }
    }
    Ok(())
}

fn tail<T>(mut items: Vec<T>, limit: Option<usize>) -> Vec<T> {
    if let Some(limit) = limit {
        let skip = items.len().saturating_sub(limit);
        items.drain(..skip);
    }
    items
}

#[derive(Debug, Default)]
pub struct MemoryHistoryStore {
    conversations: Mutex<HashMap<String, Vec<HistoryRecord>>>,
}

impl MemoryHistoryStore {
    pub fn new() -> Self {
        Self::default()
    }
}

impl HistoryStore for MemoryHistoryStore {
    fn append(&self, records: &[HistoryRecord]) -> Result<(), StoreError> {
        let Some(first) = records.first() else {
            return Ok(());
        };
        let mut conversations = self.conversations.lock();
        let log = conversations.entry(first.conversation_id.clone()).or_default();
        check_sequence(records, log.len() as u64)?;
        log.extend_from_slice(records);
        Ok(())
    }

    fn load(&self, conversation_id: &str, limit: Option<usize>) -> Result<Vec<HistoryRecord>, StoreError> {
        let conversations = self.conversations.lock();
        let records = conversations.get(conversation_id).cloned().unwrap_or_default();
        Ok(tail(records, limit))
    }
}

/// Line-delimited history files under a data directory.
#[derive(Debug)]
pub struct FileHistoryStore {
    dir: PathBuf,
    /// Next expected index per conversation, read from disk on first use.
    next: Mutex<HashMap<String, Arc<Mutex<Option<u64>>>>>,
}

impl FileHistoryStore {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(|source| StoreError::Io {
            path: dir.clone(),
            source,
        })?;
        Ok(Self {
            dir,
            next: Mutex::new(HashMap::new()),
        })
    }

    pub fn path_for(&self, conversation_id: &str) -> PathBuf {
        self.dir.join(format!("{conversation_id}.log"))
    }

    fn read_all(&self, conversation_id: &str) -> Result<Vec<HistoryRecord>, StoreError> {
        let path = self.path_for(conversation_id);
        let content = match fs::read_to_string(&path) {
            Ok(c) => c,
            Err(e) if e.kind() == ErrorKind::NotFound => return Ok(Vec::new()),
            Err(source) => return Err(StoreError::Io { path, source }),
        };
        let mut records = Vec::new();
        for (n, line) in content.split('\n').enumerate() {
            if line.is_empty() {
                continue;
            }
            let record = HistoryRecord::from_line(line).map_err(|message| StoreError::Corrupt {
                path: path.clone(),
                line: n + 1,
                message,
            })?;
            records.push(record);
        }
        Ok(records)
    }

    fn check_id(&self, conversation_id: &str) -> Result<(), StoreError> {
        if is_valid_conversation_id(conversation_id) {
            Ok(())
        } else {
            Err(StoreError::Io {
                path: self.dir.join(conversation_id),
                source: std::io::Error::new(ErrorKind::InvalidInput, "invalid conversation id"),
            })
        }
    }
}

impl HistoryStore for FileHistoryStore {
    fn append(&self, records: &[HistoryRecord]) -> Result<(), StoreError> {
        let Some(first) = records.first() else {
            return Ok(());
        };
        let id = first.conversation_id.as_str();
        self.check_id(id)?;
        let slot = self.next.lock().entry(id.to_string()).or_default().clone();
        let mut next = slot.lock();
        let expected = match *next {
            Some(n) => n,
            None => self.read_all(id)?.last().map_or(0, |r| r.index + 1),
        };
        *next = Some(expected);
        check_sequence(records, expected)?;

        let mut buf = String::new();
        for r in records {
            buf.push_str(&r.to_line());
            buf.push('\n');
        }
        let path = self.path_for(id);
        let io = |source| StoreError::Io {
            path: path.clone(),
            source,
        };
        let mut file = OpenOptions::new().create(true).append(true).open(&path).map_err(io)?;
        file.write_all(buf.as_bytes()).map_err(io)?;
        file.sync_data().map_err(io)?;
        *next = Some(expected + records.len() as u64);
        Ok(())
    }

    fn load(&self, conversation_id: &str, limit: Option<usize>) -> Result<Vec<HistoryRecord>, StoreError> {
        self.check_id(conversation_id)?;
        Ok(tail(self.read_all(conversation_id)?, limit))
    }
}
