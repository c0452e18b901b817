mod common;

use std::fs;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;

use parley_core::clock::StepClock;
use parley_core::context::Speaker;
use parley_core::dialogue::Source;
use parley_core::error::{EngineError, StoreError};
use parley_core::store::{FileHistoryStore, HistoryRecord, HistoryStore, MemoryHistoryStore};
use parley_core::{ChatRequest, Engine};

use common::{demo_bot, demo_copy, memory_engine};

#[test]
fn invalid_requests_are_rejected_before_the_pipeline() {
    let engine = memory_engine(Arc::new(demo_bot()));
    for (id, text) in [
        ("c1", ""),
        ("c1", "   "),
        ("", "hello"),
        ("bad id", "hello"),
        (&*"x".repeat(129), "hi"),
    ] {
        let err = engine.respond(&ChatRequest::new(id, text)).unwrap_err();
        assert!(matches!(err, EngineError::InvalidRequest(_)), "{id:?} {text:?}");
    }
    assert!(engine.history("c1", None).unwrap().is_empty());
}

#[test]
fn both_turns_are_persisted() {
    let engine = memory_engine(Arc::new(demo_bot()));
    engine.respond(&ChatRequest::new("c1", "hello")).unwrap();
    engine.respond(&ChatRequest::new("c1", "when was klm founded")).unwrap();
    let history = engine.history("c1", None).unwrap();
    assert_eq!(history.len(), 4);
    let speakers: Vec<_> = history.iter().map(|r| r.speaker).collect();
    assert_eq!(speakers, [Speaker::User, Speaker::Bot, Speaker::User, Speaker::Bot]);
    assert_eq!(history[3].raw, "1919.");
    assert_eq!(history[3].source, Some(Source::Kb));
    assert_eq!(engine.history("c1", Some(1)).unwrap()[0].index, 3);
}

/// Fails every append while the switch is on.
struct FlakyStore {
    inner: MemoryHistoryStore,
    failing: AtomicBool,
}

impl HistoryStore for FlakyStore {
    fn append(&self, records: &[HistoryRecord]) -> Result<(), StoreError> {
        if self.failing.load(Ordering::SeqCst) {
            return Err(StoreError::Io {
                path: "flaky".into(),
                source: std::io::Error::other("disk full"),
            });
        }
        self.inner.append(records)
    }

    fn load(&self, id: &str, limit: Option<usize>) -> Result<Vec<HistoryRecord>, StoreError> {
        self.inner.load(id, limit)
    }
}

#[test]
fn storage_failure_rejects_the_whole_turn() {
    let store = Arc::new(FlakyStore {
        inner: MemoryHistoryStore::new(),
        failing: AtomicBool::new(false),
    });
    let engine = Engine::from_shared(Arc::new(demo_bot()), store.clone(), Arc::new(StepClock::new(0, 1)));
    engine
        .respond(&ChatRequest::new("c1", "who is albert plesman"))
        .unwrap();
    store.failing.store(true, Ordering::SeqCst);
    assert!(matches!(
        engine.respond(&ChatRequest::new("c1", "tell me about rome")),
        Err(EngineError::Store(_))
    ));
    store.failing.store(false, Ordering::SeqCst);
    assert_eq!(engine.history("c1", None).unwrap().len(), 2);
    // the failed turn left no trace in the context either
    let r = engine.respond(&ChatRequest::new("c1", "when was he born")).unwrap();
    assert_eq!(r.reply, "1889.");
    assert_eq!(engine.history("c1", None).unwrap().len(), 4);
}

#[test]
fn reload_with_added_template_changes_next_turn() {
    let dir = demo_copy();
    let engine = memory_engine(Arc::new(
        parley_core::store::load_bot_definition(dir.path(), &Default::default()).unwrap(),
    ));
    let before = engine.respond(&ChatRequest::new("c1", "do you like tulips")).unwrap();
    assert_ne!(before.source, Source::RuleBackstory);

    let path = dir.path().join("templates.txt");
    let mut content = fs::read_to_string(&path).unwrap();
    content.push_str("backstory\t-\t* like tulips *\tTulips are my favourite flower.\n");
    fs::write(&path, content).unwrap();
    engine.reload(dir.path()).unwrap();

    let after = engine.respond(&ChatRequest::new("c1", "do you like tulips")).unwrap();
    assert_eq!(after.source, Source::RuleBackstory);
    assert_eq!(after.reply, "Tulips are my favourite flower.");
}

#[test]
fn failed_reload_keeps_the_old_bot() {
    let dir = demo_copy();
    let engine = memory_engine(Arc::new(demo_bot()));
    let path = dir.path().join("triples.txt");
    let mut content = fs::read_to_string(&path).unwrap();
    content.push_str("atlantis\tfounded_in\t9000\n");
    fs::write(&path, content).unwrap();
    let errors = engine.reload(dir.path()).unwrap_err();
    assert!(errors.to_string().starts_with("triples.txt:"));
    let r = engine.respond(&ChatRequest::new("c1", "when was klm founded")).unwrap();
    assert_eq!(r.reply, "1919.");
}

#[test]
fn reload_of_same_directory_is_idempotent() {
    let engine = memory_engine(Arc::new(demo_bot()));
    let a = engine.respond(&ChatRequest::new("a", "i love new york")).unwrap();
    engine.reload(common::demo_dir()).unwrap();
    let b = engine.respond(&ChatRequest::new("b", "i love new york")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn concurrent_conversations_keep_dense_histories() {
    let data = tempfile::tempdir().unwrap();
    let store = Arc::new(FileHistoryStore::open(data.path()).unwrap());
    let engine = Arc::new(Engine::from_shared(
        Arc::new(demo_bot()),
        store,
        Arc::new(StepClock::new(0, 1)),
    ));
    let lines = [
        "hello",
        "who is marjan rintel",
        "what does she lead",
        "fly to paris",
        "thanks",
    ];
    let handles: Vec<_> = (0..16)
        .map(|t| {
            let engine = engine.clone();
            thread::spawn(move || {
                // two threads per id interleave on the same conversation
                let id = format!("conv-{}", t % 8);
                for i in 0..10 {
                    engine
                        .respond(&ChatRequest::new(&id, lines[(t + i) % lines.len()]))
                        .unwrap();
                }
            })
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
    for c in 0..8 {
        let history = engine.history(&format!("conv-{c}"), None).unwrap();
        assert_eq!(history.len(), 40);
        for (i, r) in history.iter().enumerate() {
            assert_eq!(r.index, i as u64);
            let expected = if i % 2 == 0 { Speaker::User } else { Speaker::Bot };
            assert_eq!(r.speaker, expected);
        }
    }
}

#[test]
fn restart_rebuilds_context_from_disk() {
    let data = tempfile::tempdir().unwrap();
    let open = || {
        Engine::from_shared(
            Arc::new(demo_bot()),
            Arc::new(FileHistoryStore::open(data.path()).unwrap()),
            Arc::new(StepClock::new(0, 1)),
        )
    };
    open()
        .respond(&ChatRequest::new("c1", "who is albert plesman"))
        .unwrap();
    let r = open().respond(&ChatRequest::new("c1", "when was he born")).unwrap();
    assert_eq!(r.reply, "1889.");
}
