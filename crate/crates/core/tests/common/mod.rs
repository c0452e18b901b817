#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use parley_core::clock::StepClock;
use parley_core::store::{load_bot_definition, BotDefinition, BotSettings, MemoryHistoryStore};
use parley_core::Engine;

pub fn demo_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../bots/demo")
}

pub fn demo_bot() -> BotDefinition {
    load_bot_definition(demo_dir(), &BotSettings::default()).expect("demo bot loads")
}

pub fn memory_engine(bot: Arc<BotDefinition>) -> Engine {
    Engine::from_shared(
        bot,
        Arc::new(MemoryHistoryStore::new()),
        Arc::new(StepClock::new(1_700_000_000_000, 1)),
    )
}

/// Copies the demo bot into a temporary directory for mutation.
pub fn demo_copy() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for entry in std::fs::read_dir(demo_dir()).unwrap() {
        let entry = entry.unwrap();
        std::fs::copy(entry.path(), dir.path().join(entry.file_name())).unwrap();
    }
    dir
}
