//! Service configuration: `key=value` lines, `#` comments.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use parley_core::store::BotSettings;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error("missing required key {0}")]
    Missing(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub bot_dir: PathBuf,
    pub data_dir: PathBuf,
    pub bind_addr: SocketAddr,
    /// Defaults for settings a bot's own `bot.txt` does not override.
    pub settings: BotSettings,
    pub debug_default: bool,
}

impl ServiceConfig {
    /// Reads a config file. Relative directories are taken relative to the
    /// file's own directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let content = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config = Self::parse(&content)?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.bot_dir = base.join(&config.bot_dir);
        config.data_dir = base.join(&config.data_dir);
        Ok(config)
    }

    pub fn parse(content: &str) -> Result<Self, ConfigError> {
        let mut bot_dir = None;
        let mut data_dir = None;
        let mut bind_addr = None;
        let mut settings = BotSettings::default();
        let mut debug_default = false;

        for (n, raw) in content.lines().enumerate() {
            let line = n + 1;
            let text = raw.trim();
            if text.is_empty() || text.starts_with('#') {
                continue;
            }
            let invalid = |message: String| ConfigError::Invalid { line, message };
            let (key, value) = text
                .split_once('=')
                .ok_or_else(|| invalid(format!("expected key=value, got {text:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            let bad_value = |e: &dyn std::fmt::Display| invalid(format!("{key}: {e}"));
            match key {
                "bot_dir" => bot_dir = Some(PathBuf::from(value)),
                "data_dir" => data_dir = Some(PathBuf::from(value)),
                "bind_addr" => bind_addr = Some(value.parse().map_err(|e| bad_value(&e))?),
                "default_intent_threshold" => {
                    let t: f64 = value.parse().map_err(|e| bad_value(&e))?;
                    if !(0.0..=1.0).contains(&t) {
                        return Err(invalid(format!("{key}: {t} is outside [0, 1]")));
                    }
                    settings.intent_threshold = t;
                }
                "coref_window" => settings.coref_window = value.parse().map_err(|e| bad_value(&e))?,
                "retrieval_k" => settings.retrieval_k = value.parse().map_err(|e| bad_value(&e))?,
                "debug_default" => debug_default = value.parse().map_err(|e| bad_value(&e))?,
                other => return Err(invalid(format!("unknown key {other:?}"))),
            }
        }

        Ok(Self {
            bot_dir: bot_dir.ok_or(ConfigError::Missing("bot_dir"))?,
            data_dir: data_dir.ok_or(ConfigError::Missing("data_dir"))?,
            bind_addr: bind_addr.ok_or(ConfigError::Missing("bind_addr"))?,
            settings,
            debug_default,
        })
    }
}
