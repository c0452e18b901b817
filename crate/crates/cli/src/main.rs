//! `parley`: chat with, validate, evaluate and serve bots.
//!
//! Exit codes: 0 success, 1 validation or evaluation failure, 2 usage error.

use std::io::{self, BufRead, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use parley_core::clock::SystemClock;
use parley_core::eval::{parse_cases, run_eval};
use parley_core::store::{load_bot_definition, BotDefinition, BotSettings, FileHistoryStore};
use parley_core::{ChatRequest, Engine, EngineError};
use parley_server::ServiceConfig;

#[derive(Parser)]
#[command(name = "parley", version, about = "Rule-first conversational agent engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Chat on stdin/stdout, persisting turns to the data directory
    Chat {
        #[arg(long, value_name = "DIR")]
        bot: PathBuf,
        #[arg(long, value_name = "DIR")]
        data: PathBuf,
        /// Conversation to continue
        #[arg(long, default_value = "local")]
        conversation: String,
    },
    /// Load a bot definition and report every problem found
    Validate {
        #[arg(long, value_name = "DIR")]
        bot: PathBuf,
    },
    /// Run scripted dialogues and report source and substring matches
    Eval {
        #[arg(long, value_name = "DIR")]
        bot: PathBuf,
        #[arg(long, value_name = "FILE")]
        cases: PathBuf,
    },
    /// Run the HTTP service
    Serve {
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
    },
}

/// Failure that has already been reported and maps to exit code 1.
struct Reported;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Chat {
            bot,
            data,
            conversation,
        } => chat(&bot, &data, &conversation),
        Command::Validate { bot } => validate(&bot),
        Command::Eval { bot, cases } => eval(&bot, &cases),
        Command::Serve { config } => serve(&config),
    };
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Reported)) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn load_bot(dir: &Path) -> Result<BotDefinition, Reported> {
    load_bot_definition(dir, &BotSettings::default()).map_err(|errors| {
        eprintln!("{errors}");
        Reported
    })
}

fn validate(dir: &Path) -> Result<Result<(), Reported>> {
    match load_bot_definition(dir, &BotSettings::default()) {
        Ok(bot) => {
            println!("OK {}", bot.name);
            Ok(Ok(()))
        }
        Err(errors) => {
            println!("{errors}");
            Ok(Err(Reported))
        }
    }
}

fn chat(bot_dir: &Path, data: &Path, conversation: &str) -> Result<Result<(), Reported>> {
    let bot = match load_bot(bot_dir) {
        Ok(bot) => bot,
        Err(r) => return Ok(Err(r)),
    };
    let store = FileHistoryStore::open(data).context("opening data directory")?;
    let engine = Engine::new(bot, Arc::new(store), Arc::new(SystemClock));

    let interactive = io::stdin().is_terminal();
    let mut stdout = io::stdout().lock();
    let mut lines = io::stdin().lock().lines();
    loop {
        if interactive {
            write!(stdout, "> ")?;
            stdout.flush()?;
        }
        let Some(line) = lines.next() else {
            return Ok(Ok(()));
        };
        let line = line.context("reading input")?;
        if line.trim().is_empty() {
            continue;
        }
        match engine.respond(&ChatRequest::new(conversation, line)) {
            Ok(r) => writeln!(stdout, "{} [{}]", r.reply, r.source)?,
            Err(EngineError::InvalidRequest(m)) => {
                eprintln!("error: {m}");
                return Ok(Err(Reported));
            }
            Err(e) => return Err(e).context("turn rejected"),
        }
    }
}

fn eval(bot_dir: &Path, cases_path: &Path) -> Result<Result<(), Reported>> {
    let content = std::fs::read_to_string(cases_path).with_context(|| format!("reading {}", cases_path.display()))?;
    let file = cases_path
        .file_name()
        .map_or_else(|| cases_path.display().to_string(), |f| f.to_string_lossy().into());
    let cases = match parse_cases(&content, &file) {
        Ok(cases) => cases,
        Err(e) => {
            eprintln!("{e}");
            return Ok(Err(Reported));
        }
    };
    let bot = match load_bot(bot_dir) {
        Ok(bot) => bot,
        Err(r) => return Ok(Err(r)),
    };
    let report = run_eval(Arc::new(bot), &cases)?;
    print!("{}", report.render());
    Ok(if report.all_passed() { Ok(()) } else { Err(Reported) })
}

fn serve(config_path: &Path) -> Result<Result<(), Reported>> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .init();
    let config = ServiceConfig::load(config_path).with_context(|| format!("config {}", config_path.display()))?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(parley_server::serve(config))?;
    Ok(Ok(()))
}
