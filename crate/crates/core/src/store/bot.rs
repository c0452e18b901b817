//! Bot-definition directory loader.
//!
//! Every problem found is reported with its file and line; a definition is
//! returned only when all files parse and every cross-reference holds.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use crate::context::DEFAULT_COREF_WINDOW;
use crate::dialogue::retrieval::DEFAULT_RETRIEVAL_K;
use crate::dialogue::template::Trigger;
use crate::dialogue::{
    Document, KnowledgeBase, KnowledgeTriple, MarkovGenerator, PredicateLexicon, ReplyGenerator, RetrievalIndex,
    RuleTemplate, TripleObject,
};
use crate::error::{LoadError, LoadErrors};
use crate::nlu::{
    tokenize, EmbeddingTable, EntityRecord, EntityType, Gazetteer, IntentClassifier, IntentDefinition,
    KeywordTopicDetector, Nlu, Stopwords, TopicDefinition, DEFAULT_INTENT_THRESHOLD,
};
use crate::replygen::FilterLexicon;

pub const REQUIRED_FILES: [&str; 10] = [
    "intents.txt",
    "topics.txt",
    "entities.txt",
    "templates.txt",
    "triples.txt",
    "predicates.txt",
    "embeddings.txt",
    "stopwords.txt",
    "filter.txt",
    "corpus.txt",
];
pub const SETTINGS_FILE: &str = "bot.txt";

/// Tunables a bot may override in `bot.txt`.
#[derive(Debug, Clone, PartialEq)]
pub struct BotSettings {
    pub intent_threshold: f64,
    pub coref_window: u64,
    pub retrieval_k: usize,
}

impl Default for BotSettings {
    fn default() -> Self {
        Self {
            intent_threshold: DEFAULT_INTENT_THRESHOLD,
            coref_window: DEFAULT_COREF_WINDOW,
            retrieval_k: DEFAULT_RETRIEVAL_K,
        }
    }
}

/// A loaded, validated bot. Immutable; reloads build a new one.
pub struct BotDefinition {
    pub name: String,
    pub dir: Option<PathBuf>,
    pub nlu: Nlu,
    pub templates: Vec<RuleTemplate>,
    pub kb: KnowledgeBase,
    pub index: RetrievalIndex,
    pub generator: Box<dyn ReplyGenerator>,
    pub filter: FilterLexicon,
    pub settings: BotSettings,
}

impl std::fmt::Debug for BotDefinition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BotDefinition")
            .field("name", &self.name)
            .field("dir", &self.dir)
            .field("nlu", &self.nlu)
            .field("templates", &self.templates.len())
            .field("triples", &self.kb.triples.len())
            .field("documents", &self.index.len())
            .field("settings", &self.settings)
            .finish_non_exhaustive()
    }
}

pub fn build_corpus_index(documents: Vec<Document>, stopwords: Stopwords) -> RetrievalIndex {
    RetrievalIndex::build(documents, stopwords)
}

fn is_identifier(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

struct Reader<'a> {
    dir: &'a Path,
    errors: Vec<LoadError>,
}

/// `(line number, content)` of every non-blank, non-comment line.
type Lines = Vec<(usize, String)>;

impl Reader<'_> {
    fn raw_lines(&mut self, file: &str) -> Option<Lines> {
        match fs::read_to_string(self.dir.join(file)) {
            Ok(content) => Some(
                content
                    .lines()
                    .enumerate()
                    .map(|(i, l)| (i + 1, l.to_string()))
                    .collect(),
            ),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                self.error(file, None, "missing file");
                None
            }
            Err(e) => {
                self.error(file, None, format!("cannot read: {e}"));
                None
            }
        }
    }

    /// Lines without blanks and `#` comments.
    fn lines(&mut self, file: &str) -> Option<Lines> {
        let mut lines = self.raw_lines(file)?;
        lines.retain(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
        Some(lines)
    }

    fn error(&mut self, file: &str, line: Option<usize>, message: impl Into<String>) {
        self.errors.push(LoadError::new(file, line, message));
    }

    /// Splits a line into exactly `min..=max` tab-separated fields.
    fn fields<'l>(&mut self, file: &str, line: usize, text: &'l str, min: usize, max: usize) -> Option<Vec<&'l str>> {
        let fields: Vec<&str> = text.split('\t').collect();
        if fields.len() < min || fields.len() > max {
            let expected = if min == max {
                format!("{min}")
            } else {
                format!("{min} to {max}")
            };
            self.error(
                file,
                Some(line),
                format!("expected {expected} tab-separated fields, found {}", fields.len()),
            );
            return None;
        }
        Some(fields)
    }
}

fn parse_terms(reader: &mut Reader<'_>, file: &str) -> Vec<String> {
    let mut out = Vec::new();
    for (line, text) in reader.lines(file).unwrap_or_default() {
        let term = text.trim();
        if tokenize(term).len() != 1 {
            reader.error(file, Some(line), format!("{term:?} is not a single token"));
            continue;
        }
        out.push(term.to_lowercase());
    }
    out
}

fn parse_embeddings(reader: &mut Reader<'_>) -> Option<EmbeddingTable> {
    const FILE: &str = "embeddings.txt";
    let lines = reader.raw_lines(FILE)?;
    let mut dim: Option<(usize, usize)> = None;
    let mut entries: Vec<(String, Vec<f64>)> = Vec::new();
    let mut seen = HashSet::new();
    let mut ok = true;
    for (n, (line, text)) in lines.into_iter().enumerate() {
        if n == 0 {
            if let Some(rest) = text.strip_prefix("#dim") {
                match rest.trim().parse::<usize>() {
                    Ok(d) if d > 0 => dim = Some((d, line)),
                    _ => {
                        reader.error(FILE, Some(line), format!("invalid dimension header {text:?}"));
                        ok = false;
                    }
                }
                continue;
            }
        }
        if text.trim().is_empty() || text.starts_with('#') {
            continue;
        }
        let mut parts = text.split_whitespace();
        let word = parts.next().unwrap_or_default().to_lowercase();
        let vector: Result<Vec<f64>, _> = parts.map(str::parse::<f64>).collect();
        let vector = match vector {
            Ok(v) if !v.is_empty() && v.iter().all(|x| x.is_finite()) => v,
            _ => {
                reader.error(FILE, Some(line), "expected a word followed by real numbers");
                ok = false;
                continue;
            }
        };
        match dim {
            None => dim = Some((vector.len(), line)),
            Some((d, declared)) if d != vector.len() => {
                reader.error(
                    FILE,
                    Some(line),
                    format!(
                        "dimension mismatch: {word:?} has {} components, expected {d} (from line {declared})",
                        vector.len()
                    ),
                );
                ok = false;
                continue;
            }
            Some(_) => {}
        }
        if !seen.insert(word.clone()) {
            reader.error(FILE, Some(line), format!("duplicate word {word:?}"));
            ok = false;
            continue;
        }
        entries.push((word, vector));
    }
    let Some((dim, _)) = dim else {
        reader.error(FILE, None, "no vectors and no #dim header");
        return None;
    };
    if !ok {
        return None;
    }
    EmbeddingTable::new(dim, entries)
        .map_err(|e| reader.error(FILE, None, e))
        .ok()
}

fn parse_intents(reader: &mut Reader<'_>) -> Vec<IntentDefinition> {
    const FILE: &str = "intents.txt";
    let mut intents: Vec<IntentDefinition> = Vec::new();
    let mut thresholds: Vec<(usize, String, f64)> = Vec::new();
    for (line, text) in reader.lines(FILE).unwrap_or_default() {
        let Some(fields) = reader.fields(FILE, line, &text, 2, 3) else {
            continue;
        };
        let name = fields[0];
        if !is_identifier(name) {
            reader.error(FILE, Some(line), format!("invalid intent name {name:?}"));
            continue;
        }
        if fields[1] == "@threshold" {
            match fields.get(2).and_then(|v| v.trim().parse::<f64>().ok()) {
                Some(t) if (0.0..=1.0).contains(&t) => thresholds.push((line, name.to_string(), t)),
                _ => reader.error(FILE, Some(line), "threshold must be a real in [0, 1]"),
            }
            continue;
        }
        if fields.len() != 2 {
            reader.error(FILE, Some(line), "expected intent<TAB>example");
            continue;
        }
        if tokenize(fields[1]).is_empty() {
            reader.error(FILE, Some(line), "example has no tokens");
            continue;
        }
        match intents.iter_mut().find(|i| i.name == name) {
            Some(intent) => intent.examples.push(fields[1].to_string()),
            None => intents.push(IntentDefinition {
                name: name.to_string(),
                examples: vec![fields[1].to_string()],
                threshold: None,
            }),
        }
    }
    for (line, name, t) in thresholds {
        match intents.iter_mut().find(|i| i.name == name) {
            Some(intent) => intent.threshold = Some(t),
            None => reader.error(
                FILE,
                Some(line),
                format!("threshold for intent {name:?} without examples"),
            ),
        }
    }
    intents
}

fn parse_topics(reader: &mut Reader<'_>) -> Vec<TopicDefinition> {
    const FILE: &str = "topics.txt";
    let mut topics: Vec<TopicDefinition> = Vec::new();
    for (line, text) in reader.lines(FILE).unwrap_or_default() {
        let Some(fields) = reader.fields(FILE, line, &text, 3, 3) else {
            continue;
        };
        let (name, keyword) = (fields[0], fields[1].to_lowercase());
        if !is_identifier(name) {
            reader.error(FILE, Some(line), format!("invalid topic name {name:?}"));
            continue;
        }
        if tokenize(&keyword).len() != 1 {
            reader.error(FILE, Some(line), format!("keyword {keyword:?} is not a single token"));
            continue;
        }
        let weight = match fields[2].trim().parse::<f64>() {
            Ok(w) if w > 0.0 && w.is_finite() => w,
            _ => {
                reader.error(FILE, Some(line), "weight must be a positive real");
                continue;
            }
        };
        let index = match topics.iter().position(|t| t.name == name) {
            Some(i) => i,
            None => {
                topics.push(TopicDefinition {
                    name: name.to_string(),
                    keywords: BTreeMap::new(),
                });
                topics.len() - 1
            }
        };
        if topics[index].keywords.insert(keyword.clone(), weight).is_some() {
            reader.error(
                FILE,
                Some(line),
                format!("duplicate keyword {keyword:?} for topic {name:?}"),
            );
        }
    }
    topics
}

fn parse_entities(reader: &mut Reader<'_>) -> Vec<EntityRecord> {
    const FILE: &str = "entities.txt";
    let mut records: Vec<EntityRecord> = Vec::new();
    for (line, text) in reader.lines(FILE).unwrap_or_default() {
        let Some(fields) = reader.fields(FILE, line, &text, 4, 5) else {
            continue;
        };
        let id = fields[0];
        if !is_identifier(id) {
            reader.error(FILE, Some(line), format!("invalid entity id {id:?}"));
            continue;
        }
        if records.iter().any(|r| r.id == id) {
            reader.error(FILE, Some(line), format!("duplicate entity id {id:?}"));
            continue;
        }
        let canonical = fields[1].trim();
        if tokenize(canonical).is_empty() {
            reader.error(FILE, Some(line), "canonical name has no tokens");
            continue;
        }
        let entity_type: EntityType = match fields[2].parse() {
            Ok(t) => t,
            Err(e) => {
                reader.error(FILE, Some(line), e);
                continue;
            }
        };
        let aliases = fields[3]
            .split('|')
            .map(str::trim)
            .filter(|a| !tokenize(a).is_empty())
            .map(str::to_string)
            .collect();
        records.push(EntityRecord {
            id: id.to_string(),
            canonical: canonical.to_string(),
            aliases,
            entity_type,
            description: fields.get(4).map(|d| d.trim().to_string()).unwrap_or_default(),
        });
    }
    records
}

fn parse_templates(reader: &mut Reader<'_>, intents: &[IntentDefinition]) -> Vec<RuleTemplate> {
    const FILE: &str = "templates.txt";
    let mut templates = Vec::new();
    for (line, text) in reader.lines(FILE).unwrap_or_default() {
        let Some(fields) = reader.fields(FILE, line, &text, 4, 4) else {
            continue;
        };
        let priority = match fields[1].trim() {
            "" | "-" => None,
            p => match p.parse::<i64>() {
                Ok(p) => Some(p),
                Err(_) => {
                    reader.error(FILE, Some(line), format!("invalid priority {p:?}"));
                    continue;
                }
            },
        };
        match RuleTemplate::parse(fields[0], priority, fields[2].trim(), fields[3]) {
            Ok(template) => {
                if let Trigger::Intent(name) = &template.trigger {
                    if !intents.iter().any(|i| &i.name == name) {
                        reader.error(FILE, Some(line), format!("unknown intent {name:?}"));
                        continue;
                    }
                }
                templates.push(template);
            }
            Err(e) => reader.error(FILE, Some(line), e),
        }
    }
    templates
}

fn parse_triples(reader: &mut Reader<'_>, entities: &[EntityRecord]) -> Vec<KnowledgeTriple> {
    const FILE: &str = "triples.txt";
    let ids: HashSet<&str> = entities.iter().map(|e| e.id.as_str()).collect();
    let mut triples = Vec::new();
    for (line, text) in reader.lines(FILE).unwrap_or_default() {
        let Some(fields) = reader.fields(FILE, line, &text, 3, 3) else {
            continue;
        };
        let (subject, predicate, object) = (fields[0], fields[1], fields[2].trim());
        if !ids.contains(subject) {
            reader.error(FILE, Some(line), format!("unknown subject entity {subject:?}"));
            continue;
        }
        if !is_identifier(predicate) {
            reader.error(FILE, Some(line), format!("invalid predicate {predicate:?}"));
            continue;
        }
        if object.is_empty() {
            reader.error(FILE, Some(line), "empty object");
            continue;
        }
        let object = if ids.contains(object) {
            TripleObject::Entity(object.to_string())
        } else {
            TripleObject::Literal(object.to_string())
        };
        triples.push(KnowledgeTriple {
            subject: subject.to_string(),
            predicate: predicate.to_string(),
            object,
        });
    }
    triples
}

fn parse_predicates(reader: &mut Reader<'_>) -> PredicateLexicon {
    const FILE: &str = "predicates.txt";
    let mut pairs = Vec::new();
    for (line, text) in reader.lines(FILE).unwrap_or_default() {
        let Some(fields) = reader.fields(FILE, line, &text, 2, 2) else {
            continue;
        };
        if tokenize(fields[0]).len() != 1 || !is_identifier(fields[1]) {
            reader.error(FILE, Some(line), "expected word<TAB>predicate");
            continue;
        }
        pairs.push((fields[0].to_lowercase(), fields[1].to_string()));
    }
    PredicateLexicon::new(pairs)
}

fn parse_corpus(reader: &mut Reader<'_>) -> Vec<Document> {
    const FILE: &str = "corpus.txt";
    let mut documents = Vec::new();
    for (line, text) in reader.lines(FILE).unwrap_or_default() {
        let Some(fields) = reader.fields(FILE, line, &text, 2, 2) else {
            continue;
        };
        let Ok(timestamp) = fields[0].trim().parse::<u64>() else {
            reader.error(FILE, Some(line), format!("invalid timestamp {:?}", fields[0]));
            continue;
        };
        documents.push(Document {
            id: documents.len(),
            text: fields[1].to_string(),
            timestamp,
        });
    }
    documents
}

fn parse_settings(reader: &mut Reader<'_>, defaults: &BotSettings) -> (Option<String>, BotSettings) {
    let mut settings = defaults.clone();
    let mut name = None;
    if !reader.dir.join(SETTINGS_FILE).exists() {
        return (name, settings);
    }
    for (line, text) in reader.lines(SETTINGS_FILE).unwrap_or_default() {
        let Some((key, value)) = text.split_once('=') else {
            reader.error(SETTINGS_FILE, Some(line), "expected key=value");
            continue;
        };
        let value = value.trim();
        let bad = |r: &mut Reader<'_>| {
            r.error(
                SETTINGS_FILE,
                Some(line),
                format!("invalid value {value:?} for {}", key.trim()),
            )
        };
        match key.trim() {
            "name" if !value.is_empty() => name = Some(value.to_string()),
            "intent_threshold" => match value.parse::<f64>() {
                Ok(t) if (0.0..=1.0).contains(&t) => settings.intent_threshold = t,
                _ => bad(reader),
            },
            "coref_window" => match value.parse() {
                Ok(w) => settings.coref_window = w,
                Err(_) => bad(reader),
            },
            "retrieval_k" => match value.parse() {
                Ok(k) => settings.retrieval_k = k,
                Err(_) => bad(reader),
            },
            other => reader.error(SETTINGS_FILE, Some(line), format!("unknown key {other:?}")),
        }
    }
    (name, settings)
}

/// Loads and validates the bot definition stored in `dir`.
pub fn load_bot_definition(dir: impl AsRef<Path>, defaults: &BotSettings) -> Result<BotDefinition, LoadErrors> {
    let dir = dir.as_ref();
    let mut reader = Reader {
        dir,
        errors: Vec::new(),
    };
    if !dir.is_dir() {
        return Err(LoadErrors(vec![LoadError::new(
            dir.display().to_string(),
            None,
            "not a directory",
        )]));
    }
    let (name, settings) = parse_settings(&mut reader, defaults);
    let stopwords = Stopwords::new(parse_terms(&mut reader, "stopwords.txt"));
    let filter = FilterLexicon::new(parse_terms(&mut reader, "filter.txt"));
    let embeddings = parse_embeddings(&mut reader);
    let intents = parse_intents(&mut reader);
    let topics = parse_topics(&mut reader);
    let entities = parse_entities(&mut reader);
    let templates = parse_templates(&mut reader, &intents);
    let triples = parse_triples(&mut reader, &entities);
    let lexicon = parse_predicates(&mut reader);
    let documents = parse_corpus(&mut reader);

    let embeddings = match embeddings {
        Some(e) if reader.errors.is_empty() => e,
        _ => return Err(LoadErrors(reader.errors)),
    };
    let name = name.unwrap_or_else(|| {
        dir.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "bot".to_string())
    });
    let intents = IntentClassifier::new(intents, &embeddings, &stopwords, settings.intent_threshold);
    let generator = MarkovGenerator::build(&documents, stopwords.clone());
    let index = build_corpus_index(documents, stopwords.clone());
    Ok(BotDefinition {
        name,
        dir: Some(dir.to_path_buf()),
        nlu: Nlu {
            gazetteer: Gazetteer::new(entities, stopwords.clone()),
            topics: Box::new(KeywordTopicDetector::new(topics)),
            intents,
            embeddings,
            stopwords,
        },
        templates,
        kb: KnowledgeBase { triples, lexicon },
        index,
        generator: Box::new(generator),
        filter,
        settings,
    })
}
