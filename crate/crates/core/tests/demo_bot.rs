mod common;

use std::sync::Arc;

use parley_core::context::ConversationState;
use parley_core::dialogue::Source;
use parley_core::engine::process_turn;
use parley_core::ChatRequest;

use common::{demo_bot, memory_engine};

#[test]
fn demo_bot_loads_with_expected_content() {
    let bot = demo_bot();
    assert_eq!(bot.name, "DemoBot");
    assert!(bot.nlu.intents.contains("book_restaurant"));
    assert_eq!(bot.nlu.gazetteer.get("klm").unwrap().canonical, "KLM");
    assert_eq!(bot.nlu.embeddings.dim(), 8);
    assert_eq!(bot.nlu.intents.threshold("goodbye"), Some(0.8));
    assert_eq!(bot.nlu.intents.threshold("greet"), Some(0.75));
}

#[test]
fn restaurant_sentences_share_an_intent() {
    let bot = demo_bot();
    let exact = bot
        .nlu
        .analyze("", "I want to make a reservation in an Italian restaurant");
    let top = exact.top_intent().unwrap();
    assert_eq!(top.intent, "book_restaurant");
    assert!((top.score - 1.0).abs() < 1e-12);

    let paraphrase = bot.nlu.analyze("", "I need a table in a pizzeria");
    let top = paraphrase.top_intent().unwrap();
    assert_eq!(top.intent, "book_restaurant");
    // frozen from an independent cosine script over bots/demo
    assert!((top.score - 0.990126).abs() < 1e-6, "{}", top.score);
    assert!(top.matched);
    assert_eq!(paraphrase.topic.name, "food");
}

#[test]
fn empty_text_frame() {
    let bot = demo_bot();
    let frame = bot.nlu.analyze("", "");
    assert!(frame.tokens.is_empty());
    assert_eq!(frame.topic.name, "general");
    assert_eq!(frame.topic.confidence, 0.0);
    assert!(frame.mentions.is_empty());
}

#[test]
fn analyze_is_deterministic() {
    let bot = demo_bot();
    for text in ["when was klm founded", "i love new york", "zxq", "fly to rome?"] {
        assert_eq!(bot.nlu.analyze(text, text), bot.nlu.analyze(text, text));
    }
}

#[test]
fn founding_year_comes_from_the_knowledge_base() {
    let engine = memory_engine(Arc::new(demo_bot()));
    let r = engine.respond(&ChatRequest::new("c1", "when was klm founded")).unwrap();
    assert_eq!(r.reply, "1919.");
    assert_eq!(r.source, Source::Kb);
    assert_eq!(r.rank_size, 1);
}

#[test]
fn backstory_wins_for_name_question() {
    let engine = memory_engine(Arc::new(demo_bot()));
    let r = engine.respond(&ChatRequest::new("c1", "what is your name")).unwrap();
    assert_eq!(r.reply, "I am DemoBot.");
    assert_eq!(r.source, Source::RuleBackstory);
}

#[test]
fn gibberish_falls_back() {
    let engine = memory_engine(Arc::new(demo_bot()));
    let r = engine.respond(&ChatRequest::new("c1", "zxq blorf")).unwrap();
    assert_eq!(r.source, Source::Fallback);
}

#[test]
fn paraphrase_reaches_intent_template() {
    let engine = memory_engine(Arc::new(demo_bot()));
    let r = engine
        .respond(&ChatRequest::new("c1", "I need a table in a pizzeria"))
        .unwrap();
    assert_eq!(r.source, Source::RuleIntent);
    assert_eq!(r.reply, "I can help you find a table. For how many people?");
}

#[test]
fn pronoun_follow_up_uses_history() {
    let engine = memory_engine(Arc::new(demo_bot()));
    let r = engine
        .respond(&ChatRequest::new("c1", "who is albert plesman"))
        .unwrap();
    assert_eq!(r.source, Source::Kb);
    assert_eq!(r.reply, "The Dutch aviator who founded KLM.");
    let mut req = ChatRequest::new("c1", "when was he born?");
    req.debug = Some(true);
    let r = engine.respond(&req).unwrap();
    assert_eq!(r.reply, "1889.");
    assert_eq!(r.frame_debug.unwrap().resolved, "when was Albert Plesman born?");
}

#[test]
fn retrieval_and_generation_compete_in_stage_three() {
    let bot = demo_bot();
    let state = ConversationState::new("c1");
    let outcome = process_turn(&bot, &state, "tell me about gelato");
    let sources: Vec<_> = outcome.candidates.iter().map(|c| c.source).collect();
    assert_eq!(sources, [Source::Retrieval, Source::Generative, Source::Fallback]);
    assert_eq!(outcome.source(), Source::Retrieval);
    assert_eq!(outcome.reply, "Rome has great pizza and even better gelato.");
}
