use std::sync::Arc;

use chrono::NaiveDate;

use super::*;
use crate::catalog::sample_catalog;
use crate::dialogue::{screen_for, ScreenKind};
use crate::response::{FnGenerator, GeneratorError};

fn engine() -> Engine {
    let catalog = Arc::new(CatalogIndex::build(sample_catalog()).unwrap());
    let video = Arc::new(VideoIndex::build(VideoIndex::shipped_frames()).unwrap());
    Engine::new(catalog)
        .with_video(video)
        .with_config(EngineConfig { today: NaiveDate::from_ymd_opt(2026, 10, 15), ..Default::default() })
}

fn say(e: &Engine, s: &mut Session, text: &str) -> TurnOutput {
    e.handle_turn(s, &TurnInput::Utterance(text.into())).unwrap()
}

#[test]
fn fresh_session_greets() {
    let e = engine();
    let mut s = Session::new("s1");
    let out = say(&e, &mut s, "");
    assert_eq!(out.screen.screen_kind, ScreenKind::Welcome);
    assert_eq!(out.debug.response_case, ResponseCase::Greeting);
    assert!(!out.screen.items.is_empty());
    assert!(!out.screen.tips.is_empty());
    assert_eq!(s.history.len(), 1);
}

#[test]
fn tire_search_populates_results() {
    let e = engine();
    let mut s = Session::new("s2");
    say(&e, &mut s, "");
    let out = say(&e, &mut s, "How to change a tire?");
    assert_eq!(out.state, DialogueState::Grounding);
    assert_eq!(out.screen.screen_kind, ScreenKind::SearchResults);
    assert_eq!(out.screen.items[0].id.as_deref(), Some("d-change-tire"));
    assert_eq!(out.debug.response_case, ResponseCase::SearchResults);
}

#[test]
fn full_cooking_walkthrough() {
    let e = engine();
    let mut s = Session::new("s3");
    say(&e, &mut s, "");
    let out = say(&e, &mut s, "I want to make pesto chicken soup");
    assert_eq!(out.screen.items[0].id.as_deref(), Some("r-pesto-soup"));
    let out = say(&e, &mut s, "the first one");
    assert_eq!(out.screen.screen_kind, ScreenKind::IngredientsList);
    assert!(out.screen.items.iter().any(|i| i.label == "garlic"));
    let out = say(&e, &mut s, "start");
    assert_eq!(out.text, "Step 1: Pour the Chicken Stock in a pan and add Garlic.");
    assert_eq!(out.screen.step.as_ref().unwrap().index, 0);
    let out = say(&e, &mut s, "next");
    assert_eq!(out.screen.step.as_ref().unwrap().index, 1);

    let out = say(&e, &mut s, "When did the chef add the chicken breast?");
    assert_eq!(out.screen.screen_kind, ScreenKind::VideoView);
    let seek = out.screen.video.expect("seek fragment");
    assert_eq!(seek.video_id, "vid-pesto-soup");
    assert!(seek.caption.contains("chicken breast"), "{}", seek.caption);
    let out = say(&e, &mut s, "close");
    assert_eq!(out.screen.screen_kind, ScreenKind::StepView);
    assert_eq!(out.debug.response_case, ResponseCase::Step);

    let out = say(&e, &mut s, "tell me a fun fact");
    assert_eq!(out.debug.response_case, ResponseCase::Curiosity);
    assert_eq!(out.screen.screen_kind, ScreenKind::StepView);
    let out = say(&e, &mut s, "I don't have garlic");
    assert_eq!(out.debug.response_case, ResponseCase::Substitution);
    let out = say(&e, &mut s, "next");
    assert_eq!(out.screen.step.as_ref().unwrap().index, 2);
    let out = say(&e, &mut s, "stop");
    assert_eq!(out.debug.response_case, ResponseCase::Farewell);
    assert!(s.ended);
    s.check_invariants().unwrap();
}

#[test]
fn creative_request_lists_matching_recipes() {
    let e = engine();
    let mut s = Session::new("s4");
    say(&e, &mut s, "");
    let out = say(&e, &mut s, "I have zucchini and eggplant, something vegetarian");
    assert_eq!(out.state, DialogueState::CreativeCookingSubflow);
    assert_eq!(out.screen.screen_kind, ScreenKind::FridgePicker);
    assert_eq!(out.screen.items[0].id.as_deref(), Some("r-grilled-veggies"));
    let out = e.handle_turn(&mut s, &TurnInput::Tap("option:1".into())).unwrap();
    assert_eq!(out.state, DialogueState::TaskOverview);
    assert_eq!(s.history.last().unwrap().modality, crate::dialogue::Modality::Tap);
}

#[test]
fn promoter_failure_omits_description() {
    let down = FnGenerator::new(|_| Err(GeneratorError::Unavailable("connection refused".into())));
    let e = engine().with_generator(Arc::new(down));
    let mut s = Session::new("s5");
    say(&e, &mut s, "");
    let out = e.handle_turn(&mut s, &TurnInput::Tap("task:r-apple-crumble".into())).unwrap();
    assert_eq!(out.screen.screen_kind, ScreenKind::IngredientsList);
    assert_eq!(out.screen.description, None);
    assert_eq!(out.debug.response_case, ResponseCase::TaskOverview);
    let up = engine().with_generator(Arc::new(crate::response::StubGenerator));
    let mut s = Session::new("s5b");
    let out = up.handle_turn(&mut s, &TurnInput::Tap("task:r-apple-crumble".into())).unwrap();
    assert!(out.screen.description.unwrap().contains("apple"));
}

#[test]
fn fixed_seed_is_reproducible() {
    let e = engine();
    let script = ["", "banana bread", "2", "yes", "what is a spatula?", "repeat", "next", "how are you", "stop"];
    let run = || {
        let mut s = Session::new("same");
        script.iter().map(|u| say(&e, &mut s, u).text).collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}

#[test]
fn screen_matches_state_on_every_turn() {
    let e = engine();
    let script = [
        "",
        "lasagna",
        "first",
        "start",
        "next",
        "what does simmer mean?",
        "video of the sauce",
        "next",
        "resume",
        "what can I cook with tomato and basil",
        "close",
        "find guacamole",
        "1",
        "previous",
        "hello",
        "kill",
        "next",
        "",
        "stop",
        "next",
    ];
    let mut s = Session::new("s6");
    for u in script {
        let out = say(&e, &mut s, u);
        assert_eq!(out.screen.screen_kind, screen_for(&s), "after {u:?}");
        assert_eq!(out.state, s.state());
        assert_eq!(e.render_screen(&s).screen_kind, out.screen.screen_kind);
        s.check_invariants().unwrap();
    }
    assert_eq!(s.history.last().unwrap().response_case, ResponseCase::Ended);
}

#[test]
fn bad_tap_is_a_fallback() {
    let e = engine();
    let mut s = Session::new("s7");
    let out = e.handle_turn(&mut s, &TurnInput::Tap("nonsense".into())).unwrap();
    assert_eq!(out.debug.response_case, ResponseCase::Fallback);
    let out = e.handle_turn(&mut s, &TurnInput::Tap("task:missing".into())).unwrap();
    assert_eq!(out.debug.response_case, ResponseCase::Fallback);
}
