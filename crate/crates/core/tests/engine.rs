use std::collections::BTreeSet;
use std::sync::Arc;

use taskbot::catalog::{sample_catalog, CatalogIndex};
use taskbot::dialogue::{screen_for, DialogueState, Modality, ScreenKind, Session};
use taskbot::engine::{Engine, TurnInput, TurnOutput};
use taskbot::video::VideoIndex;
use taskbot::DefaultEngine;

fn engine() -> DefaultEngine {
    Engine::new(Arc::new(CatalogIndex::build(sample_catalog()).unwrap()))
        .with_video(Arc::new(VideoIndex::build(VideoIndex::shipped_frames()).unwrap()))
}

fn say(e: &DefaultEngine, s: &mut Session, text: &str) -> TurnOutput {
    let input = match text.strip_prefix("tap:") {
        Some(t) => TurnInput::Tap(t.to_string()),
        None => TurnInput::Utterance(text.to_string()),
    };
    let out = e.handle_turn(s, &input).unwrap();
    assert_eq!(out.screen.screen_kind, screen_for(s), "{text}");
    s.check_invariants().unwrap();
    out
}

#[test]
fn scripted_session_visits_all_six_screens() {
    let e = engine();
    let mut s = Session::new("six");
    let script = [
        ("", ScreenKind::Welcome),
        ("tap:fridge", ScreenKind::FridgePicker),
        ("close", ScreenKind::Welcome),
        ("apple crumble", ScreenKind::SearchResults),
        ("tap:option:1", ScreenKind::IngredientsList),
        ("start", ScreenKind::StepView),
        ("next", ScreenKind::StepView),
        ("when did they preheat the oven?", ScreenKind::VideoView),
    ];
    let mut seen = BTreeSet::new();
    let mut last = None;
    for (text, want) in script {
        let out = say(&e, &mut s, text);
        assert_eq!(out.screen.screen_kind, want, "{text}: {}", out.text);
        seen.insert(want);
        last = Some(out);
    }
    assert_eq!(seen.len(), 6);
    let video = last.unwrap().screen.video.expect("seek fragment");
    assert_eq!(video.video_id, "vid-apple-crumble");
    assert_eq!(video.seek_to_s, 0.0);
}

#[test]
fn taps_are_recorded_as_taps() {
    let e = engine();
    let mut s = Session::new("taps");
    say(&e, &mut s, "");
    say(&e, &mut s, "how to change a tire");
    say(&e, &mut s, "tap:option:1");
    assert_eq!(s.state(), DialogueState::TaskOverview);
    let modalities: Vec<Modality> = s.history.iter().map(|t| t.modality).collect();
    assert_eq!(modalities[2], Modality::Tap);
    assert_eq!(modalities[1], Modality::Voice);
}

#[test]
fn completing_a_task_reaches_completion() {
    let e = engine();
    let mut s = Session::new("done");
    say(&e, &mut s, "");
    say(&e, &mut s, "how to change a tire");
    say(&e, &mut s, "tap:option:1");
    let first = say(&e, &mut s, "start");
    assert!(first.text.starts_with("Step 1"), "{}", first.text);
    let steps = s.active_task.as_ref().unwrap().step_count;
    for _ in 1..steps {
        say(&e, &mut s, "next");
    }
    say(&e, &mut s, "next");
    assert_eq!(s.state(), DialogueState::TaskCompleted);
    let bye = say(&e, &mut s, "stop");
    assert!(s.ended);
    assert!(!bye.text.is_empty());
}
