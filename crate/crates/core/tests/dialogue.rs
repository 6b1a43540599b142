use std::collections::BTreeMap;

use proptest::prelude::*;
use taskbot::catalog::{sample_catalog, Task};
use taskbot::dialogue::{DialogueState, Event, Session, StateMachine};
use taskbot::intent::Intent;

fn tasks() -> BTreeMap<String, Task> {
    sample_catalog().into_iter().map(|t| (t.id.clone(), t)).collect()
}

fn event() -> impl Strategy<Value = Event> {
    let ids: Vec<String> = tasks().into_keys().chain(["missing-task".to_string()]).collect();
    prop_oneof![
        1 => Just(Event::SessionStart),
        1 => Just(Event::Timeout),
        1 => Just(Event::Dismiss),
        1 => prop::sample::select(ids.clone()).prop_map(|task_id| Event::SelectTask { task_id }),
        1 => prop::sample::select(ids).prop_map(|task_id| Event::ResumeTask { task_id }),
        1 => (1usize..7).prop_map(|index| Event::SelectOption { index }),
        1 => Just(Event::CreativeRequest { text: "tomato and basil".into() }),
        1 => Just(Event::VideoQuestion { text: "when did they add the garlic".into() }),
        4 => Just(Event::user(Intent::NextStep, "next")),
        1 => prop::sample::select(Intent::ALL.to_vec()).prop_map(|i| Event::user(i, "how to change a tire")),
    ]
}

/// Events allowed to move the step pointer of the task that stays active.
fn navigates(e: &Event) -> bool {
    matches!(e, Event::ResumeTask { .. } | Event::SelectTask { .. } | Event::SelectOption { .. })
        || e.intent().is_some_and(|i| i.advances() || matches!(i, Intent::PreviousStep | Intent::StartTask))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn invariants_hold_and_checkpoints_round_trip(events in prop::collection::vec(event(), 1..80)) {
        let (machine, tasks) = (StateMachine::default(), tasks());
        let mut s = Session::new("p");
        for e in &events {
            machine.handle_event(&mut s, e, &tasks).unwrap();
            prop_assert!(s.check_invariants().is_ok(), "{:?}", s.check_invariants());
            prop_assert!(DialogueState::ALL.contains(&s.state()));
            let json = serde_json::to_string(&s).unwrap();
            let back: Session = serde_json::from_str(&json).unwrap();
            prop_assert_eq!(serde_json::to_string(&back).unwrap(), json);
        }
    }

    #[test]
    fn step_moves_only_by_navigation(events in prop::collection::vec(event(), 1..80)) {
        let (machine, tasks) = (StateMachine::default(), tasks());
        let mut s = Session::new("p");
        for e in &events {
            let before = s.active_task.clone();
            machine.handle_event(&mut s, e, &tasks).unwrap();
            if let (Some(a), Some(b)) = (&before, &s.active_task) {
                if a.task_id == b.task_id && !navigates(e) {
                    prop_assert_eq!(a.step_index, b.step_index, "{:?} moved the step", e);
                }
            }
        }
    }

    #[test]
    fn stop_is_terminal(prefix in prop::collection::vec(event(), 0..30), after in prop::collection::vec(event(), 1..30)) {
        let (machine, tasks) = (StateMachine::default(), tasks());
        let mut s = Session::new("p");
        for e in &prefix {
            machine.handle_event(&mut s, e, &tasks).unwrap();
        }
        machine.handle_event(&mut s, &Event::user(Intent::Stop, "stop"), &tasks).unwrap();
        prop_assert!(s.ended);
        let frozen = serde_json::to_string(&s).unwrap();
        for e in &after {
            let plan = machine.handle_event(&mut s, e, &tasks).unwrap();
            prop_assert_eq!(plan.from, plan.to);
            prop_assert_eq!(serde_json::to_string(&s).unwrap(), frozen.clone());
        }
    }
}
