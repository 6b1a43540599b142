use serde::{Deserialize, Serialize};

use super::{Checkpoint, DialogueState};
use crate::intent::Intent;

/// Input to the state machine. Every turn produces exactly one event; screen
/// taps are mapped onto this vocabulary by [`Event::from_tap`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    SessionStart,
    Timeout,
    User {
        intent: Intent,
        #[serde(default)]
        text: String,
    },
    SelectTask {
        task_id: String,
    },
    /// 1-based index into the task list currently on screen.
    SelectOption {
        index: usize,
    },
    ResumeTask {
        task_id: String,
    },
    CreativeRequest {
        text: String,
    },
    VideoQuestion {
        text: String,
    },
    /// Closes the innermost sub-flow.
    Dismiss,
}

impl Event {
    pub fn user(intent: Intent, text: &str) -> Self {
        Event::User { intent, text: text.to_string() }
    }

    /// Maps a tap target to an event. Targets are either a bare command
    /// (`next`, `previous`, `repeat`, `start`, `stop`, `resume`, `yes`,
    /// `curiosity`, `back`, `close`, `fridge`) or `kind:value`
    /// (`task:<id>`, `option:<n>`, `resume:<id>`, `search:<q>`, `cook:<tags>`,
    /// `video:<question>`, `intent:<NAME>`).
    pub fn from_tap(target: &str) -> Option<Self> {
        let target = target.trim();
        if let Some((kind, value)) = target.split_once(':') {
            let value = value.trim();
            return match kind.trim().to_ascii_lowercase().as_str() {
                "task" if !value.is_empty() => Some(Event::SelectTask { task_id: value.to_string() }),
                "option" => value.parse().ok().filter(|n| *n >= 1).map(|index| Event::SelectOption { index }),
                "resume" if !value.is_empty() => Some(Event::ResumeTask { task_id: value.to_string() }),
                "search" => Some(Event::user(Intent::Search, value)),
                "cook" => Some(Event::CreativeRequest { text: value.to_string() }),
                "video" => Some(Event::VideoQuestion { text: value.to_string() }),
                "intent" => value.parse().ok().map(|i| Event::user(i, "")),
                _ => None,
            };
        }
        let intent = match target.to_ascii_lowercase().as_str() {
            "next" => Intent::NextStep,
            "previous" | "prev" | "back" => Intent::PreviousStep,
            "repeat" => Intent::Repeat,
            "start" => Intent::StartTask,
            "stop" | "exit" => Intent::Stop,
            "resume" => Intent::Resume,
            "yes" => Intent::Yes,
            "curiosity" => Intent::GetCuriosities,
            "close" => return Some(Event::Dismiss),
            "fridge" => return Some(Event::CreativeRequest { text: String::new() }),
            _ => return None,
        };
        Some(Event::user(intent, target))
    }

    /// Stable label used as the event key in transition overrides and
    /// simulation policies.
    pub fn label(&self) -> String {
        match self {
            Event::SessionStart => "SESSION_START".into(),
            Event::Timeout => "TIMEOUT".into(),
            Event::User { intent, .. } => intent.name().into(),
            Event::SelectTask { .. } => "SELECT_TASK".into(),
            Event::SelectOption { .. } => "SELECT_OPTION".into(),
            Event::ResumeTask { .. } => "RESUME_TASK".into(),
            Event::CreativeRequest { .. } => "CREATIVE_REQUEST".into(),
            Event::VideoQuestion { .. } => "VIDEO_QUESTION".into(),
            Event::Dismiss => "DISMISS".into(),
        }
    }

    /// The intent recorded for the turn that carried this event.
    pub fn intent(&self) -> Option<Intent> {
        match self {
            Event::SessionStart | Event::Timeout | Event::Dismiss => None,
            Event::User { intent, .. } => Some(*intent),
            Event::SelectTask { .. } | Event::SelectOption { .. } => Some(Intent::StartTask),
            Event::ResumeTask { .. } => Some(Intent::Resume),
            Event::CreativeRequest { .. } => Some(Intent::Search),
            Event::VideoQuestion { .. } => Some(Intent::Question),
        }
    }
}

/// A response-module call requested by the state machine.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Action {
    Greet,
    ShowSuggestions,
    RunSearch {
        query: String,
    },
    ShowResults,
    ShowTaskOverview {
        task_id: String,
    },
    PauseTask {
        task_id: String,
    },
    ResumeTask {
        task_id: String,
    },
    ReadStep {
        task_id: String,
        step_index: usize,
    },
    OfferMoreTasks {
        task_id: String,
    },
    RepeatLast,
    TellCuriosity {
        task_id: String,
        step_index: usize,
    },
    AnswerQuestion {
        text: String,
    },
    DefineTerm {
        text: String,
    },
    SubstituteIngredient {
        text: String,
    },
    MoreDetail,
    ChitChat {
        text: String,
    },
    SensitiveRefusal,
    ComposeRecipe {
        text: String,
    },
    SeekVideo {
        task_id: String,
        text: String,
    },
    NoVideo,
    FallbackResponse,
    Reprompt,
    Farewell,
    /// Terminal self-loop after the session ended.
    Ended,
}

/// Family of a system response; templates are keyed by it and replay
/// compares it instead of raw text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ResponseCase {
    Greeting,
    SearchResults,
    NoResults,
    TaskOverview,
    TaskPaused,
    TaskResumed,
    Step,
    TaskCompleted,
    Repeat,
    Curiosity,
    Answer,
    Definition,
    NoDefinition,
    Substitution,
    NoSubstitution,
    MoreDetail,
    ChitChat,
    Sensitive,
    FridgePicker,
    CreativeResults,
    VideoMoment,
    NoVideo,
    Fallback,
    Reprompt,
    Farewell,
    Ended,
}

impl ResponseCase {
    pub const ALL: [ResponseCase; 26] = [
        ResponseCase::Greeting,
        ResponseCase::SearchResults,
        ResponseCase::NoResults,
        ResponseCase::TaskOverview,
        ResponseCase::TaskPaused,
        ResponseCase::TaskResumed,
        ResponseCase::Step,
        ResponseCase::TaskCompleted,
        ResponseCase::Repeat,
        ResponseCase::Curiosity,
        ResponseCase::Answer,
        ResponseCase::Definition,
        ResponseCase::NoDefinition,
        ResponseCase::Substitution,
        ResponseCase::NoSubstitution,
        ResponseCase::MoreDetail,
        ResponseCase::ChitChat,
        ResponseCase::Sensitive,
        ResponseCase::FridgePicker,
        ResponseCase::CreativeResults,
        ResponseCase::VideoMoment,
        ResponseCase::NoVideo,
        ResponseCase::Fallback,
        ResponseCase::Reprompt,
        ResponseCase::Farewell,
        ResponseCase::Ended,
    ];

    pub fn name(self) -> String {
        serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
    }
}

/// Result of one transition: where the session went and which response
/// calls must be made. Never contains response text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionPlan {
    pub from: DialogueState,
    pub to: DialogueState,
    /// Name of the transition-table entry that fired.
    pub rule: String,
    pub actions: Vec<Action>,
    /// Checkpoints uncovered by sub-flow exits during this transition, as
    /// they were at the moment of the pop.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub restored: Vec<Checkpoint>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taps_map_to_events() {
        assert_eq!(Event::from_tap("next"), Some(Event::user(Intent::NextStep, "next")));
        assert_eq!(Event::from_tap("task:r-1"), Some(Event::SelectTask { task_id: "r-1".into() }));
        assert_eq!(Event::from_tap("option:2"), Some(Event::SelectOption { index: 2 }));
        assert_eq!(Event::from_tap("option:0"), None);
        assert_eq!(Event::from_tap("intent:MORE_DETAIL"), Some(Event::user(Intent::MoreDetail, "")));
        assert_eq!(Event::from_tap("close"), Some(Event::Dismiss));
        assert_eq!(Event::from_tap("wat"), None);
    }

    #[test]
    fn event_json_shape() {
        let e = Event::user(Intent::Search, "pasta");
        let j = serde_json::to_string(&e).unwrap();
        assert_eq!(j, r#"{"kind":"user","intent":"SEARCH","text":"pasta"}"#);
        assert_eq!(serde_json::from_str::<Event>(&j).unwrap(), e);
    }

    #[test]
    fn case_names() {
        assert_eq!(ResponseCase::NoSubstitution.name(), "NO_SUBSTITUTION");
        let mut names: Vec<_> = ResponseCase::ALL.iter().map(|c| c.name()).collect();
        names.dedup();
        assert_eq!(names.len(), ResponseCase::ALL.len());
    }
}
