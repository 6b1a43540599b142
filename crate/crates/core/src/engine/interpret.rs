//! Maps a raw turn (utterance or tap) onto one state-machine event.

use std::sync::OnceLock;

use regex::Regex;

use super::{Engine, TurnInput};
use crate::catalog::extract_query_terms;
use crate::dialogue::{lookup_task, DialogueState, Event, Modality, Session};
use crate::intent::{Intent, IntentSource};
use crate::scalar::Real;
use crate::text::content_tokens;

/// What the interpreter made of a turn.
#[derive(Debug, Clone, PartialEq)]
pub struct Interpretation {
    pub event: Event,
    pub intent: Option<Intent>,
    pub source: Option<IntentSource>,
    pub modality: Modality,
}

fn re(cell: &'static OnceLock<Regex>, pattern: &str) -> &'static Regex {
    cell.get_or_init(|| Regex::new(pattern).expect("valid regex"))
}

fn creative_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    re(&RE, r"(?i)\b(fridge|what can i (make|cook)|i have [a-z ,]+ and [a-z ]+|i have [a-z ,]+,? something)")
}

fn video_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    re(&RE, r"(?i)\b(video|when (did|does|do) (the|they|he|she|you)|show me (how|where|when|that part)|watch)\b")
}

fn dismiss_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    re(&RE, r"(?i)^(close|dismiss|back to (the )?(recipe|steps?|task|results?)|never ?mind|that'?s enough)[.!?]*$")
}

fn ordinal_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    re(
        &RE,
        r"(?i)\b(?:(first|second|third|fourth|fifth|1st|2nd|3rd|4th|5th)\b|(?:option|number|recipe|result|no\.?)\s*(\d+)\b)|^\s*(\d+)\s*[.!]?\s*$",
    )
}

fn ordinal(text: &str) -> Option<usize> {
    let c = ordinal_re().captures(text)?;
    if let Some(w) = c.get(1) {
        let i = match w.as_str().to_ascii_lowercase().as_str() {
            "first" | "1st" => 1,
            "second" | "2nd" => 2,
            "third" | "3rd" => 3,
            "fourth" | "4th" => 4,
            _ => 5,
        };
        return Some(i);
    }
    c.get(2).or(c.get(3)).and_then(|m| m.as_str().parse().ok()).filter(|n| *n >= 1)
}

impl<F: Real> Engine<F> {
    pub fn interpret(&self, session: &Session, input: &TurnInput) -> Interpretation {
        let text = match input {
            TurnInput::Tap(target) => {
                let event = Event::from_tap(target).unwrap_or_else(|| Event::user(Intent::Fallback, target));
                return Interpretation { intent: event.intent(), event, source: None, modality: Modality::Tap };
            }
            TurnInput::Utterance(t) => t.trim(),
        };
        let voice = |event: Event, intent: Option<Intent>, source: Option<IntentSource>| Interpretation {
            event,
            intent,
            source,
            modality: Modality::Voice,
        };
        if text.is_empty() {
            let event = if session.history.is_empty() { Event::SessionStart } else { Event::Timeout };
            return voice(event, None, None);
        }
        let state = session.state();
        let (intent, source) = self.detector.detect_with_source(text, state);
        let known = |e: Event| voice(e, Some(intent), Some(source));
        if matches!(intent, Intent::Stop | Intent::Sensitive) {
            return known(Event::user(intent, text));
        }
        if session.in_subflow() && dismiss_re().is_match(text) {
            return known(Event::Dismiss);
        }
        if let Some(e) = self.selection(session, text) {
            return known(e);
        }
        if session.active_task.is_some() && video_re().is_match(text) && intent != Intent::IngredientsReplacement {
            return known(Event::VideoQuestion { text: text.to_string() });
        }
        if creative_re().is_match(text) && intent != Intent::IngredientsReplacement {
            return known(Event::CreativeRequest { text: text.to_string() });
        }
        let browsing =
            matches!(state, DialogueState::Greeting | DialogueState::Grounding | DialogueState::TaskCompleted);
        if browsing
            && matches!(intent, Intent::Fallback | Intent::Question)
            && !extract_query_terms(text, self.catalog.lexicon()).is_empty()
        {
            return known(Event::user(Intent::Search, text));
        }
        known(Event::user(intent, text))
    }

    /// "the second one" or a result title, when a result list is on screen.
    fn selection(&self, session: &Session, text: &str) -> Option<Event> {
        let top = session.top();
        let listing = matches!(
            top.state,
            DialogueState::Greeting | DialogueState::Grounding | DialogueState::CreativeCookingSubflow
        );
        let results = top.results();
        if !listing || results.is_empty() {
            return None;
        }
        if let Some(index) = ordinal(text) {
            return Some(Event::SelectOption { index });
        }
        let said: Vec<String> = content_tokens(text);
        results.iter().find_map(|id| {
            let title = content_tokens(&lookup_task(session, self.catalog.as_ref(), id)?.title);
            (!title.is_empty() && title.iter().all(|w| said.contains(w)))
                .then(|| Event::SelectTask { task_id: id.clone() })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordinals() {
        assert_eq!(ordinal("the second one"), Some(2));
        assert_eq!(ordinal("option 3"), Some(3));
        assert_eq!(ordinal("2"), Some(2));
        assert_eq!(ordinal("number 0"), None);
        assert_eq!(ordinal("how to change a tire"), None);
    }
}
