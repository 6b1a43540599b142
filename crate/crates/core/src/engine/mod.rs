//! One conversational turn end to end: interpretation, transition, response
//! rendering and the screen payload.

mod interpret;
mod render;

use std::sync::Arc;

use chrono::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{sample_suggestions, CatalogIndex, SuggestionSet};
use crate::dialogue::{
    rotate_tip, screen_for, Action, DialogueError, DialogueState, Event, MachineConfig, ResponseCase, ScreenPayload,
    Session, StateMachine, TipBook, Turn,
};
use crate::intent::{Intent, IntentDetector, IntentSource};
use crate::response::{Generator, ResponseError, ResponseKit};
use crate::scalar::Real;
use crate::text::fnv1a;
use crate::video::VideoIndex;

pub use interpret::Interpretation;
pub use render::answer_from_task;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Dialogue(#[from] DialogueError),
    #[error(transparent)]
    Response(#[from] ResponseError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum TurnInput {
    Utterance(String),
    Tap(String),
}

impl TurnInput {
    pub fn text(&self) -> &str {
        match self {
            TurnInput::Utterance(t) | TurnInput::Tap(t) => t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TurnDebug {
    pub intent: Option<Intent>,
    pub source: Option<IntentSource>,
    pub event: Event,
    pub rule: String,
    pub actions: Vec<Action>,
    pub response_case: ResponseCase,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TurnOutput {
    pub text: String,
    pub state: DialogueState,
    pub screen: ScreenPayload,
    pub debug: TurnDebug,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub search_k: usize,
    pub suggestions: usize,
    /// Date used for seasonal suggestions; today when unset.
    pub today: Option<NaiveDate>,
    /// Mixed into every template draw. Fixed seeds make a session's text
    /// reproducible.
    pub template_seed: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self { search_k: 5, suggestions: 3, today: None, template_seed: 0 }
    }
}

/// Everything needed to serve turns. Shared read-only across sessions.
pub struct Engine<F: Real = f64> {
    pub(crate) catalog: Arc<CatalogIndex<F>>,
    pub(crate) detector: IntentDetector,
    pub(crate) machine: StateMachine,
    pub(crate) kit: Arc<ResponseKit>,
    pub(crate) suggestions: Vec<SuggestionSet>,
    pub(crate) tips: TipBook,
    pub(crate) generator: Option<Arc<dyn Generator>>,
    pub(crate) video: Option<Arc<VideoIndex<F>>>,
    pub(crate) config: EngineConfig,
}

impl<F: Real> std::fmt::Debug for Engine<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine")
            .field("tasks", &self.catalog.len())
            .field("generator", &self.generator.is_some())
            .field("video", &self.video.is_some())
            .field("config", &self.config)
            .finish()
    }
}

impl<F: Real> Engine<F> {
    pub fn new(catalog: Arc<CatalogIndex<F>>) -> Self {
        Self {
            catalog,
            detector: IntentDetector::default(),
            machine: StateMachine::default(),
            kit: Arc::new(ResponseKit::default()),
            suggestions: sample_suggestions(),
            tips: TipBook::shipped(),
            generator: None,
            video: None,
            config: EngineConfig::default(),
        }
    }

    pub fn with_detector(mut self, detector: IntentDetector) -> Self {
        self.detector = detector;
        self
    }

    pub fn with_machine(mut self, config: MachineConfig) -> Self {
        self.machine = StateMachine::new(config);
        self
    }

    pub fn with_kit(mut self, kit: Arc<ResponseKit>) -> Self {
        self.kit = kit;
        self
    }

    pub fn with_suggestions(mut self, sets: Vec<SuggestionSet>) -> Self {
        self.suggestions = sets;
        self
    }

    pub fn with_tips(mut self, tips: TipBook) -> Self {
        self.tips = tips;
        self
    }

    /// Generator for descriptions, curiosities, recipes and open answers.
    pub fn with_generator(mut self, generator: Arc<dyn Generator>) -> Self {
        self.generator = Some(generator);
        self
    }

    pub fn with_video(mut self, index: Arc<VideoIndex<F>>) -> Self {
        self.video = Some(index);
        self
    }

    pub fn with_config(mut self, config: EngineConfig) -> Self {
        self.config = config;
        self
    }

    pub fn catalog(&self) -> &Arc<CatalogIndex<F>> {
        &self.catalog
    }

    pub fn video(&self) -> Option<&Arc<VideoIndex<F>>> {
        self.video.as_ref()
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    fn template_rng(&self, session: &Session) -> ChaCha8Rng {
        let turn = session.history.len() as u64;
        ChaCha8Rng::seed_from_u64(
            fnv1a(session.id.as_bytes()) ^ self.config.template_seed ^ turn.wrapping_mul(0x9e37_79b9_7f4a_7c15),
        )
    }

    /// Runs one turn against `session` and records it in the history. On
    /// error the session is left as it was.
    pub fn handle_turn(&self, session: &mut Session, input: &TurnInput) -> Result<TurnOutput, EngineError> {
        let before = session.clone();
        let result = self.run_turn(session, input);
        if result.is_err() {
            *session = before;
        }
        result
    }

    fn run_turn(&self, session: &mut Session, input: &TurnInput) -> Result<TurnOutput, EngineError> {
        let interp = self.interpret(session, input);
        let plan = self.machine.handle_event(session, &interp.event, self.catalog.as_ref())?;
        let mut rng = self.template_rng(session);
        let (case, text) = self.execute(session, &plan.actions, &mut rng)?;
        let mut screen = self.render_screen(session);
        screen.tips = rotate_tip(session, &self.tips, screen.screen_kind);
        debug_assert_eq!(screen.screen_kind, screen_for(session));
        session.push_turn(Turn {
            index: 0,
            user_utterance: input.text().to_string(),
            modality: interp.modality,
            detected_intent: interp.intent.or_else(|| interp.event.intent()),
            event: interp.event.label(),
            system_response: text.clone(),
            response_case: case,
            screen: screen.clone(),
            state_after: session.state(),
        });
        Ok(TurnOutput {
            text,
            state: session.state(),
            screen,
            debug: TurnDebug {
                intent: interp.intent,
                source: interp.source,
                event: interp.event,
                rule: plan.rule,
                actions: plan.actions,
                response_case: case,
            },
        })
    }
}

#[cfg(test)]
mod tests;
