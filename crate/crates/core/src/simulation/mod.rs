//! User simulator, transcript replay and conversation rating prediction.

mod policy;
mod rating;

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::Domain;
use crate::dialogue::{lookup_task, DialogueState, ResponseCase, Session};
use crate::embedding::{Embedder, EmbeddingVector};
use crate::engine::{Engine, EngineError, TurnInput};
use crate::intent::Intent;
use crate::scalar::Real;

pub use policy::{is_event_label, SimPolicy, UtteranceEntry};
pub use rating::{
    extract_features, predict_rating, synthetic_rating_dataset, train_on_vectors, train_rating, RatingDomain,
    RatingError, RatingExample, RatingFeatures, RatingModel, RatingPrediction, FEATURE_NAMES, MIN_TRAINING_EXAMPLES,
    POSITIVE_RATING,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("no utterances for event {event} in state {state:?}")]
    MissingUtterances { state: DialogueState, event: String },
    #[error("max_turns must be at least 1")]
    ZeroTurns,
    #[error("engine unavailable: {0}")]
    EngineUnavailable(#[from] EngineError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Prefix marking a bank entry as a screen tap rather than speech.
pub const TAP_PREFIX: &str = "tap:";

/// Number of trailing turns that form the ranking context.
pub const CONTEXT_TURNS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTurn {
    pub index: usize,
    pub state_before: DialogueState,
    /// Event kind drawn from the policy.
    pub sampled_event: String,
    pub input: TurnInput,
    /// Event the engine actually fired; differs from `sampled_event` when the
    /// utterance was misread.
    pub event: String,
    pub intent: Option<Intent>,
    pub system_response: String,
    pub response_case: ResponseCase,
    pub state: DialogueState,
    pub active_task: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTranscript {
    pub session_id: String,
    pub seed: u64,
    pub max_turns: usize,
    pub turns: Vec<SimTurn>,
    pub task_started: bool,
    pub task_completed: bool,
    /// Domain of the first task that reached execution.
    pub domain: Option<Domain>,
}

impl SimTranscript {
    pub fn to_json(&self) -> Result<String, SimError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), SimError> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

pub fn sim_session_id(seed: u64) -> String {
    format!("sim-{seed}")
}

fn candidate_text(candidate: &str) -> &str {
    candidate.strip_prefix(TAP_PREFIX).unwrap_or(candidate)
}

fn to_input(candidate: &str) -> TurnInput {
    match candidate.strip_prefix(TAP_PREFIX) {
        Some(target) => TurnInput::Tap(target.to_string()),
        None => TurnInput::Utterance(candidate.to_string()),
    }
}

/// The last `CONTEXT_TURNS` turns, user and system side, as one string.
pub fn context_text(session: &Session) -> String {
    let start = session.history.len().saturating_sub(CONTEXT_TURNS);
    session.history[start..]
        .iter()
        .flat_map(|t| [t.user_utterance.as_str(), t.system_response.as_str()])
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Index of the candidate closest to `context`; the earliest wins ties.
pub fn rank_candidates<F: Real>(embedder: &dyn Embedder<F>, context: &str, candidates: &[String]) -> Vec<(usize, F)> {
    let ctx: EmbeddingVector<F> = embedder.embed(context);
    let mut scored: Vec<(usize, F)> = candidates
        .iter()
        .enumerate()
        .map(|(i, c)| (i, ctx.cosine(&embedder.embed(candidate_text(c))).unwrap_or_else(|_| F::zero())))
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));
    scored
}

/// Runs one simulated conversation against a fresh session.
pub fn simulate<F: Real>(
    engine: &Engine<F>,
    policy: &SimPolicy,
    embedder: &dyn Embedder<F>,
    seed: u64,
    max_turns: usize,
) -> Result<SimTranscript, SimError> {
    if max_turns == 0 {
        return Err(SimError::ZeroTurns);
    }
    policy.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut session = Session::new(sim_session_id(seed));
    let mut turns = Vec::new();
    let mut domain = None;
    while turns.len() < max_turns && !session.ended {
        let state_before = session.state();
        let sampled = policy.sample(state_before, rng.gen::<f64>())?;
        let candidates = policy.candidates(state_before, &sampled)?;
        let ranked = rank_candidates(embedder, &context_text(&session), candidates);
        let input = to_input(&candidates[ranked[0].0]);
        let out = engine.handle_turn(&mut session, &input)?;
        let active_task = session.active_task.as_ref().map(|a| a.task_id.clone());
        if domain.is_none() && out.state == DialogueState::TaskExecution {
            domain = active_task
                .as_deref()
                .and_then(|id| lookup_task(&session, engine.catalog().as_ref(), id))
                .map(|t| t.domain);
        }
        let last = session.history.last().expect("turn recorded");
        turns.push(SimTurn {
            index: turns.len(),
            state_before,
            input,
            event: last.event.clone(),
            intent: last.detected_intent,
            system_response: out.text,
            response_case: out.debug.response_case,
            state: out.state,
            active_task,
            sampled_event: sampled.clone(),
        });
        if sampled == Intent::Stop.name() {
            break;
        }
    }
    Ok(SimTranscript {
        session_id: session.id.clone(),
        seed,
        max_turns,
        task_started: turns.iter().any(|t| t.state == DialogueState::TaskExecution),
        task_completed: turns.iter().any(|t| t.response_case == ResponseCase::TaskCompleted),
        domain,
        turns,
    })
}

/// One simulation per seed, run in parallel; results keep seed order.
pub fn simulate_many<F: Real>(
    engine: &Engine<F>,
    policy: &SimPolicy,
    embedder: &dyn Embedder<F>,
    seeds: &[u64],
    max_turns: usize,
) -> Vec<Result<SimTranscript, SimError>> {
    seeds.par_iter().map(|s| simulate(engine, policy, embedder, *s, max_turns)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnDiff {
    pub index: usize,
    pub expected_state: DialogueState,
    pub actual_state: Option<DialogueState>,
    pub expected_case: ResponseCase,
    pub actual_case: Option<ResponseCase>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffReport {
    pub session_id: String,
    pub seed: u64,
    pub turns_replayed: usize,
    pub first_divergence: Option<usize>,
    pub diffs: Vec<TurnDiff>,
}

impl DiffReport {
    pub fn is_empty(&self) -> bool {
        self.diffs.is_empty()
    }

    pub fn to_json(&self) -> Result<String, SimError> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Re-sends every recorded input and compares states and response cases.
/// Raw text is not compared.
pub fn replay<F: Real>(engine: &Engine<F>, recorded: &SimTranscript) -> DiffReport {
    let mut session = Session::new(recorded.session_id.clone());
    let mut diffs = Vec::new();
    for t in &recorded.turns {
        let diff = match engine.handle_turn(&mut session, &t.input) {
            Ok(out) if out.state == t.state && out.debug.response_case == t.response_case => None,
            Ok(out) => Some(TurnDiff {
                index: t.index,
                expected_state: t.state,
                actual_state: Some(out.state),
                expected_case: t.response_case,
                actual_case: Some(out.debug.response_case),
                error: None,
            }),
            Err(e) => Some(TurnDiff {
                index: t.index,
                expected_state: t.state,
                actual_state: None,
                expected_case: t.response_case,
                actual_case: None,
                error: Some(e.to_string()),
            }),
        };
        diffs.extend(diff);
    }
    DiffReport {
        session_id: recorded.session_id.clone(),
        seed: recorded.seed,
        turns_replayed: recorded.turns.len(),
        first_divergence: diffs.first().map(|d| d.index),
        diffs,
    }
}
