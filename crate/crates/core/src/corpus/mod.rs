//! Synthetic task-dialogue corpus: intent policy graph, weighted user
//! utterances, per-intent system responses, preference pairs and prompt
//! serialization.

mod bank;
mod generate;
mod negative;
mod policy;
mod prompt;

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::intent::Intent;
use crate::response::ResponseError;

pub use bank::{UtteranceBank, WeightedUtterance};
pub use generate::{
    analytic_intent_frequencies, empirical_intent_frequencies, filter_tasks, generate_corpus, generate_dialogue,
    l1_distance, split_sizes, CorpusConfig, CorpusProviders, CorpusSplits, DialogueOptions, DialogueTurn,
    GeneratedDialogue, IntentPolicy, ScriptedPolicy, TerminalReason, DEFAULT_MAX_TURNS, MAX_STEPS, MAX_STEP_WORDS,
    MIN_STEPS,
};
pub use negative::{make_negative, perturb, Corruption, PreferencePair};
pub use policy::{boost_transitions, build_policy, PolicyGraph, PolicySampler, DEFAULT_ALPHA, TASK_INTENTS};
pub use prompt::{prompt_context, serialize_prompt, PromptConfig, PromptFormat};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("no transcripts to build a policy from")]
    EmptyTranscripts,
    #[error("intent {0} is not a policy node")]
    UnknownIntent(Intent),
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("invalid utterance bank: {0}")]
    InvalidBank(String),
    #[error("split {0:?} must be non-negative and sum to 1")]
    InvalidSplit([f64; 3]),
    #[error("no task passes the step and length filter")]
    NoEligibleTasks,
    #[error("dialogue did not terminate within {0} turns")]
    NonTerminating(usize),
    #[error("turn {0} out of range")]
    TurnOutOfRange(usize),
    #[error("invalid prompt config: {0}")]
    InvalidPrompt(String),
    #[error(transparent)]
    Response(#[from] ResponseError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Writes one JSON document per line.
pub fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<(), CorpusError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, &item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}
