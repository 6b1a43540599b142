use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{CorpusError, GeneratedDialogue};
use crate::catalog::Task;
use crate::dialogue::step_utterance;
use crate::response::ToneOfVoice;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PromptFormat {
    /// Sectioned instruction prompt (Recipe / Current Step / Dialog / Response).
    #[default]
    InstructBlock,
    /// Chat-tagged prompt with prompter/assistant turns.
    TurnTagged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptConfig {
    pub format: PromptFormat,
    pub tone: ToneOfVoice,
    /// Prior exchanges included before the current request.
    pub context_turns: usize,
}

impl Default for PromptConfig {
    fn default() -> Self {
        Self { format: PromptFormat::InstructBlock, tone: ToneOfVoice::Neutral, context_turns: 1 }
    }
}

const INSTRUCTION: &str = "Below is a recipe and the steps to make it, the step of the recipe that the user is doing, and part of the dialogue between you and a user about this recipe. Write a response that appropriately responds to the user request.";
const PROMPTER: &str = "<|prompter|>";
const ASSISTANT: &str = "<|assistant|>";
const EOT: &str = "<|endoftext|>";

fn step_prefix() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^Step \d+: ").expect("valid regex"))
}

/// System text as it appears in prompts: read-out steps lose their
/// "Step N: " label.
fn bare(system: &str) -> &str {
    match step_prefix().find(system) {
        Some(m) => &system[m.end()..],
        None => system,
    }
}

fn recipe_line(task: &Task) -> String {
    let mut s = format!("{}.", task.title.trim_end_matches('.'));
    for (i, step) in task.steps.iter().enumerate() {
        s.push(' ');
        s.push_str(&step_utterance(i, step));
    }
    s
}

struct Parts<'a> {
    current_step: usize,
    history: Vec<(&'a str, &'a str)>,
    request: &'a str,
    response: &'a str,
}

fn parts<'a>(d: &'a GeneratedDialogue, turn_index: usize, config: &PromptConfig) -> Result<Parts<'a>, CorpusError> {
    if turn_index >= d.turns.len() {
        return Err(CorpusError::TurnOutOfRange(turn_index));
    }
    if config.context_turns == 0 {
        return Err(CorpusError::InvalidPrompt("context_turns must be at least 1".into()));
    }
    let from = turn_index.saturating_sub(config.context_turns);
    let history =
        d.turns[from..turn_index].iter().map(|t| (t.user_utterance.as_str(), bare(&t.system_response))).collect();
    let current_step = if turn_index == 0 { 0 } else { d.turns[turn_index - 1].step_index_after };
    let t = &d.turns[turn_index];
    Ok(Parts { current_step, history, request: &t.user_utterance, response: bare(&t.system_response) })
}

/// Prompt up to, but excluding, the target response.
pub fn prompt_context(
    d: &GeneratedDialogue,
    task: &Task,
    turn_index: usize,
    config: &PromptConfig,
) -> Result<String, CorpusError> {
    let p = parts(d, turn_index, config)?;
    let step_text = task.steps.get(p.current_step).map(String::as_str).unwrap_or("");
    Ok(match config.format {
        PromptFormat::InstructBlock => {
            let mut dialog: Vec<String> = Vec::new();
            for (u, s) in &p.history {
                if !u.is_empty() {
                    dialog.push(format!("User: {u}"));
                }
                dialog.push(format!("System: {s}"));
            }
            if !p.request.is_empty() {
                dialog.push(format!("User: {}", p.request));
            }
            format!(
                "{INSTRUCTION} Respond with a {} tone.\n\nRecipe:\n{}\n\nCurrent Step:\n{}\n\nDialog:\n{}\n\nResponse:\n",
                config.tone.phrase(),
                recipe_line(task),
                step_utterance(p.current_step, step_text),
                dialog.join(" "),
            )
        }
        PromptFormat::TurnTagged => {
            let mut out = format!(
                "{PROMPTER} I will give you a recipe and I want you to help me do it step by step. Please use a {} tone of voice. Recipe: {} This is the current step: {step_text} {EOT} {ASSISTANT} ok! {EOT}",
                config.tone.phrase(),
                recipe_line(task),
            );
            for (u, s) in &p.history {
                if !u.is_empty() {
                    out.push_str(&format!(" {PROMPTER} {u} {EOT}"));
                }
                out.push_str(&format!(" {ASSISTANT} {s} {EOT}"));
            }
            if !p.request.is_empty() {
                out.push_str(&format!(" {PROMPTER} {} {EOT}", p.request));
            }
            out.push_str(&format!(" {ASSISTANT} "));
            out
        }
    })
}

/// Full training example: context followed by the target response.
pub fn serialize_prompt(
    d: &GeneratedDialogue,
    task: &Task,
    turn_index: usize,
    config: &PromptConfig,
) -> Result<String, CorpusError> {
    let ctx = prompt_context(d, task, turn_index, config)?;
    let response = parts(d, turn_index, config)?.response;
    Ok(match config.format {
        PromptFormat::InstructBlock => format!("{ctx}{response}"),
        PromptFormat::TurnTagged => format!("{ctx}{response} {EOT} </s>"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{DialogueTurn, TerminalReason};
    use crate::dialogue::ResponseCase;
    use crate::intent::Intent;

    fn task() -> Task {
        crate::catalog::sample_catalog().into_iter().find(|t| t.id == "r-garlicky-broccoli").unwrap()
    }

    fn turn(intent: Intent, user: &str, system: &str, case: ResponseCase, step: usize) -> DialogueTurn {
        DialogueTurn {
            intent,
            user_utterance: user.into(),
            system_response: system.into(),
            response_case: case,
            step_index_after: step,
        }
    }

    fn dialogue() -> GeneratedDialogue {
        let t = task();
        GeneratedDialogue {
            task_id: t.id.clone(),
            tone: ToneOfVoice::Neutral,
            seed: 0,
            turns: vec![
                turn(Intent::StartTask, "", &step_utterance(0, &t.steps[0]), ResponseCase::Step, 0),
                turn(Intent::Question, "q0", "a0", ResponseCase::Answer, 0),
                turn(Intent::NextStep, "next.", &step_utterance(1, &t.steps[1]), ResponseCase::Step, 1),
            ],
            terminal_reason: TerminalReason::StopIntent,
        }
    }

    #[test]
    fn first_turn_has_no_history() {
        let s = serialize_prompt(&dialogue(), &task(), 0, &PromptConfig::default()).unwrap();
        let dialog = s.split("Dialog:\n").nth(1).unwrap().split("\n\nResponse:").next().unwrap();
        assert_eq!(dialog, "");
    }

    #[test]
    fn one_prior_exchange() {
        let s = serialize_prompt(&dialogue(), &task(), 2, &PromptConfig::default()).unwrap();
        let dialog = s.split("Dialog:\n").nth(1).unwrap().split("\n\nResponse:").next().unwrap();
        assert_eq!(dialog, "User: q0 System: a0 User: next.");
        let wide = PromptConfig { context_turns: 5, ..Default::default() };
        let s = serialize_prompt(&dialogue(), &task(), 2, &wide).unwrap();
        assert!(s.contains("Dialog:\nSystem: Wash Broccoli"));
    }

    #[test]
    fn bad_inputs() {
        assert!(serialize_prompt(&dialogue(), &task(), 3, &PromptConfig::default()).is_err());
        let zero = PromptConfig { context_turns: 0, ..Default::default() };
        assert!(serialize_prompt(&dialogue(), &task(), 1, &zero).is_err());
    }

    #[test]
    fn context_is_prefix() {
        for format in [PromptFormat::InstructBlock, PromptFormat::TurnTagged] {
            let c = PromptConfig { format, ..Default::default() };
            for i in 0..3 {
                let full = serialize_prompt(&dialogue(), &task(), i, &c).unwrap();
                assert!(full.starts_with(&prompt_context(&dialogue(), &task(), i, &c).unwrap()));
            }
        }
    }
}
