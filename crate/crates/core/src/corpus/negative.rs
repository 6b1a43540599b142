use rand::seq::{IteratorRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{prompt_context, CorpusError, GeneratedDialogue, PromptConfig};
use crate::catalog::Task;
use crate::dialogue::{RecentRing, ResponseCase};
use crate::intent::Intent;
use crate::response::{define_term, extract_definition_term, substitute_ingredient, worst_definition, ResponseKit};
use crate::text::{capitalize, sentences};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Corruption {
    AdjacentStepLeak,
    WorstDefinition,
    RandomIngredient,
    LowSimilarityCuriosity,
    UncensoredAnswer,
    Perturbation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferencePair {
    pub prompt: String,
    pub chosen: String,
    pub rejected: String,
    pub corruption: Corruption,
}

const PERTURB_TRIES: usize = 10;

/// Doubles one letter; appends "!" when there is none.
fn double_letter<R: Rng + ?Sized>(text: &str, rng: &mut R) -> String {
    let letters: Vec<usize> = text.char_indices().filter(|(_, c)| c.is_alphabetic()).map(|(i, _)| i).collect();
    match letters.choose(rng) {
        Some(&i) => {
            let c = text[i..].chars().next().expect("letter");
            format!("{}{c}{}", &text[..i], &text[i..])
        }
        None => format!("{text}!"),
    }
}

/// 10% word dropout, one adjacent-word swap and one doubled letter.
fn perturb_once<R: Rng + ?Sized>(text: &str, rng: &mut R) -> String {
    let mut words: Vec<&str> = text.split_whitespace().collect();
    if words.len() > 1 {
        let kept: Vec<&str> = words.iter().copied().filter(|_| !rng.gen_bool(0.1)).collect();
        if !kept.is_empty() {
            words = kept;
        }
    }
    if words.len() >= 2 {
        let i = rng.gen_range(0..words.len() - 1);
        words.swap(i, i + 1);
    }
    double_letter(&words.join(" "), rng)
}

/// Perturbed copy of `text` that differs from it. Re-samples up to ten
/// times, then falls back to doubling a letter of the original.
pub fn perturb<R: Rng + ?Sized>(text: &str, rng: &mut R) -> String {
    for _ in 0..PERTURB_TRIES {
        let p = perturb_once(text, rng);
        if p != text {
            return p;
        }
    }
    double_letter(text, rng)
}

/// `chosen` with one sentence of an adjacent step spliced in at a random
/// sentence boundary. `None` when the task has a single step.
fn adjacent_leak<R: Rng + ?Sized>(chosen: &str, task: &Task, step: usize, rng: &mut R) -> Option<String> {
    let neighbours: Vec<usize> = [step.checked_sub(1), Some(step + 1)]
        .into_iter()
        .flatten()
        .filter(|j| *j < task.steps.len() && *j != step)
        .collect();
    let j = *neighbours.choose(rng)?;
    let leak = sentences(&task.steps[j]).choose(rng)?.clone();
    let mut parts = sentences(chosen);
    let at = rng.gen_range(0..=parts.len());
    parts.insert(at, leak);
    Some(parts.join(" "))
}

fn display(name: &str) -> String {
    name.split(' ').map(capitalize).collect::<Vec<_>>().join(" ")
}

/// Builds a (chosen, rejected) pair for turn `turn_index`. The rejected
/// response is a corruption matched to the turn's intent; every path
/// guarantees it differs from the chosen one.
pub fn make_negative<R: Rng + ?Sized>(
    dialogue: &GeneratedDialogue,
    turn_index: usize,
    task: &Task,
    kit: &ResponseKit,
    config: &PromptConfig,
    rng: &mut R,
) -> Result<PreferencePair, CorpusError> {
    let prompt = prompt_context(dialogue, task, turn_index, config)?;
    let turn = &dialogue.turns[turn_index];
    let chosen = turn.system_response.clone();
    let step = turn.step_index_after.min(task.steps.len().saturating_sub(1));
    let step_text = task.steps.get(step).map(String::as_str).unwrap_or("");

    let targeted: Option<(Corruption, String)> = match turn.intent {
        i if i.is_navigational() => adjacent_leak(&chosen, task, step, rng).map(|r| (Corruption::AdjacentStepLeak, r)),
        Intent::DefinitionQuestion => extract_definition_term(&turn.user_utterance, &kit.dictionary).and_then(|term| {
            let best = define_term(&term, step_text, &kit.dictionary)?;
            let worst = worst_definition(&term, step_text, &kit.dictionary)?;
            (best != worst && chosen.contains(best))
                .then(|| (Corruption::WorstDefinition, chosen.replacen(best, worst, 1)))
        }),
        Intent::IngredientsReplacement => {
            let asked = kit.substitutions.find_ingredient(&turn.user_utterance, Some(task));
            let right = asked.as_deref().and_then(|a| substitute_ingredient(a, Some(task), &kit.substitutions));
            let wrong = kit
                .tags
                .ingredients
                .iter()
                .filter(|g| Some(g.as_str()) != right && Some(g.as_str()) != asked.as_deref())
                .choose(rng)
                .cloned();
            wrong.and_then(|wrong| {
                let rejected = match right {
                    Some(r) if chosen.contains(&display(r)) => chosen.replacen(&display(r), &display(&wrong), 1),
                    _ => {
                        let ing = asked.clone().unwrap_or_else(|| "it".to_string());
                        let ctx = [("ingredient", ing.as_str()), ("substitute", wrong.as_str())];
                        let text = kit
                            .templates
                            .render(ResponseCase::Substitution, dialogue.tone, &ctx, &mut RecentRing::default(), rng)
                            .ok()?;
                        capitalize(&text)
                    }
                };
                Some((Corruption::RandomIngredient, rejected))
            })
        }
        Intent::GetCuriosities => {
            let worst = kit.curiosities.worst_for(step_text).text.clone();
            (!chosen.contains(&worst)).then_some((Corruption::LowSimilarityCuriosity, worst))
        }
        Intent::Sensitive => kit.sensitive_negatives.choose(rng).map(|s| (Corruption::UncensoredAnswer, s.clone())),
        _ => None,
    };
    let (corruption, rejected) = match targeted {
        Some((c, r)) if r != chosen => (c, r),
        _ => (Corruption::Perturbation, perturb(&chosen, rng)),
    };
    debug_assert_ne!(chosen, rejected);
    Ok(PreferencePair { prompt, chosen, rejected, corruption })
}
