use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CorpusError, PolicyGraph, PolicySampler, UtteranceBank};
use crate::catalog::Task;
use crate::dialogue::{step_utterance, RecentRing, ResponseCase};
use crate::intent::Intent;
use crate::response::{
    define_term, get_curiosity, step_detail, substitute_ingredient, Generator, GeneratorKind, GeneratorRequest,
    ResponseKit, StubGenerator, ToneOfVoice,
};
use crate::text::{capitalize, content_tokens, tokenize};

pub const MIN_STEPS: usize = 5;
pub const MAX_STEPS: usize = 10;
pub const MAX_STEP_WORDS: usize = 350;

/// Hard stop for policies that never terminate.
pub const DEFAULT_MAX_TURNS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalReason {
    LastStep,
    StopIntent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueTurn {
    pub intent: Intent,
    pub user_utterance: String,
    pub system_response: String,
    pub response_case: ResponseCase,
    pub step_index_after: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedDialogue {
    pub task_id: String,
    pub tone: ToneOfVoice,
    pub seed: u64,
    /// Turn 0 is the system reading the first step after the user asked to
    /// start; its utterance is empty.
    pub turns: Vec<DialogueTurn>,
    pub terminal_reason: TerminalReason,
}

impl GeneratedDialogue {
    /// User intents sampled from the policy (the opening turn excluded).
    pub fn user_intents(&self) -> impl Iterator<Item = Intent> + '_ {
        self.turns.iter().skip(1).map(|t| t.intent)
    }
}

/// Keeps tasks with 5 to 10 steps and at most 350 words of step text.
pub fn filter_tasks(tasks: &[Task]) -> Vec<Task> {
    tasks
        .iter()
        .filter(|t| (MIN_STEPS..=MAX_STEPS).contains(&t.step_count()) && t.total_step_words() <= MAX_STEP_WORDS)
        .cloned()
        .collect()
}

/// Source of user intents for a generated dialogue.
pub trait IntentPolicy: Sync {
    fn next_intent(&self, prev: Option<Intent>, turn: usize, rng: &mut ChaCha8Rng) -> Intent;
}

impl IntentPolicy for PolicySampler {
    fn next_intent(&self, prev: Option<Intent>, _turn: usize, rng: &mut ChaCha8Rng) -> Intent {
        match prev {
            None => self.first(rng),
            Some(p) => self.next(p, rng),
        }
    }
}

/// Fixed intent script; `Stop` once the script runs out.
#[derive(Debug, Clone)]
pub struct ScriptedPolicy(pub Vec<Intent>);

impl IntentPolicy for ScriptedPolicy {
    fn next_intent(&self, _prev: Option<Intent>, turn: usize, _rng: &mut ChaCha8Rng) -> Intent {
        self.0.get(turn.saturating_sub(1)).copied().unwrap_or(Intent::Stop)
    }
}

/// Knowledge and generators used to produce system turns.
#[derive(Clone)]
pub struct CorpusProviders {
    pub kit: Arc<ResponseKit>,
    /// Question/answer pairs for the Question intent.
    pub qa: Arc<dyn Generator>,
    /// Grounded curiosity generator; curated facts when absent.
    pub curiosity: Option<Arc<dyn Generator>>,
}

impl Default for CorpusProviders {
    fn default() -> Self {
        Self { kit: Arc::new(ResponseKit::default()), qa: Arc::new(StubGenerator), curiosity: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DialogueOptions {
    /// Tone for every system turn; drawn uniformly per dialogue when `None`.
    pub tone: Option<ToneOfVoice>,
    pub max_turns: usize,
}

impl Default for DialogueOptions {
    fn default() -> Self {
        Self { tone: None, max_turns: DEFAULT_MAX_TURNS }
    }
}

const QA_FAILURE_UTTERANCE: &str = "Can I ask something about this step?";

struct Writer<'a> {
    kit: &'a ResponseKit,
    tone: ToneOfVoice,
    ring: RecentRing,
}

impl Writer<'_> {
    fn render(
        &mut self,
        case: ResponseCase,
        ctx: &[(&str, &str)],
        rng: &mut ChaCha8Rng,
    ) -> Result<String, CorpusError> {
        let text = self.kit.templates.render(case, self.tone, ctx, &mut self.ring, rng)?;
        Ok(capitalize(&text))
    }
}

/// Task ingredient a replacement request is about: one named in full in the
/// step, then one whose head noun the step mentions; KB entries preferred.
fn pick_ingredient(task: &Task, step: &str, kit: &ResponseKit, rng: &mut ChaCha8Rng) -> String {
    let toks = tokenize(step);
    let full = |name: &str| {
        let want = tokenize(name);
        !want.is_empty()
            && toks.windows(want.len()).any(|w| w.iter().zip(&want).all(|(t, s)| crate::text::matches_singular(t, s)))
    };
    let head = |name: &str| {
        let h = tokenize(name).pop().unwrap_or_default();
        toks.iter().any(|t| crate::text::matches_singular(t, &h))
    };
    let in_kb = |name: &str| !kit.substitutions.substitutes(name).is_empty();
    let names: Vec<&str> = task.ingredient_names().collect();
    let tiers: [&dyn Fn(&str) -> bool; 5] =
        [&|n| full(n) && in_kb(n), &|n| head(n) && in_kb(n), &|n| full(n), &|n| in_kb(n), &|_| true];
    for tier in tiers {
        let cands: Vec<&str> = names.iter().copied().filter(|n| tier(n)).collect();
        if let Some(c) = cands.choose(rng) {
            return c.to_string();
        }
    }
    content_tokens(step).into_iter().next().unwrap_or_else(|| "it".to_string())
}

/// Dictionary term mentioned in the step, else a content word from it.
fn pick_term(step: &str, kit: &ResponseKit, rng: &mut ChaCha8Rng) -> String {
    let known: Vec<String> = crate::text::PhraseMatcher::new(kit.dictionary.terms()).find_unique(step);
    if let Some(t) = known.choose(rng) {
        return t.clone();
    }
    let words: Vec<String> = content_tokens(step).into_iter().filter(|w| w.chars().all(char::is_alphabetic)).collect();
    words.choose(rng).cloned().unwrap_or_else(|| "this".to_string())
}

/// Title-cases each word of a KB name for display.
fn display(name: &str) -> String {
    name.split(' ').map(capitalize).collect::<Vec<_>>().join(" ")
}

/// Generates one task-execution dialogue. Deterministic in `seed`.
pub fn generate_dialogue(
    task: &Task,
    policy: &dyn IntentPolicy,
    bank: &UtteranceBank,
    providers: &CorpusProviders,
    options: DialogueOptions,
    seed: u64,
) -> Result<GeneratedDialogue, CorpusError> {
    if task.steps.is_empty() {
        return Err(CorpusError::NoEligibleTasks);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tone = options.tone.unwrap_or_else(|| *ToneOfVoice::ALL.choose(&mut rng).expect("tones"));
    let kit = providers.kit.as_ref();
    let mut w = Writer { kit, tone, ring: RecentRing::default() };
    let n = task.step_count();
    let mut step = 0usize;
    let mut turns = vec![DialogueTurn {
        intent: Intent::StartTask,
        user_utterance: String::new(),
        system_response: step_utterance(0, &task.steps[0]),
        response_case: ResponseCase::Step,
        step_index_after: 0,
    }];
    let mut prev: Option<Intent> = None;
    loop {
        if turns.len() > options.max_turns {
            return Err(CorpusError::NonTerminating(options.max_turns));
        }
        let intent = policy.next_intent(prev, turns.len(), &mut rng);
        prev = Some(intent);
        let step_text = task.steps[step].clone();
        let title = task.title.clone();
        let last = turns.last().map(|t| t.system_response.clone()).unwrap_or_default();
        let mut utterance = bank.sample(intent, &mut rng).map(str::to_string);
        let mut terminal = None;
        let (case, response) = match intent {
            Intent::NextStep | Intent::Yes if step + 1 >= n => {
                terminal = Some(TerminalReason::LastStep);
                (ResponseCase::TaskCompleted, w.render(ResponseCase::TaskCompleted, &[("title", &title)], &mut rng)?)
            }
            Intent::NextStep | Intent::Yes => {
                step += 1;
                (ResponseCase::Step, step_utterance(step, &task.steps[step]))
            }
            Intent::PreviousStep => {
                step = step.saturating_sub(1);
                (ResponseCase::Step, step_utterance(step, &task.steps[step]))
            }
            Intent::Resume | Intent::StartTask => (ResponseCase::Step, step_utterance(step, &step_text)),
            Intent::Repeat => (ResponseCase::Repeat, w.render(ResponseCase::Repeat, &[("last", &last)], &mut rng)?),
            Intent::Stop => {
                terminal = Some(TerminalReason::StopIntent);
                (ResponseCase::Farewell, w.render(ResponseCase::Farewell, &[("title", &title)], &mut rng)?)
            }
            Intent::DefinitionQuestion => {
                let term = pick_term(&step_text, kit, &mut rng);
                utterance = utterance.map(|u| u.replace("{term}", &term));
                match define_term(&term, &step_text, &kit.dictionary) {
                    Some(def) => (
                        ResponseCase::Definition,
                        w.render(ResponseCase::Definition, &[("term", &term), ("definition", def)], &mut rng)?,
                    ),
                    None => (
                        ResponseCase::NoDefinition,
                        w.render(ResponseCase::NoDefinition, &[("term", &term)], &mut rng)?,
                    ),
                }
            }
            Intent::IngredientsReplacement => {
                let ing = pick_ingredient(task, &step_text, kit, &mut rng);
                utterance = utterance.map(|u| u.replace("{ingredient}", &ing));
                match substitute_ingredient(&ing, Some(task), &kit.substitutions) {
                    Some(sub) => (
                        ResponseCase::Substitution,
                        w.render(
                            ResponseCase::Substitution,
                            &[("ingredient", &ing), ("substitute", &display(sub))],
                            &mut rng,
                        )?,
                    ),
                    None => (
                        ResponseCase::NoSubstitution,
                        w.render(ResponseCase::NoSubstitution, &[("ingredient", &ing)], &mut rng)?,
                    ),
                }
            }
            Intent::Question => {
                let focus = pick_ingredient(task, &step_text, kit, &mut rng);
                let req = GeneratorRequest::new(GeneratorKind::QaPair, step_text.clone())
                    .with("title", title.clone())
                    .with("focus", focus);
                match providers.qa.generate(&req) {
                    Ok(r)
                        if !r.text.trim().is_empty() && r.question.as_deref().is_some_and(|q| !q.trim().is_empty()) =>
                    {
                        utterance = r.question.clone();
                        (ResponseCase::Answer, w.render(ResponseCase::Answer, &[("answer", r.text.trim())], &mut rng)?)
                    }
                    _ => {
                        utterance = Some(QA_FAILURE_UTTERANCE.to_string());
                        (ResponseCase::Fallback, w.render(ResponseCase::Fallback, &[], &mut rng)?)
                    }
                }
            }
            Intent::GetCuriosities => {
                let fact = get_curiosity(task, step, &kit.passages, providers.curiosity.as_deref(), &kit.curiosities);
                (ResponseCase::Curiosity, w.render(ResponseCase::Curiosity, &[("fact", &fact)], &mut rng)?)
            }
            Intent::MoreDetail => {
                let detail = step_detail(task, step);
                (ResponseCase::MoreDetail, w.render(ResponseCase::MoreDetail, &[("detail", &detail)], &mut rng)?)
            }
            Intent::ChitChat => (ResponseCase::ChitChat, w.render(ResponseCase::ChitChat, &[], &mut rng)?),
            Intent::Sensitive => (ResponseCase::Sensitive, w.render(ResponseCase::Sensitive, &[], &mut rng)?),
            Intent::Fallback | Intent::Search => {
                (ResponseCase::Fallback, w.render(ResponseCase::Fallback, &[], &mut rng)?)
            }
        };
        turns.push(DialogueTurn {
            intent,
            user_utterance: utterance.unwrap_or_else(|| intent.name().to_lowercase().replace('_', " ")),
            system_response: response,
            response_case: case,
            step_index_after: step,
        });
        if let Some(reason) = terminal {
            return Ok(GeneratedDialogue { task_id: task.id.clone(), tone, seed, turns, terminal_reason: reason });
        }
    }
}

/// Split sizes by largest remainder, so they always sum to `n`.
pub fn split_sizes(n: usize, split: [f64; 3]) -> Result<[usize; 3], CorpusError> {
    if split.iter().any(|p| !(*p >= 0.0)) || (split.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(CorpusError::InvalidSplit(split));
    }
    let exact: Vec<f64> = split.iter().map(|p| p * n as f64).collect();
    // Absorb float noise such as 0.7 * 10 = 7.000000000000001.
    let mut sizes: Vec<usize> = exact.iter().map(|x| (x + 1e-9).floor() as usize).collect();
    let mut rest = n.saturating_sub(sizes.iter().sum());
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|a, b| {
        let fa = exact[*a] - sizes[*a] as f64;
        let fb = exact[*b] - sizes[*b] as f64;
        fb.partial_cmp(&fa).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(b))
    });
    for i in order {
        if rest == 0 {
            break;
        }
        sizes[i] += 1;
        rest -= 1;
    }
    Ok([sizes[0], sizes[1], sizes[2]])
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusSplits {
    pub train: Vec<GeneratedDialogue>,
    pub valid: Vec<GeneratedDialogue>,
    pub test: Vec<GeneratedDialogue>,
}

impl CorpusSplits {
    pub fn sizes(&self) -> [usize; 3] {
        [self.train.len(), self.valid.len(), self.test.len()]
    }

    pub fn all(&self) -> impl Iterator<Item = &GeneratedDialogue> {
        self.train.iter().chain(&self.valid).chain(&self.test)
    }
}

#[derive(Debug, Clone)]
pub struct CorpusConfig {
    pub n: usize,
    pub seed: u64,
    pub split: [f64; 3],
    pub options: DialogueOptions,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self { n: 1000, seed: 1, split: [0.8, 0.1, 0.1], options: DialogueOptions::default() }
    }
}

/// `n` dialogues over the eligible tasks, round-robin, dialogue `i` seeded
/// with `seed + i`, then shuffled into train/valid/test.
pub fn generate_corpus(
    catalog: &[Task],
    policy: &PolicyGraph,
    bank: &UtteranceBank,
    providers: &CorpusProviders,
    config: &CorpusConfig,
) -> Result<CorpusSplits, CorpusError> {
    let sizes = split_sizes(config.n, config.split)?;
    let tasks = filter_tasks(catalog);
    if tasks.is_empty() && config.n > 0 {
        return Err(CorpusError::NoEligibleTasks);
    }
    let sampler = policy.sampler()?;
    let mut dialogues = (0..config.n)
        .into_par_iter()
        .map(|i| {
            let task = &tasks[i % tasks.len()];
            generate_dialogue(task, &sampler, bank, providers, config.options, config.seed.wrapping_add(i as u64))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut order: Vec<usize> = (0..dialogues.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_5911_7000_0000));
    let mut slots: Vec<Option<GeneratedDialogue>> = dialogues.drain(..).map(Some).collect();
    let mut take = |range: std::ops::Range<usize>| -> Vec<GeneratedDialogue> {
        range.map(|k| slots[order[k]].take().expect("each index used once")).collect()
    };
    let train = take(0..sizes[0]);
    let valid = take(sizes[0]..sizes[0] + sizes[1]);
    let test = take(sizes[0] + sizes[1]..config.n);
    Ok(CorpusSplits { train, valid, test })
}

/// Expected share of each user intent in dialogues generated from `graph`
/// over tasks with the given step counts (one dialogue per entry): the
/// visit counts of the absorbing chain on (last intent, step) states.
pub fn analytic_intent_frequencies(
    graph: &PolicyGraph,
    step_counts: &[usize],
) -> Result<BTreeMap<Intent, f64>, CorpusError> {
    graph.validate()?;
    let nodes = &graph.nodes;
    let mut totals: BTreeMap<Intent, f64> = nodes.iter().map(|n| (*n, 0.0)).collect();
    for &n in step_counts {
        if n == 0 {
            continue;
        }
        let mut mass: BTreeMap<(Intent, usize), f64> = BTreeMap::new();
        let mut arrive =
            |from: &BTreeMap<Intent, f64>, weight: f64, step: usize, next: &mut BTreeMap<(Intent, usize), f64>| {
                for (j, p) in from {
                    let m = weight * p;
                    if m == 0.0 {
                        continue;
                    }
                    *totals.get_mut(j).expect("node") += m;
                    let after = match j {
                        Intent::Stop => None,
                        j if j.advances() => (step + 1 < n).then_some(step + 1),
                        Intent::PreviousStep => Some(step.saturating_sub(1)),
                        _ => Some(step),
                    };
                    if let Some(s) = after {
                        *next.entry((*j, s)).or_insert(0.0) += m;
                    }
                }
            };
        arrive(&graph.start, 1.0, 0, &mut mass);
        let mut rounds = 0usize;
        while mass.values().sum::<f64>() > 1e-14 {
            rounds += 1;
            if rounds > 1_000_000 {
                return Err(CorpusError::NonTerminating(rounds));
            }
            let mut next = BTreeMap::new();
            for ((i, s), m) in &mass {
                arrive(&graph.transitions[i], *m, *s, &mut next);
            }
            mass = next;
        }
    }
    let sum: f64 = totals.values().sum();
    Ok(totals.into_iter().map(|(k, v)| (k, v / sum)).collect())
}

/// Pooled share of each user intent across `dialogues`.
pub fn empirical_intent_frequencies<'a>(
    dialogues: impl IntoIterator<Item = &'a GeneratedDialogue>,
) -> BTreeMap<Intent, f64> {
    let mut counts: BTreeMap<Intent, f64> = BTreeMap::new();
    for d in dialogues {
        for i in d.user_intents() {
            *counts.entry(i).or_insert(0.0) += 1.0;
        }
    }
    let total: f64 = counts.values().sum();
    counts.into_iter().map(|(k, v)| (k, v / total)).collect()
}

pub fn l1_distance(a: &BTreeMap<Intent, f64>, b: &BTreeMap<Intent, f64>) -> f64 {
    let keys: std::collections::BTreeSet<&Intent> = a.keys().chain(b.keys()).collect();
    keys.into_iter().map(|k| (a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0)).abs()).sum()
}
