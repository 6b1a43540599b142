//! Turns an action plan into response text and a screen payload.

use std::collections::BTreeSet;

use chrono::Utc;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use super::{Engine, EngineError};
use crate::catalog::{suggest, Task};
use crate::dialogue::{
    lookup_task, screen_for, step_utterance, Action, Checkpoint, DialogueState, ResponseCase, ScreenItem, ScreenKind,
    ScreenPayload, SeekFragment, Session, StepInfo,
};
use crate::response::{
    compose_recipe, define_term, extract_definition_term, extract_tags, get_curiosity, promote_task, step_detail,
    substitute_ingredient, GeneratorKind, GeneratorRequest,
};
use crate::scalar::Real;
use crate::text::{capitalize, content_tokens, matches_singular, sentences, tokenize};
use crate::video::seek_payload;

/// Chips offered on the fridge screen before any tag is chosen.
const FRIDGE_CHIPS: usize = 12;

fn display(name: &str) -> String {
    name.split(' ').map(capitalize).collect::<Vec<_>>().join(" ")
}

fn clock(seconds: f64) -> String {
    let s = seconds.max(0.0).round() as u64;
    format!("{}:{:02}", s / 60, s % 60)
}

fn and_list(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [rest @ .., last] => format!("{} and {last}", rest.join(", ")),
    }
}

/// Answer drawn from the task itself: an ingredient quantity when the
/// question names an ingredient, else the step sentence sharing the most
/// words with it.
pub fn answer_from_task(task: &Task, step_index: usize, question: &str) -> Option<String> {
    let q = tokenize(question);
    let named = task.ingredients.iter().find(|i| {
        let head = tokenize(&i.name).pop().unwrap_or_default();
        q.iter().any(|t| matches_singular(t, &head))
    });
    if let Some(ing) = named {
        return Some(match &ing.quantity {
            Some(qty) => format!("You need {qty} of {}.", ing.name),
            None => format!("The recipe uses {} but doesn't say how much.", ing.name),
        });
    }
    let want: BTreeSet<String> = content_tokens(question).into_iter().collect();
    let mut best: Option<(usize, String)> = None;
    let order = std::iter::once(step_index).chain((0..task.steps.len()).filter(|i| *i != step_index));
    for i in order {
        for s in sentences(task.steps.get(i)?) {
            let o = content_tokens(&s).into_iter().filter(|t| want.contains(t)).count();
            if o > 0 && best.as_ref().is_none_or(|(b, _)| o > *b) {
                best = Some((o, s));
            }
        }
    }
    best.map(|(_, s)| s)
}

struct Out {
    case: Option<ResponseCase>,
    parts: Vec<String>,
}

impl<F: Real> Engine<F> {
    fn task<'a>(&'a self, session: &'a Session, id: &str) -> Option<&'a Task> {
        lookup_task(session, self.catalog.as_ref(), id)
    }

    fn say(
        &self,
        session: &mut Session,
        out: &mut Out,
        case: ResponseCase,
        ctx: &[(&str, &str)],
        rng: &mut ChaCha8Rng,
    ) -> Result<(), EngineError> {
        let text = self.kit.templates.render(case, session.tone, ctx, &mut session.recent_templates, rng)?;
        let text = capitalize(text.trim());
        if !text.is_empty() {
            out.parts.push(text);
        }
        out.case = Some(case);
        Ok(())
    }

    fn active_step(&self, session: &Session) -> Option<(Task, usize)> {
        let a = session.active_task.as_ref()?;
        Some((self.task(session, &a.task_id)?.clone(), a.step_index))
    }

    /// Executes `actions` in order; returns the case of the last rendered
    /// response and the joined text.
    pub(crate) fn execute(
        &self,
        session: &mut Session,
        actions: &[Action],
        rng: &mut ChaCha8Rng,
    ) -> Result<(ResponseCase, String), EngineError> {
        let mut out = Out { case: None, parts: Vec::new() };
        for action in actions {
            self.execute_one(session, action, &mut out, rng)?;
        }
        if out.case.is_none() {
            self.say(session, &mut out, ResponseCase::Fallback, &[], rng)?;
        }
        Ok((out.case.expect("set above"), out.parts.join(" ")))
    }

    fn execute_one(
        &self,
        session: &mut Session,
        action: &Action,
        out: &mut Out,
        rng: &mut ChaCha8Rng,
    ) -> Result<(), EngineError> {
        use ResponseCase as C;
        match action {
            Action::Greet => self.say(session, out, C::Greeting, &[], rng)?,
            // Suggestions are screen content only.
            Action::ShowSuggestions => {}
            Action::RunSearch { query } => {
                let outcome = self.catalog.search(query, self.config.search_k);
                let ids: Vec<String> = outcome.ranked.ids().into_iter().map(str::to_string).collect();
                session.set_results(&ids);
                let shown = if outcome.terms.is_empty() {
                    query.trim_end_matches(['?', '.', '!']).to_string()
                } else {
                    outcome.terms.join(" ")
                };
                if ids.is_empty() {
                    self.say(session, out, C::NoResults, &[("query", &shown)], rng)?;
                } else {
                    let n = ids.len().to_string();
                    self.say(session, out, C::SearchResults, &[("count", &n), ("query", &shown)], rng)?;
                }
            }
            Action::ShowResults => {
                let top = session.top().clone();
                let results = top.results();
                match top.state {
                    DialogueState::Grounding if !results.is_empty() => {
                        let q = top.str("query").unwrap_or("your search").to_string();
                        let n = results.len().to_string();
                        self.say(session, out, C::SearchResults, &[("count", &n), ("query", &q)], rng)?;
                    }
                    DialogueState::CreativeCookingSubflow => self.say(session, out, C::FridgePicker, &[], rng)?,
                    _ => self.say(session, out, C::Greeting, &[], rng)?,
                }
            }
            Action::ShowTaskOverview { task_id } => {
                let Some(task) = self.task(session, task_id).cloned() else {
                    return self.say(session, out, C::Fallback, &[], rng);
                };
                let description = match &self.generator {
                    Some(g) => promote_task(&task, g.as_ref(), &self.kit.food),
                    None => Some(task.description.clone()).filter(|d| !d.trim().is_empty()),
                };
                if let Some(d) = description {
                    session.top_mut().payload.insert("description".into(), Value::from(d));
                }
                let n = task.step_count().to_string();
                self.say(session, out, C::TaskOverview, &[("title", &task.title), ("step_count", &n)], rng)?;
            }
            Action::PauseTask { task_id } => {
                let title = self.task(session, task_id).map(|t| t.title.clone()).unwrap_or_else(|| "your task".into());
                self.say(session, out, C::TaskPaused, &[("title", &title)], rng)?;
            }
            Action::ResumeTask { task_id } => {
                let title = self.task(session, task_id).map(|t| t.title.clone()).unwrap_or_else(|| "your task".into());
                self.say(session, out, C::TaskResumed, &[("title", &title)], rng)?;
            }
            Action::ReadStep { task_id, step_index } => {
                let Some(text) = self.task(session, task_id).and_then(|t| t.steps.get(*step_index)).cloned() else {
                    return self.say(session, out, C::Fallback, &[], rng);
                };
                self.say(session, out, C::Step, &[("step", &step_utterance(*step_index, &text))], rng)?;
            }
            Action::OfferMoreTasks { task_id } => {
                let title = self.task(session, task_id).map(|t| t.title.clone()).unwrap_or_default();
                self.say(session, out, C::TaskCompleted, &[("title", &title)], rng)?;
            }
            Action::RepeatLast => match session.last_system_response().map(str::to_string).filter(|s| !s.is_empty()) {
                Some(last) => self.say(session, out, C::Repeat, &[("last", &last)], rng)?,
                None => self.say(session, out, C::Greeting, &[], rng)?,
            },
            Action::TellCuriosity { task_id, step_index } => {
                let Some(task) = self.task(session, task_id).cloned() else {
                    return self.say(session, out, C::Fallback, &[], rng);
                };
                let fact = get_curiosity(
                    &task,
                    *step_index,
                    &self.kit.passages,
                    self.generator.as_deref(),
                    &self.kit.curiosities,
                );
                self.say(session, out, C::Curiosity, &[("fact", &fact)], rng)?;
            }
            Action::AnswerQuestion { text } => {
                let Some((task, step)) = self.active_step(session) else {
                    return self.say(session, out, C::Fallback, &[], rng);
                };
                let generated = self.generator.as_ref().and_then(|g| {
                    let req = GeneratorRequest::new(GeneratorKind::ZeroShotReply, task.steps[step].clone())
                        .with("title", task.title.clone())
                        .with("question", text.clone());
                    g.generate(&req).ok().map(|r| r.text.trim().to_string()).filter(|t| !t.is_empty())
                });
                match generated.or_else(|| answer_from_task(&task, step, text)) {
                    Some(a) => self.say(session, out, C::Answer, &[("answer", &a)], rng)?,
                    None => self.say(session, out, C::Fallback, &[], rng)?,
                }
            }
            Action::DefineTerm { text } => {
                let step_text = self.active_step(session).map(|(t, i)| t.steps[i].clone()).unwrap_or_default();
                let term = extract_definition_term(text, &self.kit.dictionary)
                    .or_else(|| content_tokens(text).pop())
                    .unwrap_or_else(|| "that".to_string());
                match define_term(&term, &step_text, &self.kit.dictionary) {
                    Some(d) => {
                        let d = d.to_string();
                        self.say(session, out, C::Definition, &[("term", &term), ("definition", &d)], rng)?
                    }
                    None => self.say(session, out, C::NoDefinition, &[("term", &term)], rng)?,
                }
            }
            Action::SubstituteIngredient { text } => {
                let task = self.active_step(session).map(|(t, _)| t);
                let found = self.kit.substitutions.find_ingredient(text, task.as_ref());
                let sub =
                    found.as_deref().and_then(|i| substitute_ingredient(i, task.as_ref(), &self.kit.substitutions));
                match (found, sub) {
                    (Some(i), Some(s)) => {
                        let s = display(s);
                        self.say(session, out, C::Substitution, &[("ingredient", &i), ("substitute", &s)], rng)?
                    }
                    (i, _) => {
                        let i = i.unwrap_or_else(|| "that".to_string());
                        self.say(session, out, C::NoSubstitution, &[("ingredient", &i)], rng)?
                    }
                }
            }
            Action::MoreDetail => match self.active_step(session) {
                Some((task, i)) => {
                    let detail = step_detail(&task, i);
                    self.say(session, out, C::MoreDetail, &[("detail", &detail)], rng)?
                }
                None => self.say(session, out, C::Fallback, &[], rng)?,
            },
            Action::ChitChat { .. } => self.say(session, out, C::ChitChat, &[], rng)?,
            Action::SensitiveRefusal => self.say(session, out, C::Sensitive, &[], rng)?,
            Action::ComposeRecipe { text } => {
                let tags = extract_tags(text, &self.kit.tags.ingredients, &self.kit.tags.styles);
                if tags.is_empty() {
                    session.set_results(&[]);
                    return self.say(session, out, C::FridgePicker, &[], rng);
                }
                let comp = compose_recipe(&tags, self.generator.as_deref(), &self.catalog, self.config.search_k)?;
                let ids: Vec<String> = comp.all().map(|t| t.id.clone()).collect();
                if let Some(g) = comp.generated {
                    session.scratch_tasks.insert(g.id.clone(), g);
                }
                session.set_results(&ids);
                let named: Vec<String> = tags.ingredients.iter().chain(&tags.styles).cloned().collect();
                let label = and_list(&named);
                if ids.is_empty() {
                    self.say(session, out, C::NoResults, &[("query", &label)], rng)?;
                } else {
                    let n = ids.len().to_string();
                    self.say(session, out, C::CreativeResults, &[("count", &n), ("tags", &label)], rng)?;
                }
            }
            Action::SeekVideo { task_id, text } => {
                let video_id = self.task(session, task_id).and_then(|t| t.video_id.clone());
                let hit = match (&self.video, video_id) {
                    (Some(index), Some(v)) => index.query_moment(&v, text, None).ok(),
                    _ => None,
                };
                match hit {
                    Some(m) => {
                        let seek = seek_payload(&m);
                        let time = clock(seek.seek_to_s);
                        session
                            .top_mut()
                            .payload
                            .insert("seek".into(), serde_json::to_value(&seek).expect("fragment serializes"));
                        self.say(session, out, C::VideoMoment, &[("time", &time)], rng)?
                    }
                    None => self.say(session, out, C::NoVideo, &[], rng)?,
                }
            }
            Action::NoVideo => self.say(session, out, C::NoVideo, &[], rng)?,
            Action::FallbackResponse => self.say(session, out, C::Fallback, &[], rng)?,
            Action::Reprompt => self.say(session, out, C::Reprompt, &[], rng)?,
            Action::Farewell => self.say(session, out, C::Farewell, &[], rng)?,
            Action::Ended => self.say(session, out, C::Ended, &[], rng)?,
        }
        Ok(())
    }

    fn task_item(task: &Task) -> ScreenItem {
        ScreenItem {
            id: Some(task.id.clone()),
            label: task.title.clone(),
            detail: Some(format!("{} steps", task.step_count())),
            image_ref: task.image_ref.clone(),
        }
    }

    fn listed(&self, session: &Session, cp: &Checkpoint) -> Vec<ScreenItem> {
        cp.results().iter().filter_map(|id| self.task(session, id)).map(Self::task_item).collect()
    }

    /// Screen for the session as it stands, without the tip. Depends only on
    /// session state and the shared indices.
    pub fn render_screen(&self, session: &Session) -> ScreenPayload {
        let kind = screen_for(session);
        let owner = session
            .state_stack
            .iter()
            .rev()
            .find(|c| ScreenKind::for_state(c.state) == Some(kind))
            .cloned()
            .unwrap_or_else(|| session.top().clone());
        let mut p = ScreenPayload::new(kind);
        let active = self.active_step(session);
        match kind {
            ScreenKind::Welcome => {
                let today = self.config.today.unwrap_or_else(|| Utc::now().date_naive());
                p.title = Some("What would you like to do today?".into());
                p.items = suggest(&self.suggestions, today, self.config.suggestions, self.catalog.as_ref())
                    .into_iter()
                    .map(Self::task_item)
                    .collect();
            }
            ScreenKind::SearchResults => {
                p.title = owner.str("query").map(str::to_string);
                p.items = self.listed(session, &owner);
            }
            ScreenKind::FridgePicker => {
                p.title = Some("What's in my fridge?".into());
                p.items = self.listed(session, &owner);
                if p.items.is_empty() {
                    p.items = self
                        .kit
                        .tags
                        .ingredients
                        .iter()
                        .take(FRIDGE_CHIPS)
                        .map(|i| ScreenItem::text(i.clone()))
                        .collect();
                }
            }
            ScreenKind::IngredientsList => {
                if let Some(task) = owner.str("task_id").and_then(|id| self.task(session, id)) {
                    p.title = Some(task.title.clone());
                    p.items = if task.ingredients.is_empty() {
                        task.steps.iter().map(|s| ScreenItem::text(s.clone())).collect()
                    } else {
                        task.ingredients
                            .iter()
                            .map(|i| ScreenItem { detail: i.quantity.clone(), ..ScreenItem::text(i.name.clone()) })
                            .collect()
                    };
                    p.image_ref = task.image_ref.clone();
                }
                p.description = owner.str("description").map(str::to_string);
            }
            ScreenKind::StepView | ScreenKind::VideoView => {
                if let Some((task, i)) = &active {
                    p.title = Some(task.title.clone());
                    p.step = Some(StepInfo { index: *i, count: task.step_count(), text: task.steps[*i].clone() });
                    p.image_ref = task.image_ref.clone();
                }
                if kind == ScreenKind::VideoView {
                    p.video =
                        owner.payload.get("seek").and_then(|v| serde_json::from_value::<SeekFragment>(v.clone()).ok());
                }
            }
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::sample_catalog;

    #[test]
    fn answers_quantities_and_sentences() {
        let t = sample_catalog().into_iter().find(|t| t.id == "r-pesto-soup").unwrap();
        let a = answer_from_task(&t, 0, "How much garlic do I need?").unwrap();
        assert!(a.starts_with("You need"), "{a}");
        assert!(answer_from_task(&t, 0, "zzz qqq").is_none());
    }

    #[test]
    fn clock_format() {
        assert_eq!(clock(42.5), "0:43");
        assert_eq!(clock(125.0), "2:05");
        assert_eq!(and_list(&["a".into(), "b".into(), "c".into()]), "a, b and c");
    }
}
