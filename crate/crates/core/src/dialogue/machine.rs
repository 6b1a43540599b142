use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::session::{Direction, Navigation, Session};
use super::{Action, ActionPlan, Checkpoint, DialogueError, DialogueState, Event, MAX_SUBFLOW_DEPTH};
use crate::catalog::{Task, TaskLookup};
use crate::intent::Intent;

/// Transition overrides. A disabled `(state, event label)` pair behaves like
/// an unknown pair: a self-loop with a fallback response.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MachineConfig {
    #[serde(default)]
    pub disabled: BTreeSet<(DialogueState, String)>,
}

impl MachineConfig {
    pub fn disable(mut self, state: DialogueState, label: &str) -> Self {
        self.disabled.insert((state, label.to_string()));
        self
    }
}

/// The dialogue state machine. Holds no per-session data.
#[derive(Debug, Clone, Default)]
pub struct StateMachine {
    config: MachineConfig,
}

struct Plan {
    rule: &'static str,
    actions: Vec<Action>,
    restored: Vec<Checkpoint>,
}

impl Plan {
    fn stay(&mut self, rule: &'static str, action: Action) {
        self.rule = rule;
        self.actions.push(action);
    }
}

/// Task lookup over the catalog plus the session's generated tasks.
pub fn lookup_task<'a>(session: &'a Session, tasks: &'a dyn TaskLookup, id: &str) -> Option<&'a Task> {
    tasks.task(id).or_else(|| session.scratch_tasks.get(id))
}

impl StateMachine {
    pub fn new(config: MachineConfig) -> Self {
        Self { config }
    }

    pub fn config(&self) -> &MachineConfig {
        &self.config
    }

    /// Applies exactly one transition for `event`.
    pub fn handle_event(
        &self,
        session: &mut Session,
        event: &Event,
        tasks: &dyn TaskLookup,
    ) -> Result<ActionPlan, DialogueError> {
        session.check_invariants()?;
        let from = session.state();
        let mut plan = Plan { rule: "", actions: Vec::new(), restored: Vec::new() };
        if session.ended {
            plan.stay("terminal", Action::Ended);
        } else if self.config.disabled.contains(&(from, event.label())) {
            plan.stay("disabled", Action::FallbackResponse);
        } else {
            self.dispatch(session, event, tasks, &mut plan)?;
        }
        session.check_invariants()?;
        Ok(ActionPlan {
            from,
            to: session.state(),
            rule: plan.rule.to_string(),
            actions: plan.actions,
            restored: plan.restored,
        })
    }

    fn dispatch(&self, s: &mut Session, e: &Event, tasks: &dyn TaskLookup, p: &mut Plan) -> Result<(), DialogueError> {
        // Events handled in place, whatever the state.
        match e {
            Event::Timeout => {
                return {
                    p.stay("reprompt", Action::Reprompt);
                    Ok(())
                }
            }
            Event::User { intent: Intent::ChitChat, text } => {
                return {
                    p.stay("chit-chat", Action::ChitChat { text: text.clone() });
                    Ok(())
                }
            }
            Event::User { intent: Intent::Sensitive, .. } => {
                return {
                    p.stay("sensitive", Action::SensitiveRefusal);
                    Ok(())
                }
            }
            Event::User { intent: Intent::Fallback, .. } => {
                return {
                    p.stay("fallback", Action::FallbackResponse);
                    Ok(())
                }
            }
            Event::User { intent: Intent::Repeat, .. } => {
                return {
                    p.stay("repeat", Action::RepeatLast);
                    Ok(())
                }
            }
            Event::User { intent: Intent::Stop, .. } => {
                unwind(s, p);
                s.ended = true;
                return {
                    p.stay("stop", Action::Farewell);
                    Ok(())
                };
            }
            _ => {}
        }

        if let Some(entry) = subflow_entry(s, e, tasks) {
            let (target, action) = match entry {
                Ok(t) => t,
                Err(refusal) => {
                    return {
                        p.stay("sub-flow unavailable", refusal);
                        Ok(())
                    }
                }
            };
            p.rule = if s.state() == target {
                "sub-flow continue"
            } else if s.subflow_depth() >= MAX_SUBFLOW_DEPTH {
                "sub-flow depth cap"
            } else {
                s.enter_subflow(target)?;
                "enter sub-flow"
            };
            p.actions.push(action);
            return Ok(());
        }

        if s.in_subflow() {
            match e {
                Event::Dismiss => {
                    let restored = s.exit_subflow()?.clone();
                    p.restored.push(restored);
                    p.rule = "dismiss sub-flow";
                    p.actions.push(present(s));
                    return Ok(());
                }
                Event::SelectOption { index } if s.state() == DialogueState::CreativeCookingSubflow => {
                    let Some(id) = pick(&s.top().results(), *index) else {
                        return {
                            p.stay("option out of range", Action::FallbackResponse);
                            Ok(())
                        };
                    };
                    unwind(s, p);
                    return self.select(s, &id, tasks, p);
                }
                _ => unwind(s, p),
            }
        }
        self.backbone(s, e, tasks, p)
    }

    fn backbone(&self, s: &mut Session, e: &Event, tasks: &dyn TaskLookup, p: &mut Plan) -> Result<(), DialogueError> {
        use DialogueState as S;
        let state = s.state();
        match (state, e) {
            (S::Greeting, Event::SessionStart) => {
                p.rule = "greet";
                p.actions.extend([Action::Greet, Action::ShowSuggestions]);
            }
            (S::TaskExecution, Event::User { intent: Intent::Search, text }) => {
                let id = s.active_task.as_ref().expect("executing").task_id.clone();
                s.pause_task()?;
                s.top_mut().payload.insert("query".into(), Value::from(text.as_str()));
                p.rule = "search pauses task";
                p.actions.extend([Action::PauseTask { task_id: id }, Action::RunSearch { query: text.clone() }]);
            }
            (_, Event::User { intent: Intent::Search, text }) => {
                s.set_backbone(Checkpoint::new(S::Grounding).with("query", text.as_str()));
                p.rule = "search";
                p.actions.push(Action::RunSearch { query: text.clone() });
            }
            (_, Event::SelectTask { task_id }) => return self.select(s, task_id, tasks, p),
            (S::Greeting | S::Grounding, Event::SelectOption { index }) => match pick(&s.top().results(), *index) {
                Some(id) => return self.select(s, &id, tasks, p),
                None => p.stay("option out of range", Action::FallbackResponse),
            },
            (_, Event::ResumeTask { task_id }) => {
                if s.active_task.as_ref().is_some_and(|a| &a.task_id == task_id) {
                    read_current(s, p, "resume active task")?;
                } else if s.paused_tasks.contains_key(task_id) {
                    resume(s, task_id, p)?;
                } else {
                    p.stay("unknown paused task", Action::FallbackResponse);
                }
            }
            (S::TaskExecution, Event::User { intent: Intent::Resume | Intent::StartTask, .. }) => {
                read_current(s, p, "resume step")?;
            }
            (_, Event::User { intent: Intent::Resume, .. }) => match s.paused_tasks.keys().last().cloned() {
                Some(id) => resume(s, &id, p)?,
                None => p.stay("nothing to resume", Action::FallbackResponse),
            },
            (S::TaskOverview, Event::User { intent: Intent::StartTask | Intent::Yes | Intent::NextStep, .. }) => {
                let id = s.top().str("task_id").expect("overview names its task").to_string();
                match lookup_task(s, tasks, &id).map(Task::step_count) {
                    Some(n) => {
                        s.start_task(&id, n);
                        p.rule = "start task";
                        p.actions.push(Action::ReadStep { task_id: id, step_index: 0 });
                    }
                    None => p.stay("task vanished", Action::FallbackResponse),
                }
            }
            (S::TaskOverview, Event::User { intent: Intent::PreviousStep, .. }) => {
                let mut back = Checkpoint::new(S::Grounding);
                for key in ["query", "results"] {
                    if let Some(v) = s.top().payload.get(key) {
                        back.payload.insert(key.into(), v.clone());
                    }
                }
                s.set_backbone(back);
                p.rule = "back to results";
                p.actions.push(Action::ShowResults);
            }
            (S::TaskExecution, Event::User { intent: Intent::NextStep | Intent::Yes, .. }) => {
                let id = s.active_task.as_ref().expect("executing").task_id.clone();
                match s.navigate(Direction::Next)? {
                    Navigation::Step(i) => {
                        p.rule = "next step";
                        p.actions.push(Action::ReadStep { task_id: id, step_index: i });
                    }
                    _ => {
                        s.top_mut().payload.insert("task_id".into(), Value::from(id.as_str()));
                        p.rule = "task completed";
                        p.actions.push(Action::OfferMoreTasks { task_id: id });
                    }
                }
            }
            (S::TaskExecution, Event::User { intent: Intent::PreviousStep, .. }) => {
                let id = s.active_task.as_ref().expect("executing").task_id.clone();
                if let Navigation::Step(i) = s.navigate(Direction::Previous)? {
                    p.rule = "previous step";
                    p.actions.push(Action::ReadStep { task_id: id, step_index: i });
                }
            }
            (S::TaskCompleted, Event::User { intent: Intent::Yes, .. }) => {
                s.set_backbone(Checkpoint::new(S::Greeting));
                p.rule = "another task";
                p.actions.extend([Action::Greet, Action::ShowSuggestions]);
            }
            _ => p.stay("unknown", Action::FallbackResponse),
        }
        Ok(())
    }

    fn select(&self, s: &mut Session, id: &str, tasks: &dyn TaskLookup, p: &mut Plan) -> Result<(), DialogueError> {
        if lookup_task(s, tasks, id).is_none() {
            p.stay("unknown task", Action::FallbackResponse);
            return Ok(());
        }
        let mut overview = Checkpoint::new(DialogueState::TaskOverview).with("task_id", id);
        if s.state() == DialogueState::Grounding {
            for key in ["query", "results"] {
                if let Some(v) = s.top().payload.get(key) {
                    overview.payload.insert(key.into(), v.clone());
                }
            }
        }
        if let Some(active) = s.active_task.as_ref().map(|a| a.task_id.clone()) {
            s.pause_task()?;
            p.actions.push(Action::PauseTask { task_id: active });
        }
        s.set_backbone(overview);
        p.rule = "select task";
        p.actions.push(Action::ShowTaskOverview { task_id: id.to_string() });
        Ok(())
    }
}

fn pick(results: &[String], index: usize) -> Option<String> {
    index.checked_sub(1).and_then(|i| results.get(i)).cloned()
}

fn unwind(s: &mut Session, p: &mut Plan) {
    while s.in_subflow() {
        let restored = s.exit_subflow().expect("in sub-flow").clone();
        p.restored.push(restored);
    }
}

fn resume(s: &mut Session, id: &str, p: &mut Plan) -> Result<(), DialogueError> {
    if let Some(active) = s.active_task.as_ref().map(|a| a.task_id.clone()) {
        p.actions.push(Action::PauseTask { task_id: active });
    }
    s.resume_task(id)?;
    let step = s.active_task.as_ref().expect("resumed").step_index;
    p.rule = "resume task";
    p.actions.extend([
        Action::ResumeTask { task_id: id.to_string() },
        Action::ReadStep { task_id: id.to_string(), step_index: step },
    ]);
    Ok(())
}

fn read_current(s: &mut Session, p: &mut Plan, rule: &'static str) -> Result<(), DialogueError> {
    let id = s.active_task.as_ref().ok_or(DialogueError::NoActiveTask)?.task_id.clone();
    if let Navigation::Step(i) = s.navigate(Direction::ResumeStep)? {
        p.stay(rule, Action::ReadStep { task_id: id, step_index: i });
    }
    Ok(())
}

/// Sub-flow an event belongs to and the action that serves it. `Err` holds
/// the refusal when the sub-flow is unavailable in the current context.
fn subflow_entry(s: &Session, e: &Event, tasks: &dyn TaskLookup) -> Option<Result<(DialogueState, Action), Action>> {
    use DialogueState as S;
    let qa = |a: Action| Some(Ok((S::QaSubflow, a)));
    match e {
        Event::User { intent: Intent::GetCuriosities, .. } => Some(match &s.active_task {
            Some(a) => Ok((
                S::CuriositySubflow,
                Action::TellCuriosity { task_id: a.task_id.clone(), step_index: a.step_index },
            )),
            None => Err(Action::FallbackResponse),
        }),
        Event::User { intent: Intent::Question, text } => qa(Action::AnswerQuestion { text: text.clone() }),
        Event::User { intent: Intent::DefinitionQuestion, text } => qa(Action::DefineTerm { text: text.clone() }),
        Event::User { intent: Intent::IngredientsReplacement, text } => {
            qa(Action::SubstituteIngredient { text: text.clone() })
        }
        Event::User { intent: Intent::MoreDetail, .. } => qa(Action::MoreDetail),
        Event::VideoQuestion { text } => {
            let with_video =
                s.active_task.as_ref().filter(|a| lookup_task(s, tasks, &a.task_id).is_some_and(|t| t.has_video));
            Some(match with_video {
                Some(a) => {
                    Ok((S::VideoNavSubflow, Action::SeekVideo { task_id: a.task_id.clone(), text: text.clone() }))
                }
                None => Err(Action::NoVideo),
            })
        }
        Event::CreativeRequest { text } => {
            Some(Ok((S::CreativeCookingSubflow, Action::ComposeRecipe { text: text.clone() })))
        }
        _ => None,
    }
}

/// Action that re-presents the state uncovered by a sub-flow exit.
fn present(s: &Session) -> Action {
    let top = s.top();
    match top.state {
        DialogueState::TaskExecution => {
            let a = s.active_task.as_ref().expect("executing");
            Action::ReadStep { task_id: a.task_id.clone(), step_index: a.step_index }
        }
        DialogueState::TaskOverview => {
            Action::ShowTaskOverview { task_id: top.str("task_id").unwrap_or_default().to_string() }
        }
        DialogueState::Greeting | DialogueState::Grounding | DialogueState::CreativeCookingSubflow => {
            Action::ShowResults
        }
        _ => Action::Reprompt,
    }
}
