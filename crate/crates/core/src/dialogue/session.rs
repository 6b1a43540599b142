use std::collections::{BTreeMap, VecDeque};

use chrono::{DateTime, Utc};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::event::ResponseCase;
use super::screen::{ScreenKind, ScreenPayload};
use super::{DialogueError, DialogueState, MAX_SUBFLOW_DEPTH};
use crate::catalog::Task;
use crate::intent::Intent;
use crate::response::ToneOfVoice;

/// A saved (state, payload) record on the session's state stack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub state: DialogueState,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub payload: BTreeMap<String, Value>,
}

impl Checkpoint {
    pub fn new(state: DialogueState) -> Self {
        Self { state, payload: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.payload.insert(key.to_string(), value.into());
        self
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        self.payload.get(key).and_then(Value::as_str)
    }

    /// Task ids listed under `results`, in display order.
    pub fn results(&self) -> Vec<String> {
        self.payload
            .get("results")
            .and_then(Value::as_array)
            .map(|a| a.iter().filter_map(|v| v.as_str().map(str::to_string)).collect())
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveTask {
    pub task_id: String,
    pub step_index: usize,
    pub step_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PausedTask {
    pub step_index: usize,
    pub step_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    #[default]
    Voice,
    Tap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub index: usize,
    pub user_utterance: String,
    pub modality: Modality,
    /// `None` for turns not driven by a user request (session start, timeout).
    pub detected_intent: Option<Intent>,
    pub event: String,
    pub system_response: String,
    pub response_case: ResponseCase,
    pub screen: ScreenPayload,
    pub state_after: DialogueState,
}

/// Ids of the last few templates used in a session.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RecentRing(VecDeque<String>);

impl RecentRing {
    pub const CAPACITY: usize = 5;

    pub fn contains(&self, id: &str) -> bool {
        self.0.iter().any(|x| x == id)
    }

    pub fn push(&mut self, id: String) {
        if self.0.len() == Self::CAPACITY {
            self.0.pop_front();
        }
        self.0.push_back(id);
    }

    pub fn clear(&mut self) {
        self.0.clear();
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &String> {
        self.0.iter()
    }
}

/// Outcome of a step navigation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Navigation {
    Step(usize),
    Completed,
    RepeatLast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Next,
    Previous,
    Repeat,
    ResumeStep,
}

/// One conversation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub state_stack: Vec<Checkpoint>,
    pub active_task: Option<ActiveTask>,
    pub paused_tasks: IndexMap<String, PausedTask>,
    pub history: Vec<Turn>,
    #[serde(default)]
    pub ended: bool,
    #[serde(default)]
    pub tone: ToneOfVoice,
    #[serde(default)]
    pub recent_templates: RecentRing,
    #[serde(default)]
    pub tip_cursor: BTreeMap<ScreenKind, usize>,
    /// Generated tasks offered in this session, selectable like catalog tasks.
    #[serde(default)]
    pub scratch_tasks: BTreeMap<String, Task>,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
}

impl Session {
    pub fn new(id: impl Into<String>) -> Self {
        Self::new_at(id, Utc::now())
    }

    pub fn new_at(id: impl Into<String>, now: DateTime<Utc>) -> Self {
        Self {
            id: id.into(),
            state_stack: vec![Checkpoint::new(DialogueState::Greeting)],
            active_task: None,
            paused_tasks: IndexMap::new(),
            history: Vec::new(),
            ended: false,
            tone: ToneOfVoice::default(),
            recent_templates: RecentRing::default(),
            tip_cursor: BTreeMap::new(),
            scratch_tasks: BTreeMap::new(),
            created_at: now,
            updated_at: now,
        }
    }

    pub fn state(&self) -> DialogueState {
        self.top().state
    }

    pub fn top(&self) -> &Checkpoint {
        self.state_stack.last().expect("state stack is never empty")
    }

    pub fn top_mut(&mut self) -> &mut Checkpoint {
        self.state_stack.last_mut().expect("state stack is never empty")
    }

    /// The backbone checkpoint at the bottom of the stack.
    pub fn backbone(&self) -> &Checkpoint {
        &self.state_stack[0]
    }

    pub fn subflow_depth(&self) -> usize {
        self.state_stack.len() - 1
    }

    pub fn in_subflow(&self) -> bool {
        self.subflow_depth() > 0
    }

    pub fn last_system_response(&self) -> Option<&str> {
        self.history.last().map(|t| t.system_response.as_str())
    }

    /// Stores displayed task ids on the current checkpoint so that later
    /// selections ("the second one") can resolve them.
    pub fn set_results(&mut self, ids: &[String]) {
        self.top_mut().payload.insert("results".into(), Value::from(ids.to_vec()));
    }

    pub fn enter_subflow(&mut self, state: DialogueState) -> Result<(), DialogueError> {
        if !state.is_subflow() {
            return Err(DialogueError::NotASubflow(state));
        }
        if self.subflow_depth() >= MAX_SUBFLOW_DEPTH {
            return Err(DialogueError::StackDepthExceeded);
        }
        self.sync_backbone_payload();
        self.state_stack.push(Checkpoint::new(state));
        Ok(())
    }

    /// Pops the top sub-flow and returns the checkpoint now on top.
    pub fn exit_subflow(&mut self) -> Result<&Checkpoint, DialogueError> {
        if !self.in_subflow() {
            return Err(DialogueError::NotInSubflow);
        }
        self.state_stack.pop();
        Ok(self.top())
    }

    /// Replaces the backbone state. Only valid with no open sub-flows.
    pub(crate) fn set_backbone(&mut self, cp: Checkpoint) {
        debug_assert!(cp.state.is_backbone() && !self.in_subflow());
        self.state_stack.clear();
        self.state_stack.push(cp);
    }

    fn sync_backbone_payload(&mut self) {
        if self.in_subflow() {
            return;
        }
        if let Some(a) = &self.active_task {
            let (id, step) = (a.task_id.clone(), a.step_index);
            let top = self.top_mut();
            top.payload.insert("task_id".into(), Value::from(id));
            top.payload.insert("step_index".into(), Value::from(step));
        }
    }

    fn execution_checkpoint(task: &ActiveTask) -> Checkpoint {
        Checkpoint::new(DialogueState::TaskExecution)
            .with("task_id", task.task_id.clone())
            .with("step_index", task.step_index)
    }

    /// Moves the step pointer of the active task.
    pub fn navigate(&mut self, direction: Direction) -> Result<Navigation, DialogueError> {
        if self.state() != DialogueState::TaskExecution {
            return Err(DialogueError::NotInTaskExecution(self.state()));
        }
        let task = self.active_task.as_mut().ok_or(DialogueError::NoActiveTask)?;
        let nav = match direction {
            Direction::Next if task.step_index + 1 >= task.step_count => Navigation::Completed,
            Direction::Next => {
                task.step_index += 1;
                Navigation::Step(task.step_index)
            }
            Direction::Previous => {
                task.step_index = task.step_index.saturating_sub(1);
                Navigation::Step(task.step_index)
            }
            Direction::Repeat => Navigation::RepeatLast,
            Direction::ResumeStep => Navigation::Step(task.step_index),
        };
        match nav {
            Navigation::Completed => {
                self.active_task = None;
                self.set_backbone(Checkpoint::new(DialogueState::TaskCompleted));
            }
            _ => self.sync_backbone_payload(),
        }
        Ok(nav)
    }

    /// Makes `task_id` the active task at step 0, pausing any current one.
    pub(crate) fn start_task(&mut self, task_id: &str, step_count: usize) {
        if self.active_task.as_ref().is_some_and(|a| a.task_id != task_id) {
            self.pause_task().expect("active task present");
        }
        self.paused_tasks.shift_remove(task_id);
        let task = ActiveTask { task_id: task_id.to_string(), step_index: 0, step_count };
        self.set_backbone(Self::execution_checkpoint(&task));
        self.active_task = Some(task);
    }

    /// Saves the active task's progress and returns to Grounding.
    pub fn pause_task(&mut self) -> Result<(), DialogueError> {
        let task = self.active_task.take().ok_or(DialogueError::NoActiveTask)?;
        self.paused_tasks.insert(task.task_id, PausedTask { step_index: task.step_index, step_count: task.step_count });
        self.state_stack.truncate(1);
        self.set_backbone(Checkpoint::new(DialogueState::Grounding));
        Ok(())
    }

    /// Restores a paused task at its saved step; the current task, if any,
    /// is paused in its place.
    pub fn resume_task(&mut self, task_id: &str) -> Result<(), DialogueError> {
        if !self.paused_tasks.contains_key(task_id) {
            return Err(DialogueError::UnknownPausedTask(task_id.to_string()));
        }
        if self.active_task.is_some() {
            self.pause_task()?;
        }
        let saved = self.paused_tasks.shift_remove(task_id).expect("checked above");
        let task =
            ActiveTask { task_id: task_id.to_string(), step_index: saved.step_index, step_count: saved.step_count };
        self.state_stack.truncate(1);
        self.set_backbone(Self::execution_checkpoint(&task));
        self.active_task = Some(task);
        Ok(())
    }

    pub fn push_turn(&mut self, mut turn: Turn) {
        turn.index = self.history.len();
        self.history.push(turn);
        self.updated_at = Utc::now();
    }

    /// Checks every structural invariant of the session.
    pub fn check_invariants(&self) -> Result<(), DialogueError> {
        let corrupt = |m: String| Err(DialogueError::SessionCorrupt(m));
        let Some(bottom) = self.state_stack.first() else {
            return corrupt("empty state stack".into());
        };
        if !bottom.state.is_backbone() {
            return corrupt(format!("stack bottom {} is not a backbone state", bottom.state));
        }
        if let Some(cp) = self.state_stack[1..].iter().find(|c| !c.state.is_subflow()) {
            return corrupt(format!("backbone state {} above stack bottom", cp.state));
        }
        if self.subflow_depth() > MAX_SUBFLOW_DEPTH {
            return corrupt(format!("sub-flow depth {}", self.subflow_depth()));
        }
        let executing = bottom.state == DialogueState::TaskExecution;
        match (&self.active_task, executing) {
            (Some(a), true) => {
                if a.step_index >= a.step_count {
                    return corrupt(format!("step {} of {}", a.step_index, a.step_count));
                }
                if self.paused_tasks.contains_key(&a.task_id) {
                    return corrupt(format!("task {} both active and paused", a.task_id));
                }
                if bottom.str("task_id") != Some(a.task_id.as_str())
                    || bottom.payload.get("step_index").and_then(Value::as_u64) != Some(a.step_index as u64)
                {
                    return corrupt("execution checkpoint out of sync with active task".into());
                }
            }
            (None, false) => {}
            (Some(_), false) => return corrupt(format!("active task outside execution ({})", bottom.state)),
            (None, true) => return corrupt("execution without an active task".into()),
        }
        if let Some((id, p)) = self.paused_tasks.iter().find(|(_, p)| p.step_index >= p.step_count) {
            return corrupt(format!("paused task {id} at step {} of {}", p.step_index, p.step_count));
        }
        if let Some((i, t)) = self.history.iter().enumerate().find(|(i, t)| t.index != *i) {
            return corrupt(format!("turn {} stored at position {i}", t.index));
        }
        if self.ended && self.in_subflow() {
            return corrupt("ended session with open sub-flows".into());
        }
        Ok(())
    }
}

/// Text of a step as read to the user.
pub fn step_utterance(step_index: usize, text: &str) -> String {
    format!("Step {}: {}", step_index + 1, text)
}

/// Screen shown for a state. Sub-flows without their own screen keep the
/// screen of the backbone state beneath them.
pub fn screen_for(session: &Session) -> ScreenKind {
    for cp in session.state_stack.iter().rev() {
        if let Some(k) = ScreenKind::for_state(cp.state) {
            return k;
        }
    }
    ScreenKind::Welcome
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn executing(step: usize, count: usize) -> Session {
        let mut s = Session::new("s");
        s.start_task("t", count);
        s.active_task.as_mut().unwrap().step_index = step;
        s.sync_backbone_payload();
        s
    }

    #[test]
    fn fresh_session_is_valid() {
        let s = Session::new("s");
        s.check_invariants().unwrap();
        assert_eq!(s.state(), DialogueState::Greeting);
        assert!(matches!(Session::new("x").exit_subflow(), Err(DialogueError::NotInSubflow)));
    }

    #[test]
    fn curiosity_round_trip() {
        let mut s = executing(3, 8);
        let before = s.top().clone();
        s.enter_subflow(DialogueState::CuriositySubflow).unwrap();
        assert_eq!(
            s.state_stack.iter().map(|c| c.state).collect::<Vec<_>>(),
            [DialogueState::TaskExecution, DialogueState::CuriositySubflow]
        );
        let restored = s.exit_subflow().unwrap().clone();
        assert_eq!(restored, before);
        assert_eq!(s.active_task.as_ref().unwrap().step_index, 3);
        s.check_invariants().unwrap();
    }

    #[test]
    fn depth_cap() {
        let mut s = Session::new("s");
        for _ in 0..MAX_SUBFLOW_DEPTH {
            s.enter_subflow(DialogueState::QaSubflow).unwrap();
        }
        let snapshot = s.clone();
        assert!(matches!(s.enter_subflow(DialogueState::CuriositySubflow), Err(DialogueError::StackDepthExceeded)));
        assert_eq!(s, snapshot);
        assert!(s.enter_subflow(DialogueState::Grounding).is_err());
    }

    #[test]
    fn navigation_bounds() {
        let mut s = executing(0, 3);
        assert_eq!(s.navigate(Direction::Previous).unwrap(), Navigation::Step(0));
        assert_eq!(s.navigate(Direction::Next).unwrap(), Navigation::Step(1));
        assert_eq!(s.navigate(Direction::ResumeStep).unwrap(), Navigation::Step(1));
        assert_eq!(s.navigate(Direction::Repeat).unwrap(), Navigation::RepeatLast);
        assert_eq!(s.navigate(Direction::Next).unwrap(), Navigation::Step(2));
        assert_eq!(s.navigate(Direction::Next).unwrap(), Navigation::Completed);
        assert_eq!(s.state(), DialogueState::TaskCompleted);
        s.check_invariants().unwrap();
        assert!(matches!(s.navigate(Direction::Next), Err(DialogueError::NotInTaskExecution(_))));
    }

    #[test]
    fn pause_resume_switch() {
        let mut s = executing(4, 8);
        s.pause_task().unwrap();
        assert_eq!(s.state(), DialogueState::Grounding);
        s.start_task("b", 6);
        s.navigate(Direction::Next).unwrap();
        s.resume_task("t").unwrap();
        assert_eq!(s.active_task.as_ref().unwrap().step_index, 4);
        assert_eq!(s.paused_tasks.get("b"), Some(&PausedTask { step_index: 1, step_count: 6 }));
        s.check_invariants().unwrap();
        assert!(matches!(s.resume_task("zzz"), Err(DialogueError::UnknownPausedTask(_))));
        assert!(matches!(Session::new("y").pause_task(), Err(DialogueError::NoActiveTask)));
    }

    #[test]
    fn ring_keeps_last_five() {
        let mut r = RecentRing::default();
        for i in 0..7 {
            r.push(i.to_string());
        }
        assert_eq!(r.iter().cloned().collect::<Vec<_>>(), ["2", "3", "4", "5", "6"]);
    }

    proptest! {
        #[test]
        fn push_k_pop_k_restores(k in 1usize..=MAX_SUBFLOW_DEPTH, step in 0usize..8, picks in proptest::collection::vec(0usize..4, MAX_SUBFLOW_DEPTH)) {
            let mut s = executing(step, 8);
            let original = serde_json::to_string(s.top()).unwrap();
            let subflows = [
                DialogueState::CuriositySubflow,
                DialogueState::QaSubflow,
                DialogueState::VideoNavSubflow,
                DialogueState::CreativeCookingSubflow,
            ];
            for p in picks.iter().take(k) {
                s.enter_subflow(subflows[*p]).unwrap();
                s.top_mut().payload.insert("noise".into(), Value::from(*p));
            }
            for _ in 0..k {
                s.exit_subflow().unwrap();
            }
            prop_assert_eq!(serde_json::to_string(s.top()).unwrap(), original);
            prop_assert!(s.check_invariants().is_ok());
        }
    }
}
