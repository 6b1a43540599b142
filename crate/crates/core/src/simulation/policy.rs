use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::dialogue::DialogueState;
use crate::intent::Intent;

const NON_INTENT_EVENTS: [&str; 5] = ["SELECT_OPTION", "SELECT_TASK", "CREATIVE_REQUEST", "VIDEO_QUESTION", "DISMISS"];

/// Whether `label` names an event kind a simulated user can produce.
pub fn is_event_label(label: &str) -> bool {
    NON_INTENT_EVENTS.contains(&label) || label.parse::<Intent>().is_ok()
}

/// Candidate utterances for one event. Without a state the entry applies
/// to every state that has no more specific entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<DialogueState>,
    pub event: String,
    pub utterances: Vec<String>,
}

/// Per-state event distribution plus the utterance bank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimPolicy {
    pub rows: BTreeMap<DialogueState, BTreeMap<String, f64>>,
    pub utterances: Vec<UtteranceEntry>,
}

impl SimPolicy {
    pub fn shipped() -> Self {
        serde_json::from_str(include_str!("../../assets/sim_policy.json")).expect("shipped policy parses")
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let p: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        p.validate()?;
        Ok(p)
    }

    /// Rows sum to one, labels are known and every reachable pair has at
    /// least one utterance.
    pub fn validate(&self) -> Result<(), SimError> {
        if self.rows.is_empty() {
            return Err(SimError::InvalidPolicy("no rows".into()));
        }
        for (state, row) in &self.rows {
            if row.values().any(|p| !(*p >= 0.0)) || (row.values().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(SimError::InvalidPolicy(format!("row {state:?} is not a distribution")));
            }
            for (event, p) in row {
                if !is_event_label(event) {
                    return Err(SimError::InvalidPolicy(format!("unknown event {event}")));
                }
                if *p > 0.0 {
                    self.candidates(*state, event)?;
                }
            }
        }
        Ok(())
    }

    /// Draws an event for `state` from a uniform `u` in [0, 1).
    pub fn sample(&self, state: DialogueState, u: f64) -> Result<String, SimError> {
        let row = self.rows.get(&state).ok_or_else(|| SimError::InvalidPolicy(format!("no row for {state:?}")))?;
        let mut acc = 0.0;
        let mut last = None;
        for (event, p) in row.iter().filter(|(_, p)| **p > 0.0) {
            acc += p;
            last = Some(event);
            if u < acc {
                return Ok(event.clone());
            }
        }
        last.cloned().ok_or_else(|| SimError::InvalidPolicy(format!("empty row for {state:?}")))
    }

    pub fn candidates(&self, state: DialogueState, event: &str) -> Result<&[String], SimError> {
        let exact = self.utterances.iter().find(|e| e.state == Some(state) && e.event == event);
        let any = || self.utterances.iter().find(|e| e.state.is_none() && e.event == event);
        exact
            .or_else(any)
            .map(|e| e.utterances.as_slice())
            .filter(|u| !u.is_empty())
            .ok_or(SimError::MissingUtterances { state, event: event.to_string() })
    }

    /// Policy that stops immediately in every listed state.
    pub fn stop_only(states: &[DialogueState]) -> Self {
        let row = BTreeMap::from([(Intent::Stop.name().to_string(), 1.0)]);
        Self {
            rows: states.iter().map(|s| (*s, row.clone())).collect(),
            utterances: vec![UtteranceEntry {
                state: None,
                event: Intent::Stop.name().into(),
                utterances: vec!["stop".into()],
            }],
        }
    }
}
