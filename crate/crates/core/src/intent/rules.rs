use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};

use super::{Intent, IntentError};
use crate::dialogue::DialogueState;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RuleSpec {
    pub pattern: String,
    pub intent: Intent,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<DialogueState>,
}

#[derive(Debug, Clone)]
pub struct Rule {
    pub pattern: Regex,
    pub state: Option<DialogueState>,
    pub intent: Intent,
}

impl Rule {
    pub fn compile(spec: &RuleSpec) -> Result<Self, IntentError> {
        let pattern = RegexBuilder::new(&spec.pattern)
            .case_insensitive(true)
            .build()
            .map_err(|e| IntentError::BadPattern { pattern: spec.pattern.clone(), reason: e.to_string() })?;
        Ok(Self { pattern, state: spec.state, intent: spec.intent })
    }

    pub fn applies(&self, utterance: &str, state: DialogueState) -> bool {
        self.state.is_none_or(|s| s == state) && self.pattern.is_match(utterance)
    }
}

/// Ordered correction rules; the first applicable rule wins, except that
/// rules producing [`Intent::Sensitive`] are always consulted first.
#[derive(Debug, Clone, Default)]
pub struct RuleSet {
    rules: Vec<Rule>,
}

impl RuleSet {
    pub fn compile(specs: &[RuleSpec]) -> Result<Self, IntentError> {
        Ok(Self { rules: specs.iter().map(Rule::compile).collect::<Result<_, _>>()? })
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn first_match(&self, utterance: &str, state: DialogueState) -> Option<Intent> {
        let text = utterance.trim();
        self.rules
            .iter()
            .filter(|r| r.intent == Intent::Sensitive)
            .chain(self.rules.iter().filter(|r| r.intent != Intent::Sensitive))
            .find(|r| r.applies(text, state))
            .map(|r| r.intent)
    }
}
