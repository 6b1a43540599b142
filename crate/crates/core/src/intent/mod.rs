//! Layered intent detection: rule corrections, phonetic matching and a
//! pluggable classifier, arbitrated as a priority cascade.

mod classifier;
mod phonetic;
mod rules;

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dialogue::DialogueState;

pub use classifier::{FixedClassifier, IntentClassifier, IntentScores, KeywordClassifier};
pub use phonetic::{encode_word, phonetic_encode, phonetic_match, PhoneticLexicon};
pub use rules::{Rule, RuleSet, RuleSpec};

/// Minimum classifier confidence for its argmax to be accepted.
pub const CLASSIFIER_GATE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Intent {
    NextStep,
    Repeat,
    Stop,
    Yes,
    PreviousStep,
    Resume,
    GetCuriosities,
    IngredientsReplacement,
    DefinitionQuestion,
    Question,
    Fallback,
    Sensitive,
    ChitChat,
    Search,
    MoreDetail,
    StartTask,
}

impl Intent {
    pub const ALL: [Intent; 16] = [
        Intent::NextStep,
        Intent::Repeat,
        Intent::Stop,
        Intent::Yes,
        Intent::PreviousStep,
        Intent::Resume,
        Intent::GetCuriosities,
        Intent::IngredientsReplacement,
        Intent::DefinitionQuestion,
        Intent::Question,
        Intent::Fallback,
        Intent::Sensitive,
        Intent::ChitChat,
        Intent::Search,
        Intent::MoreDetail,
        Intent::StartTask,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Intent::NextStep => "NEXT_STEP",
            Intent::Repeat => "REPEAT",
            Intent::Stop => "STOP",
            Intent::Yes => "YES",
            Intent::PreviousStep => "PREVIOUS_STEP",
            Intent::Resume => "RESUME",
            Intent::GetCuriosities => "GET_CURIOSITIES",
            Intent::IngredientsReplacement => "INGREDIENTS_REPLACEMENT",
            Intent::DefinitionQuestion => "DEFINITION_QUESTION",
            Intent::Question => "QUESTION",
            Intent::Fallback => "FALLBACK",
            Intent::Sensitive => "SENSITIVE",
            Intent::ChitChat => "CHIT_CHAT",
            Intent::Search => "SEARCH",
            Intent::MoreDetail => "MORE_DETAIL",
            Intent::StartTask => "START_TASK",
        }
    }

    /// Intents whose system response is step text (or the end-of-task and
    /// farewell messages that close the step sequence).
    pub fn is_navigational(self) -> bool {
        matches!(
            self,
            Intent::NextStep
                | Intent::Repeat
                | Intent::Stop
                | Intent::Yes
                | Intent::PreviousStep
                | Intent::Resume
                | Intent::StartTask
        )
    }

    /// Intents that move the step pointer forward.
    pub fn advances(self) -> bool {
        matches!(self, Intent::NextStep | Intent::Yes)
    }
}

impl std::fmt::Display for Intent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Intent {
    type Err = IntentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Intent::ALL
            .iter()
            .copied()
            .find(|i| i.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| IntentError::UnknownIntent(s.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum IntentError {
    #[error("invalid rule pattern {pattern:?}: {reason}")]
    BadPattern { pattern: String, reason: String },
    #[error("intent scores must not be empty")]
    EmptyScores,
    #[error("score {score} for {intent} outside [0,1]")]
    ScoreOutOfRange { intent: Intent, score: f64 },
    #[error("unknown intent {0:?}")]
    UnknownIntent(String),
    #[error("invalid intent config: {0}")]
    Config(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LexiconSpec {
    pub phrase: String,
    pub intent: Intent,
}

/// On-disk intent configuration: rules, phonetic lexicon phrases and the
/// example utterances backing the default classifier.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntentConfig {
    pub rules: Vec<RuleSpec>,
    pub lexicon: Vec<LexiconSpec>,
    #[serde(default)]
    pub examples: Vec<LexiconSpec>,
}

static DEFAULT_CONFIG: &str = include_str!("../../assets/intents.json");

impl Default for IntentConfig {
    fn default() -> Self {
        serde_json::from_str(DEFAULT_CONFIG).expect("shipped intent config is valid")
    }
}

impl IntentConfig {
    pub fn load(path: &Path) -> Result<Self, IntentError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn rule_set(&self) -> Result<RuleSet, IntentError> {
        RuleSet::compile(&self.rules)
    }

    pub fn phonetic_lexicon(&self) -> PhoneticLexicon {
        let mut lex = PhoneticLexicon::new();
        for e in &self.lexicon {
            lex.insert(&e.phrase, e.intent);
        }
        lex
    }

    pub fn keyword_classifier(&self) -> KeywordClassifier {
        KeywordClassifier::new(self.examples.iter().map(|e| (e.intent, e.phrase.as_str())))
    }
}

/// Which layer of the cascade produced the intent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IntentSource {
    Rule,
    Phonetic,
    Classifier,
    Fallback,
}

#[derive(Clone)]
pub struct IntentDetector {
    rules: RuleSet,
    lexicon: PhoneticLexicon,
    classifier: Arc<dyn IntentClassifier>,
}

impl std::fmt::Debug for IntentDetector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("IntentDetector")
            .field("rules", &self.rules.len())
            .field("lexicon", &self.lexicon.len())
            .finish()
    }
}

impl Default for IntentDetector {
    fn default() -> Self {
        Self::from_config(&IntentConfig::default()).expect("shipped intent config compiles")
    }
}

impl IntentDetector {
    pub fn new(rules: RuleSet, lexicon: PhoneticLexicon, classifier: Arc<dyn IntentClassifier>) -> Self {
        Self { rules, lexicon, classifier }
    }

    pub fn from_config(config: &IntentConfig) -> Result<Self, IntentError> {
        Ok(Self::new(config.rule_set()?, config.phonetic_lexicon(), Arc::new(config.keyword_classifier())))
    }

    pub fn with_classifier(mut self, classifier: Arc<dyn IntentClassifier>) -> Self {
        self.classifier = classifier;
        self
    }

    pub fn rules(&self) -> &RuleSet {
        &self.rules
    }

    pub fn lexicon(&self) -> &PhoneticLexicon {
        &self.lexicon
    }

    /// Rules, then phonetic match, then the classifier if confident enough,
    /// otherwise [`Intent::Fallback`].
    pub fn detect(&self, utterance: &str, state: DialogueState) -> Intent {
        self.detect_with_source(utterance, state).0
    }

    pub fn detect_with_source(&self, utterance: &str, state: DialogueState) -> (Intent, IntentSource) {
        if let Some(i) = self.rules.first_match(utterance, state) {
            return (i, IntentSource::Rule);
        }
        if let Some(i) = phonetic_match(utterance, &self.lexicon) {
            return (i, IntentSource::Phonetic);
        }
        let (best, conf) = self.classifier.classify(utterance).argmax();
        if conf >= CLASSIFIER_GATE {
            return (best, IntentSource::Classifier);
        }
        (Intent::Fallback, IntentSource::Fallback)
    }
}

/// Free-function form of [`IntentDetector::detect`] with an explicit classifier.
pub fn detect_intent(
    utterance: &str,
    state: DialogueState,
    rules: &RuleSet,
    lexicon: &PhoneticLexicon,
    classifier: &dyn IntentClassifier,
) -> Intent {
    if let Some(i) = rules.first_match(utterance, state) {
        return i;
    }
    if let Some(i) = phonetic_match(utterance, lexicon) {
        return i;
    }
    let (best, conf) = classifier.classify(utterance).argmax();
    if conf >= CLASSIFIER_GATE {
        best
    } else {
        Intent::Fallback
    }
}
