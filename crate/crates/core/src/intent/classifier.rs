use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{Intent, IntentError};
use crate::text::{content_tokens, tokenize};

/// Confidence per intent, each in `[0, 1]`, never empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntentScores(BTreeMap<Intent, f64>);

impl IntentScores {
    pub fn new(scores: BTreeMap<Intent, f64>) -> Result<Self, IntentError> {
        if scores.is_empty() {
            return Err(IntentError::EmptyScores);
        }
        if let Some((i, s)) = scores.iter().find(|(_, s)| !(0.0..=1.0).contains(*s)) {
            return Err(IntentError::ScoreOutOfRange { intent: *i, score: *s });
        }
        Ok(Self(scores))
    }

    pub fn single(intent: Intent, score: f64) -> Self {
        Self::new(BTreeMap::from([(intent, score)])).expect("score in range")
    }

    /// Highest-scoring intent; ties go to the earlier intent in declaration order.
    pub fn argmax(&self) -> (Intent, f64) {
        let mut best = None::<(Intent, f64)>;
        for (i, s) in &self.0 {
            if best.is_none_or(|(_, b)| *s > b) {
                best = Some((*i, *s));
            }
        }
        best.expect("non-empty")
    }

    pub fn get(&self, intent: Intent) -> f64 {
        self.0.get(&intent).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Intent, &f64)> {
        self.0.iter()
    }
}

/// Pluggable intent classifier (the last layer of the cascade).
pub trait IntentClassifier: Send + Sync {
    fn classify(&self, utterance: &str) -> IntentScores;
}

/// Bag-of-words classifier: the score of an intent is the best Jaccard
/// overlap between the utterance and one of its example utterances.
#[derive(Debug, Clone, Default)]
pub struct KeywordClassifier {
    examples: Vec<(Intent, BTreeSet<String>)>,
}

fn bag(text: &str) -> BTreeSet<String> {
    let content = content_tokens(text);
    if content.is_empty() {
        tokenize(text).into_iter().collect()
    } else {
        content.into_iter().collect()
    }
}

impl KeywordClassifier {
    pub fn new<'a>(examples: impl IntoIterator<Item = (Intent, &'a str)>) -> Self {
        Self { examples: examples.into_iter().map(|(i, e)| (i, bag(e))).filter(|(_, b)| !b.is_empty()).collect() }
    }
}

impl IntentClassifier for KeywordClassifier {
    fn classify(&self, utterance: &str) -> IntentScores {
        let mut scores: BTreeMap<Intent, f64> = Intent::ALL.iter().map(|i| (*i, 0.0)).collect();
        let q = bag(utterance);
        if q.is_empty() {
            return IntentScores(scores);
        }
        for (intent, ex) in &self.examples {
            let inter = q.intersection(ex).count() as f64;
            let union = q.union(ex).count() as f64;
            let s = inter / union;
            let e = scores.entry(*intent).or_insert(0.0);
            if s > *e {
                *e = s;
            }
        }
        IntentScores(scores)
    }
}

/// Classifier that always returns the same scores. Useful as an
/// adversarial stand-in when testing the cascade.
#[derive(Debug, Clone)]
pub struct FixedClassifier(pub IntentScores);

impl IntentClassifier for FixedClassifier {
    fn classify(&self, _utterance: &str) -> IntentScores {
        self.0.clone()
    }
}
