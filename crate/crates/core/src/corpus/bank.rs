use std::collections::BTreeMap;
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::CorpusError;
use crate::intent::Intent;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightedUtterance {
    pub text: String,
    pub frequency: u32,
}

/// Per-intent user utterances weighted by absolute frequency. Texts may
/// carry `{ingredient}` or `{term}` slots filled from the current step.
#[derive(Debug, Clone)]
pub struct UtteranceBank {
    entries: BTreeMap<Intent, Vec<WeightedUtterance>>,
    dists: BTreeMap<Intent, WeightedIndex<u32>>,
}

impl UtteranceBank {
    pub fn new(entries: BTreeMap<Intent, Vec<WeightedUtterance>>) -> Result<Self, CorpusError> {
        let mut dists = BTreeMap::new();
        for (intent, list) in &entries {
            if list.iter().any(|u| u.frequency == 0) {
                return Err(CorpusError::InvalidBank(format!("{intent}: frequencies must be >= 1")));
            }
            let mut seen = std::collections::BTreeSet::new();
            if let Some(dup) = list.iter().find(|u| !seen.insert(u.text.as_str())) {
                return Err(CorpusError::InvalidBank(format!("{intent}: duplicate utterance {:?}", dup.text)));
            }
            if !list.is_empty() {
                let d = WeightedIndex::new(list.iter().map(|u| u.frequency))
                    .map_err(|e| CorpusError::InvalidBank(e.to_string()))?;
                dists.insert(*intent, d);
            }
        }
        Ok(Self { entries, dists })
    }

    pub fn shipped() -> Self {
        Self::new(serde_json::from_str(include_str!("../../assets/utterances.json")).expect("shipped bank parses"))
            .expect("shipped bank is valid")
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        Self::new(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn utterances(&self, intent: Intent) -> &[WeightedUtterance] {
        self.entries.get(&intent).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Sum of frequencies for `intent`.
    pub fn total(&self, intent: Intent) -> u64 {
        self.utterances(intent).iter().map(|u| u64::from(u.frequency)).sum()
    }

    /// Frequency-weighted draw; `None` if the intent has no utterances.
    pub fn sample<R: Rng + ?Sized>(&self, intent: Intent, rng: &mut R) -> Option<&str> {
        let d = self.dists.get(&intent)?;
        Some(self.entries[&intent][d.sample(rng)].text.as_str())
    }
}
