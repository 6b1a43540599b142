use std::collections::BTreeMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::CorpusError;
use crate::intent::Intent;

/// Smoothing used for the shipped policy.
pub const DEFAULT_ALPHA: f64 = 0.01;

/// Intents a user may voice while executing a task.
pub const TASK_INTENTS: [Intent; 14] = [
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
    Intent::MoreDetail,
];

/// Markov model of user intents: where a dialogue starts and which intent
/// follows which.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyGraph {
    pub nodes: Vec<Intent>,
    pub start: BTreeMap<Intent, f64>,
    pub transitions: BTreeMap<Intent, BTreeMap<Intent, f64>>,
}

fn normalize(counts: &BTreeMap<Intent, f64>, nodes: &[Intent]) -> BTreeMap<Intent, f64> {
    let total: f64 = counts.values().sum();
    if total <= 0.0 {
        let u = 1.0 / nodes.len() as f64;
        return nodes.iter().map(|n| (*n, u)).collect();
    }
    nodes.iter().map(|n| (*n, counts.get(n).copied().unwrap_or(0.0) / total)).collect()
}

/// Maximum-likelihood transitions with add-`alpha` smoothing over `nodes`.
/// Rows with no observations and no smoothing are uniform.
pub fn build_policy(transcripts: &[Vec<Intent>], alpha: f64, nodes: &[Intent]) -> Result<PolicyGraph, CorpusError> {
    if transcripts.iter().all(Vec::is_empty) {
        return Err(CorpusError::EmptyTranscripts);
    }
    if nodes.is_empty() || !(alpha >= 0.0) {
        return Err(CorpusError::InvalidPolicy("need nodes and a non-negative alpha".into()));
    }
    let smooth = || nodes.iter().map(|n| (*n, alpha)).collect::<BTreeMap<Intent, f64>>();
    let mut start = smooth();
    let mut rows: BTreeMap<Intent, BTreeMap<Intent, f64>> = nodes.iter().map(|n| (*n, smooth())).collect();
    for t in transcripts.iter().filter(|t| !t.is_empty()) {
        if let Some(bad) = t.iter().find(|i| !nodes.contains(i)) {
            return Err(CorpusError::UnknownIntent(*bad));
        }
        *start.get_mut(&t[0]).expect("node") += 1.0;
        for w in t.windows(2) {
            *rows.get_mut(&w[0]).expect("node").get_mut(&w[1]).expect("node") += 1.0;
        }
    }
    Ok(PolicyGraph {
        nodes: nodes.to_vec(),
        start: normalize(&start, nodes),
        transitions: rows.iter().map(|(k, r)| (*k, normalize(r, nodes))).collect(),
    })
}

impl PolicyGraph {
    /// Policy built from the shipped seed transcripts, with replacement and
    /// question intents boosted.
    pub fn shipped() -> Self {
        let raw: Vec<Vec<Intent>> = serde_json::from_str(include_str!("../../assets/policy_transcripts.json"))
            .expect("shipped transcripts parse");
        let g = build_policy(&raw, DEFAULT_ALPHA, &TASK_INTENTS).expect("shipped transcripts are valid");
        let mut boosts = Vec::new();
        for from in TASK_INTENTS {
            boosts.push(((from, Intent::IngredientsReplacement), 3.0));
            boosts.push(((from, Intent::Question), 3.0));
            boosts.push(((from, Intent::DefinitionQuestion), 2.0));
        }
        boost_transitions(&g, &boosts).expect("boost targets are nodes")
    }

    pub fn prob(&self, from: Intent, to: Intent) -> f64 {
        self.transitions.get(&from).and_then(|r| r.get(&to)).copied().unwrap_or(0.0)
    }

    /// Largest deviation of any row (start included) from summing to one.
    pub fn max_row_error(&self) -> f64 {
        std::iter::once(&self.start)
            .chain(self.transitions.values())
            .map(|r| (r.values().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let rows = std::iter::once(&self.start).chain(self.transitions.values());
        for r in rows {
            if r.values().any(|p| !(*p >= 0.0)) || (r.values().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(CorpusError::InvalidPolicy("row is not a distribution".into()));
            }
        }
        if self.nodes.iter().any(|n| !self.transitions.contains_key(n)) {
            return Err(CorpusError::InvalidPolicy("missing row".into()));
        }
        Ok(())
    }

    pub fn sampler(&self) -> Result<PolicySampler, CorpusError> {
        self.validate()?;
        let dist = |row: &BTreeMap<Intent, f64>| {
            WeightedIndex::new(self.nodes.iter().map(|n| row.get(n).copied().unwrap_or(0.0)))
                .map_err(|e| CorpusError::InvalidPolicy(e.to_string()))
        };
        let rows =
            self.nodes.iter().map(|n| Ok((*n, dist(&self.transitions[n])?))).collect::<Result<_, CorpusError>>()?;
        Ok(PolicySampler { nodes: self.nodes.clone(), start: dist(&self.start)?, rows })
    }
}

/// Multiplies the named cells and renormalizes each touched row.
pub fn boost_transitions(
    graph: &PolicyGraph,
    overrides: &[((Intent, Intent), f64)],
) -> Result<PolicyGraph, CorpusError> {
    let mut g = graph.clone();
    let mut touched = Vec::new();
    for ((from, to), m) in overrides {
        if !(*m > 0.0) || !m.is_finite() {
            return Err(CorpusError::InvalidPolicy(format!("multiplier {m} must be positive")));
        }
        let row = g.transitions.get_mut(from).ok_or(CorpusError::UnknownIntent(*from))?;
        let cell = row.get_mut(to).ok_or(CorpusError::UnknownIntent(*to))?;
        *cell *= m;
        touched.push(*from);
    }
    for from in touched {
        let row = g.transitions.get_mut(&from).expect("checked");
        let total: f64 = row.values().sum();
        for p in row.values_mut() {
            *p /= total;
        }
    }
    Ok(g)
}

/// Precomputed weighted samplers for every row of a policy.
#[derive(Debug, Clone)]
pub struct PolicySampler {
    nodes: Vec<Intent>,
    start: WeightedIndex<f64>,
    rows: BTreeMap<Intent, WeightedIndex<f64>>,
}

impl PolicySampler {
    pub fn first<R: Rng + ?Sized>(&self, rng: &mut R) -> Intent {
        self.nodes[self.start.sample(rng)]
    }

    pub fn next<R: Rng + ?Sized>(&self, prev: Intent, rng: &mut R) -> Intent {
        match self.rows.get(&prev) {
            Some(d) => self.nodes[d.sample(rng)],
            None => self.first(rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Intent::*;

    #[test]
    fn single_transcript_counts() {
        let g = build_policy(&[vec![NextStep, NextStep, Stop]], DEFAULT_ALPHA, &TASK_INTENTS).unwrap();
        let n = TASK_INTENTS.len() as f64;
        // Hand count: NextStep row saw NextStep once and Stop once.
        let denom = 2.0 + DEFAULT_ALPHA * n;
        assert!((g.prob(NextStep, NextStep) - (1.0 + DEFAULT_ALPHA) / denom).abs() < 1e-12);
        assert!((g.prob(NextStep, Stop) - (1.0 + DEFAULT_ALPHA) / denom).abs() < 1e-12);
        assert!((g.prob(NextStep, Repeat) - DEFAULT_ALPHA / denom).abs() < 1e-12);
        // The observed cells dominate every unobserved one.
        for to in TASK_INTENTS.iter().filter(|t| !matches!(t, NextStep | Stop)) {
            assert!(g.prob(NextStep, NextStep) > 40.0 * g.prob(NextStep, *to));
        }
        assert!(g.max_row_error() < 1e-12);
    }

    #[test]
    fn unsmoothed_and_unseen_rows() {
        let g = build_policy(&[vec![Yes, Stop]], 0.0, &TASK_INTENTS).unwrap();
        assert_eq!(g.prob(Yes, Stop), 1.0);
        assert_eq!(g.start[&Yes], 1.0);
        let u = 1.0 / TASK_INTENTS.len() as f64;
        assert!(TASK_INTENTS.iter().all(|t| (g.prob(Repeat, *t) - u).abs() < 1e-15));
        let s = build_policy(&[vec![Yes, Stop]], 0.5, &TASK_INTENTS).unwrap();
        assert!(TASK_INTENTS.iter().all(|t| (s.prob(Repeat, *t) - u).abs() < 1e-15));
    }

    #[test]
    fn errors() {
        assert!(matches!(build_policy(&[], 0.01, &TASK_INTENTS), Err(CorpusError::EmptyTranscripts)));
        assert!(matches!(build_policy(&[vec![Search]], 0.01, &TASK_INTENTS), Err(CorpusError::UnknownIntent(Search))));
        let g = PolicyGraph::shipped();
        assert!(matches!(boost_transitions(&g, &[((Search, Stop), 2.0)]), Err(CorpusError::UnknownIntent(Search))));
        assert!(boost_transitions(&g, &[((Yes, Stop), 0.0)]).is_err());
    }

    #[test]
    fn boost_renormalizes() {
        let nodes = [NextStep, IngredientsReplacement, Stop];
        let mut g = build_policy(&[vec![NextStep]], 0.0, &nodes).unwrap();
        g.transitions.insert(NextStep, BTreeMap::from([(NextStep, 0.8), (IngredientsReplacement, 0.1), (Stop, 0.1)]));
        let b = boost_transitions(&g, &[((NextStep, IngredientsReplacement), 3.0)]).unwrap();
        assert!((b.prob(NextStep, NextStep) - 0.8 / 1.2).abs() < 1e-12);
        assert!((b.prob(NextStep, IngredientsReplacement) - 0.3 / 1.2).abs() < 1e-12);
        assert!((b.prob(NextStep, Stop) - 0.1 / 1.2).abs() < 1e-12);
        let same = boost_transitions(&g, &[((NextStep, Stop), 1.0)]).unwrap();
        assert_eq!(same, g);
    }

    #[test]
    fn boosting_smoothed_zero_cell() {
        let g = build_policy(&[vec![NextStep, NextStep]], DEFAULT_ALPHA, &TASK_INTENTS).unwrap();
        let before = g.prob(NextStep, Question);
        assert!(before > 0.0);
        let b = boost_transitions(&g, &[((NextStep, Question), 5.0)]).unwrap();
        assert!(b.prob(NextStep, Question) > before);
    }

    #[test]
    fn shipped_policy_is_valid() {
        let g = PolicyGraph::shipped();
        g.validate().unwrap();
        assert!(g.prob(NextStep, NextStep) > 0.5);
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn intent() -> impl Strategy<Value = Intent> {
        (0..TASK_INTENTS.len()).prop_map(|i| TASK_INTENTS[i])
    }

    proptest! {
        #[test]
        fn rows_stay_normalized(
            transcripts in prop::collection::vec(prop::collection::vec(intent(), 1..12), 1..6),
            alpha in 0.0f64..2.0,
            boosts in prop::collection::vec(((intent(), intent()), 0.01f64..50.0), 0..6),
            rounds in 1usize..4,
        ) {
            let mut g = build_policy(&transcripts, alpha, &TASK_INTENTS).unwrap();
            prop_assert!(g.max_row_error() <= 1e-9);
            for _ in 0..rounds {
                g = boost_transitions(&g, &boosts).unwrap();
                prop_assert!(g.max_row_error() <= 1e-9);
                prop_assert!(g.transitions.values().flat_map(|r| r.values()).all(|p| *p >= 0.0));
            }
        }
    }
}
