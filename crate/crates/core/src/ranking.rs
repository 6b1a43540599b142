//! Ranked result lists and reciprocal-rank fusion.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::scalar::RankScore;

/// Smoothing constant of reciprocal-rank fusion.
pub const RRF_K: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Channel {
    Lexical,
    Semantic,
    /// Image-embedding similarity (video keyframes).
    Image,
    Fused,
    QualityReranked,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry<S> {
    pub id: String,
    pub score: S,
}

/// Ordered `(id, score)` list. Scores are non-increasing, ids are unique and
/// equal scores are ordered by ascending id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList<S> {
    pub channel: Channel,
    entries: Vec<RankedEntry<S>>,
}

pub(crate) fn by_score_then_id<S: PartialOrd>(a: (&str, &S), b: (&str, &S)) -> Ordering {
    b.1.partial_cmp(a.1).unwrap_or(Ordering::Equal).then_with(|| a.0.cmp(b.0))
}

impl<S: RankScore> RankedList<S> {
    pub fn empty(channel: Channel) -> Self {
        Self { channel, entries: Vec::new() }
    }

    /// Sorts `scored` into canonical order and keeps the top `k`. When an id
    /// appears more than once its best score is kept.
    pub fn from_scores(channel: Channel, scored: impl IntoIterator<Item = (String, S)>, k: usize) -> Self {
        let mut best: BTreeMap<String, S> = BTreeMap::new();
        for (id, s) in scored {
            match best.get(&id) {
                Some(prev) if *prev >= s => {}
                _ => {
                    best.insert(id, s);
                }
            }
        }
        let mut entries: Vec<RankedEntry<S>> = best.into_iter().map(|(id, score)| RankedEntry { id, score }).collect();
        entries.sort_by(|a, b| by_score_then_id((&a.id, &a.score), (&b.id, &b.score)));
        entries.truncate(k);
        Self { channel, entries }
    }

    pub fn entries(&self) -> &[RankedEntry<S>] {
        &self.entries
    }

    pub fn ids(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.id.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// 1-based rank of `id`, if present.
    pub fn rank_of(&self, id: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.id == id).map(|p| p + 1)
    }

    pub fn score_of(&self, id: &str) -> Option<&S> {
        self.entries.iter().find(|e| e.id == id).map(|e| &e.score)
    }

    /// Checks the ordering and uniqueness invariants.
    pub fn is_well_formed(&self) -> bool {
        let mut seen = std::collections::BTreeSet::new();
        self.entries.iter().all(|e| seen.insert(e.id.as_str()))
            && self
                .entries
                .windows(2)
                .all(|w| by_score_then_id((&w[0].id, &w[0].score), (&w[1].id, &w[1].score)) != Ordering::Greater)
    }
}

/// Reciprocal-rank fusion: `score(d) = sum over lists of 1 / (RRF_K + rank_d)`.
///
/// Each document's contributions are added smallest-first, so two documents
/// with the same multiset of ranks always receive bit-identical scores and
/// fall back to the id tie-break.
pub fn fuse<S: RankScore>(lists: &[RankedList<S>], k: usize) -> RankedList<S> {
    let mut ranks: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for list in lists {
        for (pos, e) in list.entries.iter().enumerate() {
            ranks.entry(e.id.as_str()).or_default().push(pos + 1);
        }
    }
    let scored = ranks.into_iter().map(|(id, mut rs)| {
        rs.sort_unstable_by(|a, b| b.cmp(a));
        let score = rs.into_iter().fold(S::zero(), |acc, r| acc + S::ratio(1, RRF_K + r));
        (id.to_string(), score)
    });
    RankedList::from_scores(Channel::Fused, scored, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn list(ids: &[&str]) -> RankedList<f64> {
        let n = ids.len();
        RankedList::from_scores(
            Channel::Lexical,
            ids.iter().enumerate().map(|(i, id)| (id.to_string(), (n - i) as f64)),
            usize::MAX,
        )
    }

    #[test]
    fn single_list_keeps_order() {
        let l = list(&["c", "a", "b"]);
        let f = fuse(&[l], 10);
        assert_eq!(f.ids(), vec!["c", "a", "b"]);
        assert_eq!(f.channel, Channel::Fused);
    }

    #[test]
    fn doc_in_both_lists_wins() {
        let f = fuse(&[list(&["a", "x"]), list(&["a", "b"])], 10);
        assert_eq!(f.ids()[0], "a");
        assert!((f.score_of("a").unwrap() - 2.0 / 61.0).abs() < 1e-15);
        // b and x both have a single rank-2 contribution: tie, id order.
        assert_eq!(f.ids()[1..], ["b", "x"]);
    }

    #[test]
    fn empty_inputs() {
        let f = fuse::<f64>(&[RankedList::empty(Channel::Lexical), RankedList::empty(Channel::Semantic)], 5);
        assert!(f.is_empty());
        assert!(fuse::<f64>(&[], 5).is_empty());
    }

    #[test]
    fn exact_scores_with_rationals() {
        let a = RankedList::<BigRational>::from_scores(
            Channel::Lexical,
            vec![("a".into(), BigRational::from_integer(2.into())), ("b".into(), BigRational::from_integer(1.into()))],
            10,
        );
        let f = fuse(&[a.clone(), a], 10);
        let expected = BigRational::new(2.into(), 61.into());
        assert_eq!(f.score_of("a"), Some(&expected));
    }

    #[test]
    fn from_scores_dedupes_and_sorts() {
        let l = RankedList::from_scores(
            Channel::Semantic,
            vec![("b".to_string(), 0.5), ("a".to_string(), 0.5), ("b".to_string(), 0.9), ("c".to_string(), 0.1)],
            2,
        );
        assert_eq!(l.ids(), vec!["b", "a"]);
        assert!(l.is_well_formed());
    }
}
