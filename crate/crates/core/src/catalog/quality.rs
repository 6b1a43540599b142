use crate::ranking::{Channel, RankedList};
use crate::scalar::RankScore;

use super::{Task, TaskLookup};

/// Quality multiplier as an exact fraction over 10 000:
/// `1 + 0.10*[has_video] + 0.05*min(rating_count, 100)/100`.
pub fn quality_multiplier<S: RankScore>(task: &Task) -> S {
    let video = if task.has_video { 1000 } else { 0 };
    let ratings = 5 * task.rating_count.min(100) as usize;
    S::ratio(10_000 + video + ratings, 10_000)
}

/// Re-scores fused results by task quality and keeps the top `k`. Ids not
/// known to `tasks` keep their fused score.
pub fn quality_rerank<S: RankScore>(fused: &RankedList<S>, tasks: &dyn TaskLookup, k: usize) -> RankedList<S> {
    let scored = fused.entries().iter().map(|e| {
        let s = match tasks.task(&e.id) {
            Some(t) => e.score.clone() * quality_multiplier::<S>(t),
            None => e.score.clone(),
        };
        (e.id.clone(), s)
    });
    RankedList::from_scores(Channel::QualityReranked, scored, k)
}
