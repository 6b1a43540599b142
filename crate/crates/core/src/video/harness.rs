use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{FrameRecord, PlantedQuery, VideoError, VideoIndex};
use crate::scalar::Real;
use crate::text::index_terms;

/// A judged query. `expected` is the position of the frame a judge would
/// call fully relevant, when known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceQuery {
    pub video_id: String,
    pub query: String,
    #[serde(default)]
    pub expected: Option<usize>,
}

impl From<&PlantedQuery> for RelevanceQuery {
    fn from(p: &PlantedQuery) -> Self {
        Self { video_id: p.video_id.clone(), query: p.query.clone(), expected: Some(p.position) }
    }
}

/// Grades on a 1 to 5 scale, one per query, and the share of each grade.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceReport {
    pub grades: Vec<u8>,
    pub buckets: BTreeMap<u8, usize>,
    pub fractions: BTreeMap<u8, f64>,
}

/// Stand-in judge: 5 for the expected frame, otherwise 1 plus the caption's
/// term overlap with the query scaled to 0..=3.
pub fn overlap_judge<F: Real>(q: &RelevanceQuery, position: usize, frame: &FrameRecord<F>) -> u8 {
    if q.expected == Some(position) {
        return 5;
    }
    let a: BTreeSet<String> = index_terms(&q.query).into_iter().collect();
    let b: BTreeSet<String> = index_terms(&frame.caption).into_iter().collect();
    if a.is_empty() {
        return 1;
    }
    let share = a.intersection(&b).count() as f64 / a.len() as f64;
    1 + (share * 3.0).round() as u8
}

/// Runs every query, grades the top frame with `judge` (a miss grades 1)
/// and buckets the grades.
pub fn relevance_harness<F, J>(
    index: &VideoIndex<F>,
    queries: &[RelevanceQuery],
    judge: J,
) -> Result<RelevanceReport, VideoError>
where
    F: Real,
    J: Fn(&RelevanceQuery, usize, &FrameRecord<F>) -> u8,
{
    let mut grades = Vec::with_capacity(queries.len());
    for q in queries {
        let grade = match index.rank_moments(&q.video_id, &q.query, None)?.fused.entries().first() {
            Some(top) => {
                let pos: usize = top.id.parse().expect("frame ids are positions");
                let frame = &index.frames(&q.video_id).expect("ranked video exists")[pos];
                judge(q, pos, frame).clamp(1, 5)
            }
            None => 1,
        };
        grades.push(grade);
    }
    let mut buckets: BTreeMap<u8, usize> = (1..=5).map(|g| (g, 0)).collect();
    for g in &grades {
        *buckets.get_mut(g).expect("grade in 1..=5") += 1;
    }
    let n = grades.len().max(1) as f64;
    let fractions = buckets.iter().map(|(g, c)| (*g, *c as f64 / n)).collect();
    Ok(RelevanceReport { grades, buckets, fractions })
}
