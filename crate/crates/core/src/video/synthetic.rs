use std::sync::Arc;

use rand::seq::{index::sample, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{FrameRecord, VideoError, VideoIndex};
use crate::embedding::{Embedder, EmbeddingVector, TrigramEmbedder};
use crate::scalar::Real;

pub const IMAGE_DIM: usize = 16;

const SUBJECTS: [&str; 3] = ["the chef", "the cook", "a hand"];
const VERBS: [&str; 16] = [
    "chop", "stir", "whisk", "pour", "knead", "fold", "slice", "sprinkle", "grate", "mash", "roll", "drain", "season",
    "toss", "peel", "crack",
];
const OBJECTS: [&str; 15] = [
    "onion", "flour", "butter", "garlic", "dough", "tomato", "pepper", "sugar", "egg", "cheese", "rice", "batter",
    "carrot", "lemon", "herb",
];
const PLACES: [&str; 5] = ["on the board", "in the bowl", "over the pan", "by the sink", "near the stove"];

fn third_person(verb: &str) -> String {
    if ["sh", "ch", "ss", "x"].iter().any(|s| verb.ends_with(s)) {
        format!("{verb}es")
    } else {
        format!("{verb}s")
    }
}

/// A query written for one known frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedQuery {
    pub video_id: String,
    pub query: String,
    /// Position of the planted frame within its video.
    pub position: usize,
    pub timestamp_s: f64,
}

pub struct SyntheticVideos<F: Real> {
    pub frames: Vec<FrameRecord<F>>,
    pub queries: Vec<PlantedQuery>,
}

impl<F: Real> SyntheticVideos<F> {
    pub fn index(&self) -> Result<VideoIndex<F>, VideoError> {
        VideoIndex::build_with(self.frames.clone(), Arc::new(TrigramEmbedder::default()))
    }
}

/// `videos` videos of `frames_per_video` captioned keyframes each, plus
/// `queries_per_video` questions phrased for randomly chosen frames
/// ("When did the chef whisk the egg?" for "the chef whisks the egg in the
/// bowl"). Captions are drawn independently, so two frames of a video can
/// share an action by chance.
pub fn synthetic_videos<F: Real>(
    videos: usize,
    frames_per_video: usize,
    queries_per_video: usize,
    seed: u64,
) -> SyntheticVideos<F> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let embedder = TrigramEmbedder::default();
    let mut frames = Vec::new();
    let mut queries = Vec::new();
    for v in 0..videos {
        let video_id = format!("vid-{v:03}");
        let mut t = 0.0f64;
        let mut actions = Vec::new();
        for _ in 0..frames_per_video {
            let (s, verb, obj) = (
                *SUBJECTS.choose(&mut rng).unwrap(),
                *VERBS.choose(&mut rng).unwrap(),
                *OBJECTS.choose(&mut rng).unwrap(),
            );
            let place = PLACES.choose(&mut rng).unwrap();
            let caption = format!("{s} {} the {obj} {place}", third_person(verb));
            let image: Vec<F> = (0..IMAGE_DIM).map(|_| F::lit(rng.sample::<f64, _>(StandardNormal))).collect();
            let ts = F::lit((t * 10.0).round() / 10.0);
            frames.push(FrameRecord::captioned(
                &video_id,
                ts,
                &caption,
                &embedder as &dyn Embedder<F>,
                EmbeddingVector::normalized(image),
            ));
            actions.push((s, verb, obj, ts.to_f64().unwrap_or(0.0)));
            t += rng.gen_range(2.0..15.0);
        }
        for position in sample(&mut rng, frames_per_video, queries_per_video.min(frames_per_video)).into_vec() {
            let (s, verb, obj, ts) = actions[position];
            queries.push(PlantedQuery {
                video_id: video_id.clone(),
                query: format!("When did {s} {verb} the {obj}?"),
                position,
                timestamp_s: ts,
            });
        }
    }
    SyntheticVideos { frames, queries }
}
