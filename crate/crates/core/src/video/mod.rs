//! Keyframe index and moment retrieval over task videos.

mod harness;
mod synthetic;

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dialogue::SeekFragment;
use crate::embedding::{Embedder, EmbeddingError, EmbeddingVector, TrigramEmbedder};
use crate::lexical::TfIdfIndex;
use crate::ranking::{fuse, Channel, RankedList};
use crate::scalar::Real;
use crate::text::index_terms;

pub use harness::{overlap_judge, relevance_harness, RelevanceQuery, RelevanceReport};
pub use synthetic::{synthetic_videos, PlantedQuery, SyntheticVideos, IMAGE_DIM};

#[derive(Debug, Error)]
pub enum VideoError {
    #[error("no frames to index")]
    EmptyInput,
    #[error("timestamps of video {video_id} are not strictly increasing at {timestamp_s}")]
    NonMonotoneTimestamps { video_id: String, timestamp_s: f64 },
    #[error("invalid frame in video {video_id}: {reason}")]
    InvalidFrame { video_id: String, reason: String },
    #[error("unknown video {0}")]
    UnknownVideo(String),
    #[error("no frame matches the query")]
    NoMatch,
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// One keyframe with its caption and embeddings. Ingest files may omit
/// the embeddings: a missing caption embedding is computed at index time and
/// a missing image embedding leaves the frame out of the image channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct FrameRecord<F> {
    pub video_id: String,
    pub timestamp_s: F,
    pub caption: String,
    #[serde(default = "EmbeddingVector::empty")]
    pub caption_embedding: EmbeddingVector<F>,
    #[serde(default = "EmbeddingVector::empty")]
    pub image_embedding: EmbeddingVector<F>,
}

impl<F: Real> FrameRecord<F> {
    /// Frame whose caption embedding comes from `embedder`.
    pub fn captioned(
        video_id: &str,
        timestamp_s: F,
        caption: &str,
        embedder: &dyn Embedder<F>,
        image_embedding: EmbeddingVector<F>,
    ) -> Self {
        Self {
            video_id: video_id.to_string(),
            timestamp_s,
            caption: caption.to_string(),
            caption_embedding: embedder.embed(caption),
            image_embedding,
        }
    }
}

/// 1-based rank of the returned frame in each channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ChannelRanks {
    pub lexical: Option<usize>,
    pub caption_emb: Option<usize>,
    pub image_emb: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct MomentResult<F> {
    pub timestamp_s: F,
    pub frame: FrameRecord<F>,
    pub fused_score: F,
    pub channel_ranks: ChannelRanks,
}

/// The three channel lists and their fusion for one query. Frame ids are
/// zero-padded positions, so id order is time order.
#[derive(Debug, Clone)]
pub struct MomentRanking<F> {
    pub lexical: RankedList<F>,
    pub caption_emb: RankedList<F>,
    pub image_emb: Option<RankedList<F>>,
    pub fused: RankedList<F>,
}

struct VideoFrames<F: Real> {
    frames: Vec<FrameRecord<F>>,
    lexical: TfIdfIndex<F>,
}

/// Immutable per-video keyframe index.
pub struct VideoIndex<F: Real = f64> {
    videos: BTreeMap<String, VideoFrames<F>>,
    embedder: Arc<dyn Embedder<F>>,
    image_dim: usize,
}

impl<F: Real> std::fmt::Debug for VideoIndex<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VideoIndex").field("videos", &self.videos.len()).field("image_dim", &self.image_dim).finish()
    }
}

pub fn frame_id(position: usize) -> String {
    format!("{position:06}")
}

fn position(id: &str) -> usize {
    id.parse().expect("frame ids are positions")
}

impl<F: Real> VideoIndex<F> {
    pub fn build(records: Vec<FrameRecord<F>>) -> Result<Self, VideoError> {
        Self::build_with(records, Arc::new(TrigramEmbedder::default()))
    }

    /// Indexes `records`, which must be in time order within each video.
    /// Caption embeddings must have the embedder's dimension; image
    /// embeddings must share one dimension across the index.
    pub fn build_with(records: Vec<FrameRecord<F>>, embedder: Arc<dyn Embedder<F>>) -> Result<Self, VideoError> {
        if records.is_empty() {
            return Err(VideoError::EmptyInput);
        }
        let image_dim = records.iter().map(|r| r.image_embedding.dim()).max().unwrap_or(0);
        let mut grouped: BTreeMap<String, Vec<FrameRecord<F>>> = BTreeMap::new();
        for mut r in records {
            if r.caption_embedding.dim() == 0 {
                r.caption_embedding = embedder.embed(&r.caption);
            }
            if r.image_embedding.dim() == 0 {
                r.image_embedding = EmbeddingVector::zeros(image_dim);
            }
            let bad = |reason: String| VideoError::InvalidFrame { video_id: r.video_id.clone(), reason };
            if r.video_id.trim().is_empty() {
                return Err(bad("empty video id".into()));
            }
            if !r.timestamp_s.is_finite() || r.timestamp_s < F::zero() {
                return Err(bad(format!("timestamp {:?}", r.timestamp_s)));
            }
            if r.caption_embedding.dim() != embedder.dim() {
                return Err(EmbeddingError::DimensionMismatch {
                    expected: embedder.dim(),
                    actual: r.caption_embedding.dim(),
                }
                .into());
            }
            if r.image_embedding.dim() != image_dim {
                return Err(
                    EmbeddingError::DimensionMismatch { expected: image_dim, actual: r.image_embedding.dim() }.into()
                );
            }
            let list = grouped.entry(r.video_id.clone()).or_default();
            if let Some(prev) = list.last() {
                if r.timestamp_s <= prev.timestamp_s {
                    return Err(VideoError::NonMonotoneTimestamps {
                        video_id: r.video_id.clone(),
                        timestamp_s: r.timestamp_s.to_f64().unwrap_or(f64::NAN),
                    });
                }
            }
            list.push(r);
        }
        let videos = grouped
            .into_iter()
            .map(|(id, frames)| {
                let lexical =
                    TfIdfIndex::build(frames.iter().enumerate().map(|(i, f)| (frame_id(i), index_terms(&f.caption))));
                (id, VideoFrames { frames, lexical })
            })
            .collect();
        Ok(Self { videos, embedder, image_dim })
    }

    /// Keyframes shipped for the sample catalog's videos (captions only).
    pub fn shipped_frames() -> Vec<FrameRecord<F>> {
        include_str!("../../assets/video_frames.jsonl")
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).expect("shipped frames parse"))
            .collect()
    }

    pub fn load_jsonl(path: &Path) -> Result<Vec<FrameRecord<F>>, VideoError> {
        let text = std::fs::read_to_string(path)?;
        let mut out = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            out.push(serde_json::from_str(line)?);
        }
        Ok(out)
    }

    pub fn video_ids(&self) -> impl Iterator<Item = &str> {
        self.videos.keys().map(String::as_str)
    }

    pub fn frames(&self, video_id: &str) -> Option<&[FrameRecord<F>]> {
        self.videos.get(video_id).map(|v| v.frames.as_slice())
    }

    pub fn embedder(&self) -> &Arc<dyn Embedder<F>> {
        &self.embedder
    }

    /// Channel lists and their fusion. Embedding channels keep only frames
    /// with positive cosine; the image channel is skipped without a query
    /// image embedding.
    pub fn rank_moments(
        &self,
        video_id: &str,
        query: &str,
        query_image: Option<&EmbeddingVector<F>>,
    ) -> Result<MomentRanking<F>, VideoError> {
        let v = self.videos.get(video_id).ok_or_else(|| VideoError::UnknownVideo(video_id.to_string()))?;
        let all = v.frames.len();
        let lexical = v.lexical.search(&index_terms(query), all);
        let q = self.embedder.embed(query);
        let cosine_list =
            |channel: Channel, target: &EmbeddingVector<F>, pick: fn(&FrameRecord<F>) -> &EmbeddingVector<F>| {
                let mut scored = Vec::new();
                for (i, f) in v.frames.iter().enumerate() {
                    let c = target.cosine(pick(f))?;
                    if c > F::zero() {
                        scored.push((frame_id(i), c));
                    }
                }
                Ok::<_, VideoError>(RankedList::from_scores(channel, scored, all))
            };
        let caption_emb = cosine_list(Channel::Semantic, &q, |f| &f.caption_embedding)?;
        let image_emb = match query_image {
            Some(img) => {
                if img.dim() != self.image_dim {
                    return Err(
                        EmbeddingError::DimensionMismatch { expected: self.image_dim, actual: img.dim() }.into()
                    );
                }
                Some(cosine_list(Channel::Image, img, |f| &f.image_embedding)?)
            }
            None => None,
        };
        let mut lists = vec![lexical.clone(), caption_emb.clone()];
        lists.extend(image_emb.clone());
        let fused = fuse(&lists, all);
        Ok(MomentRanking { lexical, caption_emb, image_emb, fused })
    }

    /// Top fused frame of `video_id` for `query`.
    pub fn query_moment(
        &self,
        video_id: &str,
        query: &str,
        query_image: Option<&EmbeddingVector<F>>,
    ) -> Result<MomentResult<F>, VideoError> {
        let r = self.rank_moments(video_id, query, query_image)?;
        let top = r.fused.entries().first().ok_or(VideoError::NoMatch)?;
        let frame = self.videos[video_id].frames[position(&top.id)].clone();
        Ok(MomentResult {
            timestamp_s: frame.timestamp_s,
            frame,
            fused_score: top.score,
            channel_ranks: ChannelRanks {
                lexical: r.lexical.rank_of(&top.id),
                caption_emb: r.caption_emb.rank_of(&top.id),
                image_emb: r.image_emb.as_ref().and_then(|l| l.rank_of(&top.id)),
            },
        })
    }
}

/// Player instruction for a retrieved moment.
pub fn seek_payload<F: Real>(result: &MomentResult<F>) -> SeekFragment {
    SeekFragment {
        video_id: result.frame.video_id.clone(),
        seek_to_s: result.timestamp_s.to_f64().unwrap_or(0.0),
        caption: result.frame.caption.clone(),
    }
}
