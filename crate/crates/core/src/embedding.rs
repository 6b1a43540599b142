//! Embedding vectors and the embedding-provider interface.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;
use crate::text::fnv1a;

pub const DEFAULT_DIM: usize = 256;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EmbeddingError {
    #[error("embedding dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
}

/// Fixed-length vector, unit-norm unless it is the zero vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
#[serde(bound = "F: Real")]
pub struct EmbeddingVector<F> {
    values: Vec<F>,
}

impl<F: Real> EmbeddingVector<F> {
    /// Zero-length vector, standing in for an absent embedding.
    pub fn empty() -> Self {
        Self { values: Vec::new() }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { values: vec![F::zero(); dim] }
    }

    /// L2-normalises `values`; an all-zero input stays zero.
    pub fn normalized(mut values: Vec<F>) -> Self {
        let norm = values.iter().fold(F::zero(), |acc, v| acc + *v * *v).sqrt();
        if norm > F::zero() {
            for v in &mut values {
                *v = *v / norm;
            }
        }
        Self { values }
    }

    /// Wraps values without normalising. Callers must uphold the unit-norm
    /// invariant themselves.
    pub fn from_raw(values: Vec<F>) -> Self {
        Self { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.is_zero())
    }

    pub fn norm(&self) -> F {
        self.values.iter().fold(F::zero(), |acc, v| acc + *v * *v).sqrt()
    }

    /// Cosine similarity. Zero vectors have similarity 0 with everything.
    pub fn cosine(&self, other: &Self) -> Result<F, EmbeddingError> {
        if self.dim() != other.dim() {
            return Err(EmbeddingError::DimensionMismatch { expected: self.dim(), actual: other.dim() });
        }
        let (mut dot, mut na, mut nb) = (F::zero(), F::zero(), F::zero());
        for (a, b) in self.values.iter().zip(&other.values) {
            dot = dot + *a * *b;
            na = na + *a * *a;
            nb = nb + *b * *b;
        }
        if na.is_zero() || nb.is_zero() {
            return Ok(F::zero());
        }
        Ok(dot / (na.sqrt() * nb.sqrt()))
    }

    pub fn cast<G: Real>(&self) -> EmbeddingVector<G> {
        EmbeddingVector { values: self.values.iter().map(|v| G::from(*v).unwrap_or_else(G::zero)).collect() }
    }
}

/// Text embedding provider. Implementations must be deterministic: the same
/// string always yields the same vector.
pub trait Embedder<F: Real>: Send + Sync {
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> EmbeddingVector<F>;
}

/// Hashed character-trigram counts folded into `dim` buckets, L2-normalised.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrigramEmbedder {
    dim: usize,
}

impl Default for TrigramEmbedder {
    fn default() -> Self {
        Self { dim: DEFAULT_DIM }
    }
}

impl TrigramEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self { dim }
    }
}

impl<F: Real> Embedder<F> for TrigramEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> EmbeddingVector<F> {
        let words: Vec<String> = crate::text::tokenize(text);
        if words.is_empty() {
            return EmbeddingVector::zeros(self.dim);
        }
        let mut counts = vec![0u32; self.dim];
        for w in &words {
            let padded: Vec<char> = format!(" {w} ").chars().collect();
            for tri in padded.windows(3) {
                let s: String = tri.iter().collect();
                let bucket = (fnv1a(s.as_bytes()) % self.dim as u64) as usize;
                counts[bucket] += 1;
            }
        }
        EmbeddingVector::normalized(counts.into_iter().map(|c| F::from(c).unwrap_or_else(F::zero)).collect())
    }
}
