//! In-process inverted index with tf-idf scoring, shared by the task catalog
//! and the video keyframe index.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::ranking::{Channel, RankedList};
use crate::scalar::Real;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct TfIdfIndex<F> {
    doc_ids: Vec<String>,
    /// term -> (doc position, term frequency), doc positions ascending
    postings: BTreeMap<String, Vec<(usize, u32)>>,
    idf: BTreeMap<String, F>,
}

impl<F: Real> TfIdfIndex<F> {
    /// Builds the index from `(doc id, terms)` pairs. Terms are expected to be
    /// in index form already (see [`crate::text::index_terms`]).
    pub fn build<I>(docs: I) -> Self
    where
        I: IntoIterator<Item = (String, Vec<String>)>,
    {
        let mut doc_ids = Vec::new();
        let mut postings: BTreeMap<String, Vec<(usize, u32)>> = BTreeMap::new();
        for (pos, (id, terms)) in docs.into_iter().enumerate() {
            doc_ids.push(id);
            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            for t in terms {
                *tf.entry(t).or_default() += 1;
            }
            for (t, c) in tf {
                postings.entry(t).or_default().push((pos, c));
            }
        }
        let n = F::from_count(doc_ids.len());
        let idf = postings.iter().map(|(t, p)| (t.clone(), (F::one() + n / F::from_count(p.len())).ln())).collect();
        Self { doc_ids, postings, idf }
    }

    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    /// Doc ids containing `term`.
    pub fn docs_with(&self, term: &str) -> Vec<&str> {
        self.postings.get(term).map(|p| p.iter().map(|(d, _)| self.doc_ids[*d].as_str()).collect()).unwrap_or_default()
    }

    pub fn idf(&self, term: &str) -> Option<F> {
        self.idf.get(term).copied()
    }

    /// Top `k` documents by the sum over distinct query terms of
    /// `tf(term, doc) * idf(term)`. Documents matching no term are omitted.
    pub fn search(&self, terms: &[String], k: usize) -> RankedList<F> {
        let uniq: BTreeSet<&String> = terms.iter().collect();
        let mut scores: BTreeMap<usize, F> = BTreeMap::new();
        for t in uniq {
            let (Some(post), Some(idf)) = (self.postings.get(t.as_str()), self.idf.get(t.as_str())) else {
                continue;
            };
            for (doc, tf) in post {
                let e = scores.entry(*doc).or_insert_with(F::zero);
                *e = *e + F::from_count(*tf as usize) * *idf;
            }
        }
        RankedList::from_scores(Channel::Lexical, scores.into_iter().map(|(d, s)| (self.doc_ids[d].clone(), s)), k)
    }
}
