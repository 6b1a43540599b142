use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::embedding::{Embedder, EmbeddingError, EmbeddingVector, TrigramEmbedder};
use crate::lexical::TfIdfIndex;
use crate::ranking::{fuse, Channel, RankedList};
use crate::scalar::Real;
use crate::text::index_terms;

use super::quality::quality_rerank;
use super::query::{extract_query_terms, TagLexicon};
use super::{CatalogError, Task, TaskLookup};

/// Immutable search index over a task catalog: a tf-idf inverted index over
/// title, description and ingredient names, plus title embeddings.
pub struct CatalogIndex<F: Real> {
    tasks: BTreeMap<String, Task>,
    lexical: TfIdfIndex<F>,
    embeddings: BTreeMap<String, EmbeddingVector<F>>,
    embedder: Arc<dyn Embedder<F>>,
    lexicon: TagLexicon,
}

impl<F: Real> std::fmt::Debug for CatalogIndex<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CatalogIndex").field("tasks", &self.tasks.len()).field("dim", &self.embedder.dim()).finish()
    }
}

/// Outcome of the full search pipeline, with the intermediate lists kept
/// for inspection.
#[derive(Debug, Clone)]
pub struct SearchOutcome<F> {
    pub terms: Vec<String>,
    pub channels: Vec<RankedList<F>>,
    pub fused: RankedList<F>,
    pub ranked: RankedList<F>,
}

/// Text that feeds the lexical index for one task.
pub fn indexed_text(task: &Task) -> String {
    let mut s = format!("{} {}", task.title, task.description);
    for ing in &task.ingredients {
        s.push(' ');
        s.push_str(&ing.name);
    }
    s
}

impl<F: Real> CatalogIndex<F> {
    pub fn build(tasks: Vec<Task>) -> Result<Self, CatalogError> {
        Self::build_with(tasks, Arc::new(TrigramEmbedder::default()), TagLexicon::default())
    }

    pub fn build_with(
        tasks: Vec<Task>,
        embedder: Arc<dyn Embedder<F>>,
        lexicon: TagLexicon,
    ) -> Result<Self, CatalogError> {
        if tasks.is_empty() {
            return Err(CatalogError::EmptyCatalog);
        }
        let mut by_id = BTreeMap::new();
        for t in tasks {
            t.validate()?;
            if by_id.contains_key(&t.id) {
                return Err(CatalogError::DuplicateId(t.id));
            }
            by_id.insert(t.id.clone(), t);
        }
        let lexical = TfIdfIndex::build(by_id.values().map(|t| (t.id.clone(), index_terms(&indexed_text(t)))));
        let embeddings = by_id.values().map(|t| (t.id.clone(), embedder.embed(&t.title))).collect();
        Ok(Self { tasks: by_id, lexical, embeddings, embedder, lexicon })
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn tasks(&self) -> impl Iterator<Item = &Task> {
        self.tasks.values()
    }

    pub fn lexicon(&self) -> &TagLexicon {
        &self.lexicon
    }

    pub fn embedder(&self) -> &Arc<dyn Embedder<F>> {
        &self.embedder
    }

    pub fn embedding(&self, id: &str) -> Option<&EmbeddingVector<F>> {
        self.embeddings.get(id)
    }

    pub fn lexical_index(&self) -> &TfIdfIndex<F> {
        &self.lexical
    }

    /// Ids of tasks whose indexed text contains `token` (after stemming).
    pub fn postings(&self, token: &str) -> Vec<&str> {
        match index_terms(token).first() {
            Some(t) => self.lexical.docs_with(t),
            None => Vec::new(),
        }
    }

    /// Top `k` tasks by tf-idf sum over the (possibly multiword) query terms.
    pub fn lexical_search(&self, terms: &[String], k: usize) -> RankedList<F> {
        let toks: Vec<String> = terms.iter().flat_map(|t| index_terms(t)).collect();
        self.lexical.search(&toks, k)
    }

    /// Top `k` tasks by cosine similarity between `query` and title embeddings.
    pub fn semantic_search(&self, query: &EmbeddingVector<F>, k: usize) -> Result<RankedList<F>, EmbeddingError> {
        if query.dim() != self.embedder.dim() {
            return Err(EmbeddingError::DimensionMismatch { expected: self.embedder.dim(), actual: query.dim() });
        }
        let mut scored = Vec::with_capacity(self.embeddings.len());
        for (id, v) in &self.embeddings {
            scored.push((id.clone(), query.cosine(v)?));
        }
        Ok(RankedList::from_scores(Channel::Semantic, scored, k))
    }

    /// Multi-query search: the raw utterance and its extracted terms each go
    /// through both channels, the (up to) four lists are fused by RRF and
    /// the result is re-ranked by task quality.
    pub fn search(&self, utterance: &str, k: usize) -> SearchOutcome<F> {
        let depth = k.max(50);
        let terms = extract_query_terms(utterance, &self.lexicon);
        let terms_query = terms.join(" ");
        let mut queries: Vec<String> = vec![utterance.to_string()];
        if !terms_query.is_empty() && terms_query != utterance {
            queries.push(terms_query);
        }
        let mut channels = Vec::new();
        for q in &queries {
            let raw: Vec<String> = if q == utterance { crate::text::tokenize(q) } else { terms.clone() };
            channels.push(self.lexical_search(&raw, depth));
            let v = self.embedder.embed(q);
            // A zero query vector ranks every task at 0 and would inject pure
            // id order into the fusion.
            if !v.is_zero() {
                channels.push(self.semantic_search(&v, depth).expect("embedder dimension matches index"));
            }
        }
        let fused = fuse(&channels, depth);
        let ranked = quality_rerank(&fused, self, k);
        SearchOutcome { terms, channels, fused, ranked }
    }

    /// Tasks whose ingredient lists contain every tag in `ingredients`.
    pub fn tasks_with_all_ingredients(&self, ingredients: &[String]) -> Vec<&Task> {
        self.tasks.values().filter(|t| ingredients.iter().all(|i| t.has_ingredient(i))).collect()
    }

    pub fn ids(&self) -> BTreeSet<&str> {
        self.tasks.keys().map(String::as_str).collect()
    }
}

impl<F: Real> TaskLookup for CatalogIndex<F> {
    fn task(&self, id: &str) -> Option<&Task> {
        self.tasks.get(id)
    }
}
