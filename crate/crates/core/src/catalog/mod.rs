//! Task storage, seasonal suggestions and the hybrid search pipeline
//! (lexical + semantic channels, reciprocal-rank fusion, quality re-rank).

mod index;
mod quality;
mod query;
mod suggest;
pub mod synthetic;
mod task;

use std::path::Path;

use thiserror::Error;

pub use index::{indexed_text, CatalogIndex, SearchOutcome};
pub use quality::{quality_multiplier, quality_rerank};
pub use query::{extract_query_terms, TagLexicon};
pub use suggest::{suggest, ActiveWindow, MonthDay, SuggestionSet};
pub use task::{Domain, IngredientLine, Provenance, Task};

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("duplicate task id {0:?}")]
    DuplicateId(String),
    #[error("catalog is empty")]
    EmptyCatalog,
    #[error("invalid task {id:?}: {reason}")]
    InvalidTask { id: String, reason: String },
    #[error("unknown task id {0:?}")]
    UnknownTask(String),
    #[error("invalid month-day {0:?}")]
    InvalidWindow(String),
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Read access to tasks by id.
pub trait TaskLookup {
    fn task(&self, id: &str) -> Option<&Task>;
}

impl TaskLookup for std::collections::BTreeMap<String, Task> {
    fn task(&self, id: &str) -> Option<&Task> {
        self.get(id)
    }
}

static SAMPLE_CATALOG: &str = include_str!("../../assets/catalog.jsonl");
static SAMPLE_SUGGESTIONS: &str = include_str!("../../assets/suggestions.json");

/// Parses a JSON-lines catalog (one task per non-blank line).
pub fn parse_catalog(text: &str) -> Result<Vec<Task>, CatalogError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let t: Task = serde_json::from_str(line).map_err(|source| CatalogError::Parse { line: i + 1, source })?;
        t.validate()?;
        out.push(t);
    }
    Ok(out)
}

pub fn load_catalog(path: &Path) -> Result<Vec<Task>, CatalogError> {
    parse_catalog(&std::fs::read_to_string(path)?)
}

pub fn write_catalog(path: &Path, tasks: &[Task]) -> Result<(), CatalogError> {
    let mut s = String::new();
    for t in tasks {
        s.push_str(&serde_json::to_string(t)?);
        s.push('\n');
    }
    std::fs::write(path, s)?;
    Ok(())
}

pub fn parse_suggestions(text: &str) -> Result<Vec<SuggestionSet>, CatalogError> {
    Ok(serde_json::from_str(text)?)
}

pub fn load_suggestions(path: &Path) -> Result<Vec<SuggestionSet>, CatalogError> {
    parse_suggestions(&std::fs::read_to_string(path)?)
}

/// The small catalog shipped with the crate.
pub fn sample_catalog() -> Vec<Task> {
    parse_catalog(SAMPLE_CATALOG).expect("shipped catalog is valid")
}

pub fn sample_suggestions() -> Vec<SuggestionSet> {
    parse_suggestions(SAMPLE_SUGGESTIONS).expect("shipped suggestions are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_assets_are_consistent() {
        let tasks = sample_catalog();
        let idx = CatalogIndex::<f64>::build(tasks).unwrap();
        for s in sample_suggestions() {
            s.validate(&idx).unwrap();
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_catalog("\n{not json}\n").unwrap_err();
        assert!(matches!(err, CatalogError::Parse { line: 2, .. }));
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.jsonl");
        let tasks = synthetic::synthetic_catalog(5, 9);
        write_catalog(&p, &tasks).unwrap();
        assert_eq!(load_catalog(&p).unwrap(), tasks);
    }
}
