use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Generator, GeneratorKind, GeneratorRequest, ResponseError};
use crate::catalog::Task;
use crate::text::{content_tokens, matches_singular, tokenize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CuratedCuriosity {
    pub text: String,
    #[serde(default)]
    pub tags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CuriosityStore(Vec<CuratedCuriosity>);

/// Grounding passage keyed by tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Passage {
    pub tag: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PassageStore(Vec<Passage>);

/// True if `phrase` occurs in `tokens` as a whole-word run, plurals allowed.
fn mentions(tokens: &[String], phrase: &str) -> bool {
    let want = tokenize(phrase);
    !want.is_empty() && tokens.windows(want.len()).any(|w| w.iter().zip(&want).all(|(t, s)| matches_singular(t, s)))
}

fn tag_overlap(c: &CuratedCuriosity, tokens: &[String]) -> usize {
    c.tags.iter().filter(|t| mentions(tokens, t)).count()
}

impl CuriosityStore {
    pub fn new(items: Vec<CuratedCuriosity>) -> Result<Self, ResponseError> {
        if items.is_empty() {
            return Err(ResponseError::InvalidKnowledge("curiosity store is empty".into()));
        }
        if items.iter().any(|c| c.text.trim().is_empty()) {
            return Err(ResponseError::InvalidKnowledge("curiosity with empty text".into()));
        }
        Ok(Self(items))
    }

    pub fn shipped() -> Self {
        Self::new(
            serde_json::from_str(include_str!("../../assets/curiosities.json")).expect("shipped curiosities parse"),
        )
        .expect("shipped curiosities are valid")
    }

    pub fn load(path: &Path) -> Result<Self, ResponseError> {
        Self::new(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn items(&self) -> &[CuratedCuriosity] {
        &self.0
    }

    /// Entry whose tags overlap `text` the most; ties go to the earlier entry.
    /// With no overlap anywhere, `backup` is scored instead, then the first
    /// entry is used.
    pub fn best_for(&self, text: &str, backup: &str) -> &CuratedCuriosity {
        for src in [text, backup] {
            let toks = tokenize(src);
            let mut best: Option<(usize, &CuratedCuriosity)> = None;
            for c in &self.0 {
                let o = tag_overlap(c, &toks);
                if o > 0 && best.is_none_or(|(b, _)| o > b) {
                    best = Some((o, c));
                }
            }
            if let Some((_, c)) = best {
                return c;
            }
        }
        &self.0[0]
    }

    /// Entry with the fewest tags in common with `text`; ties go to the later entry.
    pub fn worst_for(&self, text: &str) -> &CuratedCuriosity {
        let toks = tokenize(text);
        let mut worst = (usize::MAX, &self.0[0]);
        for c in &self.0 {
            let o = tag_overlap(c, &toks);
            if o <= worst.0 {
                worst = (o, c);
            }
        }
        worst.1
    }
}

impl PassageStore {
    pub fn new(items: Vec<Passage>) -> Self {
        Self(items)
    }

    pub fn shipped() -> Self {
        Self(serde_json::from_str(include_str!("../../assets/passages.json")).expect("shipped passages parse"))
    }

    pub fn load(path: &Path) -> Result<Self, ResponseError> {
        Ok(Self(serde_json::from_str(&std::fs::read_to_string(path)?)?))
    }

    /// Passage whose tag is mentioned in `text`, preferring the one sharing
    /// the most content tokens with it.
    pub fn lookup(&self, text: &str) -> Option<&Passage> {
        let toks = tokenize(text);
        let content: Vec<String> = content_tokens(text);
        let mut best: Option<(usize, &Passage)> = None;
        for p in self.0.iter().filter(|p| mentions(&toks, &p.tag)) {
            let ptoks = content_tokens(&p.text);
            let o = content.iter().filter(|t| ptoks.contains(t)).count();
            if best.is_none_or(|(b, _)| o > b) {
                best = Some((o, p));
            }
        }
        best.map(|(_, p)| p)
    }
}

/// Curiosity for the current step. A grounded generator request is made
/// when a passage matches the step (or the title); otherwise, or if the
/// generator is missing or fails, the best curated entry is returned.
pub fn get_curiosity(
    task: &Task,
    step_index: usize,
    passages: &PassageStore,
    generator: Option<&dyn Generator>,
    curated: &CuriosityStore,
) -> String {
    let step = task.steps.get(step_index).map(String::as_str).unwrap_or("");
    if let Some(g) = generator {
        if let Some(p) = passages.lookup(step).or_else(|| passages.lookup(&task.title)) {
            let req = GeneratorRequest::new(GeneratorKind::Curiosity, p.text.clone())
                .with("title", task.title.clone())
                .with("step", step);
            if let Ok(r) = g.generate(&req) {
                if !r.text.trim().is_empty() {
                    return r.text.trim().to_string();
                }
            }
        }
    }
    curated.best_for(step, &task.title).text.clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::sample_catalog;
    use crate::response::{FnGenerator, GeneratorError, Recording, StubGenerator};

    fn pesto() -> Task {
        sample_catalog().into_iter().find(|t| t.id == "r-pesto-soup").unwrap()
    }

    #[test]
    fn avocado_step_gets_avocado_day() {
        let t = pesto();
        let i = t.steps.iter().position(|s| s.contains("Avocado")).unwrap();
        let got = get_curiosity(&t, i, &PassageStore::shipped(), None, &CuriosityStore::shipped());
        assert_eq!(got, "In the US, on the 31st of July, it's national avocado day.");
    }

    #[test]
    fn stub_generator_uses_grounding() {
        let t = pesto();
        let i = t.steps.iter().position(|s| s.contains("Avocado")).unwrap();
        let passages = PassageStore::shipped();
        let rec = Recording::new(StubGenerator);
        let got = get_curiosity(&t, i, &passages, Some(&rec), &CuriosityStore::shipped());
        let p = passages.lookup(&t.steps[i]).unwrap();
        assert_eq!(p.tag, "avocado");
        assert!(got.contains(&crate::text::sentences(&p.text)[0]));
        let log = rec.log();
        assert_eq!(log.len(), 1);
        assert_eq!(log[0].0.grounding, p.text);
    }

    #[test]
    fn generator_failure_falls_back() {
        let t = pesto();
        let g = FnGenerator::new(|_| Err(GeneratorError::Timeout));
        let got = get_curiosity(&t, 6, &PassageStore::shipped(), Some(&g), &CuriosityStore::shipped());
        assert_eq!(got, CuriosityStore::shipped().best_for(&t.steps[6], &t.title).text);
    }

    #[test]
    fn no_passage_means_no_generation() {
        let mut t = pesto();
        t.title = "Mystery".into();
        t.steps = vec!["Wait patiently.".into()];
        let rec = Recording::new(StubGenerator);
        let store = CuriosityStore::shipped();
        let got = get_curiosity(&t, 0, &PassageStore::shipped(), Some(&rec), &store);
        assert_eq!(rec.calls(), 0);
        assert_eq!(got, store.items()[0].text);
    }

    #[test]
    fn worst_differs_from_best() {
        let store = CuriosityStore::shipped();
        let step = "Dice the Avocado into small cubes.";
        assert_ne!(store.best_for(step, ""), store.worst_for(step));
        assert_eq!(tag_overlap(store.worst_for(step), &tokenize(step)), 0);
    }

    #[test]
    fn empty_store_rejected() {
        assert!(CuriosityStore::new(vec![]).is_err());
        assert!(CuriosityStore::new(vec![CuratedCuriosity { text: " ".into(), tags: vec![] }]).is_err());
    }
}
