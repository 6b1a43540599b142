use serde::{Deserialize, Serialize};

use super::{Generator, GeneratorKind, GeneratorRequest};
use crate::catalog::{TagLexicon, Task};
use crate::text::{sentences, word_count, PhraseMatcher};

/// Longest description shown to users.
pub const PROMOTER_MAX_WORDS: usize = 60;
/// Anything longer than this is treated as a run-on.
pub const BROKEN_WORDS: usize = 120;

/// Food nouns a description may only mention if the task uses them.
#[derive(Debug, Clone)]
pub struct FoodLexicon(PhraseMatcher);

impl Default for FoodLexicon {
    fn default() -> Self {
        Self::from_tags(&TagLexicon::default())
    }
}

impl FoodLexicon {
    pub fn new<I: IntoIterator<Item = S>, S: AsRef<str>>(terms: I) -> Self {
        Self(PhraseMatcher::new(terms))
    }

    pub fn from_tags(tags: &TagLexicon) -> Self {
        Self::new(&tags.ingredients)
    }

    pub fn find(&self, text: &str) -> Vec<String> {
        self.0.find_unique(text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "detail", rename_all = "snake_case")]
pub enum DescriptionVerdict {
    Valid,
    Hallucination(Vec<String>),
    Broken(String),
}

impl DescriptionVerdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Self::Valid)
    }
}

pub fn validate_description(task: &Task, text: &str, lexicon: &FoodLexicon) -> DescriptionVerdict {
    let t = text.trim();
    if t.is_empty() {
        return DescriptionVerdict::Broken("empty".into());
    }
    if !t.ends_with(['.', '!', '?']) {
        return DescriptionVerdict::Broken("unterminated".into());
    }
    let n = word_count(t);
    if n > BROKEN_WORDS {
        return DescriptionVerdict::Broken(format!("{n} words"));
    }
    let missing: Vec<String> = lexicon.find(t).into_iter().filter(|term| !task.has_ingredient(term)).collect();
    if missing.is_empty() {
        DescriptionVerdict::Valid
    } else {
        DescriptionVerdict::Hallucination(missing)
    }
}

/// Keeps whole sentences up to `max` words. A first sentence that is
/// already too long is cut at `max` words.
fn cap_words(text: &str, max: usize) -> String {
    let mut out: Vec<String> = Vec::new();
    let mut n = 0;
    for s in sentences(text) {
        let w = word_count(&s);
        if n + w > max {
            break;
        }
        n += w;
        out.push(s);
    }
    if out.is_empty() {
        let cut: Vec<&str> = text.split_whitespace().take(max).collect();
        return format!("{}.", cut.join(" ").trim_end_matches([',', ';', ':', '.', '!', '?']));
    }
    out.join(" ")
}

/// Short appealing description for `task`, or `None` when the generator is
/// unavailable or its output fails validation.
pub fn promote_task(task: &Task, generator: &dyn Generator, lexicon: &FoodLexicon) -> Option<String> {
    let ings: Vec<&str> = task.ingredient_names().collect();
    let grounding = format!("{}\n{}", task.title, ings.join(", "));
    let req = GeneratorRequest::new(GeneratorKind::Promoter, grounding)
        .with("title", task.title.clone())
        .with("ingredients", ings);
    let text = generator.generate(&req).ok()?.text;
    validate_description(task, &text, lexicon).is_valid().then(|| cap_words(text.trim(), PROMOTER_MAX_WORDS))
}
