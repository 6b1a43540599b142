use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ResponseError;
use crate::catalog::Task;
use crate::text::{content_tokens, PhraseMatcher};

/// Term to senses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Dictionary(BTreeMap<String, Vec<String>>);

/// Ingredient to ordered substitutes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SubstitutionKb(BTreeMap<String, Vec<String>>);

fn token_set(text: &str) -> BTreeSet<String> {
    content_tokens(text).into_iter().collect()
}

fn overlap(a: &str, b: &BTreeSet<String>) -> usize {
    token_set(a).intersection(b).count()
}

impl Dictionary {
    pub fn new(entries: BTreeMap<String, Vec<String>>) -> Result<Self, ResponseError> {
        if let Some((t, _)) = entries.iter().find(|(_, s)| s.is_empty() || s.iter().any(|x| x.trim().is_empty())) {
            return Err(ResponseError::InvalidKnowledge(format!("term {t:?} has an empty sense")));
        }
        Ok(Self(entries.into_iter().map(|(k, v)| (k.to_lowercase(), v)).collect()))
    }

    pub fn shipped() -> Self {
        let raw =
            serde_json::from_str(include_str!("../../assets/dictionary.json")).expect("shipped dictionary parses");
        Self::new(raw).expect("shipped dictionary is valid")
    }

    pub fn load(path: &Path) -> Result<Self, ResponseError> {
        Self::new(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn senses(&self, term: &str) -> Option<&[String]> {
        self.0.get(&term.trim().to_lowercase()).map(Vec::as_slice)
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    /// The dictionary term mentioned in `utterance`, if any.
    pub fn find_term(&self, utterance: &str) -> Option<String> {
        PhraseMatcher::new(self.0.keys()).find(utterance).first().map(|s| s.to_string())
    }
}

/// Sense sharing the most content tokens with `step_text`; ties go to the
/// earlier sense. `None` for unknown terms.
pub fn define_term<'a>(term: &str, step_text: &str, dict: &'a Dictionary) -> Option<&'a str> {
    let senses = dict.senses(term)?;
    let step = token_set(step_text);
    let mut best = (0usize, 0usize);
    for (i, s) in senses.iter().enumerate() {
        let o = overlap(s, &step);
        if o > best.1 {
            best = (i, o);
        }
    }
    Some(senses[best.0].as_str())
}

/// Sense sharing the fewest content tokens with `step_text`; ties go to the
/// later sense, so that a single-sense term still yields its only sense.
pub fn worst_definition<'a>(term: &str, step_text: &str, dict: &'a Dictionary) -> Option<&'a str> {
    let senses = dict.senses(term)?;
    let step = token_set(step_text);
    let mut worst = (0usize, usize::MAX);
    for (i, s) in senses.iter().enumerate() {
        let o = overlap(s, &step);
        if o <= worst.1 {
            worst = (i, o);
        }
    }
    Some(senses[worst.0].as_str())
}

/// Term a definition question asks about: a dictionary term if one is
/// mentioned, otherwise the words after "what is/are/does".
pub fn extract_definition_term(utterance: &str, dict: &Dictionary) -> Option<String> {
    if let Some(t) = dict.find_term(utterance) {
        return Some(t);
    }
    let toks = crate::text::tokenize(utterance);
    let start = toks.iter().position(|t| matches!(t.as_str(), "is" | "are" | "does" | "means" | "mean"))? + 1;
    let rest: Vec<&str> = toks[start..]
        .iter()
        .map(String::as_str)
        .filter(|t| !matches!(*t, "a" | "an" | "the" | "mean" | "means"))
        .collect();
    (!rest.is_empty()).then(|| rest.join(" "))
}

impl SubstitutionKb {
    pub fn new(entries: BTreeMap<String, Vec<String>>) -> Result<Self, ResponseError> {
        let mut out = BTreeMap::new();
        for (k, v) in entries {
            let key = k.trim().to_lowercase();
            let subs: Vec<String> = v.iter().map(|s| s.trim().to_lowercase()).collect();
            if subs.iter().any(|s| *s == key || s.is_empty()) {
                return Err(ResponseError::InvalidKnowledge(format!("bad substitute list for {key:?}")));
            }
            out.insert(key, subs);
        }
        Ok(Self(out))
    }

    pub fn shipped() -> Self {
        let raw = serde_json::from_str(include_str!("../../assets/substitutions.json")).expect("shipped KB parses");
        Self::new(raw).expect("shipped KB is valid")
    }

    pub fn load(path: &Path) -> Result<Self, ResponseError> {
        Self::new(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn substitutes(&self, ingredient: &str) -> &[String] {
        self.0.get(&ingredient.trim().to_lowercase()).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn ingredients(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    /// KB ingredient mentioned in `utterance`, preferring ones that belong
    /// to `task`.
    pub fn find_ingredient(&self, utterance: &str, task: Option<&Task>) -> Option<String> {
        let found = PhraseMatcher::new(self.0.keys()).find_unique(utterance);
        found.iter().find(|f| task.is_some_and(|t| t.has_ingredient(f))).or(found.first()).cloned()
    }
}

/// First KB substitute for `ingredient` not already used by `task`.
pub fn substitute_ingredient<'a>(ingredient: &str, task: Option<&Task>, kb: &'a SubstitutionKb) -> Option<&'a str> {
    kb.substitutes(ingredient).iter().find(|s| task.is_none_or(|t| !t.has_ingredient(s))).map(String::as_str)
}

/// Step text followed by the quantities of the ingredients it mentions.
pub fn step_detail(task: &Task, step_index: usize) -> String {
    let Some(step) = task.steps.get(step_index) else {
        return String::new();
    };
    let toks = crate::text::tokenize(step);
    let used: Vec<String> = task
        .ingredients
        .iter()
        .filter(|i| {
            let head = crate::text::tokenize(&i.name).pop().unwrap_or_default();
            toks.iter().any(|t| crate::text::matches_singular(t, &head))
        })
        .map(|i| match &i.quantity {
            Some(q) => format!("{q} of {}", i.name),
            None => i.name.clone(),
        })
        .collect();
    if used.is_empty() {
        step.clone()
    } else {
        format!("{step} For this step you need {}.", used.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{sample_catalog, IngredientLine};

    fn pesto() -> Task {
        sample_catalog().into_iter().find(|t| t.id == "r-pesto-soup").unwrap()
    }

    /// Brute-force oracle: index of the sense with maximal overlap, first wins.
    fn oracle(senses: &[String], step: &str) -> usize {
        let step: BTreeSet<String> = content_tokens(step).into_iter().collect();
        let scores: Vec<usize> = senses
            .iter()
            .map(|s| {
                content_tokens(s).into_iter().collect::<BTreeSet<_>>().iter().filter(|t| step.contains(*t)).count()
            })
            .collect();
        let max = *scores.iter().max().unwrap();
        scores.iter().position(|s| *s == max).unwrap()
    }

    #[test]
    fn spatula_sense_follows_step() {
        let d = Dictionary::shipped();
        let step = "Flip the pancake with a spatula and lift it onto the plate.";
        let got = define_term("spatula", step, &d).unwrap();
        let senses = d.senses("spatula").unwrap();
        assert_eq!(got, senses[oracle(senses, step)]);
        assert!(got.contains("flip"));
        let step = "Fold the batter gently and scrape the bowl clean.";
        assert_eq!(define_term("spatula", step, &d).unwrap(), senses[oracle(senses, step)]);
        assert_eq!(define_term("quark", step, &d), None);
    }

    #[test]
    fn every_term_matches_oracle() {
        let d = Dictionary::shipped();
        for task in sample_catalog() {
            for step in &task.steps {
                for term in d.terms() {
                    let senses = d.senses(term).unwrap();
                    assert_eq!(define_term(term, step, &d).unwrap(), senses[oracle(senses, step)]);
                }
            }
        }
    }

    #[test]
    fn single_sense_term() {
        let d = Dictionary::shipped();
        assert_eq!(define_term("skillet", "anything", &d), Some(d.senses("skillet").unwrap()[0].as_str()));
        assert_eq!(worst_definition("skillet", "anything", &d), define_term("skillet", "anything", &d));
    }

    #[test]
    fn term_extraction() {
        let d = Dictionary::shipped();
        assert_eq!(extract_definition_term("What is a spatula?", &d).as_deref(), Some("spatula"));
        assert_eq!(extract_definition_term("what does al dente mean", &d).as_deref(), Some("al dente"));
        assert_eq!(extract_definition_term("what is a mandoline", &d).as_deref(), Some("mandoline"));
    }

    #[test]
    fn turkey_for_chicken_breast() {
        let kb = SubstitutionKb::shipped();
        let t = pesto();
        let ing = kb.find_ingredient("I do not have chicken breasts.", Some(&t)).unwrap();
        assert_eq!(ing, "chicken breast");
        assert_eq!(substitute_ingredient(&ing, Some(&t), &kb), Some("turkey"));
        assert_eq!(substitute_ingredient("unobtainium", Some(&t), &kb), None);
    }

    #[test]
    fn substitute_already_in_recipe_skipped() {
        let kb = SubstitutionKb::shipped();
        let mut t = pesto();
        t.ingredients.push(IngredientLine::new("turkey", None));
        // KB scan oracle: first entry the task lacks.
        let want = kb.substitutes("chicken breast").iter().find(|s| !t.has_ingredient(s)).unwrap();
        assert_eq!(substitute_ingredient("chicken breast", Some(&t), &kb), Some(want.as_str()));
        assert_eq!(want, "chicken thigh");
    }

    #[test]
    fn detail_lists_step_ingredients() {
        let t = pesto();
        assert_eq!(
            step_detail(&t, 0),
            "Pour the Chicken Stock in a pan and add Garlic. For this step you need 4 cups of chicken stock, 2 cloves of garlic."
        );
        assert_eq!(step_detail(&t, 99), "");
    }

    #[test]
    fn kb_rejects_self_substitution() {
        let bad = BTreeMap::from([("milk".to_string(), vec!["Milk".to_string()])]);
        assert!(SubstitutionKb::new(bad).is_err());
        assert!(Dictionary::new(BTreeMap::from([("x".to_string(), vec![])])).is_err());
    }
}
