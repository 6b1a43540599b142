use std::path::Path;

use super::{CuriosityStore, Dictionary, FoodLexicon, PassageStore, ResponseError, SubstitutionKb, TemplateBank};
use crate::catalog::TagLexicon;

/// Every read-only knowledge source the responders draw from.
#[derive(Debug, Clone)]
pub struct ResponseKit {
    pub templates: TemplateBank,
    pub dictionary: Dictionary,
    pub substitutions: SubstitutionKb,
    pub curiosities: CuriosityStore,
    pub passages: PassageStore,
    pub tags: TagLexicon,
    pub food: FoodLexicon,
    /// Canned unsafe-style answers, used only as rejected preference examples.
    pub sensitive_negatives: Vec<String>,
}

impl Default for ResponseKit {
    fn default() -> Self {
        let tags = TagLexicon::default();
        Self {
            templates: TemplateBank::default(),
            dictionary: Dictionary::shipped(),
            substitutions: SubstitutionKb::shipped(),
            curiosities: CuriosityStore::shipped(),
            passages: PassageStore::shipped(),
            food: FoodLexicon::from_tags(&tags),
            tags,
            sensitive_negatives: serde_json::from_str(include_str!("../../assets/sensitive_negatives.json"))
                .expect("shipped fixture parses"),
        }
    }
}

impl ResponseKit {
    /// Shipped kit with any files present in `dir` overriding their defaults:
    /// templates.json, dictionary.json, substitutions.json, curiosities.json,
    /// passages.json.
    pub fn from_dir(dir: &Path) -> Result<Self, ResponseError> {
        let mut kit = Self::default();
        let f = |name: &str| Some(dir.join(name)).filter(|p| p.is_file());
        if let Some(p) = f("templates.json") {
            kit.templates = TemplateBank::load(&p)?;
        }
        if let Some(p) = f("dictionary.json") {
            kit.dictionary = Dictionary::load(&p)?;
        }
        if let Some(p) = f("substitutions.json") {
            kit.substitutions = SubstitutionKb::load(&p)?;
        }
        if let Some(p) = f("curiosities.json") {
            kit.curiosities = CuriosityStore::load(&p)?;
        }
        if let Some(p) = f("passages.json") {
            kit.passages = PassageStore::load(&p)?;
        }
        Ok(kit)
    }
}
