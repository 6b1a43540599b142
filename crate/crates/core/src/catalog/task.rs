use serde::{Deserialize, Serialize};

use super::CatalogError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Domain {
    Recipe,
    #[serde(rename = "DIY")]
    Diy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum Provenance {
    #[default]
    Catalog,
    Generated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngredientLine {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantity: Option<String>,
}

impl IngredientLine {
    /// Normalises the name to trimmed lowercase.
    pub fn new(name: &str, quantity: Option<&str>) -> Self {
        Self { name: name.trim().to_lowercase(), quantity: quantity.map(str::to_string) }
    }
}

/// A recipe or DIY task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: String,
    pub title: String,
    pub domain: Domain,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub ingredients: Vec<IngredientLine>,
    pub steps: Vec<String>,
    #[serde(default)]
    pub duration_minutes: u32,
    #[serde(default)]
    pub rating: f64,
    #[serde(default)]
    pub rating_count: u32,
    #[serde(default)]
    pub has_video: bool,
    #[serde(default)]
    pub video_id: Option<String>,
    #[serde(default)]
    pub image_ref: Option<String>,
    #[serde(default)]
    pub provenance: Provenance,
}

impl Task {
    pub fn validate(&self) -> Result<(), CatalogError> {
        let bad = |reason: &str| Err(CatalogError::InvalidTask { id: self.id.clone(), reason: reason.to_string() });
        if self.id.trim().is_empty() {
            return bad("empty id");
        }
        if self.steps.is_empty() {
            return bad("steps must be non-empty");
        }
        if !(0.0..=5.0).contains(&self.rating) {
            return bad("rating outside [0,5]");
        }
        if self.rating_count == 0 && self.rating != 0.0 {
            return bad("rating_count=0 requires rating=0");
        }
        if self.has_video != self.video_id.is_some() {
            return bad("has_video must match video_id presence");
        }
        for ing in &self.ingredients {
            if ing.name.is_empty() || ing.name.trim() != ing.name || ing.name.to_lowercase() != ing.name {
                return bad("ingredient names must be non-empty, trimmed and lowercase");
            }
        }
        if self.domain == Domain::Diy && !self.ingredients.is_empty() {
            return bad("ingredients are only allowed on recipes");
        }
        Ok(())
    }

    pub fn step_count(&self) -> usize {
        self.steps.len()
    }

    pub fn total_step_words(&self) -> usize {
        self.steps.iter().map(|s| crate::text::word_count(s)).sum()
    }

    pub fn ingredient_names(&self) -> impl Iterator<Item = &str> {
        self.ingredients.iter().map(|i| i.name.as_str())
    }

    /// True if some ingredient line mentions `name` as a whole-word phrase
    /// (plural forms accepted).
    pub fn has_ingredient(&self, name: &str) -> bool {
        let want = crate::text::tokenize(name);
        if want.is_empty() {
            return false;
        }
        self.ingredients.iter().any(|ing| {
            let toks = crate::text::tokenize(&ing.name);
            toks.windows(want.len()).any(|w| {
                w.iter()
                    .zip(&want)
                    .all(|(t, s)| crate::text::matches_singular(t, s) || crate::text::matches_singular(s, t))
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sample() -> Task {
        Task {
            id: "t1".into(),
            title: "Apple Crumble".into(),
            domain: Domain::Recipe,
            description: String::new(),
            ingredients: vec![IngredientLine::new("apple", Some("4")), IngredientLine::new("Dark Brown Sugar ", None)],
            steps: vec!["Peel the apples.".into()],
            duration_minutes: 45,
            rating: 0.0,
            rating_count: 0,
            has_video: false,
            video_id: None,
            image_ref: None,
            provenance: Provenance::Catalog,
        }
    }

    #[test]
    fn invariants() {
        let mut t = sample();
        assert!(t.validate().is_ok());
        t.rating = 4.0;
        assert!(t.validate().is_err());
        t.rating_count = 3;
        assert!(t.validate().is_ok());
        t.has_video = true;
        assert!(t.validate().is_err());
        t.video_id = Some("v".into());
        assert!(t.validate().is_ok());
        t.steps.clear();
        assert!(t.validate().is_err());
    }

    #[test]
    fn ingredient_lookup_handles_plurals() {
        let t = sample();
        assert!(t.has_ingredient("apples"));
        assert!(t.has_ingredient("brown sugar"));
        assert!(!t.has_ingredient("chocolate"));
    }

    #[test]
    fn serde_field_names() {
        let json = serde_json::to_value(sample()).unwrap();
        for f in [
            "id",
            "title",
            "domain",
            "description",
            "ingredients",
            "steps",
            "duration_minutes",
            "rating",
            "rating_count",
            "has_video",
            "video_id",
            "image_ref",
            "provenance",
        ] {
            assert!(json.get(f).is_some(), "{f}");
        }
        assert_eq!(json["domain"], "Recipe");
        let diy: Domain = serde_json::from_str("\"DIY\"").unwrap();
        assert_eq!(diy, Domain::Diy);
    }
}
