use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{Generator, GeneratorKind, GeneratorRequest, GeneratorResponse, ResponseError};
use crate::catalog::{quality_rerank, CatalogIndex, Domain, IngredientLine, Provenance, Task};
use crate::ranking::{Channel, RankedList};
use crate::scalar::Real;
use crate::text::{fnv1a, PhraseMatcher};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedTags {
    pub ingredients: Vec<String>,
    pub styles: Vec<String>,
}

impl ExtractedTags {
    pub fn is_empty(&self) -> bool {
        self.ingredients.is_empty() && self.styles.is_empty()
    }
}

/// Longest-match scan against the curated ingredient and style sets. Only
/// curated tags come back, deduplicated, in utterance order.
pub fn extract_tags(utterance: &str, ingredients: &BTreeSet<String>, styles: &BTreeSet<String>) -> ExtractedTags {
    let matcher = PhraseMatcher::new(ingredients.iter().chain(styles));
    let mut out = ExtractedTags::default();
    for p in matcher.find_unique(utterance) {
        if ingredients.contains(&p) {
            out.ingredients.push(p);
        } else if styles.contains(&p) {
            out.styles.push(p);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Composition {
    pub catalog: Vec<Task>,
    pub generated: Option<Task>,
    /// Why no generated recipe was added, if one was requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejected: Option<String>,
}

impl Composition {
    /// Catalog hits followed by the generated recipe.
    pub fn all(&self) -> impl Iterator<Item = &Task> {
        self.catalog.iter().chain(self.generated.as_ref())
    }
}

/// Checks a structured recipe reply against the requested tags and turns
/// it into a generated task.
pub fn validate_generated_recipe(resp: &GeneratorResponse, tags: &ExtractedTags) -> Result<Task, String> {
    let title = resp.title.as_deref().map(str::trim).unwrap_or("");
    if title.is_empty() {
        return Err("missing title".into());
    }
    let ingredients: Vec<IngredientLine> = resp
        .ingredients
        .iter()
        .flatten()
        .map(|i| IngredientLine::new(i, None))
        .filter(|i| !i.name.is_empty())
        .collect();
    if ingredients.len() < 2 {
        return Err("fewer than 2 ingredients".into());
    }
    let steps: Vec<String> =
        resp.steps.iter().flatten().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    if steps.len() < 3 {
        return Err("fewer than 3 steps".into());
    }
    let mut id_src = title.to_lowercase();
    for i in &ingredients {
        id_src.push('|');
        id_src.push_str(&i.name);
    }
    let task = Task {
        id: format!("gen-{:016x}", fnv1a(id_src.as_bytes())),
        title: title.to_string(),
        domain: Domain::Recipe,
        description: resp.text.trim().to_string(),
        ingredients,
        steps,
        duration_minutes: 0,
        rating: 0.0,
        rating_count: 0,
        has_video: false,
        video_id: None,
        image_ref: None,
        provenance: Provenance::Generated,
    };
    if let Some(missing) = tags.ingredients.iter().find(|t| !task.has_ingredient(t)) {
        return Err(format!("requested ingredient {missing:?} missing"));
    }
    task.validate().map_err(|e| e.to_string())?;
    Ok(task)
}

/// Catalog recipes using every requested ingredient, ranked by quality,
/// plus at most one generated recipe that passes validation. With only
/// style tags the catalog side falls back to a search on the styles.
pub fn compose_recipe<F: Real>(
    tags: &ExtractedTags,
    generator: Option<&dyn Generator>,
    catalog: &CatalogIndex<F>,
    k: usize,
) -> Result<Composition, ResponseError> {
    if tags.is_empty() {
        return Err(ResponseError::NoTags);
    }
    let ranked = if tags.ingredients.is_empty() {
        catalog.search(&tags.styles.join(" "), k).ranked
    } else {
        let hits = catalog
            .tasks_with_all_ingredients(&tags.ingredients)
            .into_iter()
            .filter(|t| t.domain == Domain::Recipe)
            .map(|t| (t.id.clone(), F::one()));
        quality_rerank(&RankedList::from_scores(Channel::Fused, hits, usize::MAX), catalog, k)
    };
    let hits: Vec<Task> =
        ranked.ids().into_iter().filter_map(|id| crate::catalog::TaskLookup::task(catalog, id)).cloned().collect();

    let mut out = Composition { catalog: hits, generated: None, rejected: None };
    if let Some(g) = generator {
        let req = GeneratorRequest::new(
            GeneratorKind::Recipe,
            format!("{} {}", tags.ingredients.join(", "), tags.styles.join(", ")).trim().to_string(),
        )
        .with("ingredients", tags.ingredients.clone())
        .with("styles", tags.styles.clone());
        match g.generate(&req) {
            Ok(resp) => match validate_generated_recipe(&resp, tags) {
                Ok(t) => out.generated = Some(t),
                Err(e) => out.rejected = Some(e),
            },
            Err(e) => out.rejected = Some(e.to_string()),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{sample_catalog, TagLexicon};
    use crate::response::{FnGenerator, GeneratorError, StubGenerator};

    fn lex() -> TagLexicon {
        TagLexicon::default()
    }

    fn index() -> CatalogIndex<f64> {
        CatalogIndex::build(sample_catalog()).unwrap()
    }

    fn veg_tags() -> ExtractedTags {
        let l = lex();
        extract_tags("I have zucchini and eggplant, something vegetarian", &l.ingredients, &l.styles)
    }

    fn grilled(ings: &'static [&'static str]) -> FnGenerator {
        FnGenerator::new(move |_| {
            Ok(GeneratorResponse {
                text: "Smoky grilled vegetables.".into(),
                title: Some("Grilled Veggies".into()),
                ingredients: Some(ings.iter().map(|s| s.to_string()).collect()),
                steps: Some(vec![
                    "Heat the grill.".into(),
                    "Slice the vegetables.".into(),
                    "Grill until charred.".into(),
                ]),
                question: None,
            })
        })
    }

    #[test]
    fn zucchini_eggplant_vegetarian() {
        let t = veg_tags();
        assert_eq!(t.ingredients, vec!["zucchini", "eggplant"]);
        assert_eq!(t.styles, vec!["vegetarian"]);
    }

    #[test]
    fn closed_vocabulary() {
        let l = lex();
        assert!(extract_tags("", &l.ingredients, &l.styles).is_empty());
        assert!(extract_tags("dragonfruit", &l.ingredients, &l.styles).is_empty());
        let t = extract_tags("tomatoes, more tomatoes and spicy noodles", &l.ingredients, &l.styles);
        assert_eq!(t.ingredients[0], "tomato");
        assert_eq!(t.ingredients.iter().filter(|i| *i == "tomato").count(), 1);
        assert_eq!(t.styles, vec!["spicy"]);
    }

    #[test]
    fn generated_recipe_appended() {
        let idx = index();
        let c = compose_recipe(&veg_tags(), Some(&grilled(&["zucchini", "eggplant", "olive oil"])), &idx, 5).unwrap();
        let g = c.generated.as_ref().unwrap();
        assert_eq!(g.title, "Grilled Veggies");
        assert_eq!(g.provenance, Provenance::Generated);
        assert!(g.id.starts_with("gen-"));
        assert_eq!(c.all().last().unwrap().id, g.id);
        assert!(c.catalog.iter().any(|t| t.id == "r-grilled-veggies"));
        assert!(c.catalog.iter().all(|t| t.has_ingredient("zucchini") && t.has_ingredient("eggplant")));
    }

    #[test]
    fn generated_recipe_missing_tag_rejected() {
        let idx = index();
        let c = compose_recipe(&veg_tags(), Some(&grilled(&["zucchini", "olive oil"])), &idx, 5).unwrap();
        assert!(c.generated.is_none());
        assert!(c.rejected.unwrap().contains("eggplant"));
        assert!(!c.catalog.is_empty());
    }

    #[test]
    fn no_generator_or_failure() {
        let idx = index();
        let c = compose_recipe(&veg_tags(), None, &idx, 5).unwrap();
        assert!(c.generated.is_none() && c.rejected.is_none());
        let down = FnGenerator::new(|_| Err(GeneratorError::Unavailable("down".into())));
        let d = compose_recipe(&veg_tags(), Some(&down), &idx, 5).unwrap();
        assert_eq!(c.catalog, d.catalog);
        assert!(d.generated.is_none());
        assert!(matches!(compose_recipe(&ExtractedTags::default(), None, &idx, 5), Err(ResponseError::NoTags)));
    }

    #[test]
    fn stub_recipe_passes() {
        let c = compose_recipe(&veg_tags(), Some(&StubGenerator), &index(), 5).unwrap();
        assert!(c.generated.is_some(), "{:?}", c.rejected);
    }

    #[test]
    fn structural_checks() {
        let tags = ExtractedTags { ingredients: vec!["zucchini".into()], styles: vec![] };
        let ok = GeneratorResponse {
            text: String::new(),
            title: Some("T".into()),
            ingredients: Some(vec!["zucchini".into(), "salt".into()]),
            steps: Some(vec!["a".into(), "b".into(), "c".into()]),
            question: None,
        };
        assert!(validate_generated_recipe(&ok, &tags).is_ok());
        let mut r = ok.clone();
        r.title = Some(" ".into());
        assert!(validate_generated_recipe(&r, &tags).is_err());
        let mut r = ok.clone();
        r.steps = Some(vec!["a".into(), "b".into()]);
        assert!(validate_generated_recipe(&r, &tags).is_err());
        let mut r = ok;
        r.ingredients = Some(vec!["zucchini".into()]);
        assert!(validate_generated_recipe(&r, &tags).is_err());
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use crate::catalog::TagLexicon;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn tags_are_curated(words in prop::collection::vec("[a-z]{1,9}", 0..12), picks in prop::collection::vec(0usize..400, 0..4)) {
            let l = TagLexicon::default();
            let vocab: Vec<&String> = l.ingredients.iter().chain(&l.styles).collect();
            let mut parts = words;
            for p in picks {
                parts.push(vocab[p % vocab.len()].clone());
            }
            let t = extract_tags(&parts.join(" "), &l.ingredients, &l.styles);
            prop_assert!(t.ingredients.iter().all(|i| l.ingredients.contains(i)));
            prop_assert!(t.styles.iter().all(|s| l.styles.contains(s)));
        }
    }
}
