//! Deterministic synthetic catalogs for tests, demos and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Domain, IngredientLine, Provenance, Task};

const ADJECTIVES: &[&str] = &[
    "rustic",
    "smoky",
    "zesty",
    "golden",
    "creamy",
    "crispy",
    "tangy",
    "hearty",
    "velvety",
    "fiery",
    "silky",
    "toasted",
    "herby",
    "citrusy",
    "buttery",
    "peppery",
    "garlicky",
    "sticky",
    "nutty",
    "minty",
    "balmy",
    "charred",
    "glazed",
    "whipped",
    "braised",
    "pickled",
    "spiced",
    "honeyed",
    "lemony",
    "rosy",
    "sunny",
    "midnight",
    "harvest",
    "alpine",
    "coastal",
    "orchard",
    "meadow",
    "village",
    "island",
    "prairie",
    "bistro",
    "farmhouse",
    "lazy",
    "weekday",
    "festive",
    "grandma's",
    "classic",
    "rapid",
    "tiny",
    "giant",
    "twisted",
    "humble",
    "royal",
    "tropical",
    "northern",
    "southern",
    "autumn",
    "spring",
    "winter",
    "summer",
];

const INGREDIENTS: &[&str] = &[
    "apple", "carrot", "chicken", "lentil", "mushroom", "salmon", "tomato", "zucchini", "eggplant", "potato",
    "spinach", "pumpkin", "shrimp", "tofu", "beef", "pear", "corn", "rice", "quinoa", "cabbage",
];

const DISHES: &[&str] = &["soup", "salad", "stew", "pie", "curry", "tart", "risotto", "bake", "skillet", "bowl"];

const VERBS: &[&str] = &["chop", "stir", "simmer", "whisk", "season", "bake", "fold", "drain", "slice", "serve"];

/// A minimal valid recipe with one step.
pub fn task(id: &str, title: &str) -> Task {
    Task {
        id: id.to_string(),
        title: title.to_string(),
        domain: Domain::Recipe,
        description: String::new(),
        ingredients: Vec::new(),
        steps: vec![format!("Make the {title}.")],
        duration_minutes: 10,
        rating: 0.0,
        rating_count: 0,
        has_video: false,
        video_id: None,
        image_ref: None,
        provenance: Provenance::Catalog,
    }
}

/// `n` recipes with distinct titles `"<Adjective> <Ingredient> <Dish>"`, each
/// title carrying at least one token (the adjective) unique to it while
/// `n <= 60`. Quality attributes, step counts and ingredients vary with
/// `seed`.
pub fn synthetic_catalog(n: usize, seed: u64) -> Vec<Task> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let adj = ADJECTIVES[i % ADJECTIVES.len()];
            let ing = INGREDIENTS[rng.gen_range(0..INGREDIENTS.len())];
            let dish = DISHES[rng.gen_range(0..DISHES.len())];
            let title = format!(
                "{} {} {}",
                crate::text::capitalize(adj),
                crate::text::capitalize(ing),
                crate::text::capitalize(dish)
            );
            let n_steps = rng.gen_range(3..=10);
            let steps = (0..n_steps)
                .map(|s| {
                    let verb = VERBS[rng.gen_range(0..VERBS.len())];
                    format!(
                        "{} the {} for the {} {} gently. Keep going until step {} is finished.",
                        crate::text::capitalize(verb),
                        ing,
                        adj,
                        dish,
                        s + 1
                    )
                })
                .collect();
            let second = INGREDIENTS[rng.gen_range(0..INGREDIENTS.len())];
            let mut ingredients = vec![IngredientLine::new(ing, Some("2 cups"))];
            if second != ing {
                ingredients.push(IngredientLine::new(second, Some("1 cup")));
            }
            ingredients.push(IngredientLine::new("salt", None));
            let has_video = rng.gen_bool(0.4);
            let rating_count: u32 = if rng.gen_bool(0.3) { 0 } else { rng.gen_range(1..250) };
            let rating = if rating_count == 0 { 0.0 } else { f64::from(rng.gen_range(20..=50u32)) / 10.0 };
            Task {
                id: format!("syn-{i:03}"),
                title,
                domain: Domain::Recipe,
                description: format!("A {adj} take on {ing} {dish}."),
                ingredients,
                steps,
                duration_minutes: rng.gen_range(10..120),
                rating,
                rating_count,
                has_video,
                video_id: has_video.then(|| format!("vid-{i:03}")),
                image_ref: None,
                provenance: Provenance::Catalog,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_tasks_are_valid_and_distinct() {
        let tasks = synthetic_catalog(50, 1);
        let mut titles: Vec<_> = tasks.iter().map(|t| t.title.clone()).collect();
        titles.sort();
        titles.dedup();
        assert_eq!(titles.len(), 50);
        for t in &tasks {
            t.validate().unwrap();
        }
        assert_eq!(synthetic_catalog(50, 1), tasks);
    }
}
