use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use rand::Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{ResponseError, ToneOfVoice};
use crate::dialogue::{RecentRing, ResponseCase};

/// Response templates keyed by (case, tone), with `{placeholder}` slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TemplateBank {
    entries: BTreeMap<ResponseCase, BTreeMap<ToneOfVoice, Vec<String>>>,
}

static SHIPPED: &str = include_str!("../../assets/templates.json");

fn placeholder_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{([a-z_]+)\}").expect("valid regex"))
}

impl Default for TemplateBank {
    fn default() -> Self {
        serde_json::from_str(SHIPPED).expect("shipped templates are valid")
    }
}

impl TemplateBank {
    pub fn new() -> Self {
        Self { entries: BTreeMap::new() }
    }

    pub fn load(path: &Path) -> Result<Self, ResponseError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn insert(&mut self, case: ResponseCase, tone: ToneOfVoice, templates: Vec<String>) {
        self.entries.entry(case).or_default().insert(tone, templates);
    }

    pub fn templates(&self, case: ResponseCase, tone: ToneOfVoice) -> &[String] {
        self.entries.get(&case).and_then(|m| m.get(&tone)).map(Vec::as_slice).unwrap_or(&[])
    }

    fn id(case: ResponseCase, tone: ToneOfVoice, i: usize) -> String {
        format!("{}:{}:{i}", case.name(), tone.phrase())
    }

    /// Samples a template uniformly among those absent from `ring`, fills
    /// its placeholders from `context` and records it in the ring. When the
    /// ring excludes every template it is cleared first; a single-template
    /// entry is always used.
    pub fn render<R: Rng + ?Sized>(
        &self,
        case: ResponseCase,
        tone: ToneOfVoice,
        context: &[(&str, &str)],
        ring: &mut RecentRing,
        rng: &mut R,
    ) -> Result<String, ResponseError> {
        let list = self.templates(case, tone);
        if list.is_empty() {
            return Err(ResponseError::UnknownCase { case, tone });
        }
        let fresh: Vec<usize> = (0..list.len()).filter(|i| !ring.contains(&Self::id(case, tone, *i))).collect();
        let pool: Vec<usize> = if fresh.is_empty() {
            if list.len() > 1 {
                ring.clear();
            }
            (0..list.len()).collect()
        } else {
            fresh
        };
        let i = pool[rng.gen_range(0..pool.len())];
        let text = fill(&list[i], context).map_err(|name| ResponseError::MissingPlaceholder { case, name })?;
        ring.push(Self::id(case, tone, i));
        Ok(text)
    }

    /// Checks that every (case, tone) has between 1 and `max` templates.
    pub fn check_coverage(&self, max: usize) -> Result<(), String> {
        for case in ResponseCase::ALL {
            for tone in ToneOfVoice::ALL {
                let n = self.templates(case, tone).len();
                if n == 0 || n > max {
                    return Err(format!("{}/{}: {n} templates", case.name(), tone.phrase()));
                }
            }
        }
        Ok(())
    }
}

/// Fills `{name}` slots; returns the first missing name on failure.
pub fn fill(template: &str, context: &[(&str, &str)]) -> Result<String, String> {
    let mut missing = None;
    let out = placeholder_re().replace_all(template, |c: &regex::Captures| {
        let name = &c[1];
        match context.iter().find(|(k, _)| *k == name) {
            Some((_, v)) => v.to_string(),
            None => {
                missing.get_or_insert_with(|| name.to_string());
                String::new()
            }
        }
    });
    match missing {
        Some(m) => Err(m),
        None => Ok(out.into_owned()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bank_of(n: usize) -> TemplateBank {
        let mut b = TemplateBank::new();
        b.insert(ResponseCase::ChitChat, ToneOfVoice::Neutral, (0..n).map(|i| format!("t{i}")).collect());
        b
    }

    #[test]
    fn sixth_template_forced() {
        let b = bank_of(6);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let mut ring = RecentRing::default();
            for i in 0..5 {
                ring.push(format!("CHIT_CHAT:neutral:{i}"));
            }
            assert_eq!(b.render(ResponseCase::ChitChat, ToneOfVoice::Neutral, &[], &mut ring, &mut rng).unwrap(), "t5");
        }
    }

    #[test]
    fn single_template_always_used() {
        let b = bank_of(1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut ring = RecentRing::default();
        for _ in 0..10 {
            assert_eq!(b.render(ResponseCase::ChitChat, ToneOfVoice::Neutral, &[], &mut ring, &mut rng).unwrap(), "t0");
        }
    }

    #[test]
    fn missing_placeholder() {
        let mut b = TemplateBank::new();
        b.insert(ResponseCase::Substitution, ToneOfVoice::Neutral, vec!["use {ingredient}".into()]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = b.render(ResponseCase::Substitution, ToneOfVoice::Neutral, &[], &mut RecentRing::default(), &mut rng);
        assert!(matches!(r, Err(ResponseError::MissingPlaceholder { name, .. }) if name == "ingredient"));
        let ok = b.render(
            ResponseCase::Substitution,
            ToneOfVoice::Neutral,
            &[("ingredient", "{x}")],
            &mut RecentRing::default(),
            &mut rng,
        );
        assert_eq!(ok.unwrap(), "use {x}");
    }

    #[test]
    fn shipped_bank_covers_all_cases() {
        TemplateBank::default().check_coverage(5).unwrap();
    }

    #[test]
    fn no_recent_repeat_statistics() {
        let b = bank_of(7);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut ring = RecentRing::default();
        let mut last: Vec<String> = Vec::new();
        for _ in 0..10_000 {
            let t = b.render(ResponseCase::ChitChat, ToneOfVoice::Neutral, &[], &mut ring, &mut rng).unwrap();
            assert!(!last.contains(&t), "{t} repeated within 5 renders");
            last.push(t);
            if last.len() > 5 {
                last.remove(0);
            }
        }
    }
}
