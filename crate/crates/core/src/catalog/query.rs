use std::collections::BTreeSet;

use serde::Deserialize;

use crate::text::{is_stopword, longest_matches, tokenize};

static TAGS_JSON: &str = include_str!("../../assets/tags.json");

/// Curated tag vocabulary: ingredients and cooking styles for creative
/// cooking, plus dish and DIY phrases that should survive query-term
/// extraction as one unit.
#[derive(Debug, Clone, Deserialize)]
pub struct TagLexicon {
    pub ingredients: BTreeSet<String>,
    pub styles: BTreeSet<String>,
    #[serde(default)]
    pub dishes: BTreeSet<String>,
    #[serde(default)]
    pub diy: BTreeSet<String>,
}

impl Default for TagLexicon {
    fn default() -> Self {
        serde_json::from_str(TAGS_JSON).expect("shipped tag lexicon is valid JSON")
    }
}

impl TagLexicon {
    /// Multiword phrases (two or more tokens) across all tag groups.
    pub fn phrases(&self) -> BTreeSet<String> {
        self.ingredients
            .iter()
            .chain(&self.styles)
            .chain(&self.dishes)
            .chain(&self.diy)
            .filter(|p| p.contains(' '))
            .cloned()
            .collect()
    }

    pub fn max_phrase_len(&self) -> usize {
        self.ingredients
            .iter()
            .chain(&self.styles)
            .chain(&self.dishes)
            .chain(&self.diy)
            .map(|p| p.split(' ').count())
            .max()
            .unwrap_or(1)
    }
}

/// Lowercased content terms of `utterance`: multiword lexicon phrases are
/// kept whole, remaining tokens are kept unless they are stopwords.
/// Duplicates are dropped, first-occurrence order kept.
pub fn extract_query_terms(utterance: &str, lexicon: &TagLexicon) -> Vec<String> {
    let tokens = tokenize(utterance);
    let phrases = lexicon.phrases();
    let matches = longest_matches(&tokens, &phrases, lexicon.max_phrase_len());
    let mut out: Vec<String> = Vec::new();
    let push = |s: String, out: &mut Vec<String>| {
        if !out.contains(&s) {
            out.push(s);
        }
    };
    let mut i = 0;
    let mut m = matches.into_iter().peekable();
    while i < tokens.len() {
        if let Some(&(start, len, phrase)) = m.peek() {
            if start == i {
                push(phrase.to_string(), &mut out);
                i += len;
                m.next();
                continue;
            }
        }
        if !is_stopword(&tokens[i]) {
            push(tokens[i].clone(), &mut out);
        }
        i += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_utterance() {
        assert!(extract_query_terms("", &TagLexicon::default()).is_empty());
    }

    #[test]
    fn lexicon_phrase_kept_whole() {
        let lex = TagLexicon::default();
        assert!(lex.dishes.contains("apple crumble"));
        assert_eq!(extract_query_terms("i would like to make an apple crumble please", &lex), vec!["apple crumble"]);
    }

    #[test]
    fn without_phrase_falls_back_to_tokens() {
        let mut lex = TagLexicon::default();
        lex.dishes.remove("apple crumble");
        assert_eq!(extract_query_terms("i would like to make an apple crumble please", &lex), vec!["apple", "crumble"]);
    }

    #[test]
    fn tire_query() {
        let lex = TagLexicon::default();
        assert_eq!(extract_query_terms("how to change a tire", &lex), vec!["change", "tire"]);
        assert_eq!(extract_query_terms("fix my flat tire", &lex), vec!["fix", "flat tire"]);
    }
}
