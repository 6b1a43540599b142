//! Consonant-skeleton phonetic codes in the Metaphone family.
//!
//! Voiced and unvoiced pairs are merged (B/P, D/T, G/K, V/F, Z/S, J/CH),
//! vowels are dropped except a leading one (coded `A`), `W`/`Y` survive only
//! word-initially and adjacent duplicates collapse. Every output letter
//! encodes to itself, so the encoder is idempotent on its own output.

use std::collections::BTreeMap;

use super::Intent;

fn is_vowel(c: char) -> bool {
    matches!(c, 'A' | 'E' | 'I' | 'O' | 'U')
}

/// Code for a single word; empty if the word has no codable letters.
pub fn encode_word(word: &str) -> String {
    let chars: Vec<char> = word.chars().filter(char::is_ascii_alphabetic).map(|c| c.to_ascii_uppercase()).collect();
    let at = |i: usize| chars.get(i).copied();
    let mut out: Vec<char> = Vec::with_capacity(chars.len());
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let next = at(i + 1);
        match c {
            'A' | 'E' | 'I' | 'O' | 'U' => {
                if i == 0 {
                    out.push('A');
                }
            }
            'B' => out.push('P'),
            'C' => match next {
                Some('H') => {
                    out.push('J');
                    i += 1;
                }
                Some('E' | 'I' | 'Y') => out.push('S'),
                Some('K') => {
                    out.push('K');
                    i += 1;
                }
                _ => out.push('K'),
            },
            'D' => out.push('T'),
            'G' => match next {
                Some('H') => {
                    if at(i + 2).is_some_and(is_vowel) {
                        out.push('K');
                    }
                    i += 1;
                }
                Some('E' | 'I' | 'Y') => out.push('J'),
                _ => out.push('K'),
            },
            'H' => {}
            'P' => {
                if next == Some('H') {
                    out.push('F');
                    i += 1;
                } else {
                    out.push('P');
                }
            }
            'Q' => out.push('K'),
            'S' | 'T' => {
                out.push(c);
                if next == Some('H') {
                    i += 1;
                }
            }
            'V' => out.push('F'),
            'W' | 'Y' => {
                if i == 0 {
                    out.push(c);
                }
            }
            'X' => {
                if i == 0 {
                    out.push('S');
                } else {
                    out.push('K');
                    out.push('S');
                }
            }
            'Z' => out.push('S'),
            other => out.push(other),
        }
        i += 1;
    }
    out.dedup();
    out.into_iter().collect()
}

/// Per-word codes joined by single spaces. Words without a code are skipped.
pub fn phonetic_encode(text: &str) -> String {
    text.split(|c: char| !c.is_alphanumeric() && c != '\'')
        .map(encode_word)
        .filter(|c| !c.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Lexicon from phonetic code sequences to intents.
#[derive(Debug, Clone, Default)]
pub struct PhoneticLexicon {
    entries: BTreeMap<String, (Intent, String)>,
}

impl PhoneticLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `phrase`. Returns false (and keeps the existing entry) if another
    /// phrase already owns the same code, or if the phrase has no code.
    pub fn insert(&mut self, phrase: &str, intent: Intent) -> bool {
        let code = phonetic_encode(phrase);
        if code.is_empty() || self.entries.contains_key(&code) {
            return false;
        }
        self.entries.insert(code, (intent, phrase.to_lowercase()));
        true
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, code: &str) -> Option<&(Intent, String)> {
        self.entries.get(code)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &(Intent, String))> {
        self.entries.iter()
    }
}

/// The lexicon intent whose code sequence equals the utterance's.
pub fn phonetic_match(utterance: &str, lexicon: &PhoneticLexicon) -> Option<Intent> {
    let code = phonetic_encode(utterance);
    if code.is_empty() {
        return None;
    }
    lexicon.get(&code).map(|(i, _)| *i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_input() {
        assert_eq!(phonetic_encode(""), "");
        assert_eq!(phonetic_encode("  ?! "), "");
    }

    #[test]
    fn frozen_codes() {
        // Codes computed by hand from the rules above.
        assert_eq!(phonetic_encode("stop"), "STP");
        assert_eq!(phonetic_encode("stob"), "STP");
        assert_eq!(phonetic_encode("next"), "NKST");
        assert_eq!(phonetic_encode("nekst"), "NKST");
        assert_eq!(phonetic_encode("next step"), "NKST STP");
        assert_eq!(phonetic_encode("previous step"), "PRFS STP");
        assert_eq!(phonetic_encode("repeat that"), "RPT T");
        assert_eq!(phonetic_encode("yes"), "YS");
        assert_eq!(phonetic_encode("cheese"), "JS");
        assert_eq!(phonetic_encode("knight"), "KNT");
        assert_eq!(phonetic_encode("ghost"), "KST");
        assert_eq!(phonetic_encode("phone"), "FN");
    }

    #[test]
    fn matching() {
        let mut lex = PhoneticLexicon::new();
        assert!(lex.insert("next step", Intent::NextStep));
        assert!(lex.insert("previous step", Intent::PreviousStep));
        assert!(!lex.insert("nekst steb", Intent::Stop), "code collision must be rejected");
        assert_eq!(phonetic_match("nekst steb", &lex), Some(Intent::NextStep));
        assert_eq!(phonetic_match("Previous Step.", &lex), Some(Intent::PreviousStep));
        assert_eq!(phonetic_match("quantum entanglement", &lex), None);
        assert_eq!(phonetic_match("", &lex), None);
    }

    proptest! {
        #[test]
        fn idempotent_on_output(s in "[a-zA-Z ]{0,40}") {
            let once = phonetic_encode(&s);
            prop_assert_eq!(phonetic_encode(&once), once.clone());
        }

        #[test]
        fn case_insensitive(s in "[a-zA-Z ]{0,40}") {
            prop_assert_eq!(phonetic_encode(&s.to_uppercase()), phonetic_encode(&s.to_lowercase()));
        }
    }
}
