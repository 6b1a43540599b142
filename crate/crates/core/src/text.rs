//! Tokenisation helpers shared by search, knowledge lookup and corpus generation.

use std::collections::BTreeSet;
use std::sync::OnceLock;

static STOPWORDS_RAW: &str = include_str!("../assets/stopwords.txt");

fn stopword_set() -> &'static BTreeSet<&'static str> {
    static SET: OnceLock<BTreeSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| STOPWORDS_RAW.lines().map(str::trim).filter(|l| !l.is_empty()).collect())
}

pub fn is_stopword(token: &str) -> bool {
    stopword_set().contains(token)
}

/// Lowercased alphanumeric runs. Apostrophes inside a word are kept so that
/// contractions stay a single token.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() || (ch == '\'' && !cur.is_empty()) || (ch == '’' && !cur.is_empty()) {
            if ch == '’' {
                cur.push('\'');
            } else {
                cur.extend(ch.to_lowercase());
            }
        } else if !cur.is_empty() {
            push_token(&mut out, &mut cur);
        }
    }
    if !cur.is_empty() {
        push_token(&mut out, &mut cur);
    }
    out
}

fn push_token(out: &mut Vec<String>, cur: &mut String) {
    let t = cur.trim_end_matches('\'');
    if !t.is_empty() {
        out.push(t.to_string());
    }
    cur.clear();
}

/// Tokens with stopwords removed.
pub fn content_tokens(text: &str) -> Vec<String> {
    tokenize(text).into_iter().filter(|t| !is_stopword(t)).collect()
}

/// Light suffix stripper used by the tf-idf indices so that "mixes",
/// "mixed" and "mixing" share a term with "mix".
pub fn stem(token: &str) -> String {
    let t = token;
    let n = t.chars().count();
    if !t.is_ascii() {
        return t.to_string();
    }
    if n > 5 && t.ends_with("ing") {
        return undouble(&t[..t.len() - 3]);
    }
    if n > 4 && t.ends_with("ies") {
        return format!("{}y", &t[..t.len() - 3]);
    }
    if n > 3 && t.ends_with("es") {
        let base = &t[..t.len() - 2];
        if base.ends_with('s')
            || base.ends_with('x')
            || base.ends_with('z')
            || base.ends_with("ch")
            || base.ends_with("sh")
            || base.ends_with('o')
        {
            return base.to_string();
        }
    }
    if n > 4 && t.ends_with("ed") {
        return undouble(&t[..t.len() - 2]);
    }
    if n > 3 && t.ends_with('s') && !t.ends_with("ss") && !t.ends_with("us") {
        return t[..t.len() - 1].to_string();
    }
    t.to_string()
}

fn undouble(base: &str) -> String {
    let b = base.as_bytes();
    if b.len() >= 3 && b[b.len() - 1] == b[b.len() - 2] && !matches!(b[b.len() - 1], b'l' | b's' | b'z') {
        base[..base.len() - 1].to_string()
    } else {
        base.to_string()
    }
}

/// Stemmed content tokens: the term space of the lexical indices.
pub fn index_terms(text: &str) -> Vec<String> {
    content_tokens(text).iter().map(|t| stem(t)).collect()
}

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Splits on sentence-final punctuation, keeping the punctuation.
pub fn sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let chars: Vec<char> = text.chars().collect();
    for (i, &ch) in chars.iter().enumerate() {
        cur.push(ch);
        if matches!(ch, '.' | '!' | '?') {
            let next = chars.get(i + 1);
            if next.is_none_or(|c| c.is_whitespace()) {
                let s = cur.trim();
                if !s.is_empty() {
                    out.push(s.to_string());
                }
                cur.clear();
            }
        }
    }
    let s = cur.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
    out
}

/// Longest-match scan of `tokens` against a phrase vocabulary. Returns
/// `(start, len, phrase)` for each match, left to right, non-overlapping.
pub fn longest_matches<'a>(
    tokens: &[String],
    phrases: &'a BTreeSet<String>,
    max_len: usize,
) -> Vec<(usize, usize, &'a str)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let mut hit = None;
        let upper = max_len.min(tokens.len() - i);
        for len in (1..=upper).rev() {
            let cand = tokens[i..i + len].join(" ");
            if let Some(p) = phrases.get(&cand) {
                hit = Some((len, p.as_str()));
                break;
            }
        }
        match hit {
            Some((len, p)) => {
                out.push((i, len, p));
                i += len;
            }
            None => i += 1,
        }
    }
    out
}

/// Simple plural forms used when matching singular lexicon entries.
pub fn matches_singular(token: &str, singular: &str) -> bool {
    if token == singular {
        return true;
    }
    if let Some(base) = token.strip_suffix("ies") {
        if singular.strip_suffix('y') == Some(base) {
            return true;
        }
    }
    token.strip_suffix("es") == Some(singular) || token.strip_suffix('s') == Some(singular)
}

/// Longest-match phrase finder over a fixed vocabulary that tolerates
/// simple plurals ("lentils" finds "lentil", "chicken breasts" finds
/// "chicken breast").
#[derive(Debug, Clone, Default)]
pub struct PhraseMatcher {
    phrases: BTreeSet<String>,
    words: BTreeSet<String>,
    max_len: usize,
}

impl PhraseMatcher {
    pub fn new<I, S>(phrases: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let phrases: BTreeSet<String> =
            phrases.into_iter().map(|p| tokenize(p.as_ref()).join(" ")).filter(|p| !p.is_empty()).collect();
        let words = phrases.iter().flat_map(|p| p.split(' ').map(str::to_string)).collect();
        let max_len = phrases.iter().map(|p| p.split(' ').count()).max().unwrap_or(0);
        Self { phrases, words, max_len }
    }

    pub fn phrases(&self) -> &BTreeSet<String> {
        &self.phrases
    }

    pub fn contains(&self, phrase: &str) -> bool {
        self.phrases.contains(phrase)
    }

    /// Vocabulary form of `token`: itself, or the singular it is a plural of.
    fn normalize(&self, token: String) -> String {
        if self.words.contains(&token) {
            return token;
        }
        let cands = [
            token.strip_suffix("ies").map(|b| format!("{b}y")),
            token.strip_suffix("es").map(str::to_string),
            token.strip_suffix('s').map(str::to_string),
        ];
        cands.into_iter().flatten().find(|c| self.words.contains(c)).unwrap_or(token)
    }

    /// Vocabulary phrases found in `text`, left to right, non-overlapping.
    pub fn find(&self, text: &str) -> Vec<&str> {
        let tokens: Vec<String> = tokenize(text).into_iter().map(|t| self.normalize(t)).collect();
        longest_matches(&tokens, &self.phrases, self.max_len).into_iter().map(|(_, _, p)| p).collect()
    }

    /// Like [`find`](Self::find) with duplicates removed, first occurrence kept.
    pub fn find_unique(&self, text: &str) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for p in self.find(text) {
            if !out.iter().any(|o| o == p) {
                out.push(p.to_string());
            }
        }
        out
    }
}

/// Capitalises the first character.
pub fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().collect::<String>() + c.as_str(),
        None => String::new(),
    }
}

/// 64-bit FNV-1a. Used wherever a stable, platform-independent hash of a
/// string is needed (embedding buckets, per-session seeds).
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_keeps_contractions() {
        assert_eq!(tokenize("I don't have SUGAR!"), vec!["i", "don't", "have", "sugar"]);
        assert!(tokenize("  ...  ").is_empty());
    }

    #[test]
    fn stemming_collapses_inflections() {
        for w in ["mixes", "mixed", "mixing", "mix"] {
            assert_eq!(stem(w), "mix", "{w}");
        }
        assert_eq!(stem("berries"), "berry");
        assert_eq!(stem("tomatoes"), "tomato");
        assert_eq!(stem("couscous"), "couscous");
        assert_eq!(stem("glass"), "glass");
        assert_eq!(stem("chopped"), "chop");
    }

    #[test]
    fn sentence_split() {
        let s = sentences("Wash it. Chop top (head) of the Broccoli into 1.5 cm pieces. Done");
        assert_eq!(s, vec!["Wash it.", "Chop top (head) of the Broccoli into 1.5 cm pieces.", "Done"]);
    }

    #[test]
    fn longest_match_prefers_phrases() {
        let vocab: BTreeSet<String> = ["apple", "apple crumble", "crumble"].iter().map(|s| s.to_string()).collect();
        let toks = tokenize("an apple crumble and an apple");
        let m: Vec<&str> = longest_matches(&toks, &vocab, 3).into_iter().map(|x| x.2).collect();
        assert_eq!(m, vec!["apple crumble", "apple"]);
    }

    #[test]
    fn phrase_matcher_plurals() {
        let m = PhraseMatcher::new(["chicken breast", "chicken", "lentil", "berry", "feta cheese", "feta"]);
        assert_eq!(m.find("I do not have chicken breasts."), vec!["chicken breast"]);
        assert_eq!(m.find("lentils, berries and feta"), vec!["lentil", "berry", "feta"]);
        assert_eq!(m.find_unique("chicken and more chicken"), vec!["chicken"]);
        assert!(m.find("lemony").is_empty());
    }

    #[test]
    fn plural_matching() {
        assert!(matches_singular("lentils", "lentil"));
        assert!(matches_singular("berries", "berry"));
        assert!(matches_singular("tomatoes", "tomato"));
        assert!(!matches_singular("lemony", "lemon"));
    }
}
