//! Text normalization and tokenization for the non-contextual feature
//! paths. The contextual path re-tokenizes with the encoder's own subword
//! vocabulary, but consumes normalized text.

use regex::Regex;
use std::sync::OnceLock;
use unicode_normalization::UnicodeNormalization;

use super::TokenSequence;

const URL_SENTINEL: &str = "<url>";

fn url_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?:https?://|www\.)\S+").expect("static pattern"))
}

/// Lowercase, NFC-normalize, replace URLs with `<url>`, strip control
/// characters and collapse whitespace. Total and idempotent.
pub fn normalize_text(text: &str) -> String {
    let nfc: String = text.nfc().collect();
    let lower = nfc.to_lowercase();
    let no_urls = url_pattern().replace_all(&lower, URL_SENTINEL);
    let cleaned: String = no_urls
        .chars()
        .map(|c| if c.is_control() { ' ' } else { c })
        .collect();
    cleaned.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Split normalized text into tokens: whitespace separates tokens, and a
/// new token starts wherever an alphanumeric character is followed by a
/// non-alphanumeric one ("don't" -> `don`, `'t`). The normalizer's `<url>`
/// sentinel stays a single token.
pub fn tokenize(text: &str) -> TokenSequence {
    let mut tokens = Vec::new();
    for word in text.split_whitespace() {
        if word == URL_SENTINEL {
            tokens.push(word.to_string());
            continue;
        }
        let mut current = String::new();
        let mut prev_alnum = false;
        for c in word.chars() {
            let alnum = c.is_alphanumeric();
            if prev_alnum && !alnum && !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
            current.push(c);
            prev_alnum = alnum;
        }
        if !current.is_empty() {
            tokens.push(current);
        }
    }
    TokenSequence::new(tokens).expect("split tokens are non-empty")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn casing_and_whitespace() {
        assert_eq!(normalize_text("Hello   WORLD"), "hello world");
    }

    #[test]
    fn url_sentinel() {
        assert_eq!(normalize_text("visit http://x.y now"), "visit <url> now");
        assert_eq!(normalize_text("see WWW.example.com please"), "see <url> please");
    }

    #[test]
    fn idempotence() {
        for text in [
            "Hello   WORLD",
            "visit http://x.y now",
            "tabs\tand\nnewlines",
            "already normalized text",
            "Unicode Café né e\u{301}",
        ] {
            let once = normalize_text(text);
            assert_eq!(normalize_text(&once), once);
        }
    }

    #[test]
    fn control_characters_stripped() {
        assert_eq!(normalize_text("a\u{0}b\u{7}c"), "a b c");
    }

    #[test]
    fn nfc_composes_combining_marks() {
        // e + combining acute composes to é.
        assert_eq!(normalize_text("e\u{301}"), "\u{e9}");
    }

    #[test]
    fn tokenize_simple() {
        let t = tokenize("a b c");
        assert_eq!(t.tokens(), ["a", "b", "c"]);
        assert_eq!(t.n(), 3);
    }

    #[test]
    fn tokenize_punctuation_rule() {
        let t = tokenize("don't stop");
        assert_eq!(t.tokens(), ["don", "'t", "stop"]);
    }

    #[test]
    fn tokenize_empty() {
        assert_eq!(tokenize("").n(), 0);
    }

    #[test]
    fn tokenize_trailing_punctuation_and_sentinel() {
        let t = tokenize("end. <url>");
        assert_eq!(t.tokens(), ["end", ".", "<url>"]);
    }

    #[test]
    fn tokenize_is_deterministic() {
        assert_eq!(tokenize("a b's c!").tokens(), tokenize("a b's c!").tokens());
    }
}
