use std::collections::HashSet;
use std::sync::OnceLock;

use super::{tokenize, TextKind, TextRepresentation};

const GAZETTEER: &str = include_str!("../../assets/gazetteer.txt");

/// Longest place name in the gazetteer, in tokens.
const MAX_PLACE_TOKENS: usize = 3;

pub const MANUAL_FEATURE_NAMES: [&str; 10] = [
    "char_length",
    "word_count",
    "mean_word_length",
    "sentence_count",
    "mean_sentence_words",
    "type_token_ratio",
    "digit_fraction",
    "uppercase_fraction",
    "place_mentions",
    "comma_count",
];

/// Pinned set of country and major-city names (lowercase, may span
/// several tokens).
pub fn default_gazetteer() -> &'static HashSet<String> {
    static SET: OnceLock<HashSet<String>> = OnceLock::new();
    SET.get_or_init(|| GAZETTEER.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_owned).collect())
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Counts place mentions, preferring the longest match at each position.
fn gazetteer_hits(tokens: &[String], gazetteer: &HashSet<String>) -> usize {
    let mut hits = 0;
    let mut i = 0;
    while i < tokens.len() {
        let matched = (1..=MAX_PLACE_TOKENS.min(tokens.len() - i))
            .rev()
            .find(|&len| gazetteer.contains(&tokens[i..i + len].join(" ")));
        match matched {
            Some(len) => {
                hits += 1;
                i += len;
            }
            None => i += 1,
        }
    }
    hits
}

/// Ten surface statistics of a description, in [`MANUAL_FEATURE_NAMES`] order.
pub fn manual_features(text: &str, gazetteer: &HashSet<String>) -> TextRepresentation {
    let tokens = tokenize(text);
    let n_chars = text.chars().count() as f64;
    let n_words = tokens.len() as f64;
    let word_chars: usize = tokens.iter().map(|t| t.chars().count()).sum();
    let n_sentences = text.split(['.', '!', '?']).filter(|s| s.chars().any(char::is_alphanumeric)).count() as f64;
    let distinct: HashSet<&String> = tokens.iter().collect();
    let digits = text.chars().filter(char::is_ascii_digit).count() as f64;
    let upper = text.chars().filter(|c| c.is_uppercase()).count() as f64;
    let commas = text.chars().filter(|&c| c == ',').count() as f64;

    let values = vec![
        n_chars,
        n_words,
        ratio(word_chars as f64, n_words),
        n_sentences,
        ratio(n_words, n_sentences),
        ratio(distinct.len() as f64, n_words),
        ratio(digits, n_chars),
        ratio(upper, n_chars),
        gazetteer_hits(&tokens, gazetteer) as f64,
        commas,
    ];
    TextRepresentation::new(TextKind::Manual10, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaz(names: &[&str]) -> HashSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn empty_text_is_all_zero() {
        let r = manual_features("", &gaz(&["berlin"]));
        assert_eq!(r.values, vec![0.0; 10]);
        assert_eq!(r.kind, TextKind::Manual10);
    }

    #[test]
    fn berlin_fixture() {
        let r = manual_features("Berlin based. Berlin grows.", &gaz(&["berlin"]));
        assert_eq!(r.values[0], 27.0);
        assert_eq!(r.values[1], 4.0);
        // berlin(6) based(5) berlin(6) grows(5)
        assert_eq!(r.values[2], 22.0 / 4.0);
        assert_eq!(r.values[3], 2.0);
        assert_eq!(r.values[4], 2.0);
        assert_eq!(r.values[5], 0.75);
        assert_eq!(r.values[6], 0.0);
        assert_eq!(r.values[7], 2.0 / 27.0);
        assert_eq!(r.values[8], 2.0);
        assert_eq!(r.values[9], 0.0);
    }

    #[test]
    fn multi_token_places_count_once() {
        let g = gaz(&["new york", "york"]);
        let r = manual_features("Offices in New York, and York.", &g);
        assert_eq!(r.values[8], 2.0);
        assert_eq!(r.values[9], 1.0);
    }

    #[test]
    fn digits_and_pinned_gazetteer() {
        let r = manual_features("We serve 40 cities across Germany.", default_gazetteer());
        assert_eq!(r.values[6], 2.0 / 34.0);
        assert_eq!(r.values[8], 1.0);
    }
}
