use std::collections::HashSet;
use std::sync::OnceLock;

const STOP_WORDS: &str = include_str!("../../assets/stopwords.txt");

/// SHA-256 of the pinned stop-word list.
pub const STOP_WORDS_SHA256: &str = "ac0e81e416dfac4563d25c78b6489aac39a774d3a90ee66b4c176bde1b4f5349";

/// Lowercased unigrams split on every non-alphanumeric character.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase).collect()
}

pub fn stop_words() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| STOP_WORDS.lines().map(str::trim).filter(|l| !l.is_empty()).collect())
}

pub fn is_stop_word(token: &str) -> bool {
    stop_words().contains(token)
}

#[cfg(test)]
mod tests {
    use super::*;
    use sha2::{Digest, Sha256};

    #[test]
    fn examples() {
        assert!(tokenize("").is_empty());
        assert_eq!(
            tokenize("AI-powered insurance, zero paperwork!"),
            ["ai", "powered", "insurance", "zero", "paperwork"]
        );
        assert_eq!(tokenize("3D Face Authentication"), ["3d", "face", "authentication"]);
    }

    #[test]
    fn stop_word_asset_is_pinned() {
        let digest = Sha256::digest(STOP_WORDS.as_bytes());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(hex, STOP_WORDS_SHA256);
        assert!(stop_words().len() > 170);
        assert!(is_stop_word("the") && !is_stop_word("insurance"));
    }
}
