use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{is_stop_word, TextKind, TextRepresentation};
use crate::error::{Error, Result};

/// Terms seen in fewer than 5% of training documents are pruned.
pub const DEFAULT_MIN_DOC_FRACTION: f64 = 0.05;

/// Suffix rules `(suffix, minimum word length)`, tried in order; the first
/// match is stripped and no further rule applies.
const SUFFIX_RULES: [(&str, usize); 5] = [("ing", 6), ("ed", 5), ("ly", 5), ("es", 5), ("s", 4)];

/// Rule-based suffix stripping used in place of dictionary lemmatisation.
pub fn stem(token: &str) -> String {
    let len = token.chars().count();
    for (suffix, min_len) in SUFFIX_RULES {
        if len >= min_len && token.ends_with(suffix) {
            // "-ss", "-us" and "-is" are not plurals.
            if suffix == "s" && (token.ends_with("ss") || token.ends_with("us") || token.ends_with("is")) {
                return token.to_owned();
            }
            return token[..token.len() - suffix.len()].to_owned();
        }
    }
    token.to_owned()
}

/// Drops stop words and stems what remains.
pub fn normalize_terms(tokens: &[String]) -> Vec<String> {
    tokens.iter().filter(|t| !is_stop_word(t)).map(|t| stem(t)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BowVocabulary {
    /// Sorted, unique.
    pub terms: Vec<String>,
    pub idf: Vec<f64>,
    pub min_doc_fraction: f64,
    pub n_docs: usize,
}

impl BowVocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.terms.binary_search_by(|t| t.as_str().cmp(term)).ok()
    }
}

/// Fits a pruned tf-idf vocabulary on tokenised training documents.
///
/// `idf(t) = ln((1 + N) / (1 + df(t))) + 1`.
pub fn fit_bow(corpus: &[Vec<String>], min_doc_fraction: f64) -> Result<BowVocabulary> {
    if corpus.is_empty() {
        return Err(Error::DegenerateCorpus("empty corpus".into()));
    }
    if !(min_doc_fraction > 0.0 && min_doc_fraction < 1.0) {
        return Err(Error::invalid(format!("min_doc_fraction must lie in (0, 1), got {min_doc_fraction}")));
    }
    let n = corpus.len();
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for doc in corpus {
        let unique: HashSet<String> = normalize_terms(doc).into_iter().collect();
        for term in unique {
            *df.entry(term).or_default() += 1;
        }
    }
    // df / n >= fraction, evaluated without dividing
    let min_df = min_doc_fraction * n as f64;
    let (terms, idf): (Vec<String>, Vec<f64>) = df
        .into_iter()
        .filter(|&(_, count)| count as f64 >= min_df - 1e-9)
        .map(|(term, count)| {
            let idf = ((1.0 + n as f64) / (1.0 + count as f64)).ln() + 1.0;
            (term, idf)
        })
        .unzip();
    if terms.is_empty() {
        return Err(Error::DegenerateCorpus(format!(
            "no term reaches document fraction {min_doc_fraction} over {n} documents"
        )));
    }
    Ok(BowVocabulary { terms, idf, min_doc_fraction, n_docs: n })
}

/// tf-idf vector of a token list; out-of-vocabulary tokens are ignored.
pub fn bow_encode(tokens: &[String], vocab: &BowVocabulary, l2_normalize: bool) -> TextRepresentation {
    let mut values = vec![0.0; vocab.len()];
    for term in normalize_terms(tokens) {
        if let Some(i) = vocab.index_of(&term) {
            values[i] += 1.0;
        }
    }
    for (v, idf) in values.iter_mut().zip(&vocab.idf) {
        *v *= idf;
    }
    if l2_normalize {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            values.iter_mut().for_each(|v| *v /= norm);
        }
    }
    TextRepresentation::new(TextKind::Bow, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize;

    fn docs(texts: &[&str]) -> Vec<Vec<String>> {
        texts.iter().map(|t| tokenize(t)).collect()
    }

    #[test]
    fn stemming_rules() {
        assert_eq!(stem("running"), "runn");
        assert_eq!(stem("king"), "king");
        assert_eq!(stem("founded"), "found");
        assert_eq!(stem("seed"), "seed");
        assert_eq!(stem("quickly"), "quick");
        assert_eq!(stem("only"), "only");
        assert_eq!(stem("boxes"), "box");
        assert_eq!(stem("startups"), "startup");
        assert_eq!(stem("business"), "business");
        assert_eq!(stem("campus"), "campus");
        assert_eq!(stem("gas"), "gas");
    }

    #[test]
    fn threshold_boundary() {
        let mut texts = vec!["common"; 19];
        texts.push("common rare");
        let v = fit_bow(&docs(&texts), 0.05).unwrap();
        assert_eq!(v.terms, ["common", "rare"]);
        assert!(v.index_of("absent").is_none());

        let v = fit_bow(&docs(&texts), 0.06).unwrap();
        assert_eq!(v.terms, ["common"]);
    }

    #[test]
    fn idf_hand_values() {
        // N = 3; "cloud" in 3 docs, "data" in 2, "robot" in 1
        let v = fit_bow(&docs(&["cloud data", "cloud data robot", "cloud"]), 0.05).unwrap();
        assert_eq!(v.terms, ["cloud", "data", "robot"]);
        let expect = [(4.0f64 / 4.0).ln() + 1.0, (4.0f64 / 3.0).ln() + 1.0, (4.0f64 / 2.0).ln() + 1.0];
        for (a, b) in v.idf.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(v.idf[0], 1.0);
    }

    #[test]
    fn identical_documents_share_idf() {
        let v = fit_bow(&docs(&["fast cloud payments"; 4]), 0.05).unwrap();
        assert!(v.idf.iter().all(|&x| x == v.idf[0]));
    }

    #[test]
    fn degenerate_corpora() {
        assert!(matches!(fit_bow(&[], 0.05), Err(Error::DegenerateCorpus(_))));
        assert!(matches!(fit_bow(&docs(&["the and of", ""]), 0.05), Err(Error::DegenerateCorpus(_))));
    }

    #[test]
    fn encode_cases() {
        let v = fit_bow(&docs(&["cloud data", "cloud data robot", "cloud"]), 0.05).unwrap();
        let zero = bow_encode(&tokenize("nothing here"), &v, true);
        assert_eq!(zero.values, vec![0.0; 3]);

        let one = bow_encode(&tokenize("robot"), &v, true);
        assert_eq!(one.values, vec![0.0, 0.0, 1.0]);

        // tf: cloud 2, data 1, robot 0
        let raw = bow_encode(&tokenize("Cloud, cloud data"), &v, false);
        let want = [2.0 * v.idf[0], v.idf[1], 0.0];
        assert_eq!(raw.values, want);
        let normed = bow_encode(&tokenize("Cloud, cloud data"), &v, true);
        let norm = (want[0] * want[0] + want[1] * want[1]).sqrt();
        assert!((normed.values[0] - want[0] / norm).abs() < 1e-15);
        assert!((normed.values[1] - want[1] / norm).abs() < 1e-15);
    }
}
