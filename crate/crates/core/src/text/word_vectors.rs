use std::collections::HashMap;
use std::io::BufRead;

use super::{TextKind, TextRepresentation};
use crate::error::{Error, Result};

/// Dimension of the pretrained table the pipeline expects.
pub const WORD_VECTOR_DIM: usize = 50;

#[derive(Debug, Clone, Default)]
pub struct WordVectorTable {
    vectors: HashMap<String, Vec<f64>>,
    dim: usize,
}

impl WordVectorTable {
    pub fn new(dim: usize) -> Self {
        Self { vectors: HashMap::new(), dim }
    }

    pub fn insert(&mut self, word: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: vector.len() });
        }
        self.vectors.insert(word.into(), vector);
        Ok(())
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Reads the whitespace-separated text format: a word followed by
    /// `dim` decimals per line.
    pub fn read<R: BufRead>(reader: R, dim: usize) -> Result<Self> {
        let mut table = Self::new(dim);
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let mut parts = line.split_whitespace();
            let Some(word) = parts.next() else { continue };
            let vector = parts
                .map(|p| p.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse { line: idx + 1, message: e.to_string() })?;
            if vector.len() != dim {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("expected {dim} components, found {}", vector.len()),
                });
            }
            table.vectors.insert(word.to_owned(), vector);
        }
        Ok(table)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordAverage {
    pub representation: TextRepresentation,
    /// No token was found in the table; the vector is all zeros.
    pub empty_coverage: bool,
}

/// Mean of the vectors of in-table tokens.
pub fn word_average(tokens: &[String], table: &WordVectorTable) -> WordAverage {
    let mut sum = vec![0.0; table.dim()];
    let mut hits = 0usize;
    for v in tokens.iter().filter_map(|t| table.get(t)) {
        for (s, x) in sum.iter_mut().zip(v) {
            *s += x;
        }
        hits += 1;
    }
    if hits > 0 {
        sum.iter_mut().for_each(|s| *s /= hits as f64);
    }
    WordAverage { representation: TextRepresentation::new(TextKind::WordAvg, sum), empty_coverage: hits == 0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize;

    fn toy() -> WordVectorTable {
        let mut src = String::new();
        for (i, w) in ["cloud", "data", "robot", "fast", "bank"].iter().enumerate() {
            src.push_str(w);
            for j in 0..WORD_VECTOR_DIM {
                src.push_str(&format!(" {}", (i * 100 + j) as f64 / 8.0));
            }
            src.push('\n');
        }
        WordVectorTable::read(src.as_bytes(), WORD_VECTOR_DIM).unwrap()
    }

    #[test]
    fn identity_and_pair() {
        let t = toy();
        let one = word_average(&tokenize("robot"), &t);
        assert_eq!(one.representation.values, t.get("robot").unwrap());
        assert!(!one.empty_coverage);

        let two = word_average(&tokenize("cloud data"), &t);
        let (v, w) = (t.get("cloud").unwrap(), t.get("data").unwrap());
        for j in 0..WORD_VECTOR_DIM {
            assert_eq!(two.representation.values[j], (v[j] + w[j]) / 2.0);
        }
    }

    #[test]
    fn fixture_sentence() {
        let t = toy();
        let avg = word_average(&tokenize("A fast robot bank for unknown people"), &t);
        // fast = row 3, robot = row 2, bank = row 4 -> base offsets 300, 200, 400
        for j in 0..WORD_VECTOR_DIM {
            let want = ((300 + j) as f64 / 8.0 + (200 + j) as f64 / 8.0 + (400 + j) as f64 / 8.0) / 3.0;
            assert!((avg.representation.values[j] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_coverage_flag() {
        let avg = word_average(&tokenize("nothing matches"), &toy());
        assert!(avg.empty_coverage);
        assert_eq!(avg.representation.values, vec![0.0; WORD_VECTOR_DIM]);
    }

    #[test]
    fn rejects_ragged_rows() {
        assert!(WordVectorTable::read("a 1 2\nb 1\n".as_bytes(), 2).is_err());
    }
}
