//! Text representations of a startup's self-description.
//!
//! Four encodings share one output type: hand-crafted statistics, tf-idf
//! bag-of-words, averaged pretrained word vectors, and document embeddings
//! fetched from an external encoder.

mod bow;
mod embeddings;
mod manual;
mod tokenize;
mod word_vectors;

use serde::{Deserialize, Serialize};

pub use bow::{bow_encode, fit_bow, normalize_terms, stem, BowVocabulary, DEFAULT_MIN_DOC_FRACTION};
pub use embeddings::{
    get_document_embeddings, read_embedding_cache, write_embedding_cache, CacheEntry, EmbeddingGateway, ServiceConfig,
    EMBEDDING_DIM,
};
pub use manual::{default_gazetteer, manual_features, MANUAL_FEATURE_NAMES};
pub use tokenize::{is_stop_word, stop_words, tokenize, STOP_WORDS_SHA256};
pub use word_vectors::{word_average, WordAverage, WordVectorTable, WORD_VECTOR_DIM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextKind {
    Manual10,
    Bow,
    WordAvg,
    DocEmbedding,
}

impl TextKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TextKind::Manual10 => "manual10",
            TextKind::Bow => "bow",
            TextKind::WordAvg => "word_avg",
            TextKind::DocEmbedding => "doc_embedding",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextRepresentation {
    pub kind: TextKind,
    pub values: Vec<f64>,
}

impl TextRepresentation {
    pub fn new(kind: TextKind, values: Vec<f64>) -> Self {
        Self { kind, values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}
