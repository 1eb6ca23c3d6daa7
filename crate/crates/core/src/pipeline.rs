//! Turns censored profiles into model-ready matrices.
//!
//! Everything that is fitted (industry vocabulary, imputation means, tf-idf
//! vocabulary, standardizer) sees training rows only; pretrained resources
//! such as document embeddings and word vectors are looked up as-is.

use std::collections::{HashMap, HashSet};
use std::fmt;

use chrono::NaiveDate;
use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{fuse, FeatureLayout, FundamentalEncoder, Standardizer};
use crate::profile::StartupProfile;
use crate::text::{
    bow_encode, default_gazetteer, fit_bow, manual_features, tokenize, word_average, BowVocabulary, TextKind,
    TextRepresentation, WordVectorTable, DEFAULT_MIN_DOC_FRACTION,
};

/// Which inputs feed the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InputMode {
    #[serde(rename = "fv")]
    Fv,
    #[serde(rename = "tsd")]
    Tsd,
    #[serde(rename = "fv+tsd")]
    FvTsd,
}

impl InputMode {
    pub fn as_str(self) -> &'static str {
        match self {
            InputMode::Fv => "fv",
            InputMode::Tsd => "tsd",
            InputMode::FvTsd => "fv+tsd",
        }
    }

    pub fn uses_fundamentals(self) -> bool {
        self != InputMode::Tsd
    }

    pub fn uses_text(self) -> bool {
        self != InputMode::Fv
    }
}

impl fmt::Display for InputMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for InputMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fv" => Ok(InputMode::Fv),
            "tsd" => Ok(InputMode::Tsd),
            "fv+tsd" => Ok(InputMode::FvTsd),
            other => Err(Error::invalid(format!("unknown input mode {other:?} (expected fv, tsd or fv+tsd)"))),
        }
    }
}

fn default_fraction() -> f64 {
    DEFAULT_MIN_DOC_FRACTION
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub mode: InputMode,
    pub text_kind: TextKind,
    pub cutoff: NaiveDate,
    #[serde(default = "default_fraction")]
    pub min_doc_fraction: f64,
    #[serde(default = "yes")]
    pub l2_normalize: bool,
}

impl FeatureConfig {
    pub fn new(mode: InputMode, text_kind: TextKind, cutoff: NaiveDate) -> Self {
        Self { mode, text_kind, cutoff, min_doc_fraction: DEFAULT_MIN_DOC_FRACTION, l2_normalize: true }
    }
}

/// Text resources that need no fitting.
#[derive(Debug, Clone, Default)]
pub struct TextResources {
    /// Document embeddings keyed by profile id.
    pub embeddings: Option<HashMap<String, Vec<f64>>>,
    pub word_vectors: Option<WordVectorTable>,
    /// Place names for the manual features; the bundled list when `None`.
    pub gazetteer: Option<HashSet<String>>,
}

impl TextResources {
    pub fn with_embeddings(embeddings: HashMap<String, Vec<f64>>) -> Self {
        Self { embeddings: Some(embeddings), ..Default::default() }
    }

    fn check(&self, config: &FeatureConfig) -> Result<()> {
        if !config.mode.uses_text() {
            return Ok(());
        }
        match config.text_kind {
            TextKind::DocEmbedding if self.embeddings.is_none() => Err(Error::Config {
                key: "embeddings".into(),
                message: "document embeddings requested but no cache or service configured".into(),
            }),
            TextKind::WordAvg if self.word_vectors.is_none() => Err(Error::Config {
                key: "word_vectors".into(),
                message: "word averaging requested but no word-vector table configured".into(),
            }),
            _ => Ok(()),
        }
    }
}

/// Fitted feature transformation, reusable on any later rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Featurizer {
    pub config: FeatureConfig,
    pub encoder: Option<FundamentalEncoder>,
    pub vocabulary: Option<BowVocabulary>,
    pub standardizer: Standardizer,
    pub layout: FeatureLayout,
}

fn text_representation(
    p: &StartupProfile,
    config: &FeatureConfig,
    vocabulary: Option<&BowVocabulary>,
    res: &TextResources,
) -> Result<TextRepresentation> {
    Ok(match config.text_kind {
        TextKind::Manual10 => manual_features(&p.description, res.gazetteer.as_ref().unwrap_or(default_gazetteer())),
        TextKind::Bow => {
            let vocab = vocabulary.ok_or_else(|| Error::invalid("bag-of-words vocabulary not fitted"))?;
            bow_encode(&tokenize(&p.description), vocab, config.l2_normalize)
        }
        TextKind::WordAvg => {
            let table = res.word_vectors.as_ref().ok_or_else(|| Error::invalid("no word-vector table"))?;
            word_average(&tokenize(&p.description), table).representation
        }
        TextKind::DocEmbedding => {
            let map = res.embeddings.as_ref().ok_or_else(|| Error::invalid("no document embeddings"))?;
            let v = map.get(&p.id).ok_or_else(|| Error::CacheMiss(p.id.clone()))?;
            TextRepresentation::new(TextKind::DocEmbedding, v.clone())
        }
    })
}

fn raw_matrix(
    profiles: &[&StartupProfile],
    config: &FeatureConfig,
    encoder: Option<&FundamentalEncoder>,
    vocabulary: Option<&BowVocabulary>,
    res: &TextResources,
) -> Result<(Array2<f64>, FeatureLayout)> {
    let fv_layout = encoder.map(FundamentalEncoder::layout).unwrap_or_default();
    let rows: Vec<(Vec<f64>, FeatureLayout)> = profiles
        .par_iter()
        .map(|p| {
            let x_fv = encoder.map(|e| e.encode(p, config.cutoff)).unwrap_or_default();
            let tsd =
                if config.mode.uses_text() { Some(text_representation(p, config, vocabulary, res)?) } else { None };
            let fused = fuse(&x_fv, &fv_layout, tsd.as_ref())?;
            Ok((fused.values, fused.layout))
        })
        .collect::<Result<_>>()?;
    let Some((_, layout)) = rows.first() else {
        return Err(Error::invalid("no profiles to featurize"));
    };
    let layout = layout.clone();
    let width = layout.width();
    if let Some((v, _)) = rows.iter().find(|(v, _)| v.len() != width) {
        return Err(Error::DimensionMismatch { expected: width, actual: v.len() });
    }
    let flat: Vec<f64> = rows.into_iter().flat_map(|(v, _)| v).collect();
    let x = Array2::from_shape_vec((profiles.len(), width), flat).expect("rows share one width");
    Ok((x, layout))
}

impl Featurizer {
    /// Fits on `train` and returns the standardized training matrix.
    pub fn fit(train: &[&StartupProfile], config: &FeatureConfig, res: &TextResources) -> Result<(Self, Array2<f64>)> {
        if train.is_empty() {
            return Err(Error::invalid("empty training set"));
        }
        res.check(config)?;
        let encoder =
            if config.mode.uses_fundamentals() { Some(FundamentalEncoder::fit(train, config.cutoff)?) } else { None };
        let vocabulary = if config.mode.uses_text() && config.text_kind == TextKind::Bow {
            let corpus: Vec<Vec<String>> = train.iter().map(|p| tokenize(&p.description)).collect();
            Some(fit_bow(&corpus, config.min_doc_fraction)?)
        } else {
            None
        };
        let (raw, layout) = raw_matrix(train, config, encoder.as_ref(), vocabulary.as_ref(), res)?;
        let standardizer = Standardizer::fit(raw.view(), &layout.skip_mask())?;
        let x = standardizer.transform(raw.view())?;
        Ok((Self { config: config.clone(), encoder, vocabulary, standardizer, layout }, x))
    }

    pub fn transform(&self, profiles: &[&StartupProfile], res: &TextResources) -> Result<Array2<f64>> {
        if profiles.is_empty() {
            return Ok(Array2::zeros((0, self.layout.width())));
        }
        res.check(&self.config)?;
        let (raw, layout) = raw_matrix(profiles, &self.config, self.encoder.as_ref(), self.vocabulary.as_ref(), res)?;
        if layout != self.layout {
            return Err(Error::DimensionMismatch { expected: self.layout.width(), actual: layout.width() });
        }
        self.standardizer.transform(raw.view())
    }

    pub fn width(&self) -> usize {
        self.layout.width()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::StartupProfile;

    fn profile(id: &str, desc: &str, founders: u32, industry: &str) -> StartupProfile {
        StartupProfile {
            id: id.into(),
            founded_on: "2014-01-01".parse().unwrap(),
            description: desc.into(),
            founders_count: founders,
            industries: [industry.to_string()].into_iter().collect(),
            ..Default::default()
        }
    }

    fn cutoff() -> NaiveDate {
        "2015-12-31".parse().unwrap()
    }

    #[test]
    fn modes_set_width() {
        let ps = vec![
            profile("a", "cloud software for banks", 2, "fintech"),
            profile("b", "software for hospitals", 3, "health"),
            profile("c", "cloud robots", 1, "robotics"),
        ];
        let refs: Vec<&StartupProfile> = ps.iter().collect();
        let res = TextResources::default();
        let fv = FeatureConfig::new(InputMode::Fv, TextKind::Manual10, cutoff());
        let (f_fv, x_fv) = Featurizer::fit(&refs, &fv, &res).unwrap();
        assert!(f_fv.layout.tsd_block().is_none());
        let both = FeatureConfig::new(InputMode::FvTsd, TextKind::Manual10, cutoff());
        let (f_both, x_both) = Featurizer::fit(&refs, &both, &res).unwrap();
        assert_eq!(x_both.ncols(), x_fv.ncols() + 10);
        assert_eq!(f_both.layout.tsd_block().unwrap().offset, x_fv.ncols());
        let tsd = FeatureConfig::new(InputMode::Tsd, TextKind::Bow, cutoff());
        let (f_tsd, x_tsd) = Featurizer::fit(&refs, &tsd, &res).unwrap();
        assert_eq!(f_tsd.layout.blocks.len(), 1);
        assert_eq!(x_tsd.ncols(), f_tsd.vocabulary.as_ref().unwrap().len());
    }

    #[test]
    fn missing_embedding_is_cache_miss() {
        let ps = vec![profile("a", "x", 1, "i")];
        let refs: Vec<&StartupProfile> = ps.iter().collect();
        let cfg = FeatureConfig::new(InputMode::FvTsd, TextKind::DocEmbedding, cutoff());
        let res = TextResources::with_embeddings(HashMap::new());
        assert!(matches!(Featurizer::fit(&refs, &cfg, &res), Err(Error::CacheMiss(_))));
        assert!(matches!(Featurizer::fit(&refs, &cfg, &TextResources::default()), Err(Error::Config { .. })));
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("fv+tsd".parse::<InputMode>().unwrap(), InputMode::FvTsd);
        assert_eq!(serde_json::to_string(&InputMode::FvTsd).unwrap(), "\"fv+tsd\"");
        assert!("text".parse::<InputMode>().is_err());
    }
}
