//! Shapley-value attributions over groups of feature columns.
//!
//! A player is a contiguous range of columns (a layout block, or a single
//! slot). The value of a coalition is the model output averaged over
//! background rows in which the coalition's columns are replaced by those of
//! the explained row. Exact mode enumerates every coalition; sampled mode
//! averages marginal contributions along random player orders, pairing
//! sample `s` with background row `s mod n_background`.

use std::collections::BTreeMap;
use std::io::Write;
use std::ops::Range;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::index::sample as sample_indices;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureLayout, TSD_BLOCK};
use crate::model::{derive_seed, Predictor};

pub const MAX_EXACT_PLAYERS: usize = 15;
pub const DEFAULT_BACKGROUND: usize = 100;
pub const DEFAULT_SAMPLES: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapMode {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    Block,
    Slot,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Player {
    pub name: String,
    pub range: Range<usize>,
}

pub fn players(layout: &FeatureLayout, granularity: Granularity) -> Vec<Player> {
    match granularity {
        Granularity::Block => layout.blocks.iter().map(|b| Player { name: b.name.clone(), range: b.range() }).collect(),
        Granularity::Slot => {
            layout.slots.iter().enumerate().map(|(i, s)| Player { name: s.name.clone(), range: i..i + 1 }).collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub players: Vec<String>,
    pub values: Vec<f64>,
    /// Mean model output over the background rows.
    pub base_value: f64,
    /// Model output on the explained row.
    pub output: f64,
}

impl Attribution {
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// `base_value + sum(values) - output`.
    pub fn efficiency_gap(&self) -> f64 {
        self.base_value + self.total() - self.output
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapConfig {
    pub mode: ShapMode,
    pub granularity: Granularity,
    pub n_samples: usize,
    pub seed: u64,
}

impl Default for ShapConfig {
    fn default() -> Self {
        Self { mode: ShapMode::Sampled, granularity: Granularity::Block, n_samples: DEFAULT_SAMPLES, seed: 0 }
    }
}

/// Seeded subsample of at most `n` rows, without replacement, in row order.
pub fn sample_background(x: ArrayView2<f64>, n: usize, seed: u64) -> Array2<f64> {
    if x.nrows() <= n {
        return x.to_owned();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample_indices(&mut rng, x.nrows(), n).into_vec();
    idx.sort_unstable();
    x.select(Axis(0), &idx)
}

fn check(model: &dyn Predictor, background: ArrayView2<f64>, x: ArrayView1<f64>, players: &[Player]) -> Result<()> {
    if background.nrows() == 0 {
        return Err(Error::invalid("empty background set"));
    }
    if x.len() != model.width() || background.ncols() != model.width() {
        return Err(Error::WidthMismatch { expected: model.width(), actual: x.len().max(background.ncols()) });
    }
    let mut next = 0;
    for p in players {
        if p.range.start != next || p.range.end < p.range.start {
            return Err(Error::invalid(format!("player {} does not continue the previous range", p.name)));
        }
        next = p.range.end;
    }
    if next != x.len() {
        return Err(Error::invalid("players do not cover every column"));
    }
    Ok(())
}

fn overwrite(row: &mut [f64], x: ArrayView1<f64>, range: &Range<usize>) {
    for j in range.clone() {
        row[j] = x[j];
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn exact(
    model: &dyn Predictor,
    background: ArrayView2<f64>,
    x: ArrayView1<f64>,
    players: &[Player],
) -> Result<Attribution> {
    let p = players.len();
    if p > MAX_EXACT_PLAYERS {
        return Err(Error::invalid(format!(
            "exact attribution enumerates 2^{p} coalitions; at most {MAX_EXACT_PLAYERS} players allowed"
        )));
    }
    let value: Vec<f64> = (0..1usize << p)
        .into_par_iter()
        .map(|mask| {
            let mut z = background.to_owned();
            for (k, player) in players.iter().enumerate() {
                if mask & (1 << k) != 0 {
                    for mut row in z.rows_mut() {
                        overwrite(row.as_slice_mut().expect("owned rows are contiguous"), x, &player.range);
                    }
                }
            }
            model.predict_proba(z.view()).map(|out| mean(&out))
        })
        .collect::<Result<_>>()?;

    // weight of a coalition of size s not containing the player: s! (p - s - 1)! / p!
    let mut weight = vec![0.0; p.max(1)];
    for (s, w) in weight.iter_mut().enumerate().take(p) {
        let mut v = 1.0 / p as f64;
        // 1 / (p * C(p-1, s))
        for t in 0..s {
            v *= (t + 1) as f64 / (p - 1 - t) as f64;
        }
        *w = v;
    }
    let values = (0..p)
        .map(|k| {
            let bit = 1usize << k;
            (0..1usize << p)
                .filter(|m| m & bit == 0)
                .map(|m| weight[m.count_ones() as usize] * (value[m | bit] - value[m]))
                .sum()
        })
        .collect();
    let full = model.predict_proba(x.insert_axis(Axis(0)))?[0];
    Ok(Attribution {
        players: players.iter().map(|p| p.name.clone()).collect(),
        values,
        base_value: value[0],
        output: full,
    })
}

fn sampled(
    model: &dyn Predictor,
    background: ArrayView2<f64>,
    x: ArrayView1<f64>,
    players: &[Player],
    n_samples: usize,
    seed: u64,
) -> Result<Attribution> {
    if n_samples == 0 {
        return Err(Error::invalid("sampled attribution needs n_samples > 0"));
    }
    let p = players.len();
    let n_bg = background.nrows();
    const CHUNK: usize = 64;
    let chunks: Vec<Vec<f64>> = (0..n_samples.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let samples = c * CHUNK..((c + 1) * CHUNK).min(n_samples);
            let mut orders = Vec::with_capacity(samples.len());
            let mut z = Array2::zeros((samples.len() * (p + 1), x.len()));
            for (local, s) in samples.clone().enumerate() {
                let mut order: Vec<usize> = (0..p).collect();
                order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, &[s as u64])));
                let mut row = background.row(s % n_bg).to_owned();
                z.row_mut(local * (p + 1)).assign(&row);
                for (step, &k) in order.iter().enumerate() {
                    overwrite(row.as_slice_mut().expect("owned row"), x, &players[k].range);
                    z.row_mut(local * (p + 1) + step + 1).assign(&row);
                }
                orders.push(order);
            }
            let out = model.predict_proba(z.view())?;
            let mut acc = vec![0.0; p];
            for (local, order) in orders.iter().enumerate() {
                let base = local * (p + 1);
                for (step, &k) in order.iter().enumerate() {
                    acc[k] += out[base + step + 1] - out[base + step];
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut values = vec![0.0; p];
    for acc in chunks {
        for (v, a) in values.iter_mut().zip(acc) {
            *v += a;
        }
    }
    values.iter_mut().for_each(|v| *v /= n_samples as f64);
    let base_value = mean(&model.predict_proba(background)?);
    let output = model.predict_proba(x.insert_axis(Axis(0)))?[0];
    Ok(Attribution { players: players.iter().map(|p| p.name.clone()).collect(), values, base_value, output })
}

/// Attributes `model(x) - mean(model(background))` to `players`.
pub fn shap_attributions(
    model: &dyn Predictor,
    background: ArrayView2<f64>,
    x: ArrayView1<f64>,
    players: &[Player],
    mode: ShapMode,
    n_samples: usize,
    seed: u64,
) -> Result<Attribution> {
    check(model, background, x, players)?;
    match mode {
        ShapMode::Exact => exact(model, background, x, players),
        ShapMode::Sampled => sampled(model, background, x, players, n_samples, seed),
    }
}

/// Attributions for every row of `xs`; row `i` is sampled with seed `(seed, i)`.
pub fn explain_rows(
    model: &dyn Predictor,
    background: ArrayView2<f64>,
    xs: ArrayView2<f64>,
    layout: &FeatureLayout,
    config: &ShapConfig,
) -> Result<Vec<Attribution>> {
    let ps = players(layout, config.granularity);
    (0..xs.nrows())
        .into_par_iter()
        .map(|i| {
            shap_attributions(
                model,
                background,
                xs.row(i),
                &ps,
                config.mode,
                config.n_samples,
                derive_seed(config.seed, &[i as u64]),
            )
        })
        .collect()
}

/// Sums every attribution that falls inside the layout's text block into a
/// single `TSD` entry, placed where the first of them was. Identity when
/// the layout has no text block.
pub fn collapse_tsd(attr: &Attribution, layout: &FeatureLayout) -> Attribution {
    let Some(tsd) = layout.tsd_block() else {
        return attr.clone();
    };
    let slot_names: Vec<&str> = layout.slot_names().collect();
    let in_tsd = |name: &str| name == TSD_BLOCK || slot_names[tsd.range()].contains(&name);
    let mut players = Vec::new();
    let mut values = Vec::new();
    let mut tsd_pos = None;
    for (name, &v) in attr.players.iter().zip(&attr.values) {
        if in_tsd(name) {
            match tsd_pos {
                Some(i) => values[i] += v,
                None => {
                    tsd_pos = Some(values.len());
                    players.push(TSD_BLOCK.to_string());
                    values.push(v);
                }
            }
        } else {
            players.push(name.clone());
            values.push(v);
        }
    }
    Attribution { players, values, base_value: attr.base_value, output: attr.output }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Importance {
    pub name: String,
    pub mean_abs: f64,
}

/// Mean absolute attribution per player, largest first, ties by name.
pub fn importance_ranking(attrs: &[Attribution]) -> Result<Vec<Importance>> {
    let first = attrs.first().ok_or_else(|| Error::invalid("no attributions to rank"))?;
    if attrs.iter().any(|a| a.players != first.players) {
        return Err(Error::invalid("attributions do not share one set of players"));
    }
    let mut sums: BTreeMap<&str, f64> = BTreeMap::new();
    for a in attrs {
        for (name, v) in a.players.iter().zip(&a.values) {
            *sums.entry(name).or_default() += v.abs();
        }
    }
    let mut ranking: Vec<Importance> = sums
        .into_iter()
        .map(|(name, s)| Importance { name: name.to_string(), mean_abs: s / attrs.len() as f64 })
        .collect();
    ranking.sort_by(|a, b| b.mean_abs.total_cmp(&a.mean_abs).then_with(|| a.name.cmp(&b.name)));
    Ok(ranking)
}

/// Wide CSV: `sample_id, base_value, output, <one column per player>`.
pub fn write_attributions_csv<W: Write>(w: W, ids: &[String], attrs: &[Attribution]) -> Result<()> {
    if ids.len() != attrs.len() {
        return Err(Error::DimensionMismatch { expected: attrs.len(), actual: ids.len() });
    }
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["sample_id".to_string(), "base_value".into(), "output".into()];
    if let Some(a) = attrs.first() {
        header.extend(a.players.iter().cloned());
    }
    out.write_record(&header)?;
    for (id, a) in ids.iter().zip(attrs) {
        let mut row = vec![id.clone(), a.base_value.to_string(), a.output.to_string()];
        row.extend(a.values.iter().map(|v| v.to_string()));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleAttribution {
    pub id: String,
    #[serde(flatten)]
    pub attribution: Attribution,
}

/// Per-sample values plus the mean-|SHAP| bars, as data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationSummary {
    pub config: ShapConfig,
    pub output_scale: String,
    pub samples: Vec<SampleAttribution>,
    pub importance: Vec<Importance>,
}

impl ExplanationSummary {
    pub fn new(config: ShapConfig, ids: &[String], attrs: Vec<Attribution>) -> Result<Self> {
        let importance = importance_ranking(&attrs)?;
        let samples =
            ids.iter().cloned().zip(attrs).map(|(id, attribution)| SampleAttribution { id, attribution }).collect();
        Ok(Self { config, output_scale: "probability".into(), samples, importance })
    }
}
