//! Seeded synthetic startup profiles with planted fundamental and text
//! signal, plus simulated document embeddings.
//!
//! Distribution families:
//! - age in months: normal(18.14, 10.01) truncated to [1, 36];
//! - counts: 1 + negative binomial (Poisson-gamma mixture);
//! - money: log-normal matched to mean and SD;
//! - description length: class-specific log-normal (613 vs 694 characters).
//!
//! The label is Bernoulli of a logistic model over standardized
//! fundamentals plus a per-startup text latent `z ~ N(0, 1)`. `z` drives
//! which signal phrases appear in the description and shifts the embedding
//! along a fixed direction; the embedding also carries a small class
//! offset and isotropic noise.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::{Months, NaiveDate};
use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, LogNormal, Normal, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{numeric_fundamentals, BOOLEAN_SLOTS, NUMERIC_SLOTS};
use crate::model::{derive_seed, sigmoid};
use crate::profile::{EventKind, FundingRound, InvestmentType, StartupProfile, SuccessEvent};
use crate::text::{write_embedding_cache, EMBEDDING_DIM};

pub const DEFAULT_PREVALENCE: f64 = 0.3594;
const CALIBRATION_ROWS: usize = 20_000;

/// Population mean and SD used to standardize each slot inside the latent
/// success score.
pub const SLOT_MOMENTS: [(&str, f64, f64); 22] = [
    ("age_months", 18.14, 10.01),
    ("founders_count", 1.83, 0.97),
    ("founders_country_count", 1.20, 0.42),
    ("founders_male_count", 1.58, 1.03),
    ("founders_female_count", 0.25, 0.52),
    ("degree_count_total", 1.16, 1.46),
    ("degree_count_max", 0.84, 0.92),
    ("degree_count_mean", 0.78, 0.84),
    ("n_rounds", 1.36, 0.73),
    ("raised_total_musd", 3.16, 21.45),
    ("last_round_raised_musd", 2.59, 22.23),
    ("last_round_post_money_musd", 12.19, 48.39),
    ("last_round_lag_months", 11.59, 8.55),
    ("investor_count", 2.07, 3.82),
    ("last_round_investor_count", 1.42, 2.65),
    ("known_investor_count", 1.16, 0.68),
    ("last_round_known_investor_count", 1.08, 0.46),
    ("has_email", 0.77, 0.42),
    ("has_phone", 0.58, 0.49),
    ("has_facebook", 0.73, 0.45),
    ("has_twitter", 0.77, 0.42),
    ("has_linkedin", 0.70, 0.46),
];

const SECTORS: [&str; 11] = [
    "Communication Services",
    "Consumer Discretionary",
    "Consumer Staples",
    "Energy",
    "Financials",
    "Health Care",
    "Industrials",
    "Information Technology",
    "Materials",
    "Real Estate",
    "Utilities",
];

/// Fine-grained industry and the index of its sector in [`SECTORS`].
const INDUSTRIES: [(&str, usize); 24] = [
    ("advertising", 0),
    ("social media", 0),
    ("video games", 0),
    ("e-commerce", 1),
    ("fashion", 1),
    ("travel", 1),
    ("food and beverage", 2),
    ("personal care", 2),
    ("solar", 3),
    ("oil and gas", 3),
    ("fintech", 4),
    ("insurance", 4),
    ("payments", 4),
    ("biotechnology", 5),
    ("medical devices", 5),
    ("health care services", 5),
    ("logistics", 6),
    ("robotics", 6),
    ("software", 7),
    ("artificial intelligence", 7),
    ("cybersecurity", 7),
    ("chemicals", 8),
    ("property management", 9),
    ("clean energy", 10),
];

const FILLER: [&str; 16] = [
    "We help teams work together more effectively.",
    "Our product is used by customers in several industries.",
    "The company was founded by a group of friends.",
    "We believe in simple tools that solve real problems.",
    "Our team combines experience in design and engineering.",
    "We offer a range of services for individuals and companies.",
    "Customers can sign up online and start within minutes.",
    "We are currently hiring for several positions.",
    "Our offices are open to visitors by appointment.",
    "The service is available on desktop and mobile devices.",
    "We work closely with partners to deliver quality results.",
    "Our mission is to make everyday tasks easier.",
    "Feedback from our users shapes every release.",
    "We started with a single idea and kept improving it.",
    "Support is available by email and phone.",
    "Learn more about our story on our website.",
];

const PLACES: [&str; 8] = ["Berlin", "London", "New York", "Paris", "Singapore", "Toronto", "Sydney", "Boston"];

fn default_positive() -> Vec<String> {
    [
        "scalable platform",
        "enterprise customers",
        "machine learning",
        "recurring revenue",
        "global expansion",
        "proprietary technology",
        "venture backed",
        "rapid growth",
    ]
    .map(String::from)
    .to_vec()
}

fn default_negative() -> Vec<String> {
    [
        "family owned",
        "local shop",
        "handmade goods",
        "small studio",
        "neighborhood service",
        "hobby project",
        "freelance work",
        "part time",
    ]
    .map(String::from)
    .to_vec()
}

fn default_effects() -> BTreeMap<String, f64> {
    [
        ("age_months", -0.5),
        ("last_round_lag_months", -0.6),
        ("investor_count", 0.6),
        ("has_linkedin", 0.5),
        ("founders_count", 0.3),
        ("degree_count_total", 0.3),
        ("has_email", 0.15),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

/// Simulated encoder output
/// `sqrt(dim) * (class_offset * (y - 1/2) * v + latent_scale * z * u) + noise_sd * e`
/// with fixed unit directions `u`, `v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSim {
    pub dim: usize,
    pub noise_sd: f64,
    pub latent_scale: f64,
    pub class_offset: f64,
}

impl Default for EmbeddingSim {
    fn default() -> Self {
        Self { dim: EMBEDDING_DIM, noise_sd: 0.1, latent_scale: 0.012, class_offset: 0.004 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalPhrases {
    pub positive: Vec<String>,
    pub negative: Vec<String>,
}

impl Default for SignalPhrases {
    fn default() -> Self {
        Self { positive: default_positive(), negative: default_negative() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n: usize,
    pub seed: u64,
    pub prevalence: f64,
    pub cutoff: NaiveDate,
    /// Planted log-odds change per population SD of each slot.
    pub effects: BTreeMap<String, f64>,
    /// Log-odds change per unit of the text latent.
    pub text_strength: f64,
    pub phrases: SignalPhrases,
    pub embedding: EmbeddingSim,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n: 10_000,
            seed: 7,
            prevalence: DEFAULT_PREVALENCE,
            cutoff: NaiveDate::from_ymd_opt(2015, 12, 31).expect("valid date"),
            effects: default_effects(),
            text_strength: 0.7,
            phrases: SignalPhrases::default(),
            embedding: EmbeddingSim::default(),
        }
    }
}

impl SynthConfig {
    pub fn with_n(n: usize, seed: u64) -> Self {
        Self { n, seed, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.prevalence > 0.0 && self.prevalence < 1.0) {
            return Err(Error::Config { key: "prevalence".into(), message: "must lie in (0, 1)".into() });
        }
        for slot in self.effects.keys() {
            if !SLOT_MOMENTS.iter().any(|(s, _, _)| s == slot) {
                return Err(Error::Config { key: format!("effects.{slot}"), message: "unknown slot".into() });
            }
        }
        if self.phrases.positive.is_empty() || self.phrases.negative.is_empty() {
            return Err(Error::Config { key: "phrases".into(), message: "need at least one phrase per side".into() });
        }
        if self.embedding.dim < 2 {
            return Err(Error::Config { key: "embedding.dim".into(), message: "must be at least 2".into() });
        }
        Ok(())
    }
}

/// Generative parameters, kept for assertions only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerativeTruth {
    pub intercept: f64,
    pub effects: BTreeMap<String, f64>,
    pub text_strength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthDataset {
    pub config: SynthConfig,
    pub profiles: Vec<StartupProfile>,
    pub labels: Vec<bool>,
    pub text_latent: Vec<f64>,
    pub embeddings: Vec<Vec<f64>>,
    pub truth: GenerativeTruth,
}

impl SynthDataset {
    pub fn prevalence(&self) -> f64 {
        self.labels.iter().filter(|&&b| b).count() as f64 / self.labels.len().max(1) as f64
    }

    pub fn embedding_map(&self) -> std::collections::HashMap<String, Vec<f64>> {
        self.profiles.iter().map(|p| p.id.clone()).zip(self.embeddings.iter().cloned()).collect()
    }

    pub fn write_profiles(&self, path: &Path) -> Result<()> {
        use std::io::Write;
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        for p in &self.profiles {
            serde_json::to_writer(&mut out, p)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_embeddings(&self, path: &Path) -> Result<()> {
        write_embedding_cache(
            path,
            self.profiles.iter().zip(&self.embeddings).map(|(p, e)| (p.id.as_str(), e.as_slice())),
            false,
        )
    }
}

fn neg_binomial(rng: &mut ChaCha8Rng, mean: f64, sd: f64) -> u32 {
    if mean <= 0.0 {
        return 0;
    }
    let var = (sd * sd).max(mean * 1.0001);
    let r = mean * mean / (var - mean);
    let lambda = Gamma::new(r, mean / r).expect("positive shape and scale").sample(rng);
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).map(|p| p.sample(rng) as u32).unwrap_or(0)
}

fn log_normal(rng: &mut ChaCha8Rng, mean: f64, sd: f64) -> f64 {
    let s2 = (1.0 + (sd / mean).powi(2)).ln();
    LogNormal::new(mean.ln() - s2 / 2.0, s2.sqrt()).expect("finite parameters").sample(rng)
}

fn month_start(date: NaiveDate, months_back: u32) -> NaiveDate {
    let first = date.with_day0(0).expect("day one exists");
    first.checked_sub_months(Months::new(months_back)).expect("date in range")
}

use chrono::Datelike;

/// Fundamentals only; description, events and embedding come later.
fn draw_fundamentals(rng: &mut ChaCha8Rng, id: String, cutoff: NaiveDate) -> StartupProfile {
    let age_dist = Normal::new(18.14, 10.01).expect("valid normal");
    let age = loop {
        let a: f64 = age_dist.sample(rng);
        if (1.0..=36.0).contains(&a) {
            break a.round() as u32;
        }
    };
    let founded_on = month_start(cutoff, age);

    let founders = 1 + neg_binomial(rng, 0.83, 0.97);
    let male = (0..founders).filter(|_| rng.random_bool(0.86)).count() as u32;
    let countries = 1 + (1..founders).filter(|_| rng.random_bool(0.2)).count() as u32;
    let degrees: Vec<u32> = (0..founders).map(|_| neg_binomial(rng, 0.63, 0.85)).collect();
    let degree_total: u32 = degrees.iter().sum();

    let n_rounds = if rng.random_bool(0.05) { 0 } else { 1 + neg_binomial(rng, 0.38, 0.75) };
    let lag = if n_rounds > 0 { (age as f64 * rng.random::<f64>().powf(0.55)).floor() as u32 } else { 0 };
    let last_month_back = lag;
    let first_month_back = age.max(last_month_back);
    let mut rounds = Vec::with_capacity(n_rounds as usize);
    for k in 0..n_rounds {
        let months_back = if n_rounds == 1 {
            last_month_back
        } else {
            let t = k as f64 / (n_rounds - 1) as f64;
            (first_month_back as f64 + t * (last_month_back as f64 - first_month_back as f64)).round() as u32
        };
        let investment_type = match k {
            0 if rng.random_bool(0.7) => InvestmentType::Seed,
            0 | 1 => InvestmentType::SeriesA,
            2 => InvestmentType::SeriesB,
            _ => InvestmentType::OtherPreC,
        };
        let investors = neg_binomial(rng, 1.5, 2.6);
        let known = investors.min(u32::from(rng.random_bool(0.85)) + neg_binomial(rng, 0.1, 0.4));
        let raised = log_normal(rng, 2.3, 16.0);
        let post_money = rng.random_bool(0.45).then(|| raised * (3.0 + log_normal(rng, 4.0, 8.0)));
        rounds.push(FundingRound {
            announced_on: month_start(cutoff, months_back),
            investment_type,
            raised_musd: (raised * 1e4).round() / 1e4,
            post_money_musd: post_money.map(|v| (v * 1e4).round() / 1e4),
            investor_count: investors,
            known_investor_count: known,
        });
    }

    let n_industries = 1 + (rng.random::<f64>() * 2.2) as usize;
    let mut industries = BTreeSet::new();
    let mut sectors = BTreeSet::new();
    while industries.len() < n_industries {
        let (name, sector) = INDUSTRIES[rng.random_range(0..INDUSTRIES.len())];
        industries.insert(name.to_string());
        sectors.insert(SECTORS[sector].to_string());
    }

    StartupProfile {
        id,
        founded_on,
        description: String::new(),
        has_email: rng.random_bool(0.77),
        has_phone: rng.random_bool(0.58),
        has_facebook: rng.random_bool(0.73),
        has_twitter: rng.random_bool(0.77),
        has_linkedin: rng.random_bool(0.70),
        founders_count: founders,
        founders_country_count: countries,
        founders_male_count: male,
        founders_female_count: founders - male,
        degree_count_total: degree_total,
        degree_count_max: degrees.iter().copied().max().unwrap_or(0),
        degree_count_mean: degree_total as f64 / founders as f64,
        industries,
        sectors,
        funding_rounds: rounds,
        events: Vec::new(),
    }
}

/// Planted linear score of the fundamentals (without intercept and text).
fn fundamental_score(p: &StartupProfile, cutoff: NaiveDate, effects: &BTreeMap<String, f64>) -> f64 {
    let numeric = numeric_fundamentals(p, cutoff);
    let booleans = [p.has_email, p.has_phone, p.has_facebook, p.has_twitter, p.has_linkedin];
    let mut score = 0.0;
    for (slot, effect) in effects {
        let value = if let Some(i) = NUMERIC_SLOTS.iter().position(|s| s == slot) {
            numeric[i]
        } else {
            BOOLEAN_SLOTS.iter().position(|s| s == slot).map(|i| f64::from(u8::from(booleans[i])))
        };
        let (_, mean, sd) = SLOT_MOMENTS.iter().find(|(s, _, _)| s == slot).expect("validated slot");
        // absent values sit at the population mean
        let zscore = value.map_or(0.0, |v| (v - mean) / sd);
        score += effect * zscore;
    }
    score
}

struct Draw {
    profile: StartupProfile,
    score: f64,
    z: f64,
    rng: ChaCha8Rng,
}

fn draw_row(config: &SynthConfig, stream: u64, i: usize) -> Draw {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &[stream, i as u64]));
    let profile = draw_fundamentals(&mut rng, format!("s{i:06}"), config.cutoff);
    let z: f64 = rng.sample(StandardNormal);
    let score = fundamental_score(&profile, config.cutoff, &config.effects) + config.text_strength * z;
    Draw { profile, score, z, rng }
}

/// Intercept giving the target mean success probability on a fixed
/// calibration sample, by bisection.
fn calibrate_intercept(config: &SynthConfig) -> f64 {
    let scores: Vec<f64> = (0..CALIBRATION_ROWS).into_par_iter().map(|i| draw_row(config, 1, i).score).collect();
    let mean_p = |b: f64| scores.iter().map(|s| sigmoid(b + s)).sum::<f64>() / scores.len() as f64;
    let (mut lo, mut hi) = (-20.0, 20.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mean_p(mid) < config.prevalence {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn description(rng: &mut ChaCha8Rng, label: bool, z: f64, phrases: &SignalPhrases) -> String {
    let (mean, sd) = if label { (613.32, 357.64) } else { (694.04, 462.13) };
    let target = log_normal(rng, mean, sd).clamp(40.0, 4000.0) as usize;
    let p_positive = sigmoid(1.5 * z);
    let n_signal = 2 + Poisson::new(2.0).map(|p| p.sample(rng) as usize).unwrap_or(0);
    let mut sentences: Vec<String> = (0..n_signal)
        .map(|_| {
            let list = if rng.random_bool(p_positive) { &phrases.positive } else { &phrases.negative };
            let phrase = &list[rng.random_range(0..list.len())];
            format!("We focus on {phrase}.")
        })
        .collect();
    if rng.random_bool(0.4) {
        sentences.push(format!("We are based in {}.", PLACES[rng.random_range(0..PLACES.len())]));
    }
    let mut len: usize = sentences.iter().map(|s| s.len() + 1).sum();
    while len < target {
        let s = FILLER[rng.random_range(0..FILLER.len())];
        len += s.len() + 1;
        sentences.push(s.to_string());
    }
    // interleave signal and filler
    for k in (1..sentences.len()).rev() {
        let j = rng.random_range(0..=k);
        sentences.swap(k, j);
    }
    sentences.join(" ")
}

fn outcome_events(rng: &mut ChaCha8Rng, profile: &mut StartupProfile, label: bool, cutoff: NaiveDate) {
    let after = |months: u32| cutoff.checked_add_months(Months::new(months)).expect("date in range");
    if label {
        let u: f64 = rng.random();
        let kind = if u < 0.011 {
            EventKind::Ipo
        } else if u < 0.097 {
            EventKind::Acquisition
        } else {
            EventKind::Funding
        };
        let on = after(rng.random_range(1..=60));
        profile.events.push(SuccessEvent { kind, occurred_on: on });
        if kind == EventKind::Funding {
            let investors = 1 + neg_binomial(rng, 2.0, 3.0);
            profile.funding_rounds.push(FundingRound {
                announced_on: on,
                investment_type: InvestmentType::SeriesA,
                raised_musd: (log_normal(rng, 6.0, 20.0) * 1e4).round() / 1e4,
                post_money_musd: None,
                investor_count: investors,
                known_investor_count: investors.min(1),
            });
        }
    } else if rng.random_bool(0.05) {
        // success that comes too late to count
        profile.events.push(SuccessEvent { kind: EventKind::Funding, occurred_on: after(rng.random_range(61..=84)) });
    }
}

fn unit_direction(rng: &mut ChaCha8Rng, dim: usize) -> Array1<f64> {
    let v = Array1::from_shape_fn(dim, |_| rng.sample::<f64, _>(StandardNormal));
    let norm = v.dot(&v).sqrt();
    v / norm
}

fn embedding(
    rng: &mut ChaCha8Rng,
    label: bool,
    z: f64,
    sim: &EmbeddingSim,
    u: &Array1<f64>,
    v: &Array1<f64>,
) -> Vec<f64> {
    let side = if label { 0.5 } else { -0.5 };
    (0..sim.dim)
        .map(|j| {
            let e: f64 = rng.sample(StandardNormal);
            let x = sim.class_offset * side * v[j] * (sim.dim as f64).sqrt()
                + sim.latent_scale * z * u[j] * (sim.dim as f64).sqrt()
                + sim.noise_sd * e;
            (x * 1e4).round() / 1e4
        })
        .collect()
}

/// Draws `config.n` profiles. Each row uses its own derived seed, so rows
/// are generated in parallel and identical across runs.
pub fn generate_synthetic(config: &SynthConfig) -> Result<SynthDataset> {
    config.validate()?;
    let intercept = calibrate_intercept(config);
    let mut dir_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &[2]));
    let u = unit_direction(&mut dir_rng, config.embedding.dim);
    let v = unit_direction(&mut dir_rng, config.embedding.dim);

    let rows: Vec<(StartupProfile, bool, f64, Vec<f64>)> = (0..config.n)
        .into_par_iter()
        .map(|i| {
            let Draw { mut profile, score, z, mut rng } = draw_row(config, 0, i);
            let label = rng.random_bool(sigmoid(intercept + score));
            profile.description = description(&mut rng, label, z, &config.phrases);
            outcome_events(&mut rng, &mut profile, label, config.cutoff);
            let emb = embedding(&mut rng, label, z, &config.embedding, &u, &v);
            (profile, label, z, emb)
        })
        .collect();

    let mut out = SynthDataset {
        config: config.clone(),
        profiles: Vec::with_capacity(rows.len()),
        labels: Vec::with_capacity(rows.len()),
        text_latent: Vec::with_capacity(rows.len()),
        embeddings: Vec::with_capacity(rows.len()),
        truth: GenerativeTruth { intercept, effects: config.effects.clone(), text_strength: config.text_strength },
    };
    for (p, y, z, e) in rows {
        out.profiles.push(p);
        out.labels.push(y);
        out.text_latent.push(z);
        out.embeddings.push(e);
    }
    Ok(out)
}
