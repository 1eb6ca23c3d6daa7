//! Startup profile records, JSONL ingestion, success labelling and
//! time-aware censoring.
//!
//! A profile is read once, then censored at a prediction cutoff: funding
//! rounds announced after the cutoff are removed so that no feature can see
//! the future. Events are kept because the label is read from them.

use std::collections::BTreeSet;
use std::io::BufRead;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default labelling horizon: five years after the cutoff.
pub const DEFAULT_HORIZON_MONTHS: i32 = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvestmentType {
    Seed,
    SeriesA,
    SeriesB,
    OtherPreC,
}

impl InvestmentType {
    pub const ALL: [InvestmentType; 4] =
        [InvestmentType::Seed, InvestmentType::SeriesA, InvestmentType::SeriesB, InvestmentType::OtherPreC];

    pub fn as_str(self) -> &'static str {
        match self {
            InvestmentType::Seed => "seed",
            InvestmentType::SeriesA => "series_a",
            InvestmentType::SeriesB => "series_b",
            InvestmentType::OtherPreC => "other_pre_c",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FundingRound {
    pub announced_on: NaiveDate,
    pub investment_type: InvestmentType,
    /// Millions of USD.
    pub raised_musd: f64,
    /// Post-money valuation in millions of USD, when disclosed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post_money_musd: Option<f64>,
    #[serde(default)]
    pub investor_count: u32,
    #[serde(default)]
    pub known_investor_count: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Ipo,
    Acquisition,
    Funding,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Ipo => "ipo",
            EventKind::Acquisition => "acquisition",
            EventKind::Funding => "funding",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuccessEvent {
    pub kind: EventKind,
    pub occurred_on: NaiveDate,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StartupProfile {
    pub id: String,
    pub founded_on: NaiveDate,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub has_email: bool,
    #[serde(default)]
    pub has_phone: bool,
    #[serde(default)]
    pub has_facebook: bool,
    #[serde(default)]
    pub has_twitter: bool,
    #[serde(default)]
    pub has_linkedin: bool,
    #[serde(default)]
    pub founders_count: u32,
    #[serde(default)]
    pub founders_country_count: u32,
    #[serde(default)]
    pub founders_male_count: u32,
    #[serde(default)]
    pub founders_female_count: u32,
    #[serde(default)]
    pub degree_count_total: u32,
    #[serde(default)]
    pub degree_count_max: u32,
    #[serde(default)]
    pub degree_count_mean: f64,
    #[serde(default)]
    pub industries: BTreeSet<String>,
    /// GICS sectors. Used for subgroup reporting only.
    #[serde(default)]
    pub sectors: BTreeSet<String>,
    #[serde(default)]
    pub funding_rounds: Vec<FundingRound>,
    #[serde(default)]
    pub events: Vec<SuccessEvent>,
}

impl StartupProfile {
    /// Checks the record-level invariants and sorts funding rounds by date.
    pub fn validate(mut self) -> Result<Self, String> {
        if self.degree_count_max > self.degree_count_total {
            return Err(format!("degree_count_max > total ({} > {})", self.degree_count_max, self.degree_count_total));
        }
        if !(self.degree_count_mean >= 0.0 && self.degree_count_mean.is_finite()) {
            return Err(format!("degree_count_mean must be non-negative, got {}", self.degree_count_mean));
        }
        for round in &self.funding_rounds {
            if !(round.raised_musd >= 0.0 && round.raised_musd.is_finite()) {
                return Err(format!("negative monetary value: raised_musd = {}", round.raised_musd));
            }
            if let Some(pm) = round.post_money_musd {
                if !(pm >= 0.0 && pm.is_finite()) {
                    return Err(format!("negative monetary value: post_money_musd = {pm}"));
                }
            }
            if round.known_investor_count > round.investor_count {
                return Err(format!(
                    "known_investor_count > investor_count ({} > {})",
                    round.known_investor_count, round.investor_count
                ));
            }
        }
        self.funding_rounds.sort_by_key(|r| r.announced_on);
        Ok(self)
    }

    pub fn last_round(&self) -> Option<&FundingRound> {
        self.funding_rounds.last()
    }

    pub fn word_count(&self) -> usize {
        self.description.split_whitespace().count()
    }
}

/// A problem found on one input line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub line: usize,
    pub message: String,
}

/// Reads one JSON profile per line.
///
/// Blank lines are ignored. In strict mode the first bad line aborts with
/// [`Error::Parse`]; otherwise bad lines are skipped and reported.
pub fn parse_profiles<R: BufRead>(source: R, strict: bool) -> Result<(Vec<StartupProfile>, Vec<Diagnostic>)> {
    let mut profiles = Vec::new();
    let mut diagnostics = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<StartupProfile>(&line)
            .map_err(|e| format!("malformed record at column {}: {e}", e.column()))
            .and_then(StartupProfile::validate);
        match parsed {
            Ok(p) => profiles.push(p),
            Err(message) if strict => return Err(Error::Parse { line: line_no, message }),
            Err(message) => diagnostics.push(Diagnostic { line: line_no, message }),
        }
    }
    Ok((profiles, diagnostics))
}

/// Whole-month difference `to - from`, ignoring the day of month.
pub fn months_between(from: NaiveDate, to: NaiveDate) -> i32 {
    12 * (to.year() - from.year()) + (to.month() as i32 - from.month() as i32)
}

/// Removes every funding round announced after `cutoff`.
pub fn apply_cutoff(profile: &StartupProfile, cutoff: NaiveDate) -> Result<StartupProfile> {
    if cutoff < profile.founded_on {
        return Err(Error::CutoffBeforeFounding { id: profile.id.clone(), cutoff, founded_on: profile.founded_on });
    }
    let mut censored = profile.clone();
    censored.funding_rounds.retain(|r| r.announced_on <= cutoff);
    Ok(censored)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Label {
    Unsuccessful = 0,
    Successful = 1,
}

impl Label {
    pub fn value(self) -> u8 {
        self as u8
    }

    pub fn is_positive(self) -> bool {
        self == Label::Successful
    }
}

impl From<bool> for Label {
    fn from(b: bool) -> Self {
        if b {
            Label::Successful
        } else {
            Label::Unsuccessful
        }
    }
}

impl From<Label> for u8 {
    fn from(l: Label) -> u8 {
        l.value()
    }
}

impl TryFrom<u8> for Label {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            0 => Ok(Label::Unsuccessful),
            1 => Ok(Label::Successful),
            other => Err(format!("label must be 0 or 1, got {other}")),
        }
    }
}

fn in_horizon(event: &SuccessEvent, cutoff: NaiveDate, horizon_months: i32) -> bool {
    event.occurred_on > cutoff && months_between(cutoff, event.occurred_on) <= horizon_months
}

/// 1 iff a success event falls in `(cutoff, cutoff + horizon_months]`.
pub fn derive_label(profile: &StartupProfile, cutoff: NaiveDate, horizon_months: i32) -> Label {
    Label::from(profile.events.iter().any(|e| in_horizon(e, cutoff, horizon_months)))
}

/// The most decisive success event inside the horizon (IPO over
/// acquisition over funding), if any.
pub fn success_event_kind(profile: &StartupProfile, cutoff: NaiveDate, horizon_months: i32) -> Option<EventKind> {
    profile.events.iter().filter(|e| in_horizon(e, cutoff, horizon_months)).map(|e| e.kind).min()
}

/// A censored profile with its outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledProfile {
    pub profile: StartupProfile,
    pub label: Label,
    pub event: Option<EventKind>,
}

/// Censors and labels raw profiles for one cutoff.
///
/// Records founded after the cutoff, or that already went public or were
/// acquired on or before it, are dropped with a diagnostic whose `line` is
/// the record's position in `raw` (1-based).
pub fn prepare_dataset(
    raw: &[StartupProfile],
    cutoff: NaiveDate,
    horizon_months: i32,
) -> (Vec<LabeledProfile>, Vec<Diagnostic>) {
    let mut out = Vec::with_capacity(raw.len());
    let mut diagnostics = Vec::new();
    for (idx, p) in raw.iter().enumerate() {
        let exited = p
            .events
            .iter()
            .any(|e| e.occurred_on <= cutoff && matches!(e.kind, EventKind::Ipo | EventKind::Acquisition));
        if exited {
            diagnostics
                .push(Diagnostic { line: idx + 1, message: format!("{}: exited before cutoff, excluded", p.id) });
            continue;
        }
        match apply_cutoff(p, cutoff) {
            Ok(profile) => out.push(LabeledProfile {
                label: derive_label(p, cutoff, horizon_months),
                event: success_event_kind(p, cutoff, horizon_months),
                profile,
            }),
            Err(e) => diagnostics.push(Diagnostic { line: idx + 1, message: e.to_string() }),
        }
    }
    (out, diagnostics)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn round(date: &str) -> FundingRound {
        FundingRound {
            announced_on: d(date),
            investment_type: InvestmentType::Seed,
            raised_musd: 1.0,
            post_money_musd: None,
            investor_count: 1,
            known_investor_count: 0,
        }
    }

    fn profile() -> StartupProfile {
        serde_json::from_str(r#"{"id":"s1","founded_on":"2014-01-15"}"#).unwrap()
    }

    #[test]
    fn empty_stream() {
        let (p, d) = parse_profiles("".as_bytes(), true).unwrap();
        assert!(p.is_empty() && d.is_empty());
    }

    #[test]
    fn degree_invariant_lenient_and_strict() {
        let line = r#"{"id":"x","founded_on":"2014-01-01","degree_count_max":3,"degree_count_total":2}"#;
        let (p, diags) = parse_profiles(line.as_bytes(), false).unwrap();
        assert!(p.is_empty());
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].line, 1);
        assert!(diags[0].message.contains("degree_count_max > total"));

        match parse_profiles(line.as_bytes(), true) {
            Err(Error::Parse { line: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_and_unknown_type_and_negative_money() {
        let src = [
            r#"{"id":"a","founded_on":"2014-01-01""#,
            r#"{"id":"b","founded_on":"2014-01-01","funding_rounds":[{"announced_on":"2014-02-01","investment_type":"series_z","raised_musd":1.0}]}"#,
            r#"{"id":"c","founded_on":"2014-01-01","funding_rounds":[{"announced_on":"2014-02-01","investment_type":"seed","raised_musd":-1.0}]}"#,
            r#"{"id":"d","founded_on":"2014-01-01"}"#,
        ]
        .join("\n");
        let (p, diags) = parse_profiles(src.as_bytes(), false).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(diags.iter().map(|d| d.line).collect::<Vec<_>>(), vec![1, 2, 3]);
        assert!(diags[1].message.contains("series_z"));
        assert!(diags[2].message.contains("negative monetary value"));
    }

    #[test]
    fn rounds_sorted_on_ingest() {
        let line = r#"{"id":"a","founded_on":"2013-01-01","funding_rounds":[
            {"announced_on":"2015-03-01","investment_type":"series_a","raised_musd":2.0},
            {"announced_on":"2013-06-01","investment_type":"seed","raised_musd":0.5},
            {"announced_on":"2014-09-01","investment_type":"other_pre_c","raised_musd":1.0}]}"#
            .replace('\n', "");
        let (p, _) = parse_profiles(line.as_bytes(), true).unwrap();
        let dates: Vec<_> = p[0].funding_rounds.iter().map(|r| r.announced_on).collect();
        assert_eq!(dates, vec![d("2013-06-01"), d("2014-09-01"), d("2015-03-01")]);
    }

    #[test]
    fn cutoff_filters_rounds() {
        let mut p = profile();
        p.funding_rounds = vec![round("2015-06-01"), round("2016-03-01")];
        let c = apply_cutoff(&p, d("2015-12-31")).unwrap();
        assert_eq!(c.funding_rounds, vec![round("2015-06-01")]);

        let empty = profile();
        assert_eq!(apply_cutoff(&empty, d("2015-12-31")).unwrap(), empty);

        assert!(matches!(apply_cutoff(&p, d("2013-12-31")), Err(Error::CutoffBeforeFounding { .. })));
    }

    #[test]
    fn label_boundaries() {
        let cutoff = d("2015-12-31");
        let mut p = profile();
        p.events = vec![SuccessEvent { kind: EventKind::Funding, occurred_on: d("2016-06-10") }];
        assert_eq!(derive_label(&p, cutoff, 60), Label::Successful);

        p.events = vec![SuccessEvent { kind: EventKind::Funding, occurred_on: d("2015-06-10") }];
        assert_eq!(derive_label(&p, cutoff, 60), Label::Unsuccessful);

        // 2020-12 is exactly 60 months after 2015-12; 2021-01 is 61.
        p.events = vec![SuccessEvent { kind: EventKind::Acquisition, occurred_on: d("2020-12-31") }];
        assert_eq!(derive_label(&p, cutoff, 60), Label::Successful);
        p.events = vec![SuccessEvent { kind: EventKind::Acquisition, occurred_on: d("2021-01-01") }];
        assert_eq!(derive_label(&p, cutoff, 60), Label::Unsuccessful);
    }

    #[test]
    fn event_kind_priority() {
        let cutoff = d("2015-12-31");
        let mut p = profile();
        p.events = vec![
            SuccessEvent { kind: EventKind::Funding, occurred_on: d("2016-02-01") },
            SuccessEvent { kind: EventKind::Acquisition, occurred_on: d("2018-02-01") },
        ];
        assert_eq!(success_event_kind(&p, cutoff, 60), Some(EventKind::Acquisition));
    }

    #[test]
    fn prepare_excludes_prior_exits() {
        let cutoff = d("2015-12-31");
        let mut exited = profile();
        exited.events = vec![SuccessEvent { kind: EventKind::Ipo, occurred_on: d("2015-05-01") }];
        let mut funded = profile();
        funded.id = "s2".into();
        funded.events = vec![SuccessEvent { kind: EventKind::Funding, occurred_on: d("2015-05-01") }];
        let (ds, diags) = prepare_dataset(&[exited, funded], cutoff, 60);
        assert_eq!(ds.len(), 1);
        assert_eq!(ds[0].profile.id, "s2");
        assert_eq!(ds[0].label, Label::Unsuccessful);
        assert_eq!(diags.len(), 1);
    }

    #[test]
    fn label_serializes_as_integer() {
        assert_eq!(serde_json::to_string(&Label::Successful).unwrap(), "1");
        assert!(serde_json::from_str::<Label>("2").is_err());
    }
}
