//! Metrics broken down by sector, startup age, description length and
//! success event.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::metrics::{compute_metrics, MetricsReport, RoiParams};
use crate::error::{Error, Result};
use crate::profile::EventKind;

pub const DEFAULT_MIN_SUPPORT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    Sector,
    AgeBucket,
    LengthBucket,
    EventKind,
}

impl Grouping {
    pub const ALL: [Grouping; 4] = [Grouping::Sector, Grouping::AgeBucket, Grouping::LengthBucket, Grouping::EventKind];

    pub fn as_str(self) -> &'static str {
        match self {
            Grouping::Sector => "sector",
            Grouping::AgeBucket => "age_bucket",
            Grouping::LengthBucket => "length_bucket",
            Grouping::EventKind => "event_kind",
        }
    }
}

impl std::str::FromStr for Grouping {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Grouping::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown grouping key {s:?}")))
    }
}

/// What subgroup reports need to know about one scored test row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgroupRow {
    pub sectors: Vec<String>,
    pub age_months: i32,
    pub word_count: usize,
    pub event: Option<EventKind>,
    pub label: bool,
    pub score: f64,
}

pub fn age_bucket(months: i32) -> &'static str {
    match months {
        i32::MIN..=12 => "1-12",
        13..=24 => "13-24",
        25..=36 => "25-36",
        _ => "37+",
    }
}

pub fn length_bucket(words: usize) -> &'static str {
    match words {
        0..=49 => "short",
        50..=100 => "50-100",
        101..=200 => "101-200",
        _ => "201+",
    }
}

pub fn event_bucket(event: Option<EventKind>) -> &'static str {
    event.map_or("non_successful", EventKind::as_str)
}

const AGE_ORDER: [&str; 4] = ["1-12", "13-24", "25-36", "37+"];
const LENGTH_ORDER: [&str; 4] = ["short", "50-100", "101-200", "201+"];
const EVENT_ORDER: [&str; 4] = ["ipo", "acquisition", "funding", "non_successful"];
pub const UNASSIGNED_SECTOR: &str = "unassigned";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub grouping: Grouping,
    pub group: String,
    pub n: usize,
    /// Fewer rows than the minimum support.
    pub low_support: bool,
    /// Share of rows classified correctly, in percent.
    pub correct_rate: f64,
    /// Full metrics; omitted for event groups, which hold a single class.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsReport>,
}

fn group_keys(row: &SubgroupRow, grouping: Grouping) -> Vec<String> {
    match grouping {
        Grouping::Sector if row.sectors.is_empty() => vec![UNASSIGNED_SECTOR.to_string()],
        Grouping::Sector => row.sectors.clone(),
        Grouping::AgeBucket => vec![age_bucket(row.age_months).to_string()],
        Grouping::LengthBucket => vec![length_bucket(row.word_count).to_string()],
        Grouping::EventKind => vec![event_bucket(row.event).to_string()],
    }
}

/// One report per non-empty group. Sector groups may overlap (a startup can
/// belong to several sectors); the other groupings partition the rows.
pub fn subgroup_report(
    rows: &[SubgroupRow],
    grouping: Grouping,
    threshold: f64,
    roi: &RoiParams,
    min_support: usize,
) -> Result<Vec<GroupReport>> {
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, row) in rows.iter().enumerate() {
        for key in group_keys(row, grouping) {
            groups.entry(key).or_default().push(i);
        }
    }
    let order: Vec<String> = match grouping {
        Grouping::Sector => groups.keys().cloned().collect(),
        Grouping::AgeBucket => AGE_ORDER.iter().map(|s| s.to_string()).collect(),
        Grouping::LengthBucket => LENGTH_ORDER.iter().map(|s| s.to_string()).collect(),
        Grouping::EventKind => EVENT_ORDER.iter().map(|s| s.to_string()).collect(),
    };
    let mut out = Vec::new();
    for key in order {
        let Some(idx) = groups.get(&key) else {
            continue;
        };
        let y: Vec<bool> = idx.iter().map(|&i| rows[i].label).collect();
        let s: Vec<f64> = idx.iter().map(|&i| rows[i].score).collect();
        let metrics = compute_metrics(&y, &s, threshold, roi)?;
        let correct_rate = metrics.accuracy.unwrap_or(0.0);
        out.push(GroupReport {
            grouping,
            group: key,
            n: idx.len(),
            low_support: idx.len() < min_support,
            correct_rate,
            metrics: (grouping != Grouping::EventKind).then_some(metrics),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(sector: &str, age: i32, words: usize, label: bool, score: f64) -> SubgroupRow {
        SubgroupRow { sectors: vec![sector.into()], age_months: age, word_count: words, event: None, label, score }
    }

    #[test]
    fn buckets() {
        assert_eq!(length_bucket(150), "101-200");
        assert_eq!(length_bucket(49), "short");
        assert_eq!(length_bucket(50), "50-100");
        assert_eq!(length_bucket(201), "201+");
        assert_eq!(age_bucket(12), "1-12");
        assert_eq!(age_bucket(13), "13-24");
        assert_eq!(age_bucket(36), "25-36");
    }

    #[test]
    fn single_sector_equals_global() {
        let rows: Vec<SubgroupRow> =
            (0..30).map(|i| row("Energy", 10, 80, i % 3 == 0, (i as f64 * 0.37) % 1.0)).collect();
        let r = subgroup_report(&rows, Grouping::Sector, 0.5, &RoiParams::default(), 10).unwrap();
        assert_eq!(r.len(), 1);
        let y: Vec<bool> = rows.iter().map(|r| r.label).collect();
        let s: Vec<f64> = rows.iter().map(|r| r.score).collect();
        let global = compute_metrics(&y, &s, 0.5, &RoiParams::default()).unwrap();
        assert_eq!(r[0].metrics.as_ref().unwrap(), &global);
    }

    #[test]
    fn unknown_key() {
        assert!("industry".parse::<Grouping>().is_err());
        assert_eq!("age_bucket".parse::<Grouping>().unwrap(), Grouping::AgeBucket);
    }

    #[test]
    fn event_groups_report_only_correct_rate() {
        let mut rows = vec![row("A", 5, 10, true, 0.9), row("A", 5, 10, true, 0.1), row("A", 5, 10, false, 0.2)];
        rows[0].event = Some(EventKind::Ipo);
        rows[1].event = Some(EventKind::Ipo);
        let r = subgroup_report(&rows, Grouping::EventKind, 0.5, &RoiParams::default(), 10).unwrap();
        assert_eq!(r[0].group, "ipo");
        assert_eq!(r[0].correct_rate, 50.0);
        assert!(r[0].metrics.is_none() && r[0].low_support);
        assert_eq!(r[1].group, "non_successful");
        assert_eq!(r[1].correct_rate, 100.0);
    }
}
