use std::collections::BTreeSet;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::layout::{FeatureLayout, Slot, SlotKind};
use crate::error::{Error, Result};
use crate::profile::{months_between, InvestmentType, StartupProfile};

/// Numeric fundamentals in encoding order.
pub const NUMERIC_SLOTS: [&str; 17] = [
    "age_months",
    "founders_count",
    "founders_country_count",
    "founders_male_count",
    "founders_female_count",
    "degree_count_total",
    "degree_count_max",
    "degree_count_mean",
    "n_rounds",
    "raised_total_musd",
    "last_round_raised_musd",
    "last_round_post_money_musd",
    "last_round_lag_months",
    "investor_count",
    "last_round_investor_count",
    "known_investor_count",
    "last_round_known_investor_count",
];

/// Slots that can be absent and therefore carry a missing indicator.
const IMPUTABLE: [&str; 5] = [
    "last_round_raised_musd",
    "last_round_post_money_musd",
    "last_round_lag_months",
    "last_round_investor_count",
    "last_round_known_investor_count",
];

pub const BOOLEAN_SLOTS: [&str; 5] = ["has_email", "has_phone", "has_facebook", "has_twitter", "has_linkedin"];

pub const INVESTMENT_TYPE_BLOCK: &str = "last_round_investment_type";
pub const INDUSTRY_BLOCK: &str = "industries";

pub fn is_imputable(slot: &str) -> bool {
    IMPUTABLE.contains(&slot)
}

/// Raw numeric fundamentals of a censored profile, `None` where absent.
pub fn numeric_fundamentals(p: &StartupProfile, cutoff: NaiveDate) -> [Option<f64>; 17] {
    let last = p.last_round();
    let rounds = &p.funding_rounds;
    [
        Some(months_between(p.founded_on, cutoff) as f64),
        Some(p.founders_count as f64),
        Some(p.founders_country_count as f64),
        Some(p.founders_male_count as f64),
        Some(p.founders_female_count as f64),
        Some(p.degree_count_total as f64),
        Some(p.degree_count_max as f64),
        Some(p.degree_count_mean),
        Some(rounds.len() as f64),
        Some(rounds.iter().map(|r| r.raised_musd).sum()),
        last.map(|r| r.raised_musd),
        last.and_then(|r| r.post_money_musd),
        last.map(|r| months_between(r.announced_on, cutoff) as f64),
        Some(rounds.iter().map(|r| r.investor_count as f64).sum()),
        last.map(|r| r.investor_count as f64),
        Some(rounds.iter().map(|r| r.known_investor_count as f64).sum()),
        last.map(|r| r.known_investor_count as f64),
    ]
}

fn boolean_fundamentals(p: &StartupProfile) -> [bool; 5] {
    [p.has_email, p.has_phone, p.has_facebook, p.has_twitter, p.has_linkedin]
}

/// Turns censored profiles into the fundamental-variable vector.
///
/// The industry vocabulary and imputation means are fitted on training
/// profiles only. GICS sectors are not encoded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FundamentalEncoder {
    pub industry_vocabulary: Vec<String>,
    pub numeric_slots: Vec<String>,
    pub imputation_means: Vec<f64>,
}

impl FundamentalEncoder {
    pub fn fit(train: &[&StartupProfile], cutoff: NaiveDate) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::invalid("cannot fit the fundamental encoder on an empty training set"));
        }
        let industries: BTreeSet<&String> = train.iter().flat_map(|p| p.industries.iter()).collect();
        let mut sums = [0.0; 17];
        let mut counts = [0usize; 17];
        for p in train {
            for (k, v) in numeric_fundamentals(p, cutoff).into_iter().enumerate() {
                if let Some(v) = v {
                    sums[k] += v;
                    counts[k] += 1;
                }
            }
        }
        let imputation_means = sums.iter().zip(counts).map(|(s, c)| if c > 0 { s / c as f64 } else { 0.0 }).collect();
        Ok(Self {
            industry_vocabulary: industries.into_iter().cloned().collect(),
            numeric_slots: NUMERIC_SLOTS.iter().map(|s| s.to_string()).collect(),
            imputation_means,
        })
    }

    pub fn layout(&self) -> FeatureLayout {
        let mut layout = FeatureLayout::default();
        for name in &self.numeric_slots {
            let mut slots = vec![Slot { name: name.clone(), kind: SlotKind::Continuous }];
            if is_imputable(name) {
                slots.push(Slot { name: format!("{name}__missing"), kind: SlotKind::Binary });
            }
            layout.push_block(name.as_str(), slots);
        }
        for name in BOOLEAN_SLOTS {
            layout.push_scalar(name, SlotKind::Binary);
        }
        layout.push_block(
            INVESTMENT_TYPE_BLOCK,
            InvestmentType::ALL
                .iter()
                .map(|t| Slot { name: format!("investment_type={}", t.as_str()), kind: SlotKind::Binary })
                .collect(),
        );
        layout.push_block(
            INDUSTRY_BLOCK,
            self.industry_vocabulary
                .iter()
                .map(|i| Slot { name: format!("industry={i}"), kind: SlotKind::Binary })
                .collect(),
        );
        layout
    }

    pub fn width(&self) -> usize {
        self.numeric_slots.len() + IMPUTABLE.len() + BOOLEAN_SLOTS.len() + 4 + self.industry_vocabulary.len()
    }

    /// Encodes one censored profile; `cutoff` must match the censoring date.
    pub fn encode(&self, p: &StartupProfile, cutoff: NaiveDate) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.width());
        for (k, value) in numeric_fundamentals(p, cutoff).into_iter().enumerate() {
            out.push(value.unwrap_or(self.imputation_means[k]));
            if is_imputable(NUMERIC_SLOTS[k]) {
                out.push(if value.is_none() { 1.0 } else { 0.0 });
            }
        }
        out.extend(boolean_fundamentals(p).map(|b| if b { 1.0 } else { 0.0 }));
        let last_type = p.last_round().map(|r| r.investment_type);
        out.extend(InvestmentType::ALL.iter().map(|t| if Some(*t) == last_type { 1.0 } else { 0.0 }));
        out.extend(self.industry_vocabulary.iter().map(|i| if p.industries.contains(i) { 1.0 } else { 0.0 }));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::FundingRound;

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn base(id: &str, founded: &str) -> StartupProfile {
        serde_json::from_str(&format!(r#"{{"id":"{id}","founded_on":"{founded}"}}"#)).unwrap()
    }

    fn round(date: &str, raised: f64, post: Option<f64>, investors: u32) -> FundingRound {
        FundingRound {
            announced_on: d(date),
            investment_type: InvestmentType::SeriesA,
            raised_musd: raised,
            post_money_musd: post,
            investor_count: investors,
            known_investor_count: 0,
        }
    }

    fn slot(enc: &FundamentalEncoder, name: &str) -> usize {
        enc.layout().slot_names().position(|s| s == name).unwrap()
    }

    #[test]
    fn industry_vocabulary_is_sorted_union() {
        let mut a = base("a", "2014-01-01");
        a.industries = ["a", "b"].iter().map(|s| s.to_string()).collect();
        let mut b = base("b", "2014-01-01");
        b.industries = ["c", "b"].iter().map(|s| s.to_string()).collect();
        let enc = FundamentalEncoder::fit(&[&a, &b], d("2015-12-31")).unwrap();
        assert_eq!(enc.industry_vocabulary, ["a", "b", "c"]);
    }

    #[test]
    fn empty_training_set() {
        assert!(FundamentalEncoder::fit(&[], d("2015-12-31")).is_err());
    }

    #[test]
    fn all_missing_post_money() {
        let mut a = base("a", "2014-01-01");
        a.funding_rounds = vec![round("2014-06-01", 1.0, None, 2)];
        let b = base("b", "2014-01-01");
        let cutoff = d("2015-12-31");
        let enc = FundamentalEncoder::fit(&[&a, &b], cutoff).unwrap();
        assert_eq!(enc.imputation_means[11], 0.0);
        let ind = slot(&enc, "last_round_post_money_musd__missing");
        assert_eq!(enc.encode(&a, cutoff)[ind], 1.0);
        assert_eq!(enc.encode(&b, cutoff)[ind], 1.0);
    }

    #[test]
    fn five_profile_means() {
        let cutoff = d("2015-12-31");
        let mut ps: Vec<StartupProfile> = (0..5).map(|i| base(&format!("p{i}"), "2014-01-01")).collect();
        // founders 1..5 -> mean 3; rounds on p0 (raised 2, post 10), p1 (raised 4, no post)
        for (i, p) in ps.iter_mut().enumerate() {
            p.founders_count = i as u32 + 1;
        }
        ps[0].funding_rounds = vec![round("2015-01-15", 2.0, Some(10.0), 3)];
        ps[1].funding_rounds = vec![round("2015-06-15", 4.0, None, 1)];
        ps[2].founded_on = d("2015-06-01");
        let refs: Vec<&StartupProfile> = ps.iter().collect();
        let enc = FundamentalEncoder::fit(&refs, cutoff).unwrap();
        let m = &enc.imputation_means;
        assert_eq!(m[0], (23.0 * 4.0 + 6.0) / 5.0); // age
        assert_eq!(m[1], 3.0);
        assert_eq!(m[8], 2.0 / 5.0); // n_rounds
        assert_eq!(m[9], 6.0 / 5.0); // raised total
        assert_eq!(m[10], 3.0); // last round raised over 2 present
        assert_eq!(m[11], 10.0); // post money over 1 present
        assert_eq!(m[12], (11.0 + 6.0) / 2.0); // lag: 2015-01 -> 11, 2015-06 -> 6
        assert_eq!(m[13], 4.0 / 5.0);
        assert_eq!(m[14], 2.0);
    }

    #[test]
    fn encoding_cases() {
        let cutoff = d("2015-12-31");
        let mut p = base("p", "2014-01-20");
        p.has_linkedin = true;
        p.industries = ["fintech".to_string(), "unseen".to_string()].into();
        let mut q = base("q", "2014-01-01");
        q.industries = ["fintech".to_string()].into();
        q.funding_rounds = vec![round("2015-01-15", 2.0, Some(10.0), 3)];
        let enc = FundamentalEncoder::fit(&[&q], cutoff).unwrap();
        let x = enc.encode(&p, cutoff);
        assert_eq!(x.len(), enc.width());
        assert_eq!(x.len(), enc.layout().width());
        assert!(enc.layout().is_partition());

        assert_eq!(x[slot(&enc, "age_months")], 23.0);
        assert_eq!(x[slot(&enc, "has_linkedin")], 1.0);
        assert_eq!(x[slot(&enc, "has_email")], 0.0);
        assert_eq!(x[slot(&enc, "n_rounds")], 0.0);
        assert_eq!(x[slot(&enc, "last_round_raised_musd")], 2.0);
        assert_eq!(x[slot(&enc, "last_round_raised_musd__missing")], 1.0);
        assert_eq!(x[slot(&enc, "last_round_lag_months__missing")], 1.0);
        assert_eq!(x[slot(&enc, "industry=fintech")], 1.0);
        let it = enc.layout().block(INVESTMENT_TYPE_BLOCK).unwrap().range();
        assert!(x[it].iter().all(|&v| v == 0.0));

        let xq = enc.encode(&q, cutoff);
        assert_eq!(xq[slot(&enc, "investment_type=series_a")], 1.0);
        assert_eq!(xq[slot(&enc, "last_round_lag_months")], 11.0);
    }
}
