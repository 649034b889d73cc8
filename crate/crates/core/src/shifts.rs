//! Comparing influencer rankings and influencer types across two periods.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::influence::CiRanking;
use crate::media_catalog::MediaCategory;

#[derive(Debug, Error)]
pub enum ShiftsError {
    #[error("rankings cover different categories")]
    CategoryMismatch,
    #[error("unknown influencer type {0:?}")]
    UnknownType(String),
    #[error("label table: {0}")]
    Csv(#[from] csv::Error),
}

/// Best rank of an influencer in each period, 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankShift {
    pub user_id: String,
    pub rank_1: Option<usize>,
    pub rank_2: Option<usize>,
    pub category_1: Option<MediaCategory>,
    pub category_2: Option<MediaCategory>,
}

fn best_ranks(rankings: &BTreeMap<MediaCategory, CiRanking>, top_n: usize) -> HashMap<&str, (usize, MediaCategory)> {
    let mut best: HashMap<&str, (usize, MediaCategory)> = HashMap::new();
    // categories are visited in order, so ties keep the earlier category
    for (cat, ranking) in rankings {
        for (k, e) in ranking.entries.iter().take(top_n).enumerate() {
            let rank = k + 1;
            best.entry(e.user_id.as_str())
                .and_modify(|b| {
                    if rank < b.0 {
                        *b = (rank, *cat);
                    }
                })
                .or_insert((rank, *cat));
        }
    }
    best
}

/// One entry per influencer in the top `top_n` of any category in either
/// period, sorted by user id.
pub fn rank_shifts(
    period_1: &BTreeMap<MediaCategory, CiRanking>,
    period_2: &BTreeMap<MediaCategory, CiRanking>,
    top_n: usize,
) -> Result<Vec<RankShift>, ShiftsError> {
    if !period_1.keys().eq(period_2.keys()) {
        return Err(ShiftsError::CategoryMismatch);
    }
    let b1 = best_ranks(period_1, top_n);
    let b2 = best_ranks(period_2, top_n);
    let mut ids: Vec<&str> = b1.keys().chain(b2.keys()).copied().collect();
    ids.sort_unstable();
    ids.dedup();
    Ok(ids
        .into_iter()
        .map(|id| RankShift {
            user_id: id.to_string(),
            rank_1: b1.get(id).map(|b| b.0),
            rank_2: b2.get(id).map(|b| b.0),
            category_1: b1.get(id).map(|b| b.1),
            category_2: b2.get(id).map(|b| b.1),
        })
        .collect())
}

/// Share of second-period entries that were absent from the first period.
pub fn new_entrant_fraction(shifts: &[RankShift]) -> Option<f64> {
    let present = shifts.iter().filter(|s| s.rank_2.is_some()).count();
    let new = shifts.iter().filter(|s| s.rank_2.is_some() && s.rank_1.is_none()).count();
    (present > 0).then(|| new as f64 / present as f64)
}

pub fn write_shifts_csv<W: Write>(shifts: &[RankShift], writer: W) -> Result<(), ShiftsError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["user_id", "rank_1", "rank_2", "category_1", "category_2"])?;
    let opt = |v: Option<usize>| v.map(|r| r.to_string()).unwrap_or_default();
    let cat = |c: Option<MediaCategory>| c.map(|c| c.as_str().to_string()).unwrap_or_default();
    for s in shifts {
        w.write_record([
            s.user_id.clone(),
            opt(s.rank_1),
            opt(s.rank_2),
            cat(s.category_1),
            cat(s.category_2),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InfluencerType {
    Media,
    Political,
    Independent,
    Other,
}

impl InfluencerType {
    pub const ALL: [InfluencerType; 4] = [
        InfluencerType::Media,
        InfluencerType::Political,
        InfluencerType::Independent,
        InfluencerType::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            InfluencerType::Media => "media",
            InfluencerType::Political => "political",
            InfluencerType::Independent => "independent",
            InfluencerType::Other => "other",
        }
    }
}

impl fmt::Display for InfluencerType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InfluencerType {
    type Err = ShiftsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| ShiftsError::UnknownType(s.to_string()))
    }
}

/// Read a `user_id,type` table.
pub fn read_labels<R: Read>(reader: R) -> Result<HashMap<String, InfluencerType>, ShiftsError> {
    let mut r = csv::Reader::from_reader(reader);
    let mut out = HashMap::new();
    for row in r.records() {
        let row = row?;
        let id = row.get(0).unwrap_or_default().trim().to_string();
        let ty = row.get(1).unwrap_or_default().parse()?;
        out.insert(id, ty);
    }
    Ok(out)
}

/// Composition of one category's top influencers by type.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeShare {
    pub category: MediaCategory,
    pub counts: [usize; 4],
}

impl TypeShare {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn share(&self, t: InfluencerType) -> f64 {
        self.counts[t as usize] as f64 / self.total() as f64
    }

    pub fn shares(&self) -> [f64; 4] {
        InfluencerType::ALL.map(|t| self.share(t))
    }
}

/// Type composition of the top `top_n` influencers of every non-empty
/// category. Unlabeled influencers count as `other` and are returned as
/// diagnostics.
pub fn type_shares(
    labels: &HashMap<String, InfluencerType>,
    rankings: &BTreeMap<MediaCategory, CiRanking>,
    top_n: usize,
) -> (Vec<TypeShare>, Vec<String>) {
    let mut shares = Vec::new();
    let mut unlabeled = Vec::new();
    for (cat, ranking) in rankings {
        let mut counts = [0usize; 4];
        for e in ranking.entries.iter().take(top_n) {
            let t = match labels.get(&e.user_id) {
                Some(t) => *t,
                None => {
                    unlabeled.push(format!("{}: {} has no type label, counted as other", cat.as_str(), e.user_id));
                    InfluencerType::Other
                }
            };
            counts[t as usize] += 1;
        }
        if counts.iter().sum::<usize>() > 0 {
            shares.push(TypeShare { category: *cat, counts });
        }
    }
    (shares, unlabeled)
}

pub fn write_type_shares_csv<W: Write>(shares: &[TypeShare], writer: W) -> Result<(), ShiftsError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["category", "media", "political", "independent", "other", "n"])?;
    for s in shares {
        let mut row = vec![s.category.as_str().to_string()];
        row.extend(s.shares().iter().map(|v| v.to_string()));
        row.push(s.total().to_string());
        w.write_record(row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
