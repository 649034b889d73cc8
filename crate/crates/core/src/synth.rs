//! Seeded two-sided corpora with a tunable amount of cross-side retweeting.
//!
//! Every user belongs to one side and retweets influencers of the other side
//! with probability `epsilon`. The ground truth travels in separate tables so
//! the generated corpus looks exactly like real input.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, InteractionKind, TweetRecord, DEFAULT_OFFICIAL_CLIENTS};
use crate::ideology::{IdeologyError, RetweetMatrix};
use crate::media_catalog::{MediaCategory, OutletCatalog};
use crate::rng;
use crate::stats::Side;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Matrix(#[from] IdeologyError),
    #[error("ground truth table: {0}")]
    Csv(#[from] csv::Error),
}

/// Per-side category weights used to tag shared URLs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryMix {
    pub left: [f64; 8],
    pub right: [f64; 8],
}

impl Default for CategoryMix {
    fn default() -> Self {
        // index order follows MediaCategory::ALL, right-most first
        Self {
            left: [0.0, 0.0, 0.0, 0.0, 0.2, 0.3, 0.4, 0.1],
            right: [0.25, 0.15, 0.4, 0.15, 0.05, 0.0, 0.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_users: usize,
    pub n_influencers: usize,
    /// Probability that a retweet goes to the other side.
    pub epsilon: f64,
    /// Exponent of the discrete power law for events per user.
    pub activity_exponent: f64,
    pub activity_min: usize,
    pub activity_max: usize,
    /// Explicit attractiveness per influencer; empty means Zipf-like weights
    /// `1/(rank+1)^popularity_exponent` within each side.
    pub influencer_popularity: Vec<f64>,
    pub popularity_exponent: f64,
    /// Fraction of users on the right.
    pub side_split: f64,
    pub unofficial_fraction: f64,
    pub quote_fraction: f64,
    /// Probability that an event carries a news link.
    pub url_fraction: f64,
    pub category_mix: CategoryMix,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_users: 10_000,
            n_influencers: 40,
            epsilon: 0.1,
            activity_exponent: 2.5,
            activity_min: 3,
            activity_max: 1_000,
            influencer_popularity: Vec::new(),
            popularity_exponent: 0.8,
            side_split: 0.5,
            unofficial_fraction: 0.05,
            quote_fraction: 0.1,
            url_fraction: 0.9,
            category_mix: CategoryMix::default(),
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::Invalid(m.to_string()));
        let unit = |p: f64| (0.0..=1.0).contains(&p);
        if self.n_users == 0 {
            return bad("n_users must be positive");
        }
        if self.n_influencers < 4 {
            return bad("need at least 4 influencers");
        }
        if !(0.0..=0.5).contains(&self.epsilon) {
            return bad("epsilon must lie in [0, 0.5]");
        }
        if !(self.activity_exponent > 1.0) {
            return bad("activity exponent must exceed 1");
        }
        if self.activity_min == 0 || self.activity_max < self.activity_min {
            return bad("activity bounds must satisfy 1 ≤ min ≤ max");
        }
        if !(unit(self.side_split) && unit(self.unofficial_fraction) && unit(self.quote_fraction) && unit(self.url_fraction)) {
            return bad("fractions must lie in [0, 1]");
        }
        if !self.influencer_popularity.is_empty() {
            if self.influencer_popularity.len() != self.n_influencers {
                return bad("influencer_popularity needs one weight per influencer");
            }
            if self.influencer_popularity.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                return bad("influencer_popularity weights must be positive");
            }
        }
        for mix in [&self.category_mix.left, &self.category_mix.right] {
            if mix.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || mix.iter().sum::<f64>() <= 0.0 {
                return bad("category mix weights must be non-negative with a positive sum");
            }
        }
        Ok(())
    }

    /// Influencers `0..n_left` are left, the rest right.
    pub fn n_left_influencers(&self) -> usize {
        self.n_influencers / 2
    }
}

pub fn user_id(i: usize) -> String {
    format!("user{i:06}")
}

pub fn influencer_id(j: usize) -> String {
    format!("inf{j:04}")
}

/// Outlets available to the generator: three per category.
pub fn synthetic_catalog() -> OutletCatalog {
    let mut cat = OutletCatalog::new("synthetic");
    for c in MediaCategory::ALL {
        for k in 0..3u64 {
            let host = format!("{}-{k}.example", c.as_str().to_lowercase());
            cat.insert(&host, c, 1000 - 100 * k).expect("synthetic hosts are valid and unique");
        }
    }
    cat
}

fn outlet_host(c: MediaCategory, k: usize) -> String {
    format!("{}-{k}.example", c.as_str().to_lowercase())
}

const UNOFFICIAL_CLIENTS: [&str; 3] = ["dlvr.it", "IFTTT", "twitterfeed"];
const EPOCH: f64 = 1_577_836_800.0;

/// A generated corpus with its ground truth.
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub corpus: Corpus,
    pub user_sides: BTreeMap<String, Side>,
    pub influencer_sides: BTreeMap<String, Side>,
    pub catalog: OutletCatalog,
}

/// Draw from the truncated discrete power law `P(k) ∝ k^{-α}` on `[min, max]`
/// by continuous inversion with rounding.
fn activity(rng: &mut rng::Rng, alpha: f64, min: usize, max: usize) -> usize {
    let u: f64 = rng.random();
    let x = (min as f64 - 0.5) * (1.0 - u).powf(-1.0 / (alpha - 1.0)) + 0.5;
    (x.floor() as usize).clamp(min, max)
}

fn side_weights(config: &SynthConfig) -> [(Vec<usize>, WeightedIndex<f64>); 2] {
    let n_left = config.n_left_influencers();
    let make = |members: Vec<usize>| {
        let w: Vec<f64> = members
            .iter()
            .enumerate()
            .map(|(rank, &j)| {
                if config.influencer_popularity.is_empty() {
                    1.0 / ((rank + 1) as f64).powf(config.popularity_exponent)
                } else {
                    config.influencer_popularity[j]
                }
            })
            .collect();
        let dist = WeightedIndex::new(&w).expect("validated weights");
        (members, dist)
    };
    [make((0..n_left).collect()), make((n_left..config.n_influencers).collect())]
}

fn other(side: Side) -> Side {
    match side {
        Side::Left => Side::Right,
        Side::Right => Side::Left,
    }
}

fn side_index(side: Side) -> usize {
    match side {
        Side::Left => 0,
        Side::Right => 1,
    }
}

/// Generate a corpus. Users are produced in parallel from per-user derived
/// seeds and emitted in (user id, event index) order.
pub fn generate_corpus(config: &SynthConfig) -> Result<SynthOutput, SynthError> {
    config.validate()?;
    let weights = side_weights(config);
    let mix = [
        WeightedIndex::new(config.category_mix.left).expect("validated mix"),
        WeightedIndex::new(config.category_mix.right).expect("validated mix"),
    ];
    let per_user: Vec<(Side, Vec<TweetRecord>)> = (0..config.n_users)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::seeded(rng::derive_seed(config.seed, i as u64));
            let side = if rng.random_bool(config.side_split) { Side::Right } else { Side::Left };
            let uid = user_id(i);
            let k = activity(&mut rng, config.activity_exponent, config.activity_min, config.activity_max);
            let records = (0..k)
                .map(|e| {
                    let target = if rng.random_bool(config.epsilon) { other(side) } else { side };
                    let (members, dist) = &weights[side_index(target)];
                    let inf = members[dist.sample(&mut rng)];
                    let kind = if rng.random_bool(config.quote_fraction) {
                        InteractionKind::Quote
                    } else {
                        InteractionKind::Retweet
                    };
                    let client = if rng.random_bool(config.unofficial_fraction) {
                        UNOFFICIAL_CLIENTS[rng.random_range(0..UNOFFICIAL_CLIENTS.len())]
                    } else {
                        DEFAULT_OFFICIAL_CLIENTS[rng.random_range(0..DEFAULT_OFFICIAL_CLIENTS.len())]
                    };
                    let urls = if rng.random_bool(config.url_fraction) {
                        let c = MediaCategory::ALL[mix[side_index(target)].sample(&mut rng)];
                        let host = outlet_host(c, rng.random_range(0..3));
                        vec![format!("https://{host}/story/{}", rng.random_range(0..100_000u32))]
                    } else {
                        Vec::new()
                    };
                    TweetRecord {
                        tweet_id: format!("{uid}-{e:05}"),
                        user_id: uid.clone(),
                        timestamp: EPOCH + (i as f64) + e as f64 * 3600.0,
                        kind,
                        source_user_id: Some(influencer_id(inf)),
                        urls,
                        client: client.to_string(),
                        verified: None,
                        text: None,
                    }
                })
                .collect();
            (side, records)
        })
        .collect();

    let n_left = config.n_left_influencers();
    let influencer_sides = (0..config.n_influencers)
        .map(|j| (influencer_id(j), if j < n_left { Side::Left } else { Side::Right }))
        .collect();
    let mut user_sides = BTreeMap::new();
    let mut records = Vec::new();
    for (i, (side, recs)) in per_user.into_iter().enumerate() {
        user_sides.insert(user_id(i), side);
        records.extend(recs);
    }
    Ok(SynthOutput {
        corpus: Corpus::new(records),
        user_sides,
        influencer_sides,
        catalog: synthetic_catalog(),
    })
}

/// Write an `(id, side)` table.
pub fn write_sides_csv<W: Write>(sides: &BTreeMap<String, Side>, writer: W) -> Result<(), SynthError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["id", "side"])?;
    for (id, s) in sides {
        w.write_record([id.as_str(), if *s == Side::Left { "left" } else { "right" }])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_sides_csv<R: Read>(reader: R) -> Result<BTreeMap<String, Side>, SynthError> {
    let mut r = csv::Reader::from_reader(reader);
    let mut out = BTreeMap::new();
    for row in r.records() {
        let row = row?;
        let side = match row.get(1) {
            Some("left") => Side::Left,
            Some("right") => Side::Right,
            other => return Err(SynthError::Invalid(format!("unknown side {other:?}"))),
        };
        out.insert(row.get(0).unwrap_or_default().to_string(), side);
    }
    Ok(out)
}

/// A two-block user × influencer matrix with known sides.
#[derive(Debug, Clone)]
pub struct PlantedMatrix {
    pub matrix: RetweetMatrix,
    /// Side of every matrix row, aligned with `matrix.rows`.
    pub user_sides: Vec<Side>,
    pub influencer_sides: BTreeMap<String, Side>,
    /// Per-user mean side of the retweeted influencers (+1 right, −1 left),
    /// a data-derived stand-in for media leaning.
    pub leanings: HashMap<String, f64>,
}

/// Users split evenly; each makes `events_per_user` retweets, crossing sides
/// with probability `epsilon`, influencers uniform within a side. Rows
/// failing `min_distinct` are dropped.
pub fn planted_matrix(
    n_users: usize,
    n_influencers: usize,
    epsilon: f64,
    events_per_user: usize,
    min_distinct: usize,
    seed: u64,
) -> Result<PlantedMatrix, SynthError> {
    if n_influencers < 4 || !(0.0..=0.5).contains(&epsilon) || n_users < 2 {
        return Err(SynthError::Invalid("planted matrix needs ≥ 4 influencers, ≥ 2 users, ε in [0, 0.5]".into()));
    }
    let n_left = n_influencers / 2;
    let mut rng = rng::seeded(seed);
    let mut entries: BTreeMap<(String, String), f64> = BTreeMap::new();
    let mut sides = HashMap::new();
    let mut leanings = HashMap::new();
    for i in 0..n_users {
        let side = if i % 2 == 0 { Side::Left } else { Side::Right };
        let uid = user_id(i);
        let mut lean = 0.0;
        for _ in 0..events_per_user {
            let target = if rng.random_bool(epsilon) { other(side) } else { side };
            let j = match target {
                Side::Left => rng.random_range(0..n_left),
                Side::Right => rng.random_range(n_left..n_influencers),
            };
            lean += if target == Side::Right { 1.0 } else { -1.0 };
            *entries.entry((uid.clone(), influencer_id(j))).or_default() += 1.0;
        }
        leanings.insert(uid.clone(), lean / events_per_user.max(1) as f64);
        sides.insert(uid, side);
    }
    let cols: BTreeSet<String> = (0..n_influencers).map(influencer_id).collect();
    let (matrix, _) = RetweetMatrix::from_entries(&entries, &cols, min_distinct)?;
    let user_sides = matrix.rows.iter().map(|u| sides[u]).collect();
    let influencer_sides = (0..n_influencers)
        .map(|j| (influencer_id(j), if j < n_left { Side::Left } else { Side::Right }))
        .collect();
    Ok(PlantedMatrix {
        matrix,
        user_sides,
        influencer_sides,
        leanings,
    })
}
