//! News media categories, outlet catalogs and user leanings.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

use crate::corpus::{Corpus, InteractionKind, KindSet};
use crate::rng;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("no host in URL `{0}`")]
    Unclassifiable(String),
    #[error("unknown media category `{0}`")]
    UnknownCategory(String),
    #[error("invalid hostname `{0}`")]
    InvalidHostname(String),
    #[error("hostname `{host}` assigned to both {first} and {second}")]
    ConflictingCategory {
        host: String,
        first: MediaCategory,
        second: MediaCategory,
    },
    #[error("catalog file: {0}")]
    Csv(#[from] csv::Error),
    #[error("catalog file: {0}")]
    Io(#[from] std::io::Error),
}

/// The eight news media categories, ordered from the right-most (fake news)
/// to the left-most (extreme bias left).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MediaCategory {
    FakeNews,
    ExtremeBiasRight,
    Right,
    RightLeaning,
    Center,
    LeftLeaning,
    Left,
    ExtremeBiasLeft,
}

impl MediaCategory {
    pub const ALL: [MediaCategory; 8] = [
        MediaCategory::FakeNews,
        MediaCategory::ExtremeBiasRight,
        MediaCategory::Right,
        MediaCategory::RightLeaning,
        MediaCategory::Center,
        MediaCategory::LeftLeaning,
        MediaCategory::Left,
        MediaCategory::ExtremeBiasLeft,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MediaCategory::FakeNews => "FakeNews",
            MediaCategory::ExtremeBiasRight => "ExtremeBiasRight",
            MediaCategory::Right => "Right",
            MediaCategory::RightLeaning => "RightLeaning",
            MediaCategory::Center => "Center",
            MediaCategory::LeftLeaning => "LeftLeaning",
            MediaCategory::Left => "Left",
            MediaCategory::ExtremeBiasLeft => "ExtremeBiasLeft",
        }
    }

    /// Position on the left-right axis in thirds: fake news is 4/3, extreme
    /// bias left is -1.
    pub fn position_thirds(self) -> i32 {
        match self {
            MediaCategory::FakeNews => 4,
            MediaCategory::ExtremeBiasRight => 3,
            MediaCategory::Right => 2,
            MediaCategory::RightLeaning => 1,
            MediaCategory::Center => 0,
            MediaCategory::LeftLeaning => -1,
            MediaCategory::Left => -2,
            MediaCategory::ExtremeBiasLeft => -3,
        }
    }
}

/// Numeric leaning of a category (`position_thirds / 3`).
pub fn category_position(c: MediaCategory) -> f64 {
    f64::from(c.position_thirds()) / 3.0
}

impl fmt::Display for MediaCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MediaCategory {
    type Err = CatalogError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        MediaCategory::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(t))
            .ok_or_else(|| CatalogError::UnknownCategory(t.to_string()))
    }
}

/// Lowercased host of a URL with one leading `www.` label removed.
///
/// Strings without a scheme are accepted when they look like a bare host
/// (`cnn.com/x`).
pub fn extract_domain(url: &str) -> Result<String, CatalogError> {
    let trimmed = url.trim();
    let parsed = match Url::parse(trimmed) {
        Ok(u) => Some(u),
        Err(url::ParseError::RelativeUrlWithoutBase)
            if trimmed.contains('.') && !trimmed.contains(char::is_whitespace) =>
        {
            Url::parse(&format!("http://{trimmed}")).ok()
        }
        Err(_) => None,
    };
    let host = parsed
        .as_ref()
        .and_then(|u| u.host_str())
        .filter(|h| !h.is_empty())
        .ok_or_else(|| CatalogError::Unclassifiable(url.to_string()))?;
    Ok(normalize_host(host))
}

fn normalize_host(host: &str) -> String {
    let host = host.trim().trim_end_matches('.').to_lowercase();
    match host.strip_prefix("www.") {
        Some(rest) if !rest.is_empty() => rest.to_string(),
        _ => host,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outlet {
    pub category: MediaCategory,
    pub tweet_count: u64,
}

/// Hostname to category mapping for one period.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OutletCatalog {
    pub label: String,
    entries: BTreeMap<String, Outlet>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CatalogRow {
    hostname: String,
    category: String,
    #[serde(default)]
    tweet_count: Option<u64>,
}

impl OutletCatalog {
    pub fn new(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            entries: BTreeMap::new(),
        }
    }

    /// Add an outlet. The hostname is normalized like [`extract_domain`].
    pub fn insert(
        &mut self,
        hostname: &str,
        category: MediaCategory,
        tweet_count: u64,
    ) -> Result<(), CatalogError> {
        if hostname.contains("://") || hostname.contains('/') || hostname.trim().is_empty() {
            return Err(CatalogError::InvalidHostname(hostname.to_string()));
        }
        let host = normalize_host(hostname);
        if let Some(prev) = self.entries.get(&host) {
            if prev.category != category {
                return Err(CatalogError::ConflictingCategory {
                    host,
                    first: prev.category,
                    second: category,
                });
            }
        }
        self.entries.insert(host, Outlet { category, tweet_count });
        Ok(())
    }

    pub fn get(&self, hostname: &str) -> Option<&Outlet> {
        self.entries.get(hostname)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Outlet)> {
        self.entries.iter().map(|(h, o)| (h.as_str(), o))
    }

    /// Read a comma-separated catalog with header `hostname,category,tweet_count`.
    /// A missing or empty `tweet_count` reads as 0.
    pub fn read_csv<R: Read>(label: impl Into<String>, reader: R) -> Result<Self, CatalogError> {
        let mut cat = Self::new(label);
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        for row in rdr.deserialize() {
            let row: CatalogRow = row?;
            let category = row.category.parse()?;
            cat.insert(&row.hostname, category, row.tweet_count.unwrap_or(0))?;
        }
        Ok(cat)
    }

    pub fn load(path: &Path) -> Result<Self, CatalogError> {
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let file = std::fs::File::open(path)?;
        Self::read_csv(label, std::io::BufReader::new(file))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), CatalogError> {
        let mut w = csv::Writer::from_writer(writer);
        for (host, o) in &self.entries {
            w.serialize(CatalogRow {
                hostname: host.clone(),
                category: o.category.to_string(),
                tweet_count: Some(o.tweet_count),
            })?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Category of the outlet a URL points to; `Ok(None)` when the host is not in the catalog.
pub fn classify_url(url: &str, catalog: &OutletCatalog) -> Result<Option<MediaCategory>, CatalogError> {
    let host = extract_domain(url)?;
    Ok(catalog.get(&host).map(|o| o.category))
}

/// Drop outlets that gather less than 1% of the cumulative tweet count of
/// the strictly more popular outlets of their category.
///
/// The most popular outlet of each category is always kept. Since counts are
/// processed in descending order, the retained outlets of a category form a
/// prefix of that order.
pub fn prune_insignificant(catalog: &OutletCatalog) -> OutletCatalog {
    let mut by_cat: BTreeMap<MediaCategory, Vec<(&str, u64)>> = BTreeMap::new();
    for (host, o) in catalog.iter() {
        by_cat.entry(o.category).or_default().push((host, o.tweet_count));
    }
    let mut out = OutletCatalog::new(catalog.label.clone());
    for (category, mut outlets) in by_cat {
        outlets.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        let mut more_popular: u64 = 0;
        let mut i = 0;
        while i < outlets.len() {
            // outlets tied on count share the same base
            let count = outlets[i].1;
            let j = i + outlets[i..].iter().take_while(|o| o.1 == count).count();
            // count < 1% of base, in integers
            if more_popular > 0 && count.saturating_mul(100) < more_popular {
                break;
            }
            for &(host, c) in &outlets[i..j] {
                out.entries.insert(host.to_string(), Outlet { category, tweet_count: c });
            }
            more_popular = more_popular.saturating_add(count * (j - i) as u64);
            i = j;
        }
    }
    out
}

/// Number of classified links per category for one user.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryCounts(pub [u64; 8]);

impl CategoryCounts {
    pub fn from_pairs<I: IntoIterator<Item = (MediaCategory, u64)>>(pairs: I) -> Self {
        let mut c = Self::default();
        for (cat, n) in pairs {
            c.0[cat.index()] += n;
        }
        c
    }

    pub fn get(&self, c: MediaCategory) -> u64 {
        self.0[c.index()]
    }

    pub fn add(&mut self, c: MediaCategory, n: u64) {
        self.0[c.index()] += n;
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }
}

/// Category with the most links; ties are broken uniformly at random,
/// reproducibly for a given seed. `None` when no link was classified.
pub fn assign_user_modal_category(links: &CategoryCounts, seed: u64) -> Option<MediaCategory> {
    let max = *links.0.iter().max()?;
    if max == 0 {
        return None;
    }
    let tied: Vec<MediaCategory> = MediaCategory::ALL
        .into_iter()
        .filter(|c| links.get(*c) == max)
        .collect();
    if tied.len() == 1 {
        return Some(tied[0]);
    }
    let mut rng = rng::seeded(seed);
    Some(tied[rng.random_range(0..tied.len())])
}

/// Weighted mean of category positions; `None` below `min_tweets` classified tweets.
pub fn average_leaning(links: &CategoryCounts, min_tweets: u64) -> Option<f64> {
    let total = links.total();
    if total == 0 || total < min_tweets {
        return None;
    }
    let thirds: i64 = MediaCategory::ALL
        .into_iter()
        .map(|c| links.get(c) as i64 * i64::from(c.position_thirds()))
        .sum();
    Some(thirds as f64 / (3.0 * total as f64))
}

/// 8x8 flow matrix: cell `[a][b]` counts users in category `a` in the first
/// assignment and `b` in the second. Users missing from either side are ignored.
pub fn category_flow<K: Eq + std::hash::Hash>(
    first: &HashMap<K, MediaCategory>,
    second: &HashMap<K, MediaCategory>,
) -> [[u64; 8]; 8] {
    let mut flow = [[0u64; 8]; 8];
    for (user, a) in first {
        if let Some(b) = second.get(user) {
            flow[a.index()][b.index()] += 1;
        }
    }
    flow
}

/// Per-user classified link counts.
///
/// Each record of the selected kinds contributes one count to every distinct
/// category among its URLs. Returns the counts and the number of URLs whose
/// host could not be parsed.
pub fn user_category_links(
    corpus: &Corpus,
    catalog: &OutletCatalog,
    kinds: &KindSet,
) -> (BTreeMap<String, CategoryCounts>, usize) {
    let mut links: BTreeMap<String, CategoryCounts> = BTreeMap::new();
    let mut unparseable = 0;
    for r in corpus.of_kinds(kinds) {
        let cats = record_categories(&r.urls, catalog, &mut unparseable);
        if cats == 0 {
            continue;
        }
        let entry = links.entry(r.user_id.clone()).or_default();
        for c in MediaCategory::ALL {
            if cats & (1 << c.index()) != 0 {
                entry.add(c, 1);
            }
        }
    }
    (links, unparseable)
}

/// Bitmask of the distinct categories among `urls`.
pub fn record_categories(urls: &[String], catalog: &OutletCatalog, unparseable: &mut usize) -> u8 {
    let mut mask = 0u8;
    for u in urls {
        match classify_url(u, catalog) {
            Ok(Some(c)) => mask |= 1 << c.index(),
            Ok(None) => {}
            Err(_) => *unparseable += 1,
        }
    }
    mask
}

/// Kinds that count as sharing a link: everything except replies.
pub fn sharing_kinds() -> KindSet {
    KindSet::only(InteractionKind::Original)
        .with(InteractionKind::Retweet)
        .with(InteractionKind::Quote)
}

/// Modal category of every user, each tie broken with a seed derived from
/// the global seed and the user id.
pub fn modal_categories(
    links: &BTreeMap<String, CategoryCounts>,
    seed: u64,
) -> BTreeMap<String, MediaCategory> {
    links
        .iter()
        .filter_map(|(user, counts)| {
            let s = rng::derive_seed(seed, rng::stable_hash(user));
            assign_user_modal_category(counts, s).map(|c| (user.clone(), c))
        })
        .collect()
}

/// Tweet and user volume of one category.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryVolume {
    pub category: MediaCategory,
    /// Tweets linking to the category (a tweet may count in several).
    pub tweets: u64,
    pub tweet_fraction: f64,
    /// Users whose modal category it is.
    pub users: u64,
    pub user_fraction: f64,
}

pub fn category_volumes(
    links: &BTreeMap<String, CategoryCounts>,
    modal: &BTreeMap<String, MediaCategory>,
) -> Vec<CategoryVolume> {
    let mut tweets = CategoryCounts::default();
    for c in links.values() {
        for cat in MediaCategory::ALL {
            tweets.add(cat, c.get(cat));
        }
    }
    let mut users = [0u64; 8];
    for c in modal.values() {
        users[c.index()] += 1;
    }
    let t_total = tweets.total().max(1) as f64;
    let u_total = (modal.len() as u64).max(1) as f64;
    MediaCategory::ALL
        .into_iter()
        .map(|c| CategoryVolume {
            category: c,
            tweets: tweets.get(c),
            tweet_fraction: tweets.get(c) as f64 / t_total,
            users: users[c.index()],
            user_fraction: users[c.index()] as f64 / u_total,
        })
        .collect()
}
