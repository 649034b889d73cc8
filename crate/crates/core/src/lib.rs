//! Analysis toolkit for news-media sharing on social platforms.
//!
//! The crate is organized along the analysis sequence:
//!
//! - [`corpus`]: interaction records (tweets, retweets, quotes) and client classes.
//! - [`media_catalog`]: hostname to media-category mapping, pruning, user leanings.
//! - [`retweet_graph`]: per-category directed retweet networks.
//! - [`influence`]: directed Collective Influence ranking, weighted PageRank, rank overlap.
//! - [`similarity`]: influencer cosine-similarity networks, Louvain, modularity, normalized cut.
//! - [`ideology`]: correspondence-analysis latent ideology of users and influencers.
//! - [`stats`]: dip test, BCa bootstrap, correlation, quote/retweet ratios.
//! - [`shifts`]: rank shifts and influencer-type shares between periods.
//! - [`synth`]: seeded two-echo-chamber corpora for validation.

pub mod corpus;
pub mod ideology;
pub mod influence;
pub mod media_catalog;
pub mod retweet_graph;
pub mod rng;
pub mod shifts;
pub mod similarity;
pub mod stats;
pub mod synth;

pub use corpus::{ClientClass, Corpus, InteractionKind, TweetRecord};
pub use media_catalog::{MediaCategory, OutletCatalog};
pub use retweet_graph::RetweetGraph;
