//! Directed retweet networks.
//!
//! An edge `v -> u` means user `u` retweeted (or quoted) user `v` at least once
//! with a link into the network's media category, so edges follow the flow of
//! information. The graph is simple: duplicate events collapse into the edge
//! weight and self-retweets are dropped.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, KindSet};
use crate::media_catalog::{record_categories, MediaCategory, OutletCatalog};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph file: {0}")]
    Csv(#[from] csv::Error),
    #[error("graph file: {0}")]
    Io(#[from] std::io::Error),
    #[error("edge references unknown node `{0}`")]
    UnknownNode(String),
    #[error("invalid edge {source_id} -> {target}: {reason}")]
    InvalidEdge {
        source_id: String,
        target: String,
        reason: &'static str,
    },
}

/// Directed simple graph over user ids with positive integer edge weights.
///
/// Nodes are indexed densely in ascending user-id order, so comparing node
/// indices is the same as comparing ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RetweetGraph {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    verified: Vec<Option<bool>>,
    out_adj: Vec<Vec<(usize, u64)>>,
    in_adj: Vec<Vec<usize>>,
    edge_count: usize,
}

impl RetweetGraph {
    /// Build from (source, target, weight) triples; repeated pairs add up.
    pub fn from_weighted_edges<'a, I>(edges: I, verified: &HashMap<String, bool>) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (&'a str, &'a str, u64)>,
    {
        let mut acc: BTreeMap<(&str, &str), u64> = BTreeMap::new();
        for (s, t, w) in edges {
            if s == t {
                return Err(GraphError::InvalidEdge {
                    source_id: s.to_string(),
                    target: t.to_string(),
                    reason: "self-loop",
                });
            }
            if w == 0 {
                return Err(GraphError::InvalidEdge {
                    source_id: s.to_string(),
                    target: t.to_string(),
                    reason: "zero weight",
                });
            }
            *acc.entry((s, t)).or_default() += w;
        }
        let mut names: Vec<&str> = acc.keys().flat_map(|(s, t)| [*s, *t]).collect();
        names.sort_unstable();
        names.dedup();
        Ok(Self::assemble(names, acc.into_iter().map(|((s, t), w)| (s, t, w)), verified))
    }

    fn assemble<'a>(
        names: Vec<&'a str>,
        edges: impl Iterator<Item = (&'a str, &'a str, u64)>,
        verified: &HashMap<String, bool>,
    ) -> Self {
        let ids: Vec<String> = names.iter().map(|s| s.to_string()).collect();
        let index: HashMap<String, usize> = ids.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        let n = ids.len();
        let mut out_adj = vec![Vec::new(); n];
        let mut in_adj = vec![Vec::new(); n];
        let mut edge_count = 0;
        for (s, t, w) in edges {
            let (si, ti) = (index[s], index[t]);
            out_adj[si].push((ti, w));
            in_adj[ti].push(si);
            edge_count += 1;
        }
        for a in &mut out_adj {
            a.sort_unstable();
        }
        for a in &mut in_adj {
            a.sort_unstable();
        }
        let verified = ids.iter().map(|id| verified.get(id).copied()).collect();
        Self {
            ids,
            index,
            verified,
            out_adj,
            in_adj,
            edge_count,
        }
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, node: usize) -> &str {
        &self.ids[node]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn node(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn verified(&self, node: usize) -> Option<bool> {
        self.verified[node]
    }

    /// Retweeters of `node` with edge weights.
    pub fn out_edges(&self, node: usize) -> &[(usize, u64)] {
        &self.out_adj[node]
    }

    /// Users retweeted by `node`.
    pub fn in_neighbors(&self, node: usize) -> &[usize] {
        &self.in_adj[node]
    }

    pub fn out_degree(&self, node: usize) -> usize {
        self.out_adj[node].len()
    }

    pub fn in_degree(&self, node: usize) -> usize {
        self.in_adj[node].len()
    }

    pub fn weight(&self, source: usize, target: usize) -> Option<u64> {
        let adj = &self.out_adj[source];
        adj.binary_search_by_key(&target, |e| e.0).ok().map(|i| adj[i].1)
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.out_adj
            .iter()
            .enumerate()
            .flat_map(|(s, adj)| adj.iter().map(move |&(t, w)| (s, t, w)))
    }

    /// Copy of the graph with every weight multiplied by `factor`.
    pub fn scale_weights(&self, factor: u64) -> Self {
        let mut g = self.clone();
        for adj in &mut g.out_adj {
            for e in adj.iter_mut() {
                e.1 *= factor;
            }
        }
        g
    }

    /// Copy of the graph without `node` and its incident edges. Remaining
    /// nodes keep their ids but are re-indexed.
    pub fn remove_node(&self, node: usize) -> Self {
        let gone = self.id(node);
        let names: Vec<&str> = self.ids.iter().map(String::as_str).filter(|s| *s != gone).collect();
        let edges = self
            .edges()
            .filter(|&(s, t, _)| s != node && t != node)
            .map(|(s, t, w)| (self.id(s), self.id(t), w));
        let verified = self.verified_map();
        Self::assemble(names, edges, &verified)
    }

    fn verified_map(&self) -> HashMap<String, bool> {
        self.ids
            .iter()
            .zip(&self.verified)
            .filter_map(|(id, v)| v.map(|v| (id.clone(), v)))
            .collect()
    }

    pub fn write_edges_csv<W: Write>(&self, writer: W) -> Result<(), GraphError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["source", "target", "weight"])?;
        for (s, t, wt) in self.edges() {
            w.write_record([self.id(s), self.id(t), &wt.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_nodes_csv<W: Write>(&self, writer: W) -> Result<(), GraphError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["user_id", "verified"])?;
        for (id, v) in self.ids.iter().zip(&self.verified) {
            let v = v.map(|b| b.to_string()).unwrap_or_default();
            w.write_record([id.as_str(), &v])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read the edge list and node attribute tables written by
    /// [`write_edges_csv`](Self::write_edges_csv) and
    /// [`write_nodes_csv`](Self::write_nodes_csv).
    pub fn read_csv<R1: Read, R2: Read>(edges: R1, nodes: R2) -> Result<Self, GraphError> {
        #[derive(Deserialize)]
        struct NodeRow {
            user_id: String,
            verified: Option<bool>,
        }
        #[derive(Deserialize)]
        struct EdgeRow {
            source: String,
            target: String,
            weight: u64,
        }
        let mut verified = HashMap::new();
        let mut known = Vec::new();
        for row in csv::Reader::from_reader(nodes).deserialize() {
            let row: NodeRow = row?;
            if let Some(v) = row.verified {
                verified.insert(row.user_id.clone(), v);
            }
            known.push(row.user_id);
        }
        let known_set: std::collections::HashSet<&str> = known.iter().map(String::as_str).collect();
        let rows: Vec<EdgeRow> = csv::Reader::from_reader(edges)
            .deserialize()
            .collect::<Result<_, _>>()?;
        for r in &rows {
            for id in [&r.source, &r.target] {
                if !known_set.contains(id.as_str()) {
                    return Err(GraphError::UnknownNode(id.clone()));
                }
            }
        }
        let g = Self::from_weighted_edges(
            rows.iter().map(|r| (r.source.as_str(), r.target.as_str(), r.weight)),
            &verified,
        )?;
        if g.node_count() == known.len() {
            return Ok(g);
        }
        // isolated nodes listed in the node table
        let mut names: Vec<&str> = known.iter().map(String::as_str).collect();
        names.sort_unstable();
        names.dedup();
        let edges: Vec<(String, String, u64)> = g.edges().map(|(s, t, w)| (g.id(s).to_string(), g.id(t).to_string(), w)).collect();
        Ok(Self::assemble(
            names,
            edges.iter().map(|(s, t, w)| (s.as_str(), t.as_str(), *w)),
            &verified,
        ))
    }
}

/// Unweighted (in, out) degree of every node.
pub fn degrees(g: &RetweetGraph) -> Vec<(usize, usize)> {
    (0..g.node_count()).map(|i| (g.in_degree(i), g.out_degree(i))).collect()
}

/// Size and degree heterogeneity of a graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphSummary {
    pub nodes: usize,
    pub edges: usize,
    pub mean_degree: f64,
    /// σ(k_in)/⟨k⟩; `None` for an edgeless graph.
    pub in_heterogeneity: Option<f64>,
    /// σ(k_out)/⟨k⟩; `None` for an edgeless graph.
    pub out_heterogeneity: Option<f64>,
    pub max_in: usize,
    pub max_out: usize,
}

pub fn summarize(g: &RetweetGraph) -> GraphSummary {
    let n = g.node_count();
    let degs = degrees(g);
    let mean = if n == 0 { 0.0 } else { g.edge_count() as f64 / n as f64 };
    let hetero = |sel: fn(&(usize, usize)) -> usize| {
        if mean <= 0.0 {
            return None;
        }
        let var = degs.iter().map(|d| (sel(d) as f64 - mean).powi(2)).sum::<f64>() / n as f64;
        Some(var.sqrt() / mean)
    };
    GraphSummary {
        nodes: n,
        edges: g.edge_count(),
        mean_degree: mean,
        in_heterogeneity: hetero(|d| d.0),
        out_heterogeneity: hetero(|d| d.1),
        max_in: degs.iter().map(|d| d.0).max().unwrap_or(0),
        max_out: degs.iter().map(|d| d.1).max().unwrap_or(0),
    }
}

/// Build the retweet network of every category in one pass over the corpus.
///
/// A record with links into several categories adds an edge to each of
/// their networks.
pub fn build_category_graphs(
    corpus: &Corpus,
    catalog: &OutletCatalog,
    kinds: &KindSet,
) -> BTreeMap<MediaCategory, RetweetGraph> {
    let mut weights: [BTreeMap<(&str, &str), u64>; 8] = Default::default();
    let mut verified: HashMap<String, bool> = HashMap::new();
    let mut unparseable = 0;
    for r in corpus.iter() {
        if let Some(v) = r.verified {
            verified.insert(r.user_id.clone(), v);
        }
    }
    for r in corpus.of_kinds(kinds) {
        let Some(source) = r.source_user_id.as_deref() else {
            continue;
        };
        if source == r.user_id {
            continue;
        }
        let mask = record_categories(&r.urls, catalog, &mut unparseable);
        for c in MediaCategory::ALL {
            if mask & (1 << c.index()) != 0 {
                *weights[c.index()].entry((source, r.user_id.as_str())).or_default() += 1;
            }
        }
    }
    MediaCategory::ALL
        .into_iter()
        .zip(weights)
        .map(|(c, w)| {
            let g = RetweetGraph::from_weighted_edges(w.into_iter().map(|((s, t), w)| (s, t, w)), &verified)
                .expect("self-loops and zero weights filtered above");
            (c, g)
        })
        .collect()
}

pub fn build_category_graph(
    corpus: &Corpus,
    catalog: &OutletCatalog,
    category: MediaCategory,
    kinds: &KindSet,
) -> RetweetGraph {
    build_category_graphs(corpus, catalog, kinds)
        .remove(&category)
        .unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{InteractionKind, TweetRecord};
    use proptest::prelude::*;

    fn rt(id: usize, user: &str, source: &str, url: &str) -> TweetRecord {
        TweetRecord {
            tweet_id: id.to_string(),
            user_id: user.into(),
            timestamp: id as f64,
            kind: InteractionKind::Retweet,
            source_user_id: Some(source.into()),
            urls: vec![url.into()],
            client: "Twitter Web App".into(),
            verified: None,
            text: None,
        }
    }

    fn catalog() -> OutletCatalog {
        let mut c = OutletCatalog::new("t");
        c.insert("foxnews.com", MediaCategory::Right, 1).unwrap();
        c.insert("cnn.com", MediaCategory::Center, 1).unwrap();
        c
    }

    fn graph(records: Vec<TweetRecord>, cat: MediaCategory) -> RetweetGraph {
        build_category_graph(&Corpus::new(records), &catalog(), cat, &KindSet::retweets())
    }

    #[test]
    fn single_retweet_edge() {
        let g = graph(vec![rt(1, "u", "v", "https://foxnews.com/a")], MediaCategory::Right);
        let (v, u) = (g.node("v").unwrap(), g.node("u").unwrap());
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.weight(v, u), Some(1));
        assert_eq!(g.weight(u, v), None);
    }

    #[test]
    fn self_retweets_dropped() {
        let g = graph(vec![rt(1, "u", "u", "https://foxnews.com/a")], MediaCategory::Right);
        assert!(g.is_empty());
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn duplicates_collapse_into_weight() {
        let recs = (0..3).map(|i| rt(i, "u", "v", "https://foxnews.com/a")).collect();
        let g = graph(recs, MediaCategory::Right);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.weight(g.node("v").unwrap(), g.node("u").unwrap()), Some(3));
    }

    #[test]
    fn multi_category_record_feeds_each_graph() {
        let mut r = rt(1, "u", "v", "https://foxnews.com/a");
        r.urls.push("https://www.cnn.com/b".into());
        r.urls.push("https://foxnews.com/c".into());
        let graphs = build_category_graphs(&Corpus::new(vec![r]), &catalog(), &KindSet::retweets());
        assert_eq!(graphs[&MediaCategory::Right].edge_count(), 1);
        assert_eq!(graphs[&MediaCategory::Center].edge_count(), 1);
        assert_eq!(graphs[&MediaCategory::Left].edge_count(), 0);
        let g = &graphs[&MediaCategory::Right];
        assert_eq!(g.weight(g.node("v").unwrap(), g.node("u").unwrap()), Some(1));
    }

    #[test]
    fn kinds_select_records() {
        let mut q = rt(1, "u", "v", "https://foxnews.com/a");
        q.kind = InteractionKind::Quote;
        let corpus = Corpus::new(vec![q]);
        let only_rt = build_category_graph(&corpus, &catalog(), MediaCategory::Right, &KindSet::retweets());
        assert_eq!(only_rt.edge_count(), 0);
        let both = build_category_graph(&corpus, &catalog(), MediaCategory::Right, &KindSet::retweets_and_quotes());
        assert_eq!(both.edge_count(), 1);
    }

    #[test]
    fn star_degrees() {
        let recs = ["a", "b", "c"]
            .iter()
            .enumerate()
            .map(|(i, u)| rt(i, u, "v", "https://cnn.com"))
            .collect();
        let g = graph(recs, MediaCategory::Center);
        let d = degrees(&g);
        assert_eq!(d[g.node("v").unwrap()], (0, 3));
        for u in ["a", "b", "c"] {
            assert_eq!(d[g.node(u).unwrap()], (1, 0));
        }
        assert!(degrees(&RetweetGraph::default()).is_empty());
    }

    #[test]
    fn weight_does_not_inflate_degree() {
        let recs = (0..5).map(|i| rt(i, "u", "v", "https://cnn.com")).collect();
        let g = graph(recs, MediaCategory::Center);
        assert_eq!(g.out_degree(g.node("v").unwrap()), 1);
    }

    #[test]
    fn csv_round_trip_keeps_isolated_nodes() {
        let mut verified = HashMap::new();
        verified.insert("a".to_string(), true);
        let g = RetweetGraph::from_weighted_edges([("a", "b", 2), ("b", "c", 1)], &verified).unwrap();
        let g2 = g.remove_node(g.node("b").unwrap());
        assert_eq!(g2.node_count(), 2);
        assert_eq!(g2.edge_count(), 0);
        let (mut e, mut n) = (Vec::new(), Vec::new());
        g2.write_edges_csv(&mut e).unwrap();
        g2.write_nodes_csv(&mut n).unwrap();
        let back = RetweetGraph::read_csv(e.as_slice(), n.as_slice()).unwrap();
        assert_eq!(back, g2);
        assert_eq!(back.verified(back.node("a").unwrap()), Some(true));
    }

    #[test]
    fn heterogeneity_finite_when_edges_exist() {
        let g = RetweetGraph::from_weighted_edges([("a", "b", 1), ("a", "c", 1)], &HashMap::new()).unwrap();
        let s = summarize(&g);
        assert!(s.in_heterogeneity.unwrap().is_finite());
        assert!(s.out_heterogeneity.unwrap().is_finite());
        assert_eq!(summarize(&RetweetGraph::default()).out_heterogeneity, None);
    }

    fn arb_records() -> impl Strategy<Value = Vec<TweetRecord>> {
        let users = prop::sample::select(vec!["a", "b", "c", "d", "e"]);
        let urls = prop::sample::select(vec!["https://cnn.com/x", "https://foxnews.com/y", "https://other.org"]);
        prop::collection::vec((users.clone(), users, urls), 0..40).prop_map(|v| {
            v.into_iter().enumerate().map(|(i, (u, s, url))| rt(i, u, s, url)).collect()
        })
    }

    proptest! {
        #[test]
        fn order_invariant(records in arb_records(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let mut shuffled = records.clone();
            shuffled.shuffle(&mut crate::rng::seeded(seed));
            let a = build_category_graphs(&Corpus::new(records), &catalog(), &KindSet::retweets());
            let b = build_category_graphs(&Corpus::new(shuffled), &catalog(), &KindSet::retweets());
            prop_assert_eq!(a, b);
        }

        #[test]
        fn degree_sums_and_removal(records in arb_records()) {
            for g in build_category_graphs(&Corpus::new(records), &catalog(), &KindSet::retweets()).values() {
                let d = degrees(g);
                prop_assert_eq!(d.iter().map(|x| x.0).sum::<usize>(), g.edge_count());
                prop_assert_eq!(d.iter().map(|x| x.1).sum::<usize>(), g.edge_count());
                for (i, (kin, kout)) in d.iter().enumerate() {
                    prop_assert!(g.weight(i, i).is_none());
                    let h = g.remove_node(i);
                    prop_assert_eq!(h.edge_count(), g.edge_count() - kin - kout);
                }
                prop_assert!(g.edges().all(|(_, _, w)| w >= 1));
            }
        }
    }
}
