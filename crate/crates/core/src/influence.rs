//! Influencer ranking.
//!
//! [`collective_influence_out`] ranks the spreaders of a retweet network with
//! the directed Collective Influence score and adaptive removal.
//! [`pagerank_weighted`] is an independent, weight-aware ranking used to
//! cross-check it, and [`rank_overlap`] compares two rankings.

use std::cmp::Reverse;
use std::collections::{BTreeSet, HashSet};
use std::hash::Hash;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::retweet_graph::RetweetGraph;

#[derive(Debug, Error)]
pub enum InfluenceError {
    #[error("radius must be at least 1")]
    InvalidRadius,
    #[error("top_k must be at least 1")]
    InvalidTopK,
    #[error("damping must lie in (0, 1), got {0}")]
    InvalidDamping(f64),
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("PageRank did not converge in {iterations} iterations (last L1 change {delta:e})")]
    NotConverged {
        iterations: usize,
        delta: f64,
        last: Vec<f64>,
    },
    #[error("persistence p must lie in (0, 1), got {0}")]
    InvalidPersistence(f64),
    #[error("cannot compare empty rankings")]
    EmptyList,
    #[error("ranked lists must not contain duplicates")]
    Duplicates,
}

/// One ranked node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankEntry {
    pub node: usize,
    pub user_id: String,
    /// CI value when the node was removed; 0 for nodes ranked after the
    /// scores vanished.
    pub ci: u64,
    /// Out-degree in the full network.
    pub k_out: usize,
}

/// Result of the adaptive CI removal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CiRanking {
    pub radius: usize,
    pub entries: Vec<RankEntry>,
}

impl CiRanking {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn order(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.node).collect()
    }

    pub fn user_ids(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.user_id.as_str()).collect()
    }

    pub fn ci_values(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.ci).collect()
    }
}

/// Mutable view of a graph under node removal.
struct Residual {
    out: Vec<Vec<usize>>,
    inn: Vec<Vec<usize>>,
    alive: Vec<bool>,
}

impl Residual {
    fn new(g: &RetweetGraph) -> Self {
        let n = g.node_count();
        Self {
            out: (0..n).map(|i| g.out_edges(i).iter().map(|e| e.0).collect()).collect(),
            inn: (0..n).map(|i| g.in_neighbors(i).to_vec()).collect(),
            alive: vec![true; n],
        }
    }

    fn k_out(&self, i: usize) -> usize {
        self.out[i].len()
    }

    fn excess(&self, i: usize) -> u64 {
        self.k_out(i).saturating_sub(1) as u64
    }

    /// `max(k_out(i)-1, 0) * Σ max(k_out(j)-1, 0)` over nodes `j` at out-distance exactly `radius`.
    fn ci(&self, i: usize, radius: usize) -> u64 {
        let own = self.excess(i);
        if own == 0 {
            return 0;
        }
        let mut seen = HashSet::new();
        seen.insert(i);
        let mut frontier = vec![i];
        for _ in 0..radius {
            let mut next = Vec::new();
            for &v in &frontier {
                for &w in &self.out[v] {
                    if seen.insert(w) {
                        next.push(w);
                    }
                }
            }
            frontier = next;
            if frontier.is_empty() {
                return 0;
            }
        }
        own * frontier.iter().map(|&j| self.excess(j)).sum::<u64>()
    }

    /// Nodes with an out-path of length at most `depth` to `target`, including it.
    fn upstream(&self, target: usize, depth: usize) -> Vec<usize> {
        let mut seen = HashSet::new();
        seen.insert(target);
        let mut all = vec![target];
        let mut frontier = vec![target];
        for _ in 0..depth {
            let mut next = Vec::new();
            for &v in &frontier {
                for &w in &self.inn[v] {
                    if seen.insert(w) {
                        next.push(w);
                    }
                }
            }
            all.extend_from_slice(&next);
            frontier = next;
        }
        all
    }

    fn remove(&mut self, r: usize) {
        self.alive[r] = false;
        for p in std::mem::take(&mut self.inn[r]) {
            self.out[p].retain(|&x| x != r);
        }
        for q in std::mem::take(&mut self.out[r]) {
            self.inn[q].retain(|&x| x != r);
        }
    }
}

type Key = (u64, usize, Reverse<usize>);

/// Directed Collective Influence ranking with adaptive removal.
///
/// Repeatedly removes the node of highest `CI_out` (ties: larger current
/// out-degree, then smaller node index), recording the score it had at removal
/// time. Stops after `top_k` removals or once every remaining score is zero; the
/// rest of the prefix is then filled by current out-degree, then node index.
///
/// After a removal only nodes within out-distance `radius + 1` of the removed
/// node can change score, so only those are recomputed.
pub fn collective_influence_out(
    g: &RetweetGraph,
    radius: usize,
    top_k: usize,
) -> Result<CiRanking, InfluenceError> {
    if radius == 0 {
        return Err(InfluenceError::InvalidRadius);
    }
    if top_k == 0 {
        return Err(InfluenceError::InvalidTopK);
    }
    let n = g.node_count();
    let limit = top_k.min(n);
    let mut res = Residual::new(g);
    let mut keys: Vec<Key> = (0..n)
        .into_par_iter()
        .map(|i| (res.ci(i, radius), res.k_out(i), Reverse(i)))
        .collect();
    let mut queue: BTreeSet<Key> = keys.iter().copied().collect();
    let mut entries = Vec::with_capacity(limit);

    while entries.len() < limit {
        let Some(&top) = queue.last() else { break };
        if top.0 == 0 {
            break;
        }
        let r = top.2 .0;
        queue.remove(&top);
        let affected = res.upstream(r, radius + 1);
        res.remove(r);
        entries.push(RankEntry {
            node: r,
            user_id: g.id(r).to_string(),
            ci: top.0,
            k_out: g.out_degree(r),
        });
        let alive: Vec<usize> = affected.into_iter().filter(|&i| res.alive[i]).collect();
        let fresh: Vec<Key> = alive
            .par_iter()
            .map(|&i| (res.ci(i, radius), res.k_out(i), Reverse(i)))
            .collect();
        for (i, key) in alive.into_iter().zip(fresh) {
            if keys[i] != key {
                queue.remove(&keys[i]);
                queue.insert(key);
                keys[i] = key;
            }
        }
    }

    if entries.len() < limit {
        let mut rest: Vec<usize> = (0..n).filter(|&i| res.alive[i]).collect();
        rest.sort_by_key(|&i| (Reverse(res.k_out(i)), i));
        entries.extend(rest.into_iter().take(limit - entries.len()).map(|i| RankEntry {
            node: i,
            user_id: g.id(i).to_string(),
            ci: 0,
            k_out: g.out_degree(i),
        }));
    }
    Ok(CiRanking { radius, entries })
}

/// Weighted PageRank on the edge-reversed network, so that retweeters endorse
/// the users they retweet.
///
/// Dangling mass (users who retweeted nobody) is spread uniformly. Iterates
/// until the L1 change drops below `tol`.
pub fn pagerank_weighted(
    g: &RetweetGraph,
    damping: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>, InfluenceError> {
    if !(damping > 0.0 && damping < 1.0) {
        return Err(InfluenceError::InvalidDamping(damping));
    }
    if !(tol > 0.0) {
        return Err(InfluenceError::InvalidTolerance(tol));
    }
    let n = g.node_count();
    if n == 0 {
        return Ok(Vec::new());
    }
    // strength of retweeter u = total weight of the retweets it made
    let mut strength = vec![0.0f64; n];
    for (_, u, w) in g.edges() {
        strength[u] += w as f64;
    }
    // incoming endorsement of each source v: (retweeter, share of its strength)
    let endorsements: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|v| g.out_edges(v).iter().map(|&(u, w)| (u, w as f64 / strength[u])).collect())
        .collect();
    let dangling: Vec<usize> = (0..n).filter(|&u| strength[u] == 0.0).collect();

    let nf = n as f64;
    let mut x = vec![1.0 / nf; n];
    let mut delta = f64::INFINITY;
    for _ in 0..max_iter {
        let dangling_mass: f64 = dangling.iter().map(|&u| x[u]).sum();
        let base = (1.0 - damping) / nf + damping * dangling_mass / nf;
        let next: Vec<f64> = endorsements
            .par_iter()
            .map(|ends| base + damping * ends.iter().map(|&(u, share)| x[u] * share).sum::<f64>())
            .collect();
        delta = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        x = next;
        if delta < tol {
            return Ok(x);
        }
    }
    Err(InfluenceError::NotConverged {
        iterations: max_iter,
        delta,
        last: x,
    })
}

/// Node indices sorted by descending score, ties by index.
pub fn ranking_from_scores(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// Agreement between two rankings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankComparison {
    pub rbo: f64,
    pub jaccard: f64,
    pub p: f64,
    pub depth: usize,
}

fn has_duplicates<T: Eq + Hash>(list: &[T]) -> bool {
    let set: HashSet<&T> = list.iter().collect();
    set.len() != list.len()
}

/// Extrapolated rank-biased overlap and Jaccard similarity of the top-`depth`
/// prefixes of two rankings.
///
/// With `X_d` the overlap of the two depth-`d` prefixes and `k` the evaluated
/// depth, `rbo = X_k/k · p^k + (1-p)/p · Σ_{d≤k} (X_d/d) p^d`.
pub fn rank_overlap<T: Eq + Hash>(
    list_a: &[T],
    list_b: &[T],
    p: f64,
    depth: usize,
) -> Result<RankComparison, InfluenceError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(InfluenceError::InvalidPersistence(p));
    }
    if list_a.is_empty() || list_b.is_empty() || depth == 0 {
        return Err(InfluenceError::EmptyList);
    }
    if has_duplicates(list_a) || has_duplicates(list_b) {
        return Err(InfluenceError::Duplicates);
    }
    let a = &list_a[..list_a.len().min(depth)];
    let b = &list_b[..list_b.len().min(depth)];
    let k = a.len().max(b.len());

    let mut seen_a: HashSet<&T> = HashSet::new();
    let mut seen_b: HashSet<&T> = HashSet::new();
    let mut overlap = 0usize;
    let mut sum = 0.0;
    let mut p_pow = 1.0;
    for d in 1..=k {
        let x = a.get(d - 1);
        let y = b.get(d - 1);
        match (x, y) {
            (Some(x), Some(y)) if x == y => overlap += 1,
            _ => {
                if let Some(x) = x {
                    if seen_b.contains(x) {
                        overlap += 1;
                    }
                }
                if let Some(y) = y {
                    if seen_a.contains(y) {
                        overlap += 1;
                    }
                }
            }
        }
        if let Some(x) = x {
            seen_a.insert(x);
        }
        if let Some(y) = y {
            seen_b.insert(y);
        }
        p_pow *= p;
        sum += overlap as f64 / d as f64 * p_pow;
    }
    let rbo = overlap as f64 / k as f64 * p_pow + (1.0 - p) / p * sum;

    let union = seen_a.union(&seen_b).count();
    let inter = seen_a.intersection(&seen_b).count();
    Ok(RankComparison {
        rbo: rbo.clamp(0.0, 1.0),
        jaccard: inter as f64 / union as f64,
        p,
        depth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn graph(edges: &[(&str, &str)]) -> RetweetGraph {
        RetweetGraph::from_weighted_edges(edges.iter().map(|(s, t)| (*s, *t, 1)), &HashMap::new()).unwrap()
    }

    #[test]
    fn clamped_scores_on_small_tree() {
        let g = graph(&[("a", "b"), ("a", "c"), ("a", "d"), ("b", "c"), ("b", "d")]);
        let r = collective_influence_out(&g, 1, 10).unwrap();
        assert_eq!(r.entries[0].user_id, "a");
        assert_eq!(r.entries[0].ci, 2);
        // after removing a, b has k_out 2 but its out-neighbours are sinks
        assert!(r.entries[1..].iter().all(|e| e.ci == 0));
        assert_eq!(r.len(), 4);
        assert_eq!(r.entries[1].user_id, "b");
    }

    #[test]
    fn degenerate_single_edge() {
        let g = graph(&[("v", "u")]);
        let r = collective_influence_out(&g, 1, 5).unwrap();
        assert_eq!(r.user_ids(), ["v", "u"]);
        assert_eq!(r.ci_values(), [0, 0]);
    }

    #[test]
    fn empty_and_invalid() {
        let r = collective_influence_out(&RetweetGraph::default(), 2, 10).unwrap();
        assert!(r.is_empty());
        let g = graph(&[("v", "u")]);
        assert!(matches!(collective_influence_out(&g, 0, 1), Err(InfluenceError::InvalidRadius)));
        assert!(matches!(collective_influence_out(&g, 1, 0), Err(InfluenceError::InvalidTopK)));
    }

    #[test]
    fn top_k_truncates() {
        let g = graph(&[("a", "b"), ("a", "c"), ("b", "d"), ("b", "e"), ("c", "f"), ("c", "g")]);
        let r = collective_influence_out(&g, 1, 1).unwrap();
        assert_eq!(r.len(), 1);
        // CI(a) = 1 * ((2-1) + (2-1)) = 2
        assert_eq!(r.entries[0].user_id, "a");
        assert_eq!(r.entries[0].ci, 2);
    }

    #[test]
    fn removal_time_values_recorded() {
        // a -> {b, c}, b -> {x1, x2, x3}, c -> {y1, y2}; radius 1
        let g = graph(&[
            ("a", "b"),
            ("a", "c"),
            ("b", "x1"),
            ("b", "x2"),
            ("b", "x3"),
            ("c", "y1"),
            ("c", "y2"),
        ]);
        let r = collective_influence_out(&g, 1, 3).unwrap();
        // initial: CI(a) = 1 * (2 + 1) = 3, CI(b) = 0, CI(c) = 0
        assert_eq!(r.entries[0].user_id, "a");
        assert_eq!(r.entries[0].ci, 3);
        // then all zero: fill by k_out, b (3) before c (2)
        assert_eq!(r.entries[1].user_id, "b");
        assert_eq!(r.entries[2].user_id, "c");
    }

    #[test]
    fn pagerank_cycle_uniform() {
        let g = graph(&[("a", "b"), ("b", "c"), ("c", "d"), ("d", "a")]);
        let pr = pagerank_weighted(&g, 0.85, 1e-12, 100_000).unwrap();
        for s in pr {
            approx::assert_abs_diff_eq!(s, 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn pagerank_star_favours_source() {
        let g = graph(&[("v", "a"), ("v", "b"), ("v", "c")]);
        let pr = pagerank_weighted(&g, 0.85, 1e-12, 100_000).unwrap();
        let s = |id| pr[g.node(id).unwrap()];
        assert!(s("v") > s("a"));
        approx::assert_abs_diff_eq!(s("a"), s("b"), epsilon = 1e-14);
        approx::assert_abs_diff_eq!(s("b"), s("c"), epsilon = 1e-14);
        approx::assert_abs_diff_eq!(pr.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn pagerank_errors() {
        let g = graph(&[("a", "b"), ("b", "c"), ("c", "a"), ("a", "c")]);
        assert!(matches!(pagerank_weighted(&g, 1.0, 1e-9, 10), Err(InfluenceError::InvalidDamping(_))));
        assert!(matches!(pagerank_weighted(&g, 0.5, 0.0, 10), Err(InfluenceError::InvalidTolerance(_))));
        match pagerank_weighted(&g, 0.85, 1e-15, 2) {
            Err(InfluenceError::NotConverged { last, iterations, .. }) => {
                assert_eq!(iterations, 2);
                assert_eq!(last.len(), 3);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn overlap_extremes() {
        let a: Vec<u32> = (0..100).collect();
        let same = rank_overlap(&a, &a, 0.98, 100).unwrap();
        approx::assert_abs_diff_eq!(same.rbo, 1.0, epsilon = 1e-12);
        assert_eq!(same.jaccard, 1.0);
        let b: Vec<u32> = (100..200).collect();
        let disjoint = rank_overlap(&a, &b, 0.98, 100).unwrap();
        assert_eq!(disjoint.rbo, 0.0);
        assert_eq!(disjoint.jaccard, 0.0);
    }

    #[test]
    fn overlap_errors() {
        let a = [1, 2, 3];
        let empty: [i32; 0] = [];
        assert!(matches!(rank_overlap(&a, &empty, 0.9, 3), Err(InfluenceError::EmptyList)));
        assert!(matches!(rank_overlap(&a, &[1, 1], 0.9, 3), Err(InfluenceError::Duplicates)));
        assert!(matches!(rank_overlap(&a, &a, 1.0, 3), Err(InfluenceError::InvalidPersistence(_))));
    }

    #[test]
    fn scores_to_ranking() {
        assert_eq!(ranking_from_scores(&[0.1, 0.5, 0.5, 0.2]), [1, 2, 3, 0]);
    }
}
