//! Influencer similarity networks and community separation.
//!
//! Each influencer is described by the vector of how many times every user
//! interacted with them; two influencers are linked with the cosine similarity
//! of their vectors. Communities are found with Louvain and the split is
//! measured with weighted modularity and the normalized cut (share of the
//! total weight running between communities).

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ClientClass, Corpus, KindSet, OfficialClients};
use crate::rng;

#[derive(Debug, Error)]
pub enum SimilarityError {
    #[error("need at least 2 influencers with non-zero vectors, found {0}")]
    TooFewInfluencers(usize),
    #[error("network has zero total weight")]
    ZeroWeight,
    #[error("partition covers {got} nodes, network has {expected}")]
    PartitionSize { expected: usize, got: usize },
    #[error("subsample fraction must lie in (0, 1), got {0}")]
    InvalidFraction(f64),
    #[error("need at least 2 repetitions, got {0}")]
    TooFewRepetitions(usize),
    #[error("subsample of {0} influencers is too small")]
    SubsampleTooSmall(usize),
    #[error("invalid similarity matrix: {0}")]
    InvalidMatrix(&'static str),
    #[error("export: {0}")]
    Csv(#[from] csv::Error),
}

/// Symmetric influencer-by-influencer weight matrix with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityNetwork {
    pub influencers: Vec<String>,
    weights: Vec<f64>,
    /// Number of users behind the vectors.
    pub user_dimension: usize,
    /// Influencers left out because nobody interacted with them.
    pub excluded: Vec<String>,
}

impl SimilarityNetwork {
    /// Network from an explicit row-major weight matrix. The diagonal is
    /// zeroed; weights must be finite, non-negative and symmetric.
    pub fn from_weights(influencers: Vec<String>, weights: Vec<f64>) -> Result<Self, SimilarityError> {
        let n = influencers.len();
        if weights.len() != n * n {
            return Err(SimilarityError::InvalidMatrix("shape does not match influencer count"));
        }
        let mut weights = weights;
        for i in 0..n {
            weights[i * n + i] = 0.0;
            for j in 0..i {
                let (a, b) = (weights[i * n + j], weights[j * n + i]);
                if !a.is_finite() || a < 0.0 {
                    return Err(SimilarityError::InvalidMatrix("weights must be finite and non-negative"));
                }
                if a != b {
                    return Err(SimilarityError::InvalidMatrix("matrix is not symmetric"));
                }
            }
        }
        Ok(Self {
            influencers,
            weights,
            user_dimension: 0,
            excluded: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.influencers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.influencers.is_empty()
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.len();
        &self.weights[i * n..(i + 1) * n]
    }

    /// Sum over ordered pairs, i.e. twice the undirected edge weight.
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Network induced by the given node indices, in that order.
    pub fn induced(&self, nodes: &[usize]) -> Self {
        let k = nodes.len();
        let mut weights = vec![0.0; k * k];
        for (a, &i) in nodes.iter().enumerate() {
            for (b, &j) in nodes.iter().enumerate() {
                weights[a * k + b] = self.weight(i, j);
            }
        }
        Self {
            influencers: nodes.iter().map(|&i| self.influencers[i].clone()).collect(),
            weights,
            user_dimension: self.user_dimension,
            excluded: Vec::new(),
        }
    }

    /// Upper triangle as `(i, j, similarity)` rows, zero entries included.
    pub fn write_upper_csv<W: Write>(&self, writer: W) -> Result<(), SimilarityError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["i", "j", "similarity"])?;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                w.write_record([
                    self.influencers[i].as_str(),
                    self.influencers[j].as_str(),
                    &self.weight(i, j).to_string(),
                ])?;
            }
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Count of interactions per (influencer, user) pair.
pub type InteractionCounts = BTreeMap<(String, String), u64>;

/// Count interactions of the selected kinds aimed at the given influencers.
/// Self-interactions are skipped. With `official` set, only records from
/// official clients count.
pub fn influencer_user_counts(
    corpus: &Corpus,
    influencers: &HashSet<String>,
    kinds: &KindSet,
    official: Option<&OfficialClients>,
) -> InteractionCounts {
    let mut counts = InteractionCounts::new();
    for r in corpus.of_kinds(kinds) {
        let Some(src) = r.source_user_id.as_deref() else { continue };
        if src == r.user_id || !influencers.contains(src) {
            continue;
        }
        if let Some(off) = official {
            if off.classify(&r.client) != ClientClass::Official {
                continue;
            }
        }
        *counts.entry((src.to_string(), r.user_id.clone())).or_default() += 1;
    }
    counts
}

/// All-pairs cosine similarity of the influencers' per-user count vectors.
///
/// Dot products are accumulated in integers, so the result does not depend on
/// summation order.
pub fn build_similarity(counts: &InteractionCounts) -> Result<SimilarityNetwork, SimilarityError> {
    let mut all_influencers: Vec<&str> = counts.keys().map(|(i, _)| i.as_str()).collect();
    all_influencers.dedup();
    let mut nonzero: Vec<&str> = counts
        .iter()
        .filter(|(_, &c)| c > 0)
        .map(|((i, _), _)| i.as_str())
        .collect();
    nonzero.dedup();
    let excluded: Vec<String> = {
        let keep: HashSet<&str> = nonzero.iter().copied().collect();
        all_influencers.iter().filter(|i| !keep.contains(*i)).map(|s| s.to_string()).collect()
    };
    let n = nonzero.len();
    if n < 2 {
        return Err(SimilarityError::TooFewInfluencers(n));
    }
    let index: HashMap<&str, usize> = nonzero.iter().enumerate().map(|(k, s)| (*s, k)).collect();

    let mut by_user: BTreeMap<&str, Vec<(usize, u64)>> = BTreeMap::new();
    for ((inf, user), &c) in counts {
        if c > 0 {
            by_user.entry(user.as_str()).or_default().push((index[inf.as_str()], c));
        }
    }
    let user_dimension = by_user.len();

    let users: Vec<&Vec<(usize, u64)>> = by_user.values().collect();
    let dots: Vec<u128> = users
        .par_chunks(4096)
        .map(|chunk| {
            let mut acc = vec![0u128; n * n];
            for v in chunk {
                for &(a, ca) in v.iter() {
                    for &(b, cb) in v.iter() {
                        if a <= b {
                            acc[a * n + b] += u128::from(ca) * u128::from(cb);
                        }
                    }
                }
            }
            acc
        })
        .reduce(
            || vec![0u128; n * n],
            |mut x, y| {
                for (a, b) in x.iter_mut().zip(y) {
                    *a += b;
                }
                x
            },
        );

    let norms: Vec<f64> = (0..n).map(|i| (dots[i * n + i] as f64).sqrt()).collect();
    let mut weights = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = dots[i * n + j];
            if d > 0 {
                let s = (d as f64 / (norms[i] * norms[j])).min(1.0);
                weights[i * n + j] = s;
                weights[j * n + i] = s;
            }
        }
    }
    Ok(SimilarityNetwork {
        influencers: nonzero.into_iter().map(str::to_string).collect(),
        weights,
        user_dimension,
        excluded,
    })
}

/// Community label for every node of a network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub assignment: Vec<usize>,
}

impl Partition {
    /// Relabel communities `0..k` in order of first appearance.
    pub fn new(labels: Vec<usize>) -> Self {
        let mut map = HashMap::new();
        let assignment = labels
            .into_iter()
            .map(|c| {
                let next = map.len();
                *map.entry(c).or_insert(next)
            })
            .collect();
        Self { assignment }
    }

    pub fn single(n: usize) -> Self {
        Self { assignment: vec![0; n] }
    }

    pub fn community_count(&self) -> usize {
        self.assignment.iter().max().map_or(0, |m| m + 1)
    }

    pub fn members(&self, community: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] == community).collect()
    }

    pub fn write_csv<W: Write>(&self, net: &SimilarityNetwork, writer: W) -> Result<(), SimilarityError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["influencer_id", "community"])?;
        for (id, c) in net.influencers.iter().zip(&self.assignment) {
            w.write_record([id.as_str(), &c.to_string()])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Weighted undirected graph used across Louvain levels. Self-loops carry the
/// internal weight of aggregated communities (counted over ordered pairs).
struct LevelGraph {
    adj: Vec<Vec<(usize, f64)>>,
    degree: Vec<f64>,
    total: f64,
}

impl LevelGraph {
    fn from_network(net: &SimilarityNetwork) -> Self {
        let n = net.len();
        let adj: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|i| {
                net.row(i)
                    .iter()
                    .enumerate()
                    .filter(|(j, w)| **w > 0.0 && *j != i)
                    .map(|(j, w)| (j, *w))
                    .collect()
            })
            .collect();
        Self::with_adj(adj)
    }

    fn with_adj(adj: Vec<Vec<(usize, f64)>>) -> Self {
        let degree: Vec<f64> = adj.iter().map(|a| a.iter().map(|e| e.1).sum()).collect();
        let total = degree.iter().sum();
        Self { adj, degree, total }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    /// Local moving phase. Returns community labels and whether any node moved.
    fn local_moves(&self, rng: &mut rng::Rng) -> (Vec<usize>, bool) {
        let n = self.len();
        let mut comm: Vec<usize> = (0..n).collect();
        let mut tot = self.degree.clone();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut moved_any = false;
        let mut link = vec![0.0f64; n];
        let mut touched: Vec<usize> = Vec::new();
        let two_m = self.total;

        for _pass in 0..1000 {
            let mut moved = false;
            for &i in &order {
                let ki = self.degree[i];
                let old = comm[i];
                for &(j, w) in &self.adj[i] {
                    if j == i {
                        continue;
                    }
                    let c = comm[j];
                    if link[c] == 0.0 {
                        touched.push(c);
                    }
                    link[c] += w;
                }
                tot[old] -= ki;
                let gain = |c: usize, l: f64| l - tot[c] * ki / two_m;
                let mut best = old;
                let mut best_gain = gain(old, link[old]);
                for &c in &touched {
                    let g = gain(c, link[c]);
                    if g > best_gain + 1e-12 * ki.max(f64::MIN_POSITIVE)
                        || (g == best_gain && c < best && best != old)
                    {
                        best = c;
                        best_gain = g;
                    }
                }
                tot[best] += ki;
                comm[i] = best;
                if best != old {
                    moved = true;
                    moved_any = true;
                }
                for &c in &touched {
                    link[c] = 0.0;
                }
                touched.clear();
            }
            if !moved {
                break;
            }
        }
        (comm, moved_any)
    }

    fn aggregate(&self, comm: &[usize], k: usize) -> Self {
        let mut acc: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); k];
        for i in 0..self.len() {
            for &(j, w) in &self.adj[i] {
                *acc[comm[i]].entry(comm[j]).or_default() += w;
            }
        }
        Self::with_adj(acc.into_iter().map(|m| m.into_iter().collect()).collect())
    }
}

/// Louvain modularity optimization (resolution 1) with a seeded node
/// visiting order. Deterministic for a given seed.
pub fn louvain(net: &SimilarityNetwork, seed: u64) -> Partition {
    let n = net.len();
    if n == 0 {
        return Partition { assignment: Vec::new() };
    }
    let mut rng = rng::seeded(seed);
    let mut graph = LevelGraph::from_network(net);
    if graph.total <= 0.0 {
        return Partition::new((0..n).collect());
    }
    let mut membership: Vec<usize> = (0..n).collect();
    loop {
        let (comm, moved) = graph.local_moves(&mut rng);
        if !moved {
            break;
        }
        let relabeled = Partition::new(comm);
        let k = relabeled.community_count();
        for m in membership.iter_mut() {
            *m = relabeled.assignment[*m];
        }
        if k == graph.len() {
            break;
        }
        graph = graph.aggregate(&relabeled.assignment, k);
    }
    Partition::new(membership)
}

fn check_partition(net: &SimilarityNetwork, part: &Partition) -> Result<f64, SimilarityError> {
    if part.assignment.len() != net.len() {
        return Err(SimilarityError::PartitionSize {
            expected: net.len(),
            got: part.assignment.len(),
        });
    }
    let total = net.total_weight();
    if total <= 0.0 {
        return Err(SimilarityError::ZeroWeight);
    }
    Ok(total)
}

/// Weighted Newman modularity `Q = (1/2m) Σ_ij [w_ij − d_i d_j / 2m] δ(c_i, c_j)`.
pub fn modularity(net: &SimilarityNetwork, part: &Partition) -> Result<f64, SimilarityError> {
    let two_m = check_partition(net, part)?;
    let k = part.community_count();
    let mut internal = vec![0.0; k];
    let mut degree = vec![0.0; k];
    for i in 0..net.len() {
        let ci = part.assignment[i];
        for (j, &w) in net.row(i).iter().enumerate() {
            degree[ci] += w;
            if part.assignment[j] == ci {
                internal[ci] += w;
            }
        }
    }
    Ok(internal
        .iter()
        .zip(&degree)
        .map(|(l, d)| l / two_m - (d / two_m).powi(2))
        .sum())
}

/// Share of the total weight carried by edges between different communities.
pub fn normalized_cut(net: &SimilarityNetwork, part: &Partition) -> Result<f64, SimilarityError> {
    let total = check_partition(net, part)?;
    let mut cut = 0.0;
    for i in 0..net.len() {
        for (j, &w) in net.row(i).iter().enumerate() {
            if part.assignment[i] != part.assignment[j] {
                cut += w;
            }
        }
    }
    Ok(cut / total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeparationMetric {
    Modularity,
    NormalizedCut,
}

impl SeparationMetric {
    pub fn evaluate(self, net: &SimilarityNetwork, part: &Partition) -> Result<f64, SimilarityError> {
        match self {
            SeparationMetric::Modularity => modularity(net, part),
            SeparationMetric::NormalizedCut => normalized_cut(net, part),
        }
    }
}

/// Mean and standard error of a separation metric over random influencer subsamples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsampleEstimate {
    pub mean: f64,
    pub standard_error: f64,
    pub repetitions: usize,
    pub subsample_size: usize,
}

/// Re-partition `repetitions` random subsamples of `⌈fraction·I⌉` influencers
/// (without replacement) with Louvain and record the metric on each.
/// Replicates run in parallel with derived seeds.
pub fn subsample_se(
    net: &SimilarityNetwork,
    metric: SeparationMetric,
    fraction: f64,
    repetitions: usize,
    seed: u64,
) -> Result<SubsampleEstimate, SimilarityError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(SimilarityError::InvalidFraction(fraction));
    }
    if repetitions < 2 {
        return Err(SimilarityError::TooFewRepetitions(repetitions));
    }
    let size = (fraction * net.len() as f64).ceil() as usize;
    if size < 2 {
        return Err(SimilarityError::SubsampleTooSmall(size));
    }
    let values: Vec<f64> = (0..repetitions as u64)
        .into_par_iter()
        .map(|r| {
            let rep_seed = rng::derive_seed(seed, r);
            let mut rng = rng::seeded(rep_seed);
            let mut nodes: Vec<usize> = (0..net.len()).collect();
            nodes.shuffle(&mut rng);
            nodes.truncate(size);
            nodes.sort_unstable();
            let sub = net.induced(&nodes);
            let part = louvain(&sub, rng::derive_seed(rep_seed, 1));
            metric.evaluate(&sub, &part)
        })
        .collect::<Result<_, _>>()?;
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(SubsampleEstimate {
        mean,
        standard_error: (var / n).sqrt(),
        repetitions,
        subsample_size: size,
    })
}
