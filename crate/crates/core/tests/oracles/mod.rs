//! Slow, direct reference implementations shared by the oracle tests.
#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::{DMatrix, DVector};
use newsflow::RetweetGraph;
use rand::Rng;

/// Random simple digraph on up to `max_nodes` named nodes.
pub fn random_digraph(rng: &mut impl Rng, max_nodes: usize, edge_prob: f64, max_weight: u64) -> RetweetGraph {
    let n = rng.random_range(2..=max_nodes);
    let names: Vec<String> = (0..n).map(|i| format!("n{i:02}")).collect();
    let mut edges = Vec::new();
    for s in 0..n {
        for t in 0..n {
            if s != t && rng.random_bool(edge_prob) {
                edges.push((names[s].as_str(), names[t].as_str(), rng.random_range(1..=max_weight)));
            }
        }
    }
    if edges.is_empty() {
        edges.push((names[0].as_str(), names[1].as_str(), 1));
    }
    RetweetGraph::from_weighted_edges(edges, &HashMap::new()).unwrap()
}

/// CI ranking recomputing every score from scratch after each removal.
pub fn naive_ci_order(g: &RetweetGraph, radius: usize, top_k: usize) -> Vec<(usize, u64)> {
    let n = g.node_count();
    let mut out: Vec<HashSet<usize>> = (0..n).map(|i| g.out_edges(i).iter().map(|e| e.0).collect()).collect();
    let mut alive = vec![true; n];
    let excess = |out: &Vec<HashSet<usize>>, i: usize| out[i].len().saturating_sub(1) as u64;
    let ci = |out: &Vec<HashSet<usize>>, i: usize| -> u64 {
        // breadth-first distances over out-edges
        let mut dist = vec![usize::MAX; n];
        dist[i] = 0;
        let mut queue = std::collections::VecDeque::from([i]);
        while let Some(v) = queue.pop_front() {
            for &w in &out[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        let ball: u64 = (0..n).filter(|&j| dist[j] == radius).map(|j| excess(out, j)).sum();
        excess(out, i) * ball
    };
    let limit = top_k.min(n);
    let mut order = Vec::new();
    while order.len() < limit {
        let mut best: Option<(u64, usize, usize)> = None;
        for i in (0..n).filter(|&i| alive[i]) {
            let key = (ci(&out, i), out[i].len(), i);
            best = match best {
                None => Some(key),
                Some(b) if (key.0, key.1) > (b.0, b.1) => Some(key),
                Some(b) => Some(b),
            };
        }
        let Some((score, _, r)) = best else { break };
        if score == 0 {
            break;
        }
        order.push((r, score));
        alive[r] = false;
        out[r].clear();
        for s in out.iter_mut() {
            s.remove(&r);
        }
    }
    let mut rest: Vec<usize> = (0..n).filter(|&i| alive[i]).collect();
    rest.sort_by_key(|&i| (std::cmp::Reverse(out[i].len()), i));
    let need = limit - order.len();
    order.extend(rest.into_iter().take(need).map(|i| (i, 0)));
    order
}

/// Stationary vector of the PageRank chain on the reversed graph, by solving
/// the linear system `(I − d M − d/n · 1 δᵀ) x = (1 − d)/n · 1` directly.
pub fn dense_pagerank(g: &RetweetGraph, damping: f64) -> Vec<f64> {
    let n = g.node_count();
    let nf = n as f64;
    let mut strength = vec![0.0; n];
    for (_, u, w) in g.edges() {
        strength[u] += w as f64;
    }
    let mut a = DMatrix::<f64>::identity(n, n);
    for (v, u, w) in g.edges() {
        // retweeter u passes its share to source v
        a[(v, u)] -= damping * w as f64 / strength[u];
    }
    for u in (0..n).filter(|&u| strength[u] == 0.0) {
        for v in 0..n {
            a[(v, u)] -= damping / nf;
        }
    }
    let rhs = DVector::from_element(n, (1.0 - damping) / nf);
    a.lu().solve(&rhs).expect("PageRank system is non-singular").iter().copied().collect()
}

/// Extrapolated RBO evaluated term by term with explicit prefix sets.
pub fn rbo_oracle<T: Eq + std::hash::Hash + Clone>(a: &[T], b: &[T], p: f64, depth: usize) -> (f64, f64) {
    let a = &a[..a.len().min(depth)];
    let b = &b[..b.len().min(depth)];
    let k = a.len().max(b.len());
    let overlap = |d: usize| -> f64 {
        let sa: HashSet<&T> = a.iter().take(d).collect();
        let sb: HashSet<&T> = b.iter().take(d).collect();
        sa.intersection(&sb).count() as f64
    };
    let mut sum = 0.0;
    for d in 1..=k {
        sum += overlap(d) / d as f64 * p.powi(d as i32);
    }
    let rbo = overlap(k) / k as f64 * p.powi(k as i32) + (1.0 - p) / p * sum;
    let sa: HashSet<&T> = a.iter().collect();
    let sb: HashSet<&T> = b.iter().collect();
    let jaccard = sa.intersection(&sb).count() as f64 / sa.union(&sb).count() as f64;
    (rbo, jaccard)
}

/// Dip of a sorted sample of distinct values as the best fit over
/// piecewise-linear unimodal CDFs.
///
/// A continuous unimodal CDF matters only through its values `y_i` at the
/// sample points; those extend to a unimodal CDF exactly when the chord slopes
/// rise and then fall. For each choice of peak chord the best fit is an LP in
/// `(y, t)`, and the dip is the smallest optimum.
pub fn lp_dip(x: &[f64]) -> f64 {
    let n = x.len();
    let nf = n as f64;
    let mut best = f64::INFINITY;
    for peak in 0..n - 1 {
        let mut lp = Problem::new(OptimizationDirection::Minimize);
        let t = lp.add_var(1.0, (0.0, 1.0));
        let y: Vec<_> = (0..n).map(|_| lp.add_var(0.0, (0.0, 1.0))).collect();
        for i in 0..n {
            for target in [i as f64 / nf, (i + 1) as f64 / nf] {
                lp.add_constraint(&[(y[i], 1.0), (t, -1.0)], ComparisonOp::Le, target);
                lp.add_constraint(&[(y[i], 1.0), (t, 1.0)], ComparisonOp::Ge, target);
            }
        }
        let slope = |i: usize| {
            let w = 1.0 / (x[i + 1] - x[i]);
            [(y[i], -w), (y[i + 1], w)]
        };
        for i in 0..n - 1 {
            lp.add_constraint(&slope(i), ComparisonOp::Ge, 0.0);
        }
        for i in 0..n - 2 {
            let (a, b) = (slope(i), slope(i + 1));
            // rising before the peak, falling after it
            let sign = if i < peak { 1.0 } else { -1.0 };
            let mut merged: Vec<(microlp::Variable, f64)> = Vec::new();
            for (v, c) in [(b[0].0, sign * b[0].1), (b[1].0, sign * b[1].1), (a[0].0, -sign * a[0].1), (a[1].0, -sign * a[1].1)] {
                match merged.iter_mut().find(|(u, _)| *u == v) {
                    Some(e) => e.1 += c,
                    None => merged.push((v, c)),
                }
            }
            lp.add_constraint(merged.as_slice(), ComparisonOp::Ge, 0.0);
        }
        let sol = lp.solve().expect("feasible: a linear CDF always fits");
        best = best.min(sol.objective());
    }
    best
}

/// Sorted sample of up to `n` distinct values, half the time in two clusters.
pub fn random_dip_sample(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
    if rng.random_bool(0.5) {
        for (i, x) in v.iter_mut().enumerate() {
            if i % 2 == 0 {
                *x = *x * 0.05 + 20.0;
            }
        }
    }
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Largest singular value of a dense matrix from the eigenvalues of its
/// smaller Gram matrix, cross-checked against a values-only SVD. (The SVD
/// variant that also computes singular vectors loses accuracy on some tall
/// inputs, so it is not used here.)
pub fn dense_leading_sigma(s: &DMatrix<f64>) -> f64 {
    let gram = if s.ncols() <= s.nrows() { s.transpose() * s } else { s * s.transpose() };
    let lambda = gram.symmetric_eigen().eigenvalues.max();
    let sigma = lambda.max(0.0).sqrt();
    let check = s.clone().svd(false, false).singular_values.max();
    assert!((sigma - check).abs() <= 1e-10 * sigma.max(1e-300), "oracle disagreement: {sigma} vs {check}");
    sigma
}
