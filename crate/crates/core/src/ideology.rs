//! Latent ideology by correspondence analysis of the user × influencer
//! retweet-count matrix.
//!
//! Only the first dimension is used. Its leading singular triplet is found by
//! subspace iteration on the implicit residual operator
//! `S = D_r^{-1/2} (P − r cᵀ) D_c^{-1/2} = Q − √r √cᵀ`, so `S` is never formed.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rand_distr::{Distribution, Hypergeometric, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ClientClass, Corpus, InteractionKind, OfficialClients};
use crate::rng;
use crate::stats::{self, pearson_correlation};

#[derive(Debug, Error)]
pub enum IdeologyError {
    #[error("retweet matrix is empty after filtering")]
    EmptyMatrix,
    #[error("influencer set is empty")]
    NoInfluencers,
    #[error("min_distinct must be at least 1")]
    InvalidMinDistinct,
    #[error("row {0} has zero mass")]
    ZeroRow(String),
    #[error("column {0} has zero mass")]
    ZeroColumn(String),
    #[error("residual matrix is zero")]
    ZeroResidual,
    #[error("leading axis did not converge after {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("subsample fraction must lie in (0, 1], got {0}")]
    InvalidFraction(f64),
    #[error("subsampling needs integer counts")]
    NonIntegerCounts,
    #[error("invalid matrix entry: {0}")]
    InvalidEntry(&'static str),
    #[error(transparent)]
    Stats(#[from] stats::StatsError),
    #[error("export: {0}")]
    Csv(#[from] csv::Error),
    #[error("export: {0}")]
    Io(#[from] std::io::Error),
}

/// Sparse non-negative user × influencer matrix in compressed rows.
#[derive(Debug, Clone, PartialEq)]
pub struct RetweetMatrix {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

/// What filtering removed while building a matrix.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MatrixDiagnostics {
    pub dropped_users: usize,
    pub dropped_influencers: Vec<String>,
    pub skipped_unofficial: u64,
    pub skipped_self: u64,
}

impl RetweetMatrix {
    /// Build from `(user, influencer) → weight` entries, keeping users with at
    /// least `min_distinct` nonzero influencers and dropping empty columns.
    /// `columns` lists influencers that should be reported when dropped.
    pub fn from_entries(
        entries: &BTreeMap<(String, String), f64>,
        columns: &BTreeSet<String>,
        min_distinct: usize,
    ) -> Result<(Self, MatrixDiagnostics), IdeologyError> {
        if min_distinct == 0 {
            return Err(IdeologyError::InvalidMinDistinct);
        }
        let mut by_user: BTreeMap<&str, Vec<(&str, f64)>> = BTreeMap::new();
        for ((u, i), &w) in entries {
            if !w.is_finite() || w < 0.0 {
                return Err(IdeologyError::InvalidEntry("weights must be finite and non-negative"));
            }
            if w > 0.0 {
                by_user.entry(u.as_str()).or_default().push((i.as_str(), w));
            }
        }
        let total_users = by_user.len();
        by_user.retain(|_, v| v.len() >= min_distinct);
        let used: BTreeSet<&str> = by_user.values().flatten().map(|(i, _)| *i).collect();
        let cols: Vec<String> = used.iter().map(|s| s.to_string()).collect();
        let col_index: HashMap<&str, usize> = used.iter().enumerate().map(|(k, s)| (*s, k)).collect();
        let mut diag = MatrixDiagnostics {
            dropped_users: total_users - by_user.len(),
            dropped_influencers: columns.iter().filter(|c| !used.contains(c.as_str())).cloned().collect(),
            ..Default::default()
        };
        diag.dropped_influencers.sort();
        if by_user.is_empty() {
            return Err(IdeologyError::EmptyMatrix);
        }
        let mut rows = Vec::with_capacity(by_user.len());
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for (u, mut v) in by_user {
            rows.push(u.to_string());
            v.sort_by_key(|(i, _)| col_index[i]);
            for (i, w) in v {
                indices.push(col_index[i]);
                values.push(w);
            }
            indptr.push(indices.len());
        }
        Ok((
            Self {
                rows,
                cols,
                indptr,
                indices,
                values,
            },
            diag,
        ))
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Nonzero `(column, weight)` pairs of one row.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|(c, _)| *c == j).map_or(0.0, |(_, w)| w)
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n_rows()).map(|i| self.row(i).map(|e| e.1).sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.n_cols()];
        for (j, w) in self.indices.iter().zip(&self.values) {
            c[*j] += w;
        }
        c
    }

    /// Entries as a `(user, influencer) → weight` map.
    pub fn entries(&self) -> BTreeMap<(String, String), f64> {
        let mut m = BTreeMap::new();
        for i in 0..self.n_rows() {
            for (j, w) in self.row(i) {
                m.insert((self.rows[i].clone(), self.cols[j].clone()), w);
            }
        }
        m
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n_rows(), self.n_cols());
        for i in 0..self.n_rows() {
            for (j, w) in self.row(i) {
                d[(i, j)] = w;
            }
        }
        d
    }

    /// Same matrix with every stored weight mapped through `f`; zero results are dropped.
    fn map_values(&self, f: impl Fn(f64) -> f64) -> BTreeMap<(String, String), f64> {
        let mut m = self.entries();
        for w in m.values_mut() {
            *w = f(*w);
        }
        m.retain(|_, w| *w > 0.0);
        m
    }
}

/// Count retweets of the given influencers per user and apply the filters.
/// Self-retweets never count; with `official` set only official clients do.
pub fn build_retweet_matrix(
    corpus: &Corpus,
    influencers: &BTreeSet<String>,
    min_distinct: usize,
    official: Option<&OfficialClients>,
) -> Result<(RetweetMatrix, MatrixDiagnostics), IdeologyError> {
    if influencers.is_empty() {
        return Err(IdeologyError::NoInfluencers);
    }
    let mut entries: BTreeMap<(String, String), f64> = BTreeMap::new();
    let (mut unofficial, mut selfs) = (0u64, 0u64);
    for r in &corpus.records {
        if r.kind != InteractionKind::Retweet {
            continue;
        }
        let Some(src) = r.source_user_id.as_deref() else { continue };
        if !influencers.contains(src) {
            continue;
        }
        if src == r.user_id {
            selfs += 1;
            continue;
        }
        if let Some(off) = official {
            if off.classify(&r.client) == ClientClass::Unofficial {
                unofficial += 1;
                continue;
            }
        }
        *entries.entry((r.user_id.clone(), src.to_string())).or_default() += 1.0;
    }
    let (mat, mut diag) = RetweetMatrix::from_entries(&entries, influencers, min_distinct)?;
    diag.skipped_unofficial = unofficial;
    diag.skipped_self = selfs;
    Ok((mat, diag))
}

/// Implicit standardized residual operator of a matrix.
#[derive(Debug, Clone)]
pub struct Residuals {
    /// `√r_i`
    pub a: Vec<f64>,
    /// `√c_j`
    pub b: Vec<f64>,
    n_cols: usize,
    q_rows: Vec<Vec<(usize, f64)>>,
    q_cols: Vec<Vec<(usize, f64)>>,
}

/// Standardized residuals `S = D_r^{-1/2} (P − r cᵀ) D_c^{-1/2}` with `P = A / total`.
pub fn standardized_residuals(mat: &RetweetMatrix) -> Result<Residuals, IdeologyError> {
    let total = mat.total();
    if !(total > 0.0) {
        return Err(IdeologyError::EmptyMatrix);
    }
    let r: Vec<f64> = mat.row_sums().iter().map(|s| s / total).collect();
    let c: Vec<f64> = mat.col_sums().iter().map(|s| s / total).collect();
    if let Some(i) = r.iter().position(|&x| x <= 0.0) {
        return Err(IdeologyError::ZeroRow(mat.rows[i].clone()));
    }
    if let Some(j) = c.iter().position(|&x| x <= 0.0) {
        return Err(IdeologyError::ZeroColumn(mat.cols[j].clone()));
    }
    let a: Vec<f64> = r.iter().map(|x| x.sqrt()).collect();
    let b: Vec<f64> = c.iter().map(|x| x.sqrt()).collect();
    let q_rows: Vec<Vec<(usize, f64)>> = (0..mat.n_rows())
        .map(|i| mat.row(i).map(|(j, w)| (j, w / total / (a[i] * b[j]))).collect())
        .collect();
    let mut q_cols = vec![Vec::new(); mat.n_cols()];
    for (i, row) in q_rows.iter().enumerate() {
        for &(j, q) in row {
            q_cols[j].push((i, q));
        }
    }
    Ok(Residuals {
        a,
        b,
        n_cols: mat.n_cols(),
        q_rows,
        q_cols,
    })
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

impl Residuals {
    pub fn n_rows(&self) -> usize {
        self.q_rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// `S v`
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let bv = dot(&self.b, v);
        self.q_rows
            .par_iter()
            .zip(&self.a)
            .map(|(row, ai)| row.iter().map(|&(j, q)| q * v[j]).sum::<f64>() - ai * bv)
            .collect()
    }

    /// `Sᵀ u`
    pub fn apply_t(&self, u: &[f64]) -> Vec<f64> {
        let au = dot(&self.a, u);
        self.q_cols
            .par_iter()
            .zip(&self.b)
            .map(|(col, bj)| col.iter().map(|&(i, q)| q * u[i]).sum::<f64>() - bj * au)
            .collect()
    }

    /// Squared Frobenius norm of `S`, the total inertia.
    pub fn inertia(&self) -> f64 {
        // ‖Q − a bᵀ‖² = ‖Q‖² − 2 aᵀQb + ‖a‖²‖b‖², with aᵀQb = 1 = ‖a‖² = ‖b‖²
        let q2: f64 = self.q_rows.iter().flatten().map(|(_, q)| q * q).sum();
        (q2 - 1.0).max(0.0)
    }

    /// Dense `S`, for inspection and testing.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut s = DMatrix::from_fn(self.n_rows(), self.n_cols, |i, j| -self.a[i] * self.b[j]);
        for (i, row) in self.q_rows.iter().enumerate() {
            for &(j, q) in row {
                s[(i, j)] += q;
            }
        }
        s
    }
}

/// Settings for the leading-axis iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub block_size: usize,
    pub seed: u64,
}

impl Default for AxisOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 10_000,
            block_size: 6,
            seed: 0,
        }
    }
}

/// Leading singular triplet `S v = σ u`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeadingAxis {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub sigma: f64,
    pub iterations: usize,
    /// `‖Sᵀu − σ v‖ / σ` at termination.
    pub residual: f64,
}

fn orthonormalize(m: DMatrix<f64>) -> DMatrix<f64> {
    let cols = m.ncols();
    let q = m.qr().q();
    q.columns(0, cols).into_owned()
}

/// Subspace iteration on `SᵀS` with Rayleigh-Ritz extraction, from a seeded
/// Gaussian start. Converged when the leading Ritz pair satisfies
/// `‖Sᵀu − σ v‖ ≤ tolerance · σ`.
pub fn leading_axis(res: &Residuals, options: &AxisOptions) -> Result<LeadingAxis, IdeologyError> {
    let m = res.n_cols();
    if res.inertia() <= 1e-28 {
        return Err(IdeologyError::ZeroResidual);
    }
    let p = options.block_size.clamp(1, m);
    let mut rng = rng::seeded(options.seed);
    let mut basis = orthonormalize(DMatrix::from_fn(m, p, |_, _| StandardNormal.sample(&mut rng)));
    let mut last_residual = f64::INFINITY;
    for it in 1..=options.max_iterations {
        let sv: Vec<Vec<f64>> = basis.column_iter().map(|c| res.apply(c.as_slice())).collect();
        let gram = DMatrix::from_fn(p, p, |i, j| dot(&sv[i], &sv[j]));
        let eig = SymmetricEigen::new(gram);
        let lead = eig.eigenvalues.imax();
        let lambda = eig.eigenvalues[lead];
        if !(lambda > 0.0) {
            return Err(IdeologyError::ZeroResidual);
        }
        let sigma = lambda.sqrt();
        let y = eig.eigenvectors.column(lead);
        let v: Vec<f64> = (basis.clone() * y).iter().copied().collect();
        let mut u = vec![0.0; res.n_rows()];
        for (k, col) in sv.iter().enumerate() {
            for (ui, s) in u.iter_mut().zip(col) {
                *ui += y[k] * s / sigma;
            }
        }
        let stu = res.apply_t(&u);
        let resid = stu.iter().zip(&v).map(|(x, vi)| (x - sigma * vi).powi(2)).sum::<f64>().sqrt() / sigma;
        last_residual = resid;
        if resid <= options.tolerance {
            let norm = dot(&u, &u).sqrt();
            let u = u.into_iter().map(|x| x / norm).collect();
            return Ok(LeadingAxis {
                u,
                v,
                sigma,
                iterations: it,
                residual: resid,
            });
        }
        let next = DMatrix::from_fn(m, p, |_, _| 0.0);
        let mut next = next;
        for (k, col) in sv.iter().enumerate() {
            let t = res.apply_t(col);
            next.column_mut(k).copy_from_slice(&t);
        }
        basis = orthonormalize(next);
    }
    Err(IdeologyError::NotConverged {
        iterations: options.max_iterations,
        residual: last_residual,
    })
}

/// How the sign of the axis was fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Orientation {
    /// Correlation with the users' average leaning, after orientation.
    LeaningCorrelation { correlation: f64, users: usize },
    /// No usable leanings: the first user with a nonzero position is placed right.
    FirstUserPositive,
}

/// Standard row coordinates on the first axis, standardized to mean 0 and
/// sample sd 1, with right positive.
pub fn user_positions(
    mat: &RetweetMatrix,
    res: &Residuals,
    axis: &LeadingAxis,
    leanings: Option<&HashMap<String, f64>>,
) -> Result<(Vec<f64>, Orientation), IdeologyError> {
    let raw: Vec<f64> = axis.u.iter().zip(&res.a).map(|(u, a)| u / a).collect();
    let mut x = standardize(&raw)?;
    let mut orientation = Orientation::FirstUserPositive;
    if let Some(lean) = leanings {
        let (xs, ls): (Vec<f64>, Vec<f64>) = mat
            .rows
            .iter()
            .zip(&x)
            .filter_map(|(id, &p)| lean.get(id).map(|&l| (p, l)))
            .unzip();
        if let Ok(r) = pearson_correlation(&xs, &ls) {
            if r < 0.0 {
                x.iter_mut().for_each(|v| *v = -*v);
            }
            orientation = Orientation::LeaningCorrelation {
                correlation: r.abs(),
                users: xs.len(),
            };
        }
    }
    if orientation == Orientation::FirstUserPositive {
        if let Some(first) = x.iter().find(|v| **v != 0.0) {
            if *first < 0.0 {
                x.iter_mut().for_each(|v| *v = -*v);
            }
        }
    }
    Ok((x, orientation))
}

fn standardize(raw: &[f64]) -> Result<Vec<f64>, IdeologyError> {
    let n = raw.len();
    if n < 2 {
        return Err(stats::StatsError::TooFewObservations { needed: 2, got: n }.into());
    }
    let mean = raw.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = raw.iter().map(|v| v - mean).collect();
    let sd = (centered.iter().map(|v| v * v).sum::<f64>() / (n - 1) as f64).sqrt();
    if !(sd > 0.0) {
        return Err(stats::StatsError::ZeroVariance("user positions").into());
    }
    // second centering pass removes rounding left by the first
    let scaled: Vec<f64> = centered.iter().map(|v| v / sd).collect();
    let m2 = scaled.iter().sum::<f64>() / n as f64;
    Ok(scaled.iter().map(|v| v - m2).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluencerPosition {
    pub influencer_id: String,
    pub position: f64,
    pub n_retweeters: usize,
}

/// Lower weighted median: the first value, in ascending order, at which the
/// cumulative weight reaches half the total.
pub fn weighted_lower_median(points: &mut [(f64, f64)]) -> Option<f64> {
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = points.iter().map(|p| p.1).sum();
    let mut acc = 0.0;
    for &(x, w) in points.iter() {
        acc += w;
        if acc >= total / 2.0 {
            return Some(x);
        }
    }
    points.last().map(|p| p.0)
}

/// Each influencer sits at the median position of their retweeters, weighted
/// by retweet counts unless `weighted` is false.
pub fn influencer_positions(mat: &RetweetMatrix, users: &[f64], weighted: bool) -> Vec<InfluencerPosition> {
    let mut per_col: Vec<Vec<(f64, f64)>> = vec![Vec::new(); mat.n_cols()];
    for (i, &x) in users.iter().enumerate() {
        for (j, w) in mat.row(i) {
            per_col[j].push((x, if weighted { w } else { 1.0 }));
        }
    }
    per_col
        .into_iter()
        .zip(&mat.cols)
        .map(|(mut pts, id)| InfluencerPosition {
            influencer_id: id.clone(),
            n_retweeters: pts.len(),
            position: weighted_lower_median(&mut pts).unwrap_or(f64::NAN),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Variant {
    Baseline,
    DropOnes,
    LogWeights,
    Subsample { fraction: f64, seed: u64 },
}

impl std::str::FromStr for Variant {
    type Err = String;

    /// `baseline`, `drop_ones`, `log_weights` or `subsample:<fraction>[:<seed>]`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "baseline" => Ok(Variant::Baseline),
            "drop_ones" => Ok(Variant::DropOnes),
            "log_weights" => Ok(Variant::LogWeights),
            _ => {
                let mut parts = s.split(':');
                if parts.next() != Some("subsample") {
                    return Err(format!("unknown variant {s:?}"));
                }
                let fraction = parts
                    .next()
                    .and_then(|f| f.parse().ok())
                    .ok_or_else(|| format!("subsample needs a fraction: {s:?}"))?;
                let seed = match parts.next() {
                    Some(x) => x.parse().map_err(|_| format!("bad subsample seed in {s:?}"))?,
                    None => 0,
                };
                Ok(Variant::Subsample { fraction, seed })
            }
        }
    }
}

/// A perturbed copy of the matrix used to check how stable the positions are.
/// The row filter is re-applied to the result.
pub fn robustness_variant(mat: &RetweetMatrix, variant: Variant, min_distinct: usize) -> Result<RetweetMatrix, IdeologyError> {
    let cols: BTreeSet<String> = mat.cols.iter().cloned().collect();
    let entries = match variant {
        Variant::Baseline => mat.entries(),
        Variant::DropOnes => mat.map_values(|w| if w == 1.0 { 0.0 } else { w }),
        Variant::LogWeights => mat.map_values(f64::ln_1p),
        Variant::Subsample { fraction, seed } => subsample_events(mat, fraction, seed)?,
    };
    let min = if matches!(variant, Variant::LogWeights | Variant::Baseline) { 1 } else { min_distinct };
    Ok(RetweetMatrix::from_entries(&entries, &cols, min)?.0)
}

/// Keep `round(fraction · total)` retweet events drawn uniformly without
/// replacement, one hypergeometric draw per entry.
fn subsample_events(mat: &RetweetMatrix, fraction: f64, seed: u64) -> Result<BTreeMap<(String, String), f64>, IdeologyError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(IdeologyError::InvalidFraction(fraction));
    }
    let mut entries = mat.entries();
    if entries.values().any(|w| w.fract() != 0.0) {
        return Err(IdeologyError::NonIntegerCounts);
    }
    let mut remaining_pop: u64 = entries.values().map(|w| *w as u64).sum();
    let mut remaining_draw = (fraction * remaining_pop as f64).round() as u64;
    let mut rng = rng::seeded(seed);
    for w in entries.values_mut() {
        let k = *w as u64;
        let take = if remaining_draw == 0 {
            0
        } else if remaining_draw == remaining_pop {
            k
        } else {
            Hypergeometric::new(remaining_pop, k, remaining_draw)
                .expect("valid hypergeometric parameters")
                .sample(&mut rng)
        };
        remaining_pop -= k;
        remaining_draw -= take;
        *w = take as f64;
    }
    entries.retain(|_, w| *w > 0.0);
    Ok(entries)
}

/// Options for a full estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdeologyOptions {
    pub weighted_median: bool,
    pub axis: AxisOptions,
}

impl Default for IdeologyOptions {
    fn default() -> Self {
        Self {
            weighted_median: true,
            axis: AxisOptions::default(),
        }
    }
}

/// Users and influencers placed on the first axis.
#[derive(Debug, Clone, PartialEq)]
pub struct IdeologyScale {
    pub users: Vec<String>,
    pub user_positions: Vec<f64>,
    pub influencers: Vec<InfluencerPosition>,
    pub orientation: Orientation,
    pub singular_value: f64,
    pub iterations: usize,
}

impl IdeologyScale {
    pub fn user_map(&self) -> HashMap<String, f64> {
        self.users.iter().cloned().zip(self.user_positions.iter().copied()).collect()
    }

    pub fn influencer_map(&self) -> HashMap<String, f64> {
        self.influencers.iter().map(|p| (p.influencer_id.clone(), p.position)).collect()
    }

    pub fn write_user_csv<W: Write>(&self, writer: W) -> Result<(), IdeologyError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["user_id", "position"])?;
        for (id, x) in self.users.iter().zip(&self.user_positions) {
            w.write_record([id.as_str(), &x.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_influencer_csv<W: Write>(&self, writer: W) -> Result<(), IdeologyError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["influencer_id", "position", "n_retweeters"])?;
        for p in &self.influencers {
            w.write_record([p.influencer_id.as_str(), &p.position.to_string(), &p.n_retweeters.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Residuals, leading axis, user and influencer positions in one call.
pub fn estimate(
    mat: &RetweetMatrix,
    leanings: Option<&HashMap<String, f64>>,
    options: &IdeologyOptions,
) -> Result<IdeologyScale, IdeologyError> {
    let res = standardized_residuals(mat)?;
    let axis = leading_axis(&res, &options.axis)?;
    let (x, orientation) = user_positions(mat, &res, &axis, leanings)?;
    let influencers = influencer_positions(mat, &x, options.weighted_median);
    Ok(IdeologyScale {
        users: mat.rows.clone(),
        user_positions: x,
        influencers,
        orientation,
        singular_value: axis.sigma,
        iterations: axis.iterations,
    })
}

/// Correlation of two user-position vectors over the users they share.
pub fn position_correlation(a: &IdeologyScale, b: &IdeologyScale) -> Result<f64, IdeologyError> {
    let bm = b.user_map();
    let (x, y): (Vec<f64>, Vec<f64>) = a
        .users
        .iter()
        .zip(&a.user_positions)
        .filter_map(|(id, &p)| bm.get(id).map(|&q| (p, q)))
        .unzip();
    Ok(pearson_correlation(&x, &y)?)
}
