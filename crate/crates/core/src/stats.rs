//! Polarization statistics: Hartigans' dip with a Monte Carlo null, BCa
//! bootstrap intervals, Pearson correlation and quote/retweet ratios by side.

use std::collections::HashMap;
use std::fmt;

use rand::Rng as _;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::corpus::{Corpus, InteractionKind};
use crate::rng;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("sample contains non-finite values")]
    NonFinite,
    #[error("sample is not sorted ascending")]
    Unsorted,
    #[error("lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),
    #[error("need at least {needed} replicates, got {got}")]
    TooFewReplicates { needed: usize, got: usize },
    #[error("confidence level must lie in (0, 1), got {0}")]
    InvalidLevel(f64),
    #[error("statistic is not finite on a resample")]
    StatisticNotFinite,
}

/// Hartigans' dip of a sorted sample.
///
/// Follows the classic greatest-convex-minorant / least-concave-majorant
/// cycling algorithm, with the dip floored at `1/(2n)`.
pub fn dip_statistic(sorted: &[f64]) -> Result<f64, StatsError> {
    let n = sorted.len();
    if n < 2 {
        return Err(StatsError::TooFewObservations { needed: 2, got: n });
    }
    if sorted.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    if sorted.windows(2).any(|w| w[1] < w[0]) {
        return Err(StatsError::Unsorted);
    }
    Ok(dip_unchecked(sorted))
}

/// Dip on a sorted, finite sample of length ≥ 2. Works in units of `1/(2n)`.
fn dip_unchecked(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    // 1-based views keep the index arithmetic readable
    let x = |i: usize| sorted[i - 1];
    let mut dip = 1.0f64;
    if x(n) == x(1) {
        return dip / (2 * n) as f64;
    }

    let mut mn = vec![0usize; n + 1];
    mn[1] = 1;
    for j in 2..=n {
        mn[j] = j - 1;
        loop {
            let mnj = mn[j];
            let mnmnj = mn[mnj];
            if mnj == 1
                || (x(j) - x(mnj)) * ((mnj - mnmnj) as f64) < (x(mnj) - x(mnmnj)) * ((j - mnj) as f64)
            {
                break;
            }
            mn[j] = mnmnj;
        }
    }
    let mut mj = vec![0usize; n + 1];
    mj[n] = n;
    for k in (1..n).rev() {
        mj[k] = k + 1;
        loop {
            let mjk = mj[k];
            let mjmjk = mj[mjk];
            if mjk == n
                || (x(k) - x(mjk)) * (mjk as f64 - mjmjk as f64)
                    < (x(mjk) - x(mjmjk)) * (k as f64 - mjk as f64)
            {
                break;
            }
            mj[k] = mjmjk;
        }
    }

    let mut gcm = vec![0usize; n + 2];
    let mut lcm = vec![0usize; n + 2];
    let (mut low, mut high) = (1usize, n);
    loop {
        // knots of the convex minorant, from high down to low
        let mut l_gcm = 1;
        gcm[1] = high;
        while gcm[l_gcm] > low {
            gcm[l_gcm + 1] = mn[gcm[l_gcm]];
            l_gcm += 1;
        }
        // knots of the concave majorant, from low up to high
        let mut l_lcm = 1;
        lcm[1] = low;
        while lcm[l_lcm] < high {
            lcm[l_lcm + 1] = mj[lcm[l_lcm]];
            l_lcm += 1;
        }
        if l_gcm == 2 && l_lcm == 2 {
            break;
        }

        // largest vertical gap between the two hulls
        let mut d = 0.0f64;
        let mut ig = 0usize;
        let mut ih = 0usize;
        let mut ix = l_gcm - 1;
        let mut iv = 2usize;
        loop {
            let gcmix = gcm[ix];
            let lcmiv = lcm[iv];
            if gcmix > lcmiv {
                let gcmi1 = gcm[ix + 1];
                let dx = (lcmiv - gcmi1 + 1) as f64
                    - (x(lcmiv) - x(gcmi1)) * (gcmix - gcmi1) as f64 / (x(gcmix) - x(gcmi1));
                iv += 1;
                if dx >= d {
                    d = dx;
                    ig = ix + 1;
                    ih = iv - 1;
                }
            } else {
                let lcmiv1 = lcm[iv - 1];
                let dx = (x(gcmix) - x(lcmiv1)) * (lcmiv - lcmiv1) as f64 / (x(lcmiv) - x(lcmiv1))
                    - (gcmix as f64 - lcmiv1 as f64 - 1.0);
                ix -= 1;
                if dx >= d {
                    d = dx;
                    ig = ix + 1;
                    ih = iv;
                }
            }
            ix = ix.max(1);
            iv = iv.min(l_lcm);
            if gcm[ix] == lcm[iv] {
                break;
            }
        }
        if d < dip || ig == 0 {
            break;
        }

        let mut dip_l = 0.0f64;
        for j in ig..l_gcm {
            let (jb, je) = (gcm[j + 1], gcm[j]);
            let mut max_t = 1.0f64;
            if je - jb > 1 && x(je) != x(jb) {
                let c = (je - jb) as f64 / (x(je) - x(jb));
                for jj in jb..=je {
                    let t = (jj - jb + 1) as f64 - (x(jj) - x(jb)) * c;
                    max_t = max_t.max(t);
                }
            }
            dip_l = dip_l.max(max_t);
        }
        let mut dip_u = 0.0f64;
        for j in ih..l_lcm {
            let (jb, je) = (lcm[j], lcm[j + 1]);
            let mut max_t = 1.0f64;
            if je - jb > 1 && x(je) != x(jb) {
                let c = (je - jb) as f64 / (x(je) - x(jb));
                for jj in jb..=je {
                    let t = (x(jj) - x(jb)) * c - (jj as f64 - jb as f64 - 1.0);
                    max_t = max_t.max(t);
                }
            }
            dip_u = dip_u.max(max_t);
        }
        dip = dip.max(dip_l.max(dip_u));

        if low == gcm[ig] && high == lcm[ih] {
            break;
        }
        low = gcm[ig];
        high = lcm[ih];
    }
    dip / (2 * n) as f64
}

/// Dip of an unsorted sample.
pub fn dip_of(sample: &[f64]) -> Result<f64, StatsError> {
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    dip_statistic(&v)
}

/// Settings for [`dip_test`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipTestConfig {
    pub b_null: usize,
    pub b_boot: usize,
    pub level: f64,
    pub seed: u64,
}

impl Default for DipTestConfig {
    fn default() -> Self {
        Self {
            b_null: 9999,
            b_boot: 1000,
            level: 0.95,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DipResult {
    pub statistic: f64,
    pub p_value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub level: f64,
    pub n: usize,
    pub b_boot: usize,
    pub b_null: usize,
    pub seed: u64,
}

impl fmt::Display for DipResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pct = (self.level * 100.0).round();
        write!(
            f,
            "D = {:.4} ({pct}% CI: [{:.3},{:.3}]), p = {}, n = {}, B_boot = {}, B_null = {}, seed = {}",
            self.statistic,
            self.ci_low,
            self.ci_high,
            format_p(self.p_value, self.b_null),
            self.n,
            self.b_boot,
            self.b_null,
            self.seed
        )
    }
}

/// Monte Carlo p-values are never below `1/(B+1)`; report that floor as a bound.
fn format_p(p: f64, b_null: usize) -> String {
    let floor = 1.0 / (b_null as f64 + 1.0);
    if p <= floor {
        format!("< {:.1e}", floor * 1.0000001)
    } else {
        format!("{p:.4}")
    }
}

/// Sorted uniform sample built from exponential spacings. The dip is affine
/// invariant, so the cumulative sums need no rescaling.
fn null_sample(n: usize, rng: &mut rng::Rng) -> Vec<f64> {
    let mut acc = 0.0;
    (0..n)
        .map(|_| {
            let e: f64 = Exp1.sample(rng);
            acc += e;
            acc
        })
        .collect()
}

/// Monte Carlo p-value of an observed dip against `b_null` uniform samples of size `n`.
pub fn dip_p_value(observed: f64, n: usize, b_null: usize, seed: u64) -> f64 {
    let exceed = (0..b_null as u64)
        .into_par_iter()
        .filter(|&r| {
            let mut rng = rng::seeded(rng::derive_seed(seed, r));
            dip_unchecked(&null_sample(n, &mut rng)) >= observed
        })
        .count();
    (exceed as f64 + 1.0) / (b_null as f64 + 1.0)
}

/// Dip test of unimodality with a Monte Carlo p-value and a BCa interval.
pub fn dip_test(sample: &[f64], config: &DipTestConfig) -> Result<DipResult, StatsError> {
    if sample.len() < 4 {
        return Err(StatsError::TooFewObservations {
            needed: 4,
            got: sample.len(),
        });
    }
    if config.b_null < 100 {
        return Err(StatsError::TooFewReplicates {
            needed: 100,
            got: config.b_null,
        });
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let statistic = dip_statistic(&sorted)?;
    let p_value = dip_p_value(statistic, sorted.len(), config.b_null, rng::derive_seed(config.seed, 0));
    let (ci_low, ci_high) = if config.b_boot == 0 {
        (f64::NAN, f64::NAN)
    } else {
        bootstrap_bca(
            &sorted,
            |s| dip_of(s).unwrap_or(f64::NAN),
            config.b_boot,
            config.level,
            rng::derive_seed(config.seed, 1),
        )?
    };
    Ok(DipResult {
        statistic,
        p_value,
        ci_low,
        ci_high,
        level: config.level,
        n: sorted.len(),
        b_boot: config.b_boot,
        b_null: config.b_null,
        seed: config.seed,
    })
}

/// Above this size the jackknife for the acceleration uses groups.
pub const JACKKNIFE_GROUP_THRESHOLD: usize = 100_000;
pub const JACKKNIFE_GROUPS: usize = 200;

/// Bias-corrected and accelerated bootstrap interval for `statistic`.
///
/// Resample `b` runs from its own derived seed, so the result is independent
/// of scheduling. A degenerate resample distribution yields the point estimate
/// for both endpoints.
pub fn bootstrap_bca<F>(sample: &[f64], statistic: F, b: usize, level: f64, seed: u64) -> Result<(f64, f64), StatsError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let n = sample.len();
    if n < 2 {
        return Err(StatsError::TooFewObservations { needed: 2, got: n });
    }
    if b < 100 {
        return Err(StatsError::TooFewReplicates { needed: 100, got: b });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(StatsError::InvalidLevel(level));
    }
    let theta = statistic(sample);
    if !theta.is_finite() {
        return Err(StatsError::StatisticNotFinite);
    }
    let mut boot: Vec<f64> = (0..b as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::seeded(rng::derive_seed(seed, r));
            let resample: Vec<f64> = (0..n).map(|_| sample[rng.random_range(0..n)]).collect();
            statistic(&resample)
        })
        .collect();
    if boot.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::StatisticNotFinite);
    }
    boot.sort_by(f64::total_cmp);
    if boot[0] == boot[b - 1] {
        return Ok((theta, theta));
    }

    let std_normal = Normal::standard();
    let below = boot.iter().filter(|&&v| v < theta).count() as f64;
    let at_or_below = boot.iter().filter(|&&v| v <= theta).count() as f64;
    let bf = b as f64;
    let prop = ((below + at_or_below) / (2.0 * bf)).clamp(0.5 / bf, 1.0 - 0.5 / bf);
    let z0 = std_normal.inverse_cdf(prop);

    let accel = jackknife_acceleration(sample, &statistic)?;
    let alpha = (1.0 - level) / 2.0;
    let adjusted = |q: f64| {
        let z = std_normal.inverse_cdf(q);
        let denom = 1.0 - accel * (z0 + z);
        if denom <= 0.0 {
            // acceleration overwhelms the correction; fall to the extreme
            return if z > 0.0 { 1.0 } else { 0.0 };
        }
        std_normal.cdf(z0 + (z0 + z) / denom)
    };
    let lo = quantile_sorted(&boot, adjusted(alpha));
    let hi = quantile_sorted(&boot, adjusted(1.0 - alpha));
    Ok((lo.min(hi), lo.max(hi)))
}

fn jackknife_acceleration<F>(sample: &[f64], statistic: &F) -> Result<f64, StatsError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let n = sample.len();
    let groups = if n > JACKKNIFE_GROUP_THRESHOLD { JACKKNIFE_GROUPS } else { n };
    // group g holds the indices congruent to g
    let values: Vec<f64> = (0..groups)
        .into_par_iter()
        .map(|g| {
            let rest: Vec<f64> = sample
                .iter()
                .enumerate()
                .filter(|(i, _)| i % groups != g)
                .map(|(_, v)| *v)
                .collect();
            statistic(&rest)
        })
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::StatisticNotFinite);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let (mut s2, mut s3) = (0.0, 0.0);
    for v in &values {
        let d = mean - v;
        s2 += d * d;
        s3 += d * d * d;
    }
    Ok(if s2 > 0.0 { s3 / (6.0 * s2.powf(1.5)) } else { 0.0 })
}

/// Linear-interpolation quantile of ascending data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Product-moment correlation.
pub fn pearson_correlation(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(StatsError::TooFewObservations { needed: 2, got: x.len() });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(StatsError::ZeroVariance("x"));
    }
    if syy == 0.0 {
        return Err(StatsError::ZeroVariance("y"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    /// Negative positions are left, positive right, zero has no side.
    pub fn of(position: f64) -> Option<Side> {
        if position < 0.0 {
            Some(Side::Left)
        } else if position > 0.0 {
            Some(Side::Right)
        } else {
            None
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Quote and retweet counts by (user side, influencer side).
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct QuoteRatioTable {
    pub quotes: [[u64; 2]; 2],
    pub retweets: [[u64; 2]; 2],
}

impl QuoteRatioTable {
    /// Quotes per retweet in one cell; undefined without retweets.
    pub fn ratio(&self, user: Side, influencer: Side) -> Option<f64> {
        let (u, i) = (user.index(), influencer.index());
        ratio(self.quotes[u][i], self.retweets[u][i])
    }

    /// Quotes per retweet over all influencers for users on one side.
    pub fn user_side_ratio(&self, user: Side) -> Option<f64> {
        let u = user.index();
        ratio(self.quotes[u].iter().sum(), self.retweets[u].iter().sum())
    }
}

fn ratio(q: u64, r: u64) -> Option<f64> {
    (r > 0).then(|| q as f64 / r as f64)
}

/// Tabulate quotes against retweets by the sides of the sharing user and the
/// quoted or retweeted influencer. Entities without a position, or at
/// exactly zero, are skipped.
pub fn quote_retweet_ratio(
    corpus: &Corpus,
    user_positions: &HashMap<String, f64>,
    influencer_positions: &HashMap<String, f64>,
) -> QuoteRatioTable {
    let mut table = QuoteRatioTable::default();
    for r in &corpus.records {
        let quote = match r.kind {
            InteractionKind::Quote => true,
            InteractionKind::Retweet => false,
            _ => continue,
        };
        let Some(src) = r.source_user_id.as_deref() else { continue };
        let (Some(&up), Some(&ip)) = (user_positions.get(&r.user_id), influencer_positions.get(src)) else {
            continue;
        };
        let (Some(us), Some(is)) = (Side::of(up), Side::of(ip)) else { continue };
        let cell = if quote { &mut table.quotes } else { &mut table.retweets };
        cell[us.index()][is.index()] += 1;
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TweetRecord;
    use proptest::prelude::*;

    #[test]
    fn dip_two_points() {
        assert_eq!(dip_statistic(&[0.0, 1.0]).unwrap(), 0.25);
        assert!(dip_statistic(&[1.0]).is_err());
        assert_eq!(dip_statistic(&[1.0, 0.0]), Err(StatsError::Unsorted));
        assert_eq!(dip_statistic(&[0.0, f64::NAN]), Err(StatsError::NonFinite));
    }

    #[test]
    fn dip_constant_sample_is_floor() {
        assert_eq!(dip_statistic(&[2.0; 10]).unwrap(), 1.0 / 20.0);
    }

    #[test]
    fn dip_evenly_spaced_is_floor() {
        let v: Vec<f64> = (0..50).map(f64::from).collect();
        approx::assert_abs_diff_eq!(dip_statistic(&v).unwrap(), 0.01, epsilon = 1e-15);
    }

    #[test]
    fn dip_two_clusters() {
        // two tight equal clusters: the best unimodal fit misses a quarter
        let mut v: Vec<f64> = (0..100).map(|i| i as f64 * 1e-3).collect();
        v.extend((0..100).map(|i| 10.0 + i as f64 * 1e-3));
        let d = dip_statistic(&v).unwrap();
        assert!(d > 0.2 && d <= 0.25, "{d}");
    }

    #[test]
    fn dip_changes_under_rank_transform() {
        // ranks are evenly spaced, so any bimodal sample drops to the floor
        let mut v: Vec<f64> = (0..20).map(|i| i as f64 * 1e-3).collect();
        v.extend((0..20).map(|i| 5.0 + i as f64 * 1e-3));
        assert!(dip_statistic(&v).unwrap() > 0.2);
        let ranks: Vec<f64> = (0..v.len()).map(|i| i as f64).collect();
        approx::assert_abs_diff_eq!(dip_statistic(&ranks).unwrap(), 1.0 / 80.0, epsilon = 1e-15);
    }

    #[test]
    fn pearson_cases() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 3.0).collect();
        approx::assert_abs_diff_eq!(pearson_correlation(&x, &y).unwrap(), 1.0, epsilon = 1e-15);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        approx::assert_abs_diff_eq!(pearson_correlation(&x, &neg).unwrap(), -1.0, epsilon = 1e-15);
        // means 2 and 7/3; sxy = 3, sxx = 2, syy = 14/3
        let hand = 3.0 / (2.0f64 * 14.0 / 3.0).sqrt();
        approx::assert_abs_diff_eq!(pearson_correlation(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap(), hand, epsilon = 1e-12);
        assert_eq!(pearson_correlation(&[1.0, 1.0], &[1.0, 2.0]), Err(StatsError::ZeroVariance("x")));
        assert!(pearson_correlation(&[1.0], &[1.0]).is_err());
        assert!(pearson_correlation(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn bca_constant_sample() {
        let s = [3.5; 40];
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert_eq!(bootstrap_bca(&s, mean, 200, 0.95, 1).unwrap(), (3.5, 3.5));
    }

    #[test]
    fn bca_nesting_and_validation() {
        let s: Vec<f64> = (1..=60).map(|i| ((i * 37) % 23) as f64 + 0.1 * i as f64).collect();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let a = bootstrap_bca(&s, mean, 1000, 0.95, 9).unwrap();
        let b = bootstrap_bca(&s, mean, 1000, 0.99, 9).unwrap();
        assert!(b.0 <= a.0 && a.1 <= b.1);
        assert!(a.0 < mean(&s) && mean(&s) < a.1);
        assert_eq!(a, bootstrap_bca(&s, mean, 1000, 0.95, 9).unwrap());
        assert!(bootstrap_bca(&s, mean, 99, 0.95, 9).is_err());
        assert!(bootstrap_bca(&s, mean, 100, 1.0, 9).is_err());
    }

    #[test]
    fn bca_affine_equivariance() {
        let s: Vec<f64> = (1..=40).map(|i| ((i * i) % 17) as f64).collect();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (lo, hi) = bootstrap_bca(&s, mean, 500, 0.9, 4).unwrap();
        let (lo2, hi2) = bootstrap_bca(&s, |v| 3.0 * mean(v) - 2.0, 500, 0.9, 4).unwrap();
        approx::assert_relative_eq!(lo2, 3.0 * lo - 2.0, max_relative = 1e-12);
        approx::assert_relative_eq!(hi2, 3.0 * hi - 2.0, max_relative = 1e-12);
    }

    #[test]
    fn grouped_jackknife_used_for_large_samples() {
        let s: Vec<f64> = (0..JACKKNIFE_GROUP_THRESHOLD + 1).map(|i| (i % 1000) as f64).collect();
        let calls = std::sync::atomic::AtomicUsize::new(0);
        let stat = |v: &[f64]| {
            calls.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
            v[0]
        };
        jackknife_acceleration(&s, &stat).unwrap();
        assert_eq!(calls.into_inner(), JACKKNIFE_GROUPS);
    }

    #[test]
    fn dip_test_deterministic() {
        let s: Vec<f64> = (0..200).map(|i| ((i * 7919) % 200) as f64 / 10.0 + if i % 2 == 0 { 50.0 } else { 0.0 }).collect();
        let cfg = DipTestConfig { b_null: 200, b_boot: 200, level: 0.95, seed: 3 };
        let a = dip_test(&s, &cfg).unwrap();
        assert_eq!(a, dip_test(&s, &cfg).unwrap());
        assert!(a.p_value < 0.01);
        assert!(a.ci_low <= a.ci_high);
        assert!(a.statistic >= 1.0 / 400.0);
        let text = a.to_string();
        assert!(text.starts_with("D = "), "{text}");
        assert!(text.contains("95% CI: ["), "{text}");
        assert!(dip_test(&s[..3], &cfg).is_err());
        assert!(dip_test(&s, &DipTestConfig { b_null: 99, ..cfg }).is_err());
    }

    fn rec(user: &str, src: &str, kind: InteractionKind) -> TweetRecord {
        TweetRecord {
            tweet_id: format!("{user}-{src}-{kind}"),
            user_id: user.into(),
            timestamp: 0.0,
            kind,
            source_user_id: Some(src.into()),
            urls: vec![],
            client: "Twitter Web App".into(),
            verified: None,
            text: None,
        }
    }

    #[test]
    fn quote_ratio_cells() {
        let users: HashMap<String, f64> = [("l".into(), -1.0), ("r".into(), 1.0), ("z".into(), 0.0)].into();
        let infl: HashMap<String, f64> = [("L".into(), -0.5), ("R".into(), 0.5)].into();
        let mut records: Vec<TweetRecord> = (0..10).map(|_| rec("l", "L", InteractionKind::Retweet)).collect();
        records.push(rec("l", "L", InteractionKind::Quote));
        records.push(rec("l", "R", InteractionKind::Quote));
        records.push(rec("z", "R", InteractionKind::Retweet));
        records.push(rec("r", "R", InteractionKind::Retweet));
        let t = quote_retweet_ratio(&Corpus { records }, &users, &infl);
        assert_eq!(t.ratio(Side::Left, Side::Left), Some(0.1));
        assert_eq!(t.ratio(Side::Left, Side::Right), None);
        assert_eq!(t.ratio(Side::Right, Side::Right), Some(0.0));
        assert_eq!(t.ratio(Side::Right, Side::Left), None);
        assert_eq!(t.user_side_ratio(Side::Left), Some(0.2));
    }

    #[test]
    fn pooled_separated_samples_have_larger_dip() {
        use rand_distr::{Distribution, Normal};
        let bell = Normal::new(0.0, 1.0).unwrap();
        let mut larger = 0;
        for seed in 0..100 {
            let mut rng = crate::rng::seeded(seed);
            let a: Vec<f64> = (0..200).map(|_| bell.sample(&mut rng) - 4.0).collect();
            let b: Vec<f64> = (0..200).map(|_| bell.sample(&mut rng) + 4.0).collect();
            let pooled: Vec<f64> = a.iter().chain(&b).copied().collect();
            let d = dip_of(&pooled).unwrap();
            larger += (d > dip_of(&a).unwrap() && d > dip_of(&b).unwrap()) as usize;
        }
        assert!(larger > 50, "pooled dip larger in {larger}/100 runs");
    }

    proptest! {
        #[test]
        fn dip_affine_invariance_and_bounds(mut v in prop::collection::vec(-50.0f64..50.0, 2..60)) {
            v.sort_by(f64::total_cmp);
            let d = dip_statistic(&v).unwrap();
            let n = v.len() as f64;
            prop_assert!(d >= 1.0 / (2.0 * n) - 1e-15 && d <= 0.25 + 1e-12);
            let affine: Vec<f64> = v.iter().map(|x| 4.0 * x - 7.0).collect();
            prop_assert!((dip_statistic(&affine).unwrap() - d).abs() < 1e-9);
        }

        #[test]
        fn pearson_affine_invariant(
            xy in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..30),
            a in 0.1f64..5.0, b in -5.0f64..5.0,
        ) {
            let x: Vec<f64> = xy.iter().map(|p| p.0).collect();
            let y: Vec<f64> = xy.iter().map(|p| p.1).collect();
            if let Ok(r) = pearson_correlation(&x, &y) {
                let xt: Vec<f64> = x.iter().map(|v| a * v + b).collect();
                prop_assert!((pearson_correlation(&xt, &y).unwrap() - r).abs() < 1e-9);
                prop_assert!((-1.0..=1.0).contains(&r));
            }
        }
    }
}
