//! Wilcoxon–Mann–Whitney rank-sum test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

/// Pooled sizes up to this use the exact permutation distribution.
pub const EXACT_LIMIT: usize = 16;

#[derive(Debug, Error, PartialEq)]
pub enum UTestError {
    #[error("u-test needs two non-empty samples")]
    EmptySample,
    #[error("u-test is degenerate: every value is tied and a sample has fewer than 2 values")]
    Degenerate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Normal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UTest {
    /// Mann–Whitney U of the first sample.
    pub u: f64,
    pub p_two_sided: f64,
    /// One-sided p for the alternative that the first sample tends to be larger.
    pub p_greater: f64,
    pub method: Method,
}

/// Midranks of `pooled` (1-based), doubled so they stay integral.
fn doubled_midranks(pooled: &[f64]) -> Vec<u64> {
    let mut idx: Vec<usize> = (0..pooled.len()).collect();
    idx.sort_by(|a, b| pooled[*a].total_cmp(&pooled[*b]));
    let mut ranks = vec![0u64; pooled.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && pooled[idx[j + 1]] == pooled[idx[i]] {
            j += 1;
        }
        // ranks i+1..=j+1 share their mean; doubled: (i+1)+(j+1)
        let r = (i + j + 2) as u64;
        for k in &idx[i..=j] {
            ranks[*k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn tie_sizes(pooled: &[f64]) -> Vec<usize> {
    let mut v = pooled.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let mut out = Vec::new();
    let mut i = 0;
    while i < v.len() {
        let mut j = i;
        while j + 1 < v.len() && v[j + 1] == v[i] {
            j += 1;
        }
        out.push(j - i + 1);
        i = j + 1;
    }
    out
}

/// Exact p-values for pooled sizes up to `EXACT_LIMIT`, normal otherwise.
pub fn u_test(a: &[f64], b: &[f64]) -> Result<UTest, UTestError> {
    let method = if a.len() + b.len() <= EXACT_LIMIT { Method::Exact } else { Method::Normal };
    u_test_with(a, b, method)
}

pub fn u_test_with(a: &[f64], b: &[f64], method: Method) -> Result<UTest, UTestError> {
    if a.is_empty() || b.is_empty() {
        return Err(UTestError::EmptySample);
    }
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let all_tied = pooled.iter().all(|x| *x == pooled[0]);
    if all_tied && (a.len() < 2 || b.len() < 2) {
        return Err(UTestError::Degenerate);
    }
    let (na, nb) = (a.len(), b.len());
    let ranks = doubled_midranks(&pooled);
    let ra2: u64 = ranks[..na].iter().sum();
    // U = R_a − n_a(n_a+1)/2, all doubled
    let base2 = (na * (na + 1)) as u64;
    let u2 = ra2 as i64 - base2 as i64;
    let u = u2 as f64 / 2.0;
    let (p_two_sided, p_greater) = match method {
        Method::Exact => exact_p(&ranks, na, ra2),
        Method::Normal => normal_p(u, na, nb, &tie_sizes(&pooled)),
    };
    Ok(UTest { u, p_two_sided, p_greater, method })
}

/// Exact permutation p-values: the distribution of the first sample's rank
/// sum over all equally likely ways of drawing `na` of the pooled ranks.
fn exact_p(ranks: &[u64], na: usize, observed: u64) -> (f64, f64) {
    let max_sum: u64 = ranks.iter().sum();
    let width = max_sum as usize + 1;
    // counts[k][s]: subsets of size k with doubled rank sum s
    let mut counts = vec![vec![0f64; width]; na + 1];
    counts[0][0] = 1.0;
    for &r in ranks {
        for k in (1..=na).rev() {
            let (lower, upper) = counts.split_at_mut(k);
            let prev = &lower[k - 1];
            let cur = &mut upper[0];
            for s in (r as usize..width).rev() {
                cur[s] += prev[s - r as usize];
            }
        }
    }
    let dist = &counts[na];
    let total: f64 = dist.iter().sum();
    // two-sided: at least as far from the null mean as observed
    let mean2 = (na as f64) * (ranks.len() as f64 + 1.0);
    let dev = (observed as f64 - mean2).abs();
    let eps = 1e-9;
    let mut two = 0.0;
    let mut greater = 0.0;
    for (s, c) in dist.iter().enumerate() {
        if *c == 0.0 {
            continue;
        }
        if (s as f64 - mean2).abs() >= dev - eps {
            two += c;
        }
        if s as f64 >= observed as f64 - eps {
            greater += c;
        }
    }
    ((two / total).min(1.0), (greater / total).min(1.0))
}

fn normal_p(u: f64, na: usize, nb: usize, ties: &[usize]) -> (f64, f64) {
    let (na, nb) = (na as f64, nb as f64);
    let n = na + nb;
    let mean = na * nb / 2.0;
    let tie_term: f64 = ties.iter().map(|t| (*t as f64).powi(3) - *t as f64).sum::<f64>() / (n * (n - 1.0));
    let var = na * nb / 12.0 * ((n + 1.0) - tie_term);
    if var <= 0.0 {
        return (1.0, if u >= mean { 1.0 } else { 0.0 });
    }
    let sd = var.sqrt();
    let std = Normal::standard();
    let z_two = ((u - mean).abs() - 0.5).max(0.0) / sd;
    let z_greater = (u - mean - 0.5) / sd;
    ((2.0 * std.sf(z_two)).min(1.0), std.sf(z_greater))
}
