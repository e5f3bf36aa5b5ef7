use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest `n * m` handled by exact enumeration under [`Method::Auto`].
pub const EXACT_LIMIT: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Auto,
    Exact,
    NormalApproximation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    /// U statistic of the first sample.
    pub u: f64,
    /// Two-tailed.
    pub p_value: f64,
    /// `Exact` or `NormalApproximation`, never `Auto`.
    pub method: Method,
}

impl TestOutcome {
    pub fn significant(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// Two-tailed Mann-Whitney U test with midranks for ties.
///
/// Exact over all rank assignments when `n * m <= EXACT_LIMIT`, otherwise a
/// tie-corrected normal approximation with continuity correction.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<TestOutcome> {
    mann_whitney_u_with(a, b, Method::Auto)
}

pub fn mann_whitney_u_with(a: &[f64], b: &[f64], method: Method) -> Result<TestOutcome> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Invalid(
            "Mann-Whitney U needs two non-empty samples".into(),
        ));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::Invalid("Mann-Whitney U samples contain NaN".into()));
    }
    let (n, m) = (a.len(), b.len());
    let ranks2 = doubled_midranks(a, b);
    let r_a2: i64 = ranks2[..n].iter().sum();
    // 2U = 2R - n(n+1)
    let u2 = r_a2 - (n * (n + 1)) as i64;
    let u = u2 as f64 / 2.0;

    let method = match method {
        Method::Auto if n * m <= EXACT_LIMIT => Method::Exact,
        Method::Auto => Method::NormalApproximation,
        other => other,
    };
    if ranks2.iter().all(|&r| r == ranks2[0]) {
        return Ok(TestOutcome {
            u,
            p_value: 1.0,
            method,
        });
    }
    let p_value = match method {
        Method::Exact => exact_p(&ranks2, n, m, u2),
        _ => normal_p(&ranks2, n, m, u),
    };
    Ok(TestOutcome {
        u,
        p_value: p_value.clamp(0.0, 1.0),
        method,
    })
}

/// Midranks of the pooled sample, times two so they stay integral.
/// The first `a.len()` entries belong to `a`.
fn doubled_midranks(a: &[f64], b: &[f64]) -> Vec<i64> {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0i64; pooled.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        // positions i..=j share rank (i+1 + j+1) / 2
        let r2 = (i + j + 2) as i64;
        for &k in &order[i..=j] {
            ranks[k] = r2;
        }
        i = j + 1;
    }
    ranks
}

/// Fraction of the C(n+m, n) equally likely rank assignments whose U lies at
/// least as far from its mean as the observed one.
fn exact_p(ranks2: &[i64], n: usize, m: usize, u2: i64) -> f64 {
    // enumerate subsets of the smaller size; the distance from the mean is
    // symmetric in the choice
    let k = n.min(m);
    let total: i64 = ranks2.iter().sum();
    let max_sum = total as usize;
    // ways[j][s]: subsets of size j with doubled rank sum s
    let mut ways = vec![vec![0f64; max_sum + 1]; k + 1];
    ways[0][0] = 1.0;
    let mut reach = 0usize;
    for (idx, &r) in ranks2.iter().enumerate() {
        let r = r as usize;
        reach += r;
        for j in (1..=k.min(idx + 1)).rev() {
            let (lo, hi) = ways.split_at_mut(j);
            let (prev, cur) = (&lo[j - 1], &mut hi[0]);
            for s in (r..=reach.min(max_sum)).rev() {
                let w = prev[s - r];
                if w != 0.0 {
                    cur[s] += w;
                }
            }
        }
    }
    // 2U for a subset of size k with doubled sum s is s - k(k+1); its mean is k * (n + m - k)
    let mean2 = (k * (n + m - k)) as i64;
    let observed = if k == n { u2 } else { (2 * n * m) as i64 - u2 };
    let dev = (observed - mean2).abs();
    let base = (k * (k + 1)) as i64;
    let (mut tail, mut all) = (0.0, 0.0);
    for (s, &w) in ways[k].iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        all += w;
        if ((s as i64 - base) - mean2).abs() >= dev {
            tail += w;
        }
    }
    tail / all
}

fn normal_p(ranks2: &[i64], n: usize, m: usize, u: f64) -> f64 {
    let (nf, mf) = (n as f64, m as f64);
    let big_n = nf + mf;
    let mut sorted = ranks2.to_vec();
    sorted.sort_unstable();
    let mut ties = 0.0;
    for group in sorted.chunk_by(|x, y| x == y) {
        let t = group.len() as f64;
        ties += t * t * t - t;
    }
    let var = nf * mf / 12.0 * ((big_n + 1.0) - ties / (big_n * (big_n - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((u - nf * mf / 2.0).abs() - 0.5).max(0.0) / var.sqrt();
    let std_normal = Normal::standard();
    2.0 * (1.0 - std_normal.cdf(z))
}
