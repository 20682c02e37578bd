//! Paired two-sided Wilcoxon signed-rank tests with Holm adjustment.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Outcome of one paired test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilcoxonResult {
    /// Pairs remaining after zero differences are dropped.
    pub n_used: usize,
    /// Sum of the ranks of positive differences (midranks on ties).
    pub w_plus: f64,
    /// Tie- and continuity-corrected standardized statistic.
    pub z: f64,
    /// Two-sided p-value: exact for up to 25 used pairs, normal
    /// approximation beyond.
    pub p_value: f64,
    /// Effect size `|z| / sqrt(n_used)`.
    pub effect_r: f64,
}

/// Paired two-sided Wilcoxon signed-rank test of `a` versus `b`.
/// Zero differences are dropped; with nothing left the result is the null
/// (`p = 1`, `r = 0`).
pub fn paired_wilcoxon(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(Error::config("paired test needs columns of equal length"));
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    let m = diffs.len();
    if m == 0 {
        return Ok(WilcoxonResult {
            n_used: 0,
            w_plus: 0.0,
            z: 0.0,
            p_value: 1.0,
            effect_r: 0.0,
        });
    }

    // Midranks of |d|, and tie-group sizes for the variance correction.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_unstable_by(|&i, &j| diffs[i].abs().total_cmp(&diffs[j].abs()));
    let mut ranks = vec![0.0f64; m];
    let mut tie_term = 0.0f64;
    let mut i = 0usize;
    while i < m {
        let mut j = i;
        while j + 1 < m && diffs[order[j + 1]].abs() == diffs[order[i]].abs() {
            j += 1;
        }
        let midrank = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = midrank;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();

    let mf = m as f64;
    let mean = mf * (mf + 1.0) / 4.0;
    let var = mf * (mf + 1.0) * (2.0 * mf + 1.0) / 24.0 - tie_term / 48.0;
    let z = if var > 0.0 {
        let shift = w_plus - mean;
        (shift - 0.5 * shift.signum()) / var.sqrt()
    } else {
        0.0
    };

    let p_value = if m <= 25 {
        exact_two_sided_p(&ranks, w_plus)
    } else {
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        (2.0 * (1.0 - normal.cdf(z.abs()))).min(1.0)
    };

    Ok(WilcoxonResult {
        n_used: m,
        w_plus,
        z,
        p_value,
        effect_r: z.abs() / mf.sqrt(),
    })
}

/// Exact two-sided p over the signed-rank null: all 2^m sign patterns of
/// the realized midranks are equally likely. Doubling the midranks makes
/// them integers, so a subset-sum count covers the distribution; counts and
/// the power-of-two divisor stay exact in `f64` for m ≤ 25.
fn exact_two_sided_p(ranks: &[f64], w_plus: f64) -> f64 {
    let m = ranks.len();
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r) as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; total + 1];
    counts[0] = 1.0;
    for &r in &doubled {
        for w in (r..=total).rev() {
            counts[w] += counts[w - r];
        }
    }
    let w2 = (2.0 * w_plus).round() as usize;
    let patterns = (1u64 << m) as f64;
    let p_le: f64 = counts[..=w2].iter().sum::<f64>() / patterns;
    let p_ge: f64 = counts[w2..].iter().sum::<f64>() / patterns;
    (2.0 * p_le.min(p_ge)).min(1.0)
}

/// Holm step-down adjustment: ascending raw p-values are scaled by the
/// number of remaining hypotheses, with running-maximum monotonicity, capped
/// at 1. Values return in input order.
pub fn holm_adjust(p_values: &[f64]) -> Vec<f64> {
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_unstable_by(|&i, &j| p_values[i].total_cmp(&p_values[j]));
    let mut adjusted = vec![0.0f64; m];
    let mut running = 0.0f64;
    for (k, &idx) in order.iter().enumerate() {
        running = running.max(((m - k) as f64 * p_values[idx]).min(1.0));
        adjusted[idx] = running;
    }
    adjusted
}

/// One method's comparison against the baseline column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedTestResult {
    /// Column index of the compared method.
    pub method: usize,
    pub n_used: usize,
    pub effect_r: f64,
    pub p_raw: f64,
    pub p_adjusted: f64,
}

/// Tests every non-baseline column of a datasets-by-methods matrix against
/// the baseline column, Holm-adjusting the p-values across methods.
pub fn paired_wilcoxon_holm(matrix: &[Vec<f64>], baseline: usize) -> Result<Vec<PairedTestResult>> {
    if matrix.len() < 6 {
        return Err(Error::config(format!(
            "paired testing needs at least 6 datasets, got {}",
            matrix.len()
        )));
    }
    let n_methods = matrix[0].len();
    if matrix.iter().any(|row| row.len() != n_methods) {
        return Err(Error::config("ragged metric matrix"));
    }
    if baseline >= n_methods {
        return Err(Error::config("baseline column out of range"));
    }
    let column = |j: usize| matrix.iter().map(|row| row[j]).collect::<Vec<f64>>();
    let base = column(baseline);
    let methods: Vec<usize> = (0..n_methods).filter(|&j| j != baseline).collect();
    let tests = methods
        .iter()
        .map(|&j| paired_wilcoxon(&column(j), &base))
        .collect::<Result<Vec<WilcoxonResult>>>()?;
    let raw: Vec<f64> = tests.iter().map(|t| t.p_value).collect();
    let adjusted = holm_adjust(&raw);
    Ok(methods
        .into_iter()
        .zip(tests)
        .zip(adjusted)
        .map(|((method, t), p_adjusted)| PairedTestResult {
            method,
            n_used: t.n_used,
            effect_r: t.effect_r,
            p_raw: t.p_value,
            p_adjusted,
        })
        .collect())
}
