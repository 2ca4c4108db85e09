//! Goodness-of-fit helpers for checking sampler output against known
//! marginals.

/// One-sample Kolmogorov-Smirnov statistic `sup |F_n - F|`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic critical value of the KS statistic at level `alpha` for `n`
/// samples: `sqrt(-ln(alpha / 2) / 2) / sqrt(n)`.
pub fn ks_critical_value(alpha: f64, n: usize) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

/// `½ Σ |p_i - q_i|`; the shorter slice is padded with zeros.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len().max(q.len());
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    0.5 * (0..n).map(|i| (at(p, i) - at(q, i)).abs()).sum::<f64>()
}

/// Normalized histogram of `values` over `0..len`; out-of-range values are
/// counted in the total but not binned.
pub fn empirical_pmf(values: impl IntoIterator<Item = usize>, len: usize) -> Vec<f64> {
    let mut counts = vec![0usize; len];
    let mut total = 0usize;
    for v in values {
        total += 1;
        if v < len {
            counts[v] += 1;
        }
    }
    counts
        .into_iter()
        .map(|c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
        .collect()
}
