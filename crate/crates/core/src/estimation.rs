//! Posterior summaries, point estimates and structural-recovery metrics.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::baselines::{cycle_break_and_cover, WeightedDigraph};
use crate::order::{ActionCatalog, Poset};
use crate::sampler::Chain;
use crate::trace::{ip_coverage, TraceSet};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EstimationError {
    #[error("chain has no recorded samples")]
    EmptyChain,
    #[error("estimate has {estimate} actions but truth has {truth}")]
    CatalogMismatch { estimate: usize, truth: usize },
    #[error("threshold must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("sample edge ({0}, {1}) out of range")]
    EdgeOutOfRange(usize, usize),
}

/// Default posterior threshold.
pub const DEFAULT_ALPHA: f64 = 1.0 / 3.0;

/// `π̂[i][j]`: fraction of samples whose closure has `i ≻ j`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMarginals {
    m: usize,
    values: Vec<f64>,
}

impl EdgeMarginals {
    pub fn from_matrix(rows: &[Vec<f64>]) -> Self {
        let m = rows.len();
        EdgeMarginals {
            m,
            values: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.m + j]
    }

    /// `1 - π̂[i][j] - π̂[j][i]`.
    pub fn incomparable(&self, i: usize, j: usize) -> f64 {
        1.0 - self.get(i, j) - self.get(j, i)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.m.max(1)).map(<[f64]>::to_vec).collect()
    }

    /// Header row of action names, then one row per action.
    pub fn to_csv(&self, catalog: &ActionCatalog) -> String {
        let mut out = String::new();
        let quote = |s: &str| {
            if s.contains([',', '"', '\n']) {
                format!("\"{}\"", s.replace('"', "\"\""))
            } else {
                s.to_string()
            }
        };
        let header: Vec<String> = catalog.names().iter().map(|n| quote(n)).collect();
        let _ = writeln!(out, "{}", header.join(","));
        for i in 0..self.m {
            let row: Vec<String> = (0..self.m).map(|j| self.get(i, j).to_string()).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

pub fn edge_marginals(chain: &Chain) -> Result<EdgeMarginals, EstimationError> {
    if chain.samples.is_empty() {
        return Err(EstimationError::EmptyChain);
    }
    let m = chain.m();
    let mut counts = vec![0u64; m * m];
    for sample in &chain.samples {
        for &[i, j] in &sample.edges {
            if i >= m || j >= m {
                return Err(EstimationError::EdgeOutOfRange(i, j));
            }
            counts[i * m + j] += 1;
        }
    }
    let n = chain.samples.len() as f64;
    Ok(EdgeMarginals {
        m,
        values: counts.into_iter().map(|c| c as f64 / n).collect(),
    })
}

fn repair(marginals: &EdgeMarginals, seeds: impl IntoIterator<Item = (usize, usize)>) -> Poset {
    let mut g = WeightedDigraph::new(marginals.m);
    for (i, j) in seeds {
        g.add_edge(i, j, marginals.get(i, j));
    }
    cycle_break_and_cover(&g).closure()
}

/// Seed edges `π̂ ≥ α`, repaired into a valid order with `π̂` as weights.
pub fn threshold_estimate(marginals: &EdgeMarginals, alpha: f64) -> Result<Poset, EstimationError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(EstimationError::InvalidAlpha(alpha));
    }
    Ok(repair(marginals, threshold_seeds(marginals, alpha)))
}

/// Ordered pairs with `π̂[i][j] ≥ α`.
pub fn threshold_seeds(marginals: &EdgeMarginals, alpha: f64) -> Vec<(usize, usize)> {
    let m = marginals.m;
    (0..m)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && marginals.get(i, j) >= alpha)
        .collect()
}

/// Per pair, the relation with strictly largest mass among `i ≻ j`,
/// `j ≻ i` and `i ∥ j`; any tie resolves to incomparable.
pub fn mode_estimate(marginals: &EdgeMarginals) -> Poset {
    let m = marginals.m;
    let mut seeds = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            let (fwd, back, none) = (
                marginals.get(i, j),
                marginals.get(j, i),
                marginals.incomparable(i, j),
            );
            if fwd > back && fwd > none {
                seeds.push((i, j));
            } else if back > fwd && back > none {
                seeds.push((j, i));
            }
        }
    }
    repair(marginals, seeds)
}

/// Whether some pair carries two relation masses `≥ 1/3`.
pub fn has_ambiguous_pair(marginals: &EdgeMarginals) -> bool {
    let third = 1.0 / 3.0;
    (0..marginals.m).any(|i| {
        (i + 1..marginals.m).any(|j| {
            let masses = [
                marginals.get(i, j),
                marginals.get(j, i),
                marginals.incomparable(i, j),
            ];
            masses.iter().filter(|&&p| p >= third).count() >= 2
        })
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Prf {
    /// Precision is 1 when nothing is predicted and nothing is true, 0 when
    /// nothing is predicted but something is true. Recall is 1 when nothing
    /// is true.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let precision = if tp + fp > 0 {
            tp as f64 / (tp + fp) as f64
        } else if fn_ == 0 {
            1.0
        } else {
            0.0
        };
        let recall = if tp + fn_ > 0 {
            tp as f64 / (tp + fn_) as f64
        } else {
            1.0
        };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Prf {
            precision,
            recall,
            f1,
            tp,
            fp,
            fn_,
        }
    }
}

fn check_same(estimate: &Poset, truth: &Poset) -> Result<(), EstimationError> {
    if estimate.m() == truth.m() {
        Ok(())
    } else {
        Err(EstimationError::CatalogMismatch {
            estimate: estimate.m(),
            truth: truth.m(),
        })
    }
}

/// Precision, recall and F1 over transitive-reduction edges.
pub fn edge_prf(estimate: &Poset, truth: &Poset) -> Result<Prf, EstimationError> {
    check_same(estimate, truth)?;
    let est = estimate.transitive_reduction();
    let tru = truth.transitive_reduction();
    let tp = est.edges().iter().filter(|&&(i, j)| tru.contains(i, j)).count();
    Ok(Prf::from_counts(
        tp,
        est.edges().len() - tp,
        tru.edges().len() - tp,
    ))
}

/// Size of the symmetric difference of the cover-edge sets; a reversed
/// edge counts twice.
pub fn shd(estimate: &Poset, truth: &Poset) -> Result<usize, EstimationError> {
    let prf = edge_prf(estimate, truth)?;
    Ok(prf.fp + prf.fn_)
}

/// Fraction of traces that are linear extensions of `estimate`; 1 for an
/// empty set.
pub fn feasibility(traces: &TraceSet, estimate: &Poset) -> f64 {
    if traces.is_empty() {
        return 1.0;
    }
    let ok = traces
        .encoded()
        .iter()
        .filter(|seq| estimate.is_linear_extension(seq))
        .count();
    ok as f64 / traces.len() as f64
}

/// F1 of classifying unordered pairs as incomparable, positives being the
/// pairs incomparable in `truth`.
pub fn ip_f1(estimate: &Poset, truth: &Poset) -> Result<Prf, EstimationError> {
    check_same(estimate, truth)?;
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for i in 0..truth.m() {
        for j in i + 1..truth.m() {
            match (!estimate.comparable(i, j), !truth.comparable(i, j)) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
    }
    Ok(Prf::from_counts(tp, fp, fn_))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub shd: usize,
    pub feasibility: f64,
    pub ip_cov: f64,
    pub ip_f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

pub fn recovery_report(
    estimate: &Poset,
    truth: &Poset,
    traces: &TraceSet,
) -> Result<RecoveryReport, EstimationError> {
    let prf = edge_prf(estimate, truth)?;
    Ok(RecoveryReport {
        precision: prf.precision,
        recall: prf.recall,
        f1: prf.f1,
        shd: prf.fp + prf.fn_,
        feasibility: feasibility(traces, estimate),
        ip_cov: ip_coverage(traces, truth),
        ip_f1: ip_f1(estimate, truth)?.f1,
        tp: prf.tp,
        fp: prf.fp,
        fn_: prf.fn_,
    })
}
