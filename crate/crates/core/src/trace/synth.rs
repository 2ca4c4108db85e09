use rand::Rng;

use super::{PrecedenceWitness, TraceError, TraceSet};
use crate::order::{full_set, ActionCatalog, Poset};

pub const DEFAULT_MAX_ATTEMPTS: usize = 10_000;

/// Randomized Kahn: at every step pick uniformly from the current frontier.
pub fn sample_linear_extension<R: Rng + ?Sized>(poset: &Poset, rng: &mut R) -> Vec<usize> {
    let m = poset.m();
    let mut remaining = full_set(m);
    let mut out = Vec::with_capacity(m);
    while out.len() < m {
        let frontier: Vec<usize> = poset.frontier(&remaining).ones().collect();
        let a = frontier[rng.random_range(0..frontier.len())];
        remaining.set(a, false);
        out.push(a);
    }
    out
}

/// `n` independent linear extensions named `{prefix}-{k}`.
pub fn sample_traces<R: Rng + ?Sized>(
    catalog: &ActionCatalog,
    poset: &Poset,
    n: usize,
    prefix: &str,
    rng: &mut R,
) -> Result<TraceSet, TraceError> {
    let seqs: Vec<Vec<usize>> = (0..n).map(|_| sample_linear_extension(poset, rng)).collect();
    TraceSet::from_indices(catalog.clone(), &seqs, prefix)
}

#[derive(Debug, Clone)]
pub struct CuratedTraces {
    pub traces: TraceSet,
    pub realized: f64,
    pub attempts: usize,
}

/// Greedy coverage curation: draw linear extensions and keep a candidate
/// only if it flips at least one more incomparable pair (the first draw is
/// always kept). Stops once realized coverage reaches `target`.
pub fn curate_to_coverage<R: Rng + ?Sized>(
    catalog: &ActionCatalog,
    poset: &Poset,
    target: f64,
    rng: &mut R,
    max_attempts: usize,
) -> Result<CuratedTraces, TraceError> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(TraceError::InvalidTarget(target));
    }
    let pairs = poset.incomparable_pairs();
    let coverage = |covered: usize| {
        if pairs.is_empty() {
            1.0
        } else {
            covered as f64 / pairs.len() as f64
        }
    };
    let mut witness = PrecedenceWitness::new(poset.m());
    let mut kept: Vec<Vec<usize>> = Vec::new();
    let mut covered = 0;
    let mut realized = 0.0;
    for attempt in 1..=max_attempts {
        let candidate = sample_linear_extension(poset, rng);
        let mut trial = witness.clone();
        trial.observe(&candidate);
        let now = trial.count_flipped(&pairs);
        if kept.is_empty() || now > covered {
            witness = trial;
            covered = now;
            kept.push(candidate);
            realized = coverage(covered);
            if realized >= target {
                return Ok(CuratedTraces {
                    traces: TraceSet::from_indices(catalog.clone(), &kept, "sim")?,
                    realized,
                    attempts: attempt,
                });
            }
        }
    }
    Err(TraceError::TargetUnreachable {
        realized,
        attempts: max_attempts,
    })
}
