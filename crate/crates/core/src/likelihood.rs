//! Trace likelihoods.
//!
//! Frontier-softmax: at step `t` with remaining set `R_t` the next action is
//! drawn from a Boltzmann choice over the frontier of `R_t` with utility
//! `Q(a) = ln(1 + S(a))`, `S(a)` the number of remaining descendants, and
//! mixed with a uniform slip over all of `R_t`:
//!
//! ```text
//! p(y | R_t) = (1 - ε) · softmax_β(Q)[y] · 1[y ∈ frontier] + ε / |R_t|
//! ```
//!
//! [`trace_loglik`] evaluates this incrementally in time linear in the
//! number of steps plus the number of relations among the trace items.
//! Frontier utilities only depend on `S`, so the normalizer is a sum over
//! distinct descendant counts.
//!
//! Queue-Jump: the softmax term is replaced by the exact conditional of a
//! uniformly random linear extension, which needs extension counting.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::order::{element_set, ElementSet, ExtensionCounter, OrderError, Poset};
use crate::trace::TraceSet;

#[derive(Debug, thiserror::Error)]
pub enum LikelihoodError {
    #[error("inverse temperature must be positive and finite, got {0}")]
    InvalidBeta(f64),
    #[error("slip rate must lie in [0, 1), got {0}")]
    InvalidEpsilon(f64),
    #[error("jump probability must lie in [0, 1], got {0}")]
    InvalidJump(f64),
    #[error(transparent)]
    Order(#[from] OrderError),
}

pub const DEFAULT_EPSILON: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodParams {
    pub beta: f64,
    pub epsilon: f64,
}

impl LikelihoodParams {
    pub fn new(beta: f64, epsilon: f64) -> Result<Self, LikelihoodError> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(LikelihoodError::InvalidBeta(beta));
        }
        if !(0.0..1.0).contains(&epsilon) {
            return Err(LikelihoodError::InvalidEpsilon(epsilon));
        }
        Ok(LikelihoodParams { beta, epsilon })
    }
}

/// `ln(1 + S(a))` when `a` is on the frontier of `remaining`, else `-inf`.
pub fn successor_utility(a: usize, poset: &Poset, remaining: &ElementSet) -> f64 {
    if !poset.predecessors(a).is_disjoint(remaining) {
        return f64::NEG_INFINITY;
    }
    let s = poset.successors(a).intersection_count(remaining);
    utility(s)
}

fn utility(s: usize) -> f64 {
    (s as f64).ln_1p()
}

/// `ln Σ_{a ∈ frontier} exp(β Q(a))` from a histogram `S -> multiplicity`.
fn log_normalizer(histogram: &BTreeMap<usize, usize>, beta: f64) -> f64 {
    let Some((&s_max, _)) = histogram.last_key_value() else {
        return f64::NEG_INFINITY;
    };
    let top = beta * utility(s_max);
    let sum: f64 = histogram
        .iter()
        .map(|(&s, &n)| n as f64 * (beta * utility(s) - top).exp())
        .sum();
    top + sum.ln()
}

fn mixture(on_frontier: Option<(usize, f64)>, size: usize, params: &LikelihoodParams) -> f64 {
    let slip = params.epsilon / size as f64;
    match on_frontier {
        Some((s, log_z)) => {
            (1.0 - params.epsilon) * (params.beta * utility(s) - log_z).exp() + slip
        }
        None => slip,
    }
}

/// Probability that `y` is chosen next from `remaining`. Reference
/// implementation evaluated directly from the poset.
pub fn step_probability(
    y: usize,
    remaining: &ElementSet,
    poset: &Poset,
    params: &LikelihoodParams,
) -> f64 {
    let frontier = poset.frontier(remaining);
    let mut histogram = BTreeMap::new();
    for a in frontier.ones() {
        *histogram
            .entry(poset.successors(a).intersection_count(remaining))
            .or_insert(0) += 1;
    }
    let log_z = log_normalizer(&histogram, params.beta);
    let chosen = frontier
        .contains(y)
        .then(|| (poset.successors(y).intersection_count(remaining), log_z));
    mixture(chosen, remaining.count_ones(..), params)
}

/// `Σ_t ln p(y_t | R_t)` with `R_0` the set of trace items, so partial
/// traces are scored against the induced subposet.
pub fn trace_loglik(trace: &[usize], poset: &Poset, params: &LikelihoodParams) -> f64 {
    let m = poset.m();
    let mut remaining = element_set(m, trace.iter().copied());
    let mut unmet = vec![0usize; m];
    let mut below = vec![0usize; m];
    let mut histogram: BTreeMap<usize, usize> = BTreeMap::new();
    for &a in trace {
        if poset.in_degree(a) > 0 {
            unmet[a] = poset.predecessors(a).intersection_count(&remaining);
        }
        if poset.out_degree(a) > 0 {
            below[a] = poset.successors(a).intersection_count(&remaining);
        }
        if unmet[a] == 0 {
            *histogram.entry(below[a]).or_insert(0) += 1;
        }
    }

    let mut total = 0.0;
    for (t, &y) in trace.iter().enumerate() {
        let on_frontier = unmet[y] == 0;
        let chosen = on_frontier.then(|| (below[y], log_normalizer(&histogram, params.beta)));
        total += mixture(chosen, trace.len() - t, params).ln();

        remaining.set(y, false);
        if on_frontier {
            decrement(&mut histogram, below[y]);
        }
        if poset.in_degree(y) > 0 {
            for p in poset.predecessors(y).intersection(&remaining) {
                if unmet[p] == 0 {
                    decrement(&mut histogram, below[p]);
                    *histogram.entry(below[p] - 1).or_insert(0) += 1;
                }
                below[p] -= 1;
            }
        }
        if poset.out_degree(y) > 0 {
            for s in poset.successors(y).intersection(&remaining) {
                unmet[s] -= 1;
                if unmet[s] == 0 {
                    *histogram.entry(below[s]).or_insert(0) += 1;
                }
            }
        }
    }
    total
}

fn decrement(histogram: &mut BTreeMap<usize, usize>, key: usize) {
    let n = histogram.get_mut(&key).expect("histogram key present");
    *n -= 1;
    if *n == 0 {
        histogram.remove(&key);
    }
}

pub fn dataset_loglik(traces: &TraceSet, poset: &Poset, params: &LikelihoodParams) -> f64 {
    traces
        .encoded()
        .iter()
        .map(|seq| trace_loglik(seq, poset, params))
        .sum()
}

fn check_jump(jump_p: f64) -> Result<(), LikelihoodError> {
    if (0.0..=1.0).contains(&jump_p) {
        Ok(())
    } else {
        Err(LikelihoodError::InvalidJump(jump_p))
    }
}

/// Queue-Jump step probability:
/// `(1 - p) · #ext(R | y first) / #ext(R) + p / |R|`.
pub fn qj_step_probability(
    y: usize,
    remaining: &ElementSet,
    poset: &Poset,
    jump_p: f64,
    cap: usize,
) -> Result<f64, LikelihoodError> {
    check_jump(jump_p)?;
    let mut counter = ExtensionCounter::new(poset, cap)?;
    Ok(qj_step(&mut counter, y, remaining, jump_p))
}

fn qj_step(counter: &mut ExtensionCounter, y: usize, remaining: &ElementSet, jump_p: f64) -> f64 {
    let ratio = counter.count_starting_with(remaining, y) as f64 / counter.count(remaining) as f64;
    (1.0 - jump_p) * ratio + jump_p / remaining.count_ones(..) as f64
}

/// Queue-Jump trace log-likelihood sharing one memoized counter.
pub fn qj_trace_loglik(
    trace: &[usize],
    poset: &Poset,
    counter: &mut ExtensionCounter,
    jump_p: f64,
) -> f64 {
    let mut remaining = element_set(poset.m(), trace.iter().copied());
    let mut total = 0.0;
    for &y in trace {
        total += qj_step(counter, y, &remaining, jump_p).ln();
        remaining.set(y, false);
    }
    total
}

pub fn qj_dataset_loglik(
    traces: &TraceSet,
    poset: &Poset,
    jump_p: f64,
    cap: usize,
) -> Result<f64, LikelihoodError> {
    check_jump(jump_p)?;
    let mut counter = ExtensionCounter::new(poset, cap)?;
    Ok(traces
        .encoded()
        .iter()
        .map(|seq| qj_trace_loglik(seq, poset, &mut counter, jump_p))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::order::{full_set, ActionCatalog, LatentEmbedding, DEFAULT_NLE_CAP};
    use proptest::prelude::*;

    // 1 ≻ 2, 1 ≻ 3, 2 ≻ 4, 3 ≻ 4 in 0-based indices
    fn diamond() -> Poset {
        Poset::transitive_closure(4, [(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap()
    }

    fn params(beta: f64, epsilon: f64) -> LikelihoodParams {
        LikelihoodParams::new(beta, epsilon).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol || (a == b)
    }

    #[test]
    fn params_validation() {
        assert!(LikelihoodParams::new(1.0, 0.0).is_ok());
        for bad in [0.0, -1.0, f64::INFINITY, f64::NAN] {
            assert!(matches!(
                LikelihoodParams::new(bad, 0.1),
                Err(LikelihoodError::InvalidBeta(_))
            ));
        }
        for bad in [1.0, -0.01, f64::NAN] {
            assert!(matches!(
                LikelihoodParams::new(1.0, bad),
                Err(LikelihoodError::InvalidEpsilon(_))
            ));
        }
    }

    #[test]
    fn diamond_utilities() {
        let d = diamond();
        assert!(close(successor_utility(0, &d, &full_set(4)), 4f64.ln(), 1e-15));
        assert!(close(successor_utility(0, &d, &full_set(4)), 1.386, 1e-3));
        let r = element_set(4, [1, 3]);
        assert_eq!(successor_utility(3, &d, &r), f64::NEG_INFINITY);
        assert_eq!(successor_utility(3, &d, &element_set(4, [3])), 0.0);
    }

    #[test]
    fn diamond_step_rows() {
        let d = diamond();
        for eps in [0.0, 0.01, 0.5] {
            let p = params(1.0, eps);
            let s1 = step_probability(0, &full_set(4), &d, &p);
            assert!(close(s1, (1.0 - eps) + eps / 4.0, 1e-12));
            let s2 = step_probability(2, &element_set(4, [1, 2, 3]), &d, &p);
            assert!(close(s2, 0.5 * (1.0 - eps) + eps / 3.0, 1e-12));
            let s3 = step_probability(3, &element_set(4, [1, 3]), &d, &p);
            assert_eq!(s3, eps / 2.0);
        }
    }

    #[test]
    fn trace_loglik_diamond_product() {
        let d = diamond();
        let p = params(1.0, 0.01);
        let expected = ((0.99f64 + 0.0025) * (0.99 * 0.5 + 0.01 / 3.0) * 0.005 * (0.99 + 0.01)).ln();
        assert!(close(trace_loglik(&[0, 2, 3, 1], &d, &p), expected, 1e-12));
        assert_eq!(trace_loglik(&[0, 2, 3, 1], &d, &params(1.0, 0.0)), f64::NEG_INFINITY);
    }

    #[test]
    fn trace_loglik_limits() {
        let chain = Poset::total_order(5, &[2, 0, 4, 1, 3]).unwrap();
        assert_eq!(trace_loglik(&[2, 0, 4, 1, 3], &chain, &params(1.3, 0.0)), 0.0);

        // ε → 1: every step is uniform over R_t, total −ln T!
        let noisy = LikelihoodParams {
            beta: 1.0,
            epsilon: 1.0,
        };
        let expected = -(2..=5).map(|k| (k as f64).ln()).sum::<f64>();
        assert!(close(trace_loglik(&[3, 1, 0, 4, 2], &chain, &noisy), expected, 1e-12));
        assert_eq!(trace_loglik(&[], &chain, &noisy), 0.0);
    }

    #[test]
    fn partial_traces_use_the_induced_subposet() {
        let d = diamond();
        let p = params(1.0, 0.0);
        // 1 ≻ 4 through 2; on {1, 4} the subposet is a chain
        assert_eq!(trace_loglik(&[0, 3], &d, &p), 0.0);
        assert_eq!(trace_loglik(&[3, 0], &d, &p), f64::NEG_INFINITY);
        assert_eq!(trace_loglik(&[1, 2], &d, &p), 0.5f64.ln());
    }

    #[test]
    fn dataset_loglik_sums_traces() {
        let catalog = ActionCatalog::numbered(4);
        let d = diamond();
        let p = params(2.0, 0.05);
        let empty = TraceSet::from_indices(catalog.clone(), &[], "t").unwrap();
        assert_eq!(dataset_loglik(&empty, &d, &p), 0.0);
        let one = vec![0, 2, 1, 3];
        let dup = TraceSet::from_indices(catalog, &[one.clone(), one.clone()], "t").unwrap();
        assert!(close(
            dataset_loglik(&dup, &d, &p),
            2.0 * trace_loglik(&one, &d, &p),
            1e-12
        ));
    }

    #[test]
    fn truth_beats_reversed_edge_on_cloud_traces() {
        let text = r#"{
          "actions": ["CreateVpc", "CreateVSwitch", "CreateSecurityGroup", "RunInstances"],
          "traces": [
            ["CreateVpc", "CreateVSwitch", "CreateSecurityGroup", "RunInstances"],
            ["CreateVpc", "CreateSecurityGroup", "CreateVSwitch", "RunInstances"],
            ["CreateVpc", "CreateVSwitch", "CreateSecurityGroup", "RunInstances"]
          ]
        }"#;
        let traces = crate::trace::parse_trace_file(text).unwrap();
        let truth = diamond();
        let reversed = Poset::transitive_closure(4, [(1, 0), (0, 2), (1, 3), (2, 3)]).unwrap();
        let p = params(1.0, DEFAULT_EPSILON);
        let good = dataset_loglik(&traces, &truth, &p);
        let bad = dataset_loglik(&traces, &reversed, &p);
        assert!(good.is_finite());
        // oracle: product of direct step probabilities
        let direct = |poset: &Poset| -> f64 {
            traces
                .encoded()
                .iter()
                .map(|seq| {
                    let mut r = element_set(4, seq.iter().copied());
                    seq.iter()
                        .map(|&y| {
                            let v = step_probability(y, &r, poset, &p).ln();
                            r.set(y, false);
                            v
                        })
                        .sum::<f64>()
                })
                .sum()
        };
        assert!(close(good, direct(&truth), 1e-12));
        assert!(close(bad, direct(&reversed), 1e-12));
        assert!(good > bad);
    }

    #[test]
    fn qj_examples() {
        let d = diamond();
        let cap = DEFAULT_NLE_CAP;
        assert_eq!(qj_step_probability(0, &full_set(4), &d, 0.0, cap).unwrap(), 1.0);
        assert_eq!(
            qj_step_probability(1, &element_set(4, [1, 2, 3]), &d, 0.0, cap).unwrap(),
            0.5
        );
        let v = qj_step_probability(3, &element_set(4, [1, 3]), &d, 0.1, cap).unwrap();
        assert!(close(v, 0.05, 1e-15));
        assert!(matches!(
            qj_step_probability(0, &full_set(4), &d, 1.5, cap),
            Err(LikelihoodError::InvalidJump(_))
        ));
        let big = Poset::empty(22);
        assert!(matches!(
            qj_step_probability(0, &full_set(22), &big, 0.0, cap),
            Err(LikelihoodError::Order(OrderError::TooLarge { m: 22, cap: 20 }))
        ));
    }

    #[test]
    fn qj_pure_jump_is_uniform_over_permutations() {
        let catalog = ActionCatalog::numbered(4);
        let traces = TraceSet::from_indices(catalog, &[vec![3, 2, 1, 0]], "t").unwrap();
        let expected = -(24f64).ln();
        for poset in [diamond(), Poset::empty(4)] {
            let v = qj_dataset_loglik(&traces, &poset, 1.0, DEFAULT_NLE_CAP).unwrap();
            assert!(close(v, expected, 1e-12));
        }
    }

    /// All linear extensions by brute force.
    fn extensions(poset: &Poset) -> Vec<Vec<usize>> {
        fn go(poset: &Poset, rest: &mut Vec<usize>, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if rest.is_empty() {
                out.push(prefix.clone());
                return;
            }
            for k in 0..rest.len() {
                let a = rest[k];
                if rest.iter().any(|&b| poset.precedes(b, a)) {
                    continue;
                }
                rest.remove(k);
                prefix.push(a);
                go(poset, rest, prefix, out);
                prefix.pop();
                rest.insert(k, a);
            }
        }
        let mut out = Vec::new();
        go(poset, &mut (0..poset.m()).collect(), &mut Vec::new(), &mut out);
        out
    }

    fn random_poset() -> impl Strategy<Value = Poset> {
        (2usize..=7, 1usize..=3).prop_flat_map(|(m, k)| {
            prop::collection::vec(0u8..4, m * k).prop_map(move |v| {
                let values = v.into_iter().map(f64::from).collect();
                LatentEmbedding::new(m, k, values).unwrap().dominance_order()
            })
        })
    }

    proptest! {
        #[test]
        fn step_probabilities_normalize(
            poset in random_poset(),
            beta in 0.01f64..20.0,
            eps in 0.0f64..0.99,
            mask in any::<u8>(),
        ) {
            let m = poset.m();
            let mut r = element_set(m, (0..m).filter(|i| mask >> i & 1 == 1));
            if r.count_ones(..) == 0 {
                r.insert(0);
            }
            let p = params(beta, eps);
            let total: f64 = r.ones().map(|a| step_probability(a, &r, &poset, &p)).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            if eps > 0.0 {
                prop_assert!(r.ones().all(|a| step_probability(a, &r, &poset, &p) > 0.0));
            }
        }

        #[test]
        fn small_beta_flattens_the_frontier(poset in random_poset()) {
            let r = full_set(poset.m());
            let spread = |beta: f64| {
                let p = params(beta, 0.0);
                let probs: Vec<f64> = poset
                    .frontier(&r)
                    .ones()
                    .map(|a| step_probability(a, &r, &poset, &p))
                    .collect();
                probs.iter().cloned().fold(f64::MIN, f64::max)
                    - probs.iter().cloned().fold(f64::MAX, f64::min)
            };
            // p_max - p_min <= 1 - exp(-β ΔQ) <= β ln(1 + S_max)
            let bound = 1e-6 * (poset.m() as f64).ln();
            prop_assert!(spread(1e-6) <= bound);
            prop_assert!(spread(1e-10) < 1e-9);
        }

        #[test]
        fn larger_descendant_count_is_preferred(poset in random_poset(), beta in 0.05f64..10.0) {
            let r = full_set(poset.m());
            let p = params(beta, 0.01);
            let frontier: Vec<usize> = poset.frontier(&r).ones().collect();
            for &a in &frontier {
                for &b in &frontier {
                    let (sa, sb) = (
                        poset.successors(a).count_ones(..),
                        poset.successors(b).count_ones(..),
                    );
                    if sa > sb {
                        prop_assert!(
                            step_probability(a, &r, &poset, &p) > step_probability(b, &r, &poset, &p)
                        );
                    }
                }
            }
        }

        #[test]
        fn incremental_matches_direct(
            poset in random_poset(),
            beta in 0.01f64..20.0,
            eps in 0.0f64..0.5,
            order in prop::collection::vec(any::<u32>(), 7),
            keep in any::<u8>(),
        ) {
            let m = poset.m();
            let mut seq: Vec<usize> = (0..m).collect();
            seq.sort_by_key(|&i| order[i]);
            let first = seq[0];
            seq.retain(|&i| keep >> i & 1 == 1 || i == first);
            let p = params(beta, eps);
            let mut r = element_set(m, seq.iter().copied());
            let mut direct = 0.0;
            for &y in &seq {
                direct += step_probability(y, &r, &poset, &p).ln();
                r.set(y, false);
            }
            let fast = trace_loglik(&seq, &poset, &p);
            prop_assert!(close(fast, direct, 1e-10), "{} vs {}", fast, direct);
        }

        #[test]
        fn qj_matches_extension_enumeration(poset in random_poset(), pick in any::<usize>()) {
            let all = extensions(&poset);
            let r = full_set(poset.m());
            let y = pick % poset.m();
            let starting = all.iter().filter(|e| e[0] == y).count();
            let oracle = starting as f64 / all.len() as f64;
            let v = qj_step_probability(y, &r, &poset, 0.0, DEFAULT_NLE_CAP).unwrap();
            prop_assert!(close(v, oracle, 1e-12));
        }
    }
}
