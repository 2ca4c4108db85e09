use std::collections::BTreeSet;

use super::TraceSet;
use crate::order::Poset;

/// Which ordered pairs `(i, j)` some trace shows with `i` before `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrecedenceWitness {
    m: usize,
    before: Vec<bool>,
}

impl PrecedenceWitness {
    pub fn new(m: usize) -> Self {
        PrecedenceWitness {
            m,
            before: vec![false; m * m],
        }
    }

    pub fn from_traces(traces: &TraceSet) -> Self {
        let mut w = Self::new(traces.catalog().len());
        for seq in traces.encoded() {
            w.observe(seq);
        }
        w
    }

    pub fn observe(&mut self, seq: &[usize]) {
        for (p, &a) in seq.iter().enumerate() {
            for &b in &seq[p + 1..] {
                self.before[a * self.m + b] = true;
            }
        }
    }

    pub fn seen_before(&self, i: usize, j: usize) -> bool {
        self.before[i * self.m + j]
    }

    /// Pair witnessed in both relative orders.
    pub fn flipped(&self, i: usize, j: usize) -> bool {
        self.seen_before(i, j) && self.seen_before(j, i)
    }

    /// How many of `pairs` are flipped.
    pub fn count_flipped(&self, pairs: &[(usize, usize)]) -> usize {
        pairs.iter().filter(|&&(i, j)| self.flipped(i, j)).count()
    }
}

/// Fraction of `truth`'s incomparable pairs seen in both orders across
/// `traces`; `1.0` when `truth` has no incomparable pairs.
pub fn ip_coverage(traces: &TraceSet, truth: &Poset) -> f64 {
    let pairs = truth.incomparable_pairs();
    if pairs.is_empty() {
        return 1.0;
    }
    let witness = PrecedenceWitness::from_traces(traces);
    witness.count_flipped(&pairs) as f64 / pairs.len() as f64
}

/// Truth-free diagnostic: every unordered pair `(i, j)`, `i < j`, observed
/// in both relative orders.
pub fn pair_saturation(traces: &TraceSet) -> BTreeSet<(usize, usize)> {
    let witness = PrecedenceWitness::from_traces(traces);
    let m = traces.catalog().len();
    let mut out = BTreeSet::new();
    for i in 0..m {
        for j in i + 1..m {
            if witness.flipped(i, j) {
                out.insert((i, j));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::order::ActionCatalog;

    fn set(m: usize, seqs: &[&[usize]]) -> TraceSet {
        let seqs: Vec<Vec<usize>> = seqs.iter().map(|s| s.to_vec()).collect();
        TraceSet::from_indices(ActionCatalog::numbered(m), &seqs, "t").unwrap()
    }

    fn diamond() -> Poset {
        Poset::transitive_closure(4, [(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap()
    }

    #[test]
    fn diamond_coverage() {
        assert_eq!(ip_coverage(&set(4, &[&[0, 1, 2, 3]]), &diamond()), 0.0);
        assert_eq!(
            ip_coverage(&set(4, &[&[0, 1, 2, 3], &[0, 2, 1, 3]]), &diamond()),
            1.0
        );
    }

    #[test]
    fn total_order_is_vacuously_covered() {
        let chain = Poset::total_order(3, &[0, 1, 2]).unwrap();
        assert_eq!(ip_coverage(&set(3, &[&[0, 1, 2]]), &chain), 1.0);
    }

    #[test]
    fn nshape_coverage_by_pair_scan() {
        let truth = Poset::transitive_closure(5, [(0, 2), (1, 2), (1, 3), (2, 4)]).unwrap();
        // (1,2,3,4,5) and (2,4,1,3,5), 0-based
        let traces = set(5, &[&[0, 1, 2, 3, 4], &[1, 3, 0, 2, 4]]);
        // oracle: direction of each incomparable pair in each trace
        let pos = |seq: &[usize], a: usize| seq.iter().position(|&x| x == a).unwrap();
        let mut flipped = 0;
        let pairs = truth.incomparable_pairs();
        for &(i, j) in &pairs {
            let dirs: Vec<bool> = traces
                .encoded()
                .iter()
                .map(|s| pos(s, i) < pos(s, j))
                .collect();
            if dirs.iter().any(|&d| d) && dirs.iter().any(|&d| !d) {
                flipped += 1;
            }
        }
        assert_eq!(flipped, 3);
        assert_eq!(ip_coverage(&traces, &truth), 0.75);
    }

    #[test]
    fn coverage_ignores_order_and_duplicates() {
        let a = set(4, &[&[0, 1, 2, 3], &[0, 2, 1, 3]]);
        let b = set(4, &[&[0, 2, 1, 3], &[0, 1, 2, 3], &[0, 2, 1, 3]]);
        assert_eq!(ip_coverage(&a, &diamond()), ip_coverage(&b, &diamond()));
    }

    #[test]
    fn saturation_examples() {
        assert_eq!(
            pair_saturation(&set(2, &[&[0, 1], &[1, 0]])),
            BTreeSet::from([(0, 1)])
        );
        assert!(pair_saturation(&set(3, &[&[0, 1, 2]])).is_empty());
        assert_eq!(
            pair_saturation(&set(3, &[&[0, 1, 2], &[0, 2, 1], &[2, 0, 1]])),
            BTreeSet::from([(1, 2), (0, 2)])
        );
    }

    #[test]
    fn partial_traces_only_witness_cooccurring_pairs() {
        let traces = set(3, &[&[0, 1], &[2, 0]]);
        assert!(pair_saturation(&traces).is_empty());
        let w = PrecedenceWitness::from_traces(&traces);
        assert!(w.seen_before(2, 0) && !w.seen_before(1, 2));
    }
}
