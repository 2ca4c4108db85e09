use std::collections::BTreeMap;
use std::fmt;

use fixedbitset::FixedBitSet;

use super::{ElementSet, OrderError};

/// A strict partial order on `{0, .., m-1}`, stored transitively closed.
///
/// `succ[i]` holds every `j` with `i ≻ j` (i must precede j) and `pred[j]`
/// is the transposed view. Both are kept in sync by every constructor.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Poset {
    m: usize,
    succ: Vec<FixedBitSet>,
    pred: Vec<FixedBitSet>,
    // Row popcounts, so unrelated elements skip bit-row scans.
    out_degree: Vec<usize>,
    in_degree: Vec<usize>,
}

/// Hasse diagram of a [`Poset`]: the unique minimal edge set with the same closure.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CoverGraph {
    m: usize,
    edges: Vec<(usize, usize)>,
}

impl Poset {
    /// The empty (discrete) order on `m` elements.
    pub fn empty(m: usize) -> Self {
        Poset {
            m,
            succ: vec![FixedBitSet::with_capacity(m); m],
            pred: vec![FixedBitSet::with_capacity(m); m],
            out_degree: vec![0; m],
            in_degree: vec![0; m],
        }
    }

    /// The total order that lists `order` first to last.
    pub fn total_order(m: usize, order: &[usize]) -> Result<Self, OrderError> {
        Self::transitive_closure(m, order.windows(2).map(|w| (w[0], w[1])))
    }

    /// Closes an arbitrary edge relation under transitivity.
    ///
    /// Fails with [`OrderError::CycleDetected`] when reachability would make
    /// some pair mutually dominant (including self-loops).
    pub fn transitive_closure(
        m: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, OrderError> {
        let mut succ = vec![FixedBitSet::with_capacity(m); m];
        for (i, j) in edges {
            for index in [i, j] {
                if index >= m {
                    return Err(OrderError::IndexOutOfRange { index, m });
                }
            }
            succ[i].insert(j);
        }
        // Warshall over bit rows.
        for k in 0..m {
            let row_k = succ[k].clone();
            for row in succ.iter_mut() {
                if row.contains(k) {
                    row.union_with(&row_k);
                }
            }
        }
        for i in 0..m {
            if succ[i].contains(i) {
                let j = succ[i]
                    .ones()
                    .find(|&j| j != i && succ[j].contains(i))
                    .unwrap_or(i);
                return Err(OrderError::CycleDetected(i.min(j), i.max(j)));
            }
        }
        Ok(Self::from_closed_rows(m, succ))
    }

    /// Closes an `m×m` boolean relation matrix (`relation[i][j]` ⇔ i ≻ j).
    pub fn from_matrix(relation: &[Vec<bool>]) -> Result<Self, OrderError> {
        let m = relation.len();
        let edges = relation.iter().enumerate().flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, &b)| b)
                .map(move |(j, _)| (i, j))
        });
        Self::transitive_closure(m, edges)
    }

    /// Builds from rows that are already closed, irreflexive and acyclic.
    pub(crate) fn from_closed_rows(m: usize, succ: Vec<FixedBitSet>) -> Self {
        let mut pred = vec![FixedBitSet::with_capacity(m); m];
        for (i, row) in succ.iter().enumerate() {
            for j in row.ones() {
                pred[j].insert(i);
            }
        }
        let out_degree = succ.iter().map(|r| r.count_ones(..)).collect();
        let in_degree = pred.iter().map(|r| r.count_ones(..)).collect();
        Poset { m, succ, pred, out_degree, in_degree }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `h[i][j]`: whether `i ≻ j`.
    pub fn precedes(&self, i: usize, j: usize) -> bool {
        self.succ[i].contains(j)
    }

    pub fn comparable(&self, i: usize, j: usize) -> bool {
        self.precedes(i, j) || self.precedes(j, i)
    }

    /// Elements that `i` must precede.
    pub fn successors(&self, i: usize) -> &FixedBitSet {
        &self.succ[i]
    }

    /// Elements that must precede `j`.
    pub fn predecessors(&self, j: usize) -> &FixedBitSet {
        &self.pred[j]
    }

    /// `|successors(i)|`.
    pub fn out_degree(&self, i: usize) -> usize {
        self.out_degree[i]
    }

    /// `|predecessors(j)|`.
    pub fn in_degree(&self, j: usize) -> usize {
        self.in_degree[j]
    }

    /// Number of ordered pairs in the closure.
    pub fn relation_count(&self) -> usize {
        self.out_degree.iter().sum()
    }

    /// Closure pairs in row-major order.
    pub fn closure_edges(&self) -> Vec<(usize, usize)> {
        self.succ
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.ones().map(move |j| (i, j)))
            .collect()
    }

    pub fn relation_matrix(&self) -> Vec<Vec<bool>> {
        (0..self.m)
            .map(|i| (0..self.m).map(|j| self.precedes(i, j)).collect())
            .collect()
    }

    /// Returns the closure of this order plus `i ≻ j`.
    pub fn with_edge(&self, i: usize, j: usize) -> Result<Self, OrderError> {
        Self::transitive_closure(self.m, self.closure_edges().into_iter().chain([(i, j)]))
    }

    /// The Hasse diagram: `(i, j)` survives iff no `k` has `i ≻ k ≻ j`.
    pub fn transitive_reduction(&self) -> CoverGraph {
        let mut edges = Vec::new();
        for (i, row) in self.succ.iter().enumerate() {
            let mut implied = FixedBitSet::with_capacity(self.m);
            for k in row.ones() {
                implied.union_with(&self.succ[k]);
            }
            edges.extend(row.difference(&implied).map(|j| (i, j)));
        }
        CoverGraph { m: self.m, edges }
    }

    /// Minimal elements of `remaining`: members with no remaining predecessor.
    pub fn frontier(&self, remaining: &ElementSet) -> ElementSet {
        let mut out = FixedBitSet::with_capacity(self.m);
        for a in remaining.ones() {
            if self.pred[a].is_disjoint(remaining) {
                out.insert(a);
            }
        }
        out
    }

    /// `S(a) = |{b ∈ remaining, b ≠ a : a ≻ b}|` for each `a` in `remaining`.
    pub fn descendant_counts(&self, remaining: &ElementSet) -> BTreeMap<usize, usize> {
        remaining
            .ones()
            .map(|a| (a, self.succ[a].intersection_count(remaining)))
            .collect()
    }

    /// Unordered pairs `(i, j)`, `i < j`, related in neither direction.
    pub fn incomparable_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for i in 0..self.m {
            for j in i + 1..self.m {
                if !self.comparable(i, j) {
                    pairs.push((i, j));
                }
            }
        }
        pairs
    }

    /// Whether `trace` respects every constraint of the subposet induced on
    /// its items. Items are assumed distinct and in range.
    pub fn is_linear_extension(&self, trace: &[usize]) -> bool {
        let mut seen = FixedBitSet::with_capacity(self.m);
        for &a in trace {
            // a ≻ b with b already placed is a violation
            if !self.succ[a].is_disjoint(&seen) {
                return false;
            }
            seen.insert(a);
        }
        true
    }
}

impl fmt::Debug for Poset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Poset")
            .field("m", &self.m)
            .field("cover", &self.transitive_reduction().edges)
            .finish()
    }
}

impl CoverGraph {
    /// Normalizes any acyclic edge set to its cover.
    pub fn from_edges(
        m: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, OrderError> {
        Ok(Poset::transitive_closure(m, edges)?.transitive_reduction())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Cover edges sorted row-major.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.edges.binary_search(&(i, j)).is_ok()
    }

    pub fn closure(&self) -> Poset {
        Poset::transitive_closure(self.m, self.edges.iter().copied())
            .expect("a cover graph is acyclic")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::order::{element_set, full_set};

    /// Hasse diagram 1→3, 2→3, 2→4, 3→5 (0-based below).
    pub(crate) fn nshape() -> Poset {
        Poset::transitive_closure(5, [(0, 2), (1, 2), (1, 3), (2, 4)]).unwrap()
    }

    fn diamond() -> Poset {
        Poset::transitive_closure(4, [(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap()
    }

    #[test]
    fn closure_matches_adjacency_matrix_example() {
        let h = nshape();
        let expected = [
            [0, 0, 1, 0, 1],
            [0, 0, 1, 1, 1],
            [0, 0, 0, 0, 1],
            [0, 0, 0, 0, 0],
            [0, 0, 0, 0, 0],
        ];
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(h.precedes(i, j), expected[i][j] == 1, "({i},{j})");
            }
        }
        assert_eq!(h.relation_count(), 6);
    }

    #[test]
    fn reduction_recovers_hasse_diagram() {
        let matrix: Vec<Vec<bool>> = [
            [0, 0, 1, 0, 1],
            [0, 0, 1, 1, 1],
            [0, 0, 0, 0, 1],
            [0, 0, 0, 0, 0],
            [0, 0, 0, 0, 0],
        ]
        .iter()
        .map(|r| r.iter().map(|&b| b == 1).collect())
        .collect();
        let h = Poset::from_matrix(&matrix).unwrap();
        assert_eq!(
            h.transitive_reduction().edges(),
            &[(0, 2), (1, 2), (1, 3), (2, 4)]
        );
    }

    #[test]
    fn trivial_closures_and_reductions() {
        assert_eq!(Poset::transitive_closure(3, []).unwrap(), Poset::empty(3));
        let chain = Poset::transitive_closure(3, [(0, 1), (1, 2)]).unwrap();
        assert!(chain.precedes(0, 2));
        assert_eq!(chain.transitive_reduction().edges(), &[(0, 1), (1, 2)]);
        assert!(Poset::empty(4).transitive_reduction().edges().is_empty());
    }

    #[test]
    fn cycles_are_rejected() {
        let err = Poset::transitive_closure(3, [(0, 1), (1, 2), (2, 0)]).unwrap_err();
        assert!(matches!(err, OrderError::CycleDetected(0, 1)));
        let err = Poset::transitive_closure(2, [(1, 1)]).unwrap_err();
        assert!(matches!(err, OrderError::CycleDetected(1, 1)));
        assert!(matches!(
            Poset::transitive_closure(2, [(0, 5)]),
            Err(OrderError::IndexOutOfRange { index: 5, m: 2 })
        ));
    }

    #[test]
    fn frontier_examples() {
        assert_eq!(nshape().frontier(&full_set(5)), element_set(5, [0, 1]));
        assert_eq!(
            diamond().frontier(&element_set(4, [1, 2, 3])),
            element_set(4, [1, 2])
        );
        let s = element_set(6, [1, 4, 5]);
        assert_eq!(Poset::empty(6).frontier(&s), s);
    }

    #[test]
    fn linear_extension_checks() {
        let d = diamond();
        assert!(d.is_linear_extension(&[0, 1, 2, 3]));
        assert!(d.is_linear_extension(&[0, 2, 1, 3]));
        assert!(!d.is_linear_extension(&[1, 0, 2, 3]));
        // induced subposet on {2, 4} (1-based) still requires 2 before 4
        assert!(!d.is_linear_extension(&[3, 1]));
        assert!(d.is_linear_extension(&[1, 3]));
        assert!(d.is_linear_extension(&[2, 1]));
    }

    #[test]
    fn descendant_count_examples() {
        let counts = diamond().descendant_counts(&full_set(4));
        assert_eq!(counts.values().copied().collect::<Vec<_>>(), vec![3, 1, 1, 0]);
        let chain = Poset::total_order(3, &[0, 1, 2]).unwrap();
        let counts = chain.descendant_counts(&full_set(3));
        assert_eq!(counts.values().copied().collect::<Vec<_>>(), vec![2, 1, 0]);
        let counts = Poset::empty(3).descendant_counts(&full_set(3));
        assert!(counts.values().all(|&c| c == 0));
    }

    #[test]
    fn incomparable_pair_examples() {
        assert_eq!(diamond().incomparable_pairs(), vec![(1, 2)]);
        assert!(Poset::total_order(4, &[2, 0, 3, 1])
            .unwrap()
            .incomparable_pairs()
            .is_empty());
        // oracle: scan the closure for mutual non-reachability
        let h = nshape();
        let mut oracle = Vec::new();
        let rel = h.relation_matrix();
        for i in 0..5 {
            for j in i + 1..5 {
                if !rel[i][j] && !rel[j][i] {
                    oracle.push((i, j));
                }
            }
        }
        assert_eq!(oracle, vec![(0, 1), (0, 3), (2, 3), (3, 4)]);
        assert_eq!(h.incomparable_pairs(), oracle);
    }

    #[test]
    fn with_edge_closes_and_detects_cycles() {
        let d = diamond().with_edge(1, 2).unwrap();
        assert_eq!(d.transitive_reduction().edges(), &[(0, 1), (1, 2), (2, 3)]);
        assert!(diamond().with_edge(3, 0).is_err());
    }
}
