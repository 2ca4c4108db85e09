//! Exact linear-extension counting.
//!
//! Counts are computed by peeling minimal elements off the remaining set
//! and memoizing on that set, `L(S) = Σ_{a ∈ min(S)} L(S \ {a})`. The
//! table is exponential in the subset size, so callers pass a cap.

use std::collections::HashMap;

use super::{ElementSet, OrderError, Poset};

pub const DEFAULT_NLE_CAP: usize = 20;
/// Subsets are encoded as `u64` masks.
pub const MAX_NLE_CAP: usize = 64;

/// Number of linear extensions of `poset`; fails when `m > cap`.
pub fn count_linear_extensions(poset: &Poset, cap: usize) -> Result<u128, OrderError> {
    let mut counter = ExtensionCounter::new(poset, cap)?;
    Ok(counter.count_mask(full_mask(poset.m())))
}

fn full_mask(m: usize) -> u64 {
    if m == 64 {
        u64::MAX
    } else {
        (1u64 << m) - 1
    }
}

/// Memoized counter that can be queried repeatedly on subsets of one poset.
pub struct ExtensionCounter {
    pred: Vec<u64>,
    memo: HashMap<u64, u128>,
}

impl ExtensionCounter {
    pub fn new(poset: &Poset, cap: usize) -> Result<Self, OrderError> {
        let m = poset.m();
        let cap = cap.min(MAX_NLE_CAP);
        if m > cap {
            return Err(OrderError::TooLarge { m, cap });
        }
        let pred = (0..m)
            .map(|j| poset.predecessors(j).ones().fold(0u64, |acc, i| acc | 1 << i))
            .collect();
        Ok(ExtensionCounter {
            pred,
            memo: HashMap::new(),
        })
    }

    /// Extensions of the subposet induced on `subset`.
    pub fn count(&mut self, subset: &ElementSet) -> u128 {
        self.count_mask(to_mask(subset))
    }

    /// Extensions of the induced subposet on `subset` that start with `first`.
    pub fn count_starting_with(&mut self, subset: &ElementSet, first: usize) -> u128 {
        let mask = to_mask(subset);
        let bit = 1u64 << first;
        if mask & bit == 0 || self.pred[first] & mask != 0 {
            return 0;
        }
        self.count_mask(mask & !bit)
    }

    fn count_mask(&mut self, mask: u64) -> u128 {
        if mask.count_ones() <= 1 {
            return 1;
        }
        if let Some(&n) = self.memo.get(&mask) {
            return n;
        }
        let mut total = 0u128;
        let mut rest = mask;
        while rest != 0 {
            let a = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            if self.pred[a] & mask == 0 {
                total += self.count_mask(mask & !(1u64 << a));
            }
        }
        self.memo.insert(mask, total);
        total
    }
}

fn to_mask(subset: &ElementSet) -> u64 {
    subset.ones().fold(0u64, |acc, i| acc | 1 << i)
}
