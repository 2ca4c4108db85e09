use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// One Gibbs-style update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kernel {
    URow(usize),
    Rho,
    Beta,
    K,
}

/// Selection weights per kernel. `k: None` means `max(3, m)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelWeights {
    pub u_row: f64,
    pub rho: f64,
    pub beta: f64,
    pub k: Option<f64>,
}

impl Default for KernelWeights {
    fn default() -> Self {
        KernelWeights {
            u_row: 1.0,
            rho: 2.0,
            beta: 2.0,
            k: None,
        }
    }
}

impl KernelWeights {
    /// Kernels with their weights, U rows first.
    pub fn resolve(&self, m: usize) -> Vec<(Kernel, f64)> {
        let mut out: Vec<(Kernel, f64)> = (0..m).map(|i| (Kernel::URow(i), self.u_row)).collect();
        out.push((Kernel::Rho, self.rho));
        out.push((Kernel::Beta, self.beta));
        out.push((Kernel::K, self.k.unwrap_or(m.max(3) as f64)));
        out
    }

    pub fn is_valid(&self) -> bool {
        let ok = |w: f64| w > 0.0 && w.is_finite();
        ok(self.u_row) && ok(self.rho) && ok(self.beta) && self.k.is_none_or(ok)
    }
}

/// A randomly permuted cycle of `length` kernels with counts proportional
/// to the weights, apportioned by largest remainder (ties to the earlier
/// kernel).
pub fn build_schedule<R: Rng + ?Sized>(
    m: usize,
    weights: &KernelWeights,
    length: usize,
    rng: &mut R,
) -> Vec<Kernel> {
    let kernels = weights.resolve(m);
    let total: f64 = kernels.iter().map(|&(_, w)| w).sum();
    let quotas: Vec<f64> = kernels
        .iter()
        .map(|&(_, w)| w / total * length as f64)
        .collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let short = length - counts.iter().sum::<usize>();
    let mut by_remainder: Vec<usize> = (0..kernels.len()).collect();
    by_remainder.sort_by(|&a, &b| {
        let (ra, rb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in by_remainder.iter().take(short) {
        counts[i] += 1;
    }
    let mut schedule: Vec<Kernel> = kernels
        .iter()
        .zip(&counts)
        .flat_map(|(&(kernel, _), &n)| std::iter::repeat_n(kernel, n))
        .collect();
    schedule.shuffle(rng);
    schedule
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn tally(schedule: &[Kernel]) -> BTreeMap<Kernel, usize> {
        let mut out = BTreeMap::new();
        for &k in schedule {
            *out.entry(k).or_insert(0) += 1;
        }
        out
    }

    #[test]
    fn proportions_follow_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = build_schedule(5, &KernelWeights::default(), 14 * 10, &mut rng);
        let t = tally(&s);
        let u: usize = (0..5).map(|i| t[&Kernel::URow(i)]).sum();
        assert_eq!((u, t[&Kernel::Rho], t[&Kernel::Beta], t[&Kernel::K]), (50, 20, 20, 50));
    }

    #[test]
    fn k_weight_has_floor_of_three() {
        let w = KernelWeights::default().resolve(2);
        assert_eq!(w.last(), Some(&(Kernel::K, 3.0)));
        assert_eq!(KernelWeights::default().resolve(7).last(), Some(&(Kernel::K, 7.0)));
    }

    #[test]
    fn largest_remainder_fills_the_cycle() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for length in [1, 7, 500, 501] {
            assert_eq!(build_schedule(4, &KernelWeights::default(), length, &mut rng).len(), length);
        }
    }

    #[test]
    fn seeds_permute_the_same_multiset() {
        let w = KernelWeights::default();
        let a = build_schedule(5, &w, 500, &mut ChaCha8Rng::seed_from_u64(1));
        let b = build_schedule(5, &w, 500, &mut ChaCha8Rng::seed_from_u64(2));
        assert_ne!(a, b);
        assert_eq!(tally(&a), tally(&b));
    }
}
