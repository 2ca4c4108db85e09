//! Non-Bayesian comparison methods and the shared projection of a weighted
//! digraph onto a valid order.

use serde::{Deserialize, Serialize};

use crate::order::{CoverGraph, Poset};
use crate::sampler::{run_chain, Chain, LikelihoodKind, SamplerConfig, SamplerError};
use crate::trace::TraceSet;

#[derive(Debug, thiserror::Error)]
pub enum BaselineError {
    #[error("{name} must lie in (0, 1), got {value}")]
    InvalidThreshold { name: &'static str, value: f64 },
    #[error(transparent)]
    Sampler(#[from] SamplerError),
}

pub const DEFAULT_TAU: f64 = 0.5;
pub const DEFAULT_DELTA: f64 = 0.5;

/// Directed graph with nonnegative edge weights; larger means stronger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedDigraph {
    m: usize,
    /// Row-major `m × m`; `None` where there is no edge.
    weights: Vec<Option<f64>>,
}

impl WeightedDigraph {
    pub fn new(m: usize) -> Self {
        WeightedDigraph {
            m,
            weights: vec![None; m * m],
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Self-loops are ignored.
    pub fn add_edge(&mut self, i: usize, j: usize, weight: f64) {
        assert!(weight >= 0.0, "edge weights are nonnegative");
        if i != j {
            self.weights[i * self.m + j] = Some(weight);
        }
    }

    pub fn remove_edge(&mut self, i: usize, j: usize) {
        self.weights[i * self.m + j] = None;
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        self.weights[i * self.m + j]
    }

    /// Edges in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.m)
            .flat_map(|i| (0..self.m).map(move |j| (i, j)))
            .filter(|&(i, j)| self.weight(i, j).is_some())
            .collect()
    }

    /// Some directed cycle as a list of edges, found by DFS from the lowest
    /// unvisited node with successors visited in ascending order.
    pub fn find_cycle(&self) -> Option<Vec<(usize, usize)>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Open,
            Done,
        }
        let m = self.m;
        let mut mark = vec![Mark::New; m];
        for root in 0..m {
            if mark[root] != Mark::New {
                continue;
            }
            // (node, next successor to try)
            let mut stack = vec![(root, 0usize)];
            mark[root] = Mark::Open;
            while let Some(&mut (u, ref mut next)) = stack.last_mut() {
                let found = (*next..m).find(|&v| self.weight(u, v).is_some());
                match found {
                    Some(v) => {
                        *next = v + 1;
                        match mark[v] {
                            Mark::New => {
                                mark[v] = Mark::Open;
                                stack.push((v, 0));
                            }
                            Mark::Open => {
                                let start = stack.iter().position(|&(w, _)| w == v).unwrap();
                                let path: Vec<usize> = stack[start..].iter().map(|&(w, _)| w).collect();
                                let mut cycle: Vec<(usize, usize)> =
                                    path.windows(2).map(|p| (p[0], p[1])).collect();
                                cycle.push((u, v));
                                return Some(cycle);
                            }
                            Mark::Done => {}
                        }
                    }
                    None => {
                        mark[u] = Mark::Done;
                        stack.pop();
                    }
                }
            }
        }
        None
    }
}

/// Breaks every cycle at its weakest edge (ties go to the edge met first
/// along the cycle), then returns the transitive reduction.
pub fn cycle_break_and_cover(graph: &WeightedDigraph) -> CoverGraph {
    let mut g = graph.clone();
    while let Some(cycle) = g.find_cycle() {
        let weakest = cycle
            .iter()
            .copied()
            .reduce(|best, e| {
                let w = |(i, j)| g.weight(i, j).unwrap();
                if w(e) < w(best) {
                    e
                } else {
                    best
                }
            })
            .expect("cycles are non-empty");
        g.remove_edge(weakest.0, weakest.1);
    }
    Poset::transitive_closure(g.m, g.edges())
        .expect("all cycles removed")
        .transitive_reduction()
}

fn check_threshold(name: &'static str, value: f64) -> Result<(), BaselineError> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(BaselineError::InvalidThreshold { name, value })
    }
}

/// Pairwise precedence vote. With `p_ij = C_ij / T_ij` over traces holding
/// both actions, orient `i → j` when `p_ij > τ` and `p_ij > p_ji`.
pub fn majority_baseline(traces: &TraceSet, tau: f64) -> Result<Poset, BaselineError> {
    check_threshold("tau", tau)?;
    if tau != 0.5 {
        log::warn!("tau = {tau}: edges with p near 0.5 get weight near 0 and break first");
    }
    let m = traces.catalog().len();
    let mut before = vec![0u32; m * m];
    for seq in traces.encoded() {
        for (p, &a) in seq.iter().enumerate() {
            for &b in &seq[p + 1..] {
                before[a * m + b] += 1;
            }
        }
    }
    let mut g = WeightedDigraph::new(m);
    for i in 0..m {
        for j in 0..m {
            let together = before[i * m + j] + before[j * m + i];
            if i == j || together == 0 {
                continue;
            }
            let p_ij = before[i * m + j] as f64 / together as f64;
            let p_ji = before[j * m + i] as f64 / together as f64;
            if p_ij > tau && p_ij > p_ji {
                g.add_edge(i, j, (p_ij - 0.5).abs());
            }
        }
    }
    Ok(cycle_break_and_cover(&g).closure())
}

/// Direct-succession counts `c(a, b)`: `b` immediately follows `a`.
pub fn succession_counts(traces: &TraceSet) -> Vec<Vec<u32>> {
    let m = traces.catalog().len();
    let mut c = vec![vec![0u32; m]; m];
    for seq in traces.encoded() {
        for w in seq.windows(2) {
            c[w[0]][w[1]] += 1;
        }
    }
    c
}

/// Dependency measure `(c(a,b) - c(b,a)) / (c(a,b) + c(b,a) + 1)`.
pub fn dependency(c_ab: u32, c_ba: u32) -> f64 {
    (c_ab as f64 - c_ba as f64) / (c_ab as f64 + c_ba as f64 + 1.0)
}

/// Dependency-graph miner: edge `a → b` when the dependency measure is at
/// least `δ`, weighted by it.
pub fn heuristics_baseline(traces: &TraceSet, delta: f64) -> Result<Poset, BaselineError> {
    check_threshold("delta", delta)?;
    let c = succession_counts(traces);
    let m = c.len();
    let mut g = WeightedDigraph::new(m);
    for a in 0..m {
        for b in 0..m {
            if a == b {
                continue;
            }
            let d = dependency(c[a][b], c[b][a]);
            if d >= delta {
                g.add_edge(a, b, d);
            }
        }
    }
    Ok(cycle_break_and_cover(&g).closure())
}

/// Bayesian baseline: the sampler under the Queue-Jump likelihood.
/// `jump_p: None` falls back to the config's slip rate.
pub fn qj_infer(
    config: &SamplerConfig,
    traces: &TraceSet,
    jump_p: Option<f64>,
) -> Result<Chain, BaselineError> {
    let config = SamplerConfig {
        likelihood: LikelihoodKind::QueueJump { jump_p },
        ..config.clone()
    };
    Ok(run_chain(&config, traces)?)
}
