use rand::Rng;
use rand_distr::StandardNormal;

use super::{LikelihoodKind, SamplerConfig};
use crate::likelihood::{dataset_loglik, qj_dataset_loglik, LikelihoodParams};
use crate::order::{LatentEmbedding, Poset};
use crate::priors::{
    log_density_row, log_prior_beta, log_prior_k, log_prior_rho, log_prior_u,
    sample_conditional_column, sample_embedding, sample_row, Hyperparams,
};
use crate::trace::TraceSet;

/// Largest admissible correlation; `Σ_ρ` is singular at 1.
pub const RHO_MAX: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub embedding: LatentEmbedding,
    pub rho: f64,
    pub beta: f64,
    /// Always `embedding.dominance_order()`.
    pub poset: Poset,
    pub loglik: f64,
    /// Joint log-prior of `(U, ρ, β, K)`.
    pub log_prior: f64,
}

impl ChainState {
    pub fn k(&self) -> usize {
        self.embedding.k()
    }
}

/// Target density and proposal settings of one chain.
pub struct Model<'a> {
    traces: &'a TraceSet,
    likelihood: LikelihoodKind,
    epsilon: f64,
    nle_cap: usize,
    hp: Hyperparams,
    u_step_scale: f64,
}

/// Per-kernel proposal and acceptance counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AcceptanceStats {
    pub u: (u64, u64),
    pub rho: (u64, u64),
    pub beta: (u64, u64),
    pub k: (u64, u64),
}

impl AcceptanceStats {
    pub fn rate(pair: (u64, u64)) -> f64 {
        if pair.0 == 0 {
            0.0
        } else {
            pair.1 as f64 / pair.0 as f64
        }
    }
}

fn tally(slot: &mut (u64, u64), accepted: bool) -> bool {
    slot.0 += 1;
    slot.1 += accepted as u64;
    accepted
}

/// `ρ* = 1 - (1 - ρ)δ`, or `None` outside `[0, RHO_MAX]`.
pub fn rho_proposal(rho: f64, delta: f64) -> Option<f64> {
    let proposed = 1.0 - (1.0 - rho) * delta;
    (0.0..=RHO_MAX).contains(&proposed).then_some(proposed)
}

/// Probability of proposing an up move from dimension `k`.
fn up_probability(k: usize) -> f64 {
    if k == 1 {
        1.0
    } else {
        0.5
    }
}

/// `ln(ρ_{K',K} / ρ_{K,K'})` for a move from `k` to `k ± 1`.
pub fn rj_move_log_ratio(k: usize, up: bool) -> f64 {
    if up {
        (1.0 - up_probability(k + 1)).ln() - up_probability(k).ln()
    } else {
        up_probability(k - 1).ln() - (1.0 - up_probability(k)).ln()
    }
}

/// `-inf`-aware Metropolis test: a proposal with zero likelihood is never
/// taken, and any positive proposal is taken from a zero-likelihood state.
fn metropolis(log_u: f64, current: f64, proposed: f64, log_ratio: f64) -> bool {
    if proposed == f64::NEG_INFINITY {
        return false;
    }
    if current == f64::NEG_INFINITY {
        return true;
    }
    log_u < log_ratio
}

impl<'a> Model<'a> {
    pub fn new(config: &SamplerConfig, traces: &'a TraceSet) -> Self {
        Model {
            traces,
            likelihood: config.likelihood,
            epsilon: config.epsilon,
            nle_cap: config.nle_cap,
            hp: config.hyperparams,
            u_step_scale: config.u_step_scale,
        }
    }

    pub fn m(&self) -> usize {
        self.traces.catalog().len()
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hp
    }

    pub fn loglik(&self, poset: &Poset, beta: f64) -> f64 {
        match self.likelihood {
            LikelihoodKind::PriorOnly => 0.0,
            LikelihoodKind::FrontierSoftmax => {
                let params = LikelihoodParams {
                    beta,
                    epsilon: self.epsilon,
                };
                dataset_loglik(self.traces, poset, &params)
            }
            LikelihoodKind::QueueJump { jump_p } => {
                let p = jump_p.unwrap_or(self.epsilon);
                qj_dataset_loglik(self.traces, poset, p, self.nle_cap)
                    .expect("catalog size checked against the cap before sampling")
            }
        }
    }

    pub fn log_prior(&self, embedding: &LatentEmbedding, rho: f64, beta: f64) -> f64 {
        let hp = &self.hp;
        log_prior_u(embedding, rho).expect("rho kept in range")
            + log_prior_rho(rho, hp).expect("rho kept in range")
            + log_prior_beta(beta, hp).expect("beta kept positive")
            + log_prior_k(embedding.k(), hp).expect("K kept positive")
    }

    /// A fully evaluated state.
    pub fn state(&self, embedding: LatentEmbedding, rho: f64, beta: f64) -> ChainState {
        let poset = embedding.dominance_order();
        let loglik = self.loglik(&poset, beta);
        let log_prior = self.log_prior(&embedding, rho, beta);
        ChainState {
            embedding,
            rho,
            beta,
            poset,
            loglik,
            log_prior,
        }
    }

    /// `K = max(1, floor(λ))`, `U` from the prior, `ρ = 0.1`, `β = 1`.
    pub fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> ChainState {
        let k = (self.hp.lambda.floor() as usize).max(1);
        let rho = 0.1;
        let embedding = sample_embedding(rng, self.m(), k, rho);
        self.state(embedding, rho, 1.0)
    }

    fn commit(&self, state: &mut ChainState, next: ChainState) {
        debug_assert_eq!(next.poset, next.embedding.dominance_order());
        debug_assert_eq!(
            next.loglik.to_bits(),
            self.loglik(&next.poset, next.beta).to_bits()
        );
        *state = next;
    }

    /// Random-walk proposal for row `i` with covariance `scale · Σ_ρ`.
    pub fn update_u_row<R: Rng + ?Sized>(
        &self,
        state: &mut ChainState,
        i: usize,
        stats: &mut AcceptanceStats,
        rng: &mut R,
    ) -> bool {
        let step = sample_row(rng, state.rho, state.k());
        let scale = self.u_step_scale.sqrt();
        let row: Vec<f64> = state
            .embedding
            .row(i)
            .iter()
            .zip(&step)
            .map(|(x, s)| x + scale * s)
            .collect();
        let log_u = rng.random::<f64>().ln();
        tally(&mut stats.u, self.apply_u_row(state, i, &row, log_u))
    }

    /// U-row move with an explicit proposal and uniform draw.
    pub fn apply_u_row(&self, state: &mut ChainState, i: usize, row: &[f64], log_u: f64) -> bool {
        let mut embedding = state.embedding.clone();
        embedding.set_row(i, row);
        let poset = embedding.dominance_order();
        let loglik = self.loglik(&poset, state.beta);
        let d_prior =
            log_density_row(row, state.rho) - log_density_row(state.embedding.row(i), state.rho);
        let log_ratio = d_prior + (loglik - state.loglik);
        if !metropolis(log_u, state.loglik, loglik, log_ratio) {
            return false;
        }
        let log_prior = self.log_prior(&embedding, state.rho, state.beta);
        self.commit(
            state,
            ChainState {
                embedding,
                poset,
                loglik,
                log_prior,
                rho: state.rho,
                beta: state.beta,
            },
        );
        true
    }

    pub fn update_rho<R: Rng + ?Sized>(
        &self,
        state: &mut ChainState,
        stats: &mut AcceptanceStats,
        rng: &mut R,
    ) -> bool {
        let d = self.hp.rho_step;
        let delta = rng.random_range(d..1.0 / d);
        let log_u = rng.random::<f64>().ln();
        tally(&mut stats.rho, self.apply_rho(state, delta, log_u))
    }

    /// Multiplicative move on `1 - ρ`; the Hastings term is `1/δ`. The
    /// likelihood does not depend on ρ.
    pub fn apply_rho(&self, state: &mut ChainState, delta: f64, log_u: f64) -> bool {
        let Some(rho) = rho_proposal(state.rho, delta) else {
            return false;
        };
        let log_prior = self.log_prior(&state.embedding, rho, state.beta);
        let log_ratio = (log_prior - state.log_prior) - delta.ln();
        if log_u >= log_ratio {
            return false;
        }
        state.rho = rho;
        state.log_prior = log_prior;
        true
    }

    pub fn update_beta<R: Rng + ?Sized>(
        &self,
        state: &mut ChainState,
        stats: &mut AcceptanceStats,
        rng: &mut R,
    ) -> bool {
        let eta = self.hp.beta_step * rng.sample::<f64, _>(StandardNormal);
        let log_u = rng.random::<f64>().ln();
        tally(&mut stats.beta, self.apply_beta(state, eta, log_u))
    }

    /// Log-normal move `β' = β e^η`; the Jacobian term `ln(β'/β)` is `η`.
    pub fn apply_beta(&self, state: &mut ChainState, eta: f64, log_u: f64) -> bool {
        let beta = state.beta * eta.exp();
        if !(beta > 0.0 && beta.is_finite()) {
            return false;
        }
        let loglik = self.loglik(&state.poset, beta);
        let log_prior = self.log_prior(&state.embedding, state.rho, beta);
        let log_ratio = (loglik - state.loglik) + (log_prior - state.log_prior) + eta;
        if !metropolis(log_u, state.loglik, loglik, log_ratio) {
            return false;
        }
        let next = ChainState {
            embedding: state.embedding.clone(),
            poset: state.poset.clone(),
            rho: state.rho,
            beta,
            loglik,
            log_prior,
        };
        self.commit(state, next);
        true
    }

    /// Reversible-jump move on K: birth of a conditional-prior column or
    /// death of a uniformly chosen column.
    pub fn update_k<R: Rng + ?Sized>(
        &self,
        state: &mut ChainState,
        stats: &mut AcceptanceStats,
        rng: &mut R,
    ) -> bool {
        let k = state.k();
        let up = rng.random::<f64>() < up_probability(k);
        let accepted = if up {
            let slot = rng.random_range(0..=k);
            let column = sample_conditional_column(rng, &state.embedding, state.rho);
            let log_u = rng.random::<f64>().ln();
            self.apply_birth(state, slot, &column, log_u)
        } else {
            let slot = rng.random_range(0..k);
            let log_u = rng.random::<f64>().ln();
            self.apply_death(state, slot, log_u)
        };
        tally(&mut stats.k, accepted)
    }

    /// Gaussian prior and proposal terms cancel; the Jacobian is 1.
    pub fn apply_birth(&self, state: &mut ChainState, slot: usize, column: &[f64], log_u: f64) -> bool {
        let k = state.k();
        let embedding = state.embedding.insert_column(slot, column);
        self.dimension_move(state, embedding, rj_move_log_ratio(k, true), log_u)
    }

    /// Forbidden at `K = 1`.
    pub fn apply_death(&self, state: &mut ChainState, slot: usize, log_u: f64) -> bool {
        let k = state.k();
        if k == 1 {
            return false;
        }
        let embedding = state.embedding.remove_column(slot);
        self.dimension_move(state, embedding, rj_move_log_ratio(k, false), log_u)
    }

    fn dimension_move(
        &self,
        state: &mut ChainState,
        embedding: LatentEmbedding,
        move_ratio: f64,
        log_u: f64,
    ) -> bool {
        let hp = &self.hp;
        let d_prior_k = log_prior_k(embedding.k(), hp).expect("K >= 1")
            - log_prior_k(state.k(), hp).expect("K >= 1");
        let poset = embedding.dominance_order();
        let loglik = self.loglik(&poset, state.beta);
        let log_ratio = d_prior_k + (loglik - state.loglik) + move_ratio;
        if !metropolis(log_u, state.loglik, loglik, log_ratio) {
            return false;
        }
        let log_prior = self.log_prior(&embedding, state.rho, state.beta);
        self.commit(
            state,
            ChainState {
                embedding,
                poset,
                loglik,
                log_prior,
                rho: state.rho,
                beta: state.beta,
            },
        );
        true
    }
}
