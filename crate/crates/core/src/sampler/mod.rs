//! Metropolis-within-Gibbs sampler over `(U, ρ, β, K)` with reversible-jump
//! moves on the latent dimension.
//!
//! One iteration applies one kernel. Kernels are drawn cycle by cycle from
//! a freshly shuffled [`build_schedule`]. Samples are recorded after the
//! burn-in horizon at every `thin`-th iteration and streamed as JSON Lines.

mod chain;
mod kernels;
mod schedule;

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::likelihood::DEFAULT_EPSILON;
use crate::order::{OrderError, DEFAULT_NLE_CAP, MAX_NLE_CAP};
use crate::priors::{Hyperparams, PriorError};
use crate::trace::TraceSet;

pub use chain::{Chain, ChainHeader, ChainSample, CHAIN_SCHEMA};
pub use kernels::{rho_proposal, rj_move_log_ratio, AcceptanceStats, ChainState, Model, RHO_MAX};
pub use schedule::{build_schedule, Kernel, KernelWeights};

#[derive(Debug, thiserror::Error)]
pub enum SamplerError {
    #[error("invalid sampler config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Prior(#[from] PriorError),
    #[error(transparent)]
    Order(#[from] OrderError),
    #[error("chain file: {0}")]
    Schema(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LikelihoodKind {
    FrontierSoftmax,
    /// `jump_p: None` uses the slip rate ε.
    QueueJump {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        jump_p: Option<f64>,
    },
    /// Likelihood fixed at 1; the chain samples the prior.
    PriorOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub iterations: u64,
    /// Fraction of iterations discarded before recording.
    pub burn_in: f64,
    pub thin: u64,
    pub cycle_length: usize,
    pub weights: KernelWeights,
    pub seed: u64,
    pub hyperparams: Hyperparams,
    pub epsilon: f64,
    pub likelihood: LikelihoodKind,
    /// Multiplier on `Σ_ρ` for the U-row random walk.
    pub u_step_scale: f64,
    pub nle_cap: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            iterations: 200_000,
            burn_in: 0.5,
            thin: 100,
            cycle_length: 500,
            weights: KernelWeights::default(),
            seed: 0,
            hyperparams: Hyperparams::default(),
            epsilon: DEFAULT_EPSILON,
            likelihood: LikelihoodKind::FrontierSoftmax,
            u_step_scale: 1.0,
            nle_cap: DEFAULT_NLE_CAP,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<(), SamplerError> {
        let bad = |msg: String| Err(SamplerError::InvalidConfig(msg));
        if self.iterations == 0 {
            return bad("iterations must be positive".into());
        }
        if !(0.0..1.0).contains(&self.burn_in) {
            return bad(format!("burn_in {} outside [0, 1)", self.burn_in));
        }
        if self.thin == 0 {
            return bad("thin must be at least 1".into());
        }
        if self.cycle_length == 0 {
            return bad("cycle_length must be at least 1".into());
        }
        if !self.weights.is_valid() {
            return bad("kernel weights must be positive".into());
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return bad(format!("epsilon {} outside [0, 1)", self.epsilon));
        }
        if let LikelihoodKind::QueueJump { jump_p: Some(p) } = self.likelihood {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("jump_p {p} outside [0, 1]"));
            }
        }
        if !(self.u_step_scale > 0.0 && self.u_step_scale.is_finite()) {
            return bad(format!("u_step_scale {} must be positive", self.u_step_scale));
        }
        if self.nle_cap == 0 || self.nle_cap > MAX_NLE_CAP {
            return bad(format!("nle_cap {} outside 1..={MAX_NLE_CAP}", self.nle_cap));
        }
        self.hyperparams.validate()?;
        Ok(())
    }

    /// Iterations `1..=burn_horizon` are never recorded.
    pub fn burn_horizon(&self) -> u64 {
        (self.burn_in * self.iterations as f64).floor() as u64
    }

    /// SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// Runs one chain, streaming the header and each recorded sample to `sink`.
pub fn run_chain_to<W: Write>(
    config: &SamplerConfig,
    traces: &TraceSet,
    sink: &mut W,
) -> Result<Chain, SamplerError> {
    run_chain_observed(config, traces, sink, |_, _| {})
}

/// [`run_chain_to`] that also hands the full state to `observe` at every
/// recorded iteration.
pub fn run_chain_observed<W: Write>(
    config: &SamplerConfig,
    traces: &TraceSet,
    sink: &mut W,
    mut observe: impl FnMut(u64, &ChainState),
) -> Result<Chain, SamplerError> {
    config.validate()?;
    let m = traces.catalog().len();
    if let LikelihoodKind::QueueJump { .. } = config.likelihood {
        if m > config.nle_cap {
            return Err(OrderError::TooLarge {
                m,
                cap: config.nle_cap,
            }
            .into());
        }
    }

    let header = ChainHeader {
        schema: CHAIN_SCHEMA.to_string(),
        config_digest: config.digest(),
        catalog: traces.catalog().names().to_vec(),
    };
    serde_json::to_writer(&mut *sink, &header)?;
    sink.write_all(b"\n")?;

    let model = Model::new(config, traces);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = model.initial_state(&mut rng);
    let mut stats = AcceptanceStats::default();
    let mut samples = Vec::new();
    let horizon = config.burn_horizon();

    let mut iter = 0u64;
    'outer: loop {
        let schedule = build_schedule(m, &config.weights, config.cycle_length, &mut rng);
        for kernel in schedule {
            if iter == config.iterations {
                break 'outer;
            }
            iter += 1;
            match kernel {
                Kernel::URow(i) => model.update_u_row(&mut state, i, &mut stats, &mut rng),
                Kernel::Rho => model.update_rho(&mut state, &mut stats, &mut rng),
                Kernel::Beta => model.update_beta(&mut state, &mut stats, &mut rng),
                Kernel::K => model.update_k(&mut state, &mut stats, &mut rng),
            };
            if iter > horizon && iter % config.thin == 0 {
                observe(iter, &state);
                let sample = ChainSample::from_state(iter, &state);
                sample.write_line(sink)?;
                sink.flush()?;
                samples.push(sample);
            }
        }
    }

    let u_rate = AcceptanceStats::rate(stats.u);
    if stats.u.0 > 0 && !(0.05..0.8).contains(&u_rate) {
        log::warn!("U-row acceptance rate {u_rate:.3} outside (0.05, 0.8)");
    }
    log::debug!("acceptance: {stats:?}");
    Ok(Chain {
        header,
        samples,
        stats: Some(stats),
    })
}

/// [`run_chain_to`] without persistence.
pub fn run_chain(config: &SamplerConfig, traces: &TraceSet) -> Result<Chain, SamplerError> {
    run_chain_to(config, traces, &mut std::io::sink())
}
