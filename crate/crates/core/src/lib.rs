//! Partial-order inference over action traces.
//!
//! Latent embeddings induce strict partial orders by coordinate dominance.
//! Traces are modelled as noisy linear extensions and the posterior over
//! orders is explored with MCMC. Point estimates feed a frontier executor.

pub mod order;
pub mod trace;
pub mod likelihood;
pub mod priors;
pub mod sampler;
pub mod diagnostics;
pub mod baselines;
pub mod estimation;
pub mod executor;

pub use estimation::{EdgeMarginals, RecoveryReport};
pub use likelihood::LikelihoodParams;
pub use order::{ActionCatalog, CoverGraph, LatentEmbedding, OrderError, Poset};
pub use sampler::{Chain, SamplerConfig, SamplerError};
pub use trace::{Trace, TraceSet};
