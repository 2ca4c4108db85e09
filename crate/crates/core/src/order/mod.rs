//! Strict partial orders over an action catalog.
//!
//! A [`Poset`] is always stored transitively closed; the Hasse diagram is
//! available through [`Poset::transitive_reduction`]. Element sets are
//! [`FixedBitSet`]s indexed by catalog position.

mod catalog;
mod embedding;
mod extensions;
mod graph_io;
mod poset;

pub use catalog::ActionCatalog;
pub use embedding::LatentEmbedding;
pub use extensions::{count_linear_extensions, ExtensionCounter, DEFAULT_NLE_CAP, MAX_NLE_CAP};
pub use graph_io::{load_graph, to_dot, GraphDocument};
pub use poset::{CoverGraph, Poset};

pub use fixedbitset::FixedBitSet;

/// A set of elements, indexed by catalog position.
pub type ElementSet = FixedBitSet;

/// Builds an [`ElementSet`] of capacity `m` holding `items`.
pub fn element_set(m: usize, items: impl IntoIterator<Item = usize>) -> ElementSet {
    let mut set = FixedBitSet::with_capacity(m);
    for i in items {
        set.insert(i);
    }
    set
}

/// The full set `{0, .., m-1}`.
pub fn full_set(m: usize) -> ElementSet {
    let mut set = FixedBitSet::with_capacity(m);
    set.insert_range(..);
    set
}

#[derive(Debug, thiserror::Error)]
pub enum OrderError {
    #[error("relation contains a cycle through elements {0} and {1}")]
    CycleDetected(usize, usize),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("duplicate action `{0}` in catalog")]
    DuplicateAction(String),
    #[error("element index {index} out of range for {m} elements")]
    IndexOutOfRange { index: usize, m: usize },
    #[error("linear-extension counting on {m} elements exceeds the cap of {cap}")]
    TooLarge { m: usize, cap: usize },
    #[error("embedding has {got} values, expected {rows}x{cols}")]
    ShapeMismatch { rows: usize, cols: usize, got: usize },
    #[error("embedding contains a non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("latent dimension must be at least 1")]
    ZeroDimension,
    #[error("invalid graph document: {0}")]
    Json(#[from] serde_json::Error),
}
