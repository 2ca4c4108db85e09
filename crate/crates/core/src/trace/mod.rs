//! Execution traces: data model, ingestion, coverage diagnostics and
//! synthetic generation.

mod coverage;
mod parse;
mod synth;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::order::{ActionCatalog, OrderError};

pub use coverage::{ip_coverage, pair_saturation, PrecedenceWitness};
pub use parse::{parse_trace_file, parse_trace_value, Curation, FlatTraceFile};
pub use synth::{
    curate_to_coverage, sample_linear_extension, sample_traces, CuratedTraces,
    DEFAULT_MAX_ATTEMPTS,
};

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("schema error at {path}: {reason}")]
    Schema { path: String, reason: String },
    #[error("trace `{trace_id}` repeats action `{name}`")]
    DuplicateAction { trace_id: String, name: String },
    #[error("projection left no catalog actions in the session")]
    EmptyTrace,
    #[error("coverage target {0} must lie in (0, 1]")]
    InvalidTarget(f64),
    #[error("coverage target unreachable: realized {realized} after {attempts} attempts")]
    TargetUnreachable { realized: f64, attempts: usize },
    #[error(transparent)]
    Order(#[from] OrderError),
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// One observed linearization: distinct action names in execution order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub id: String,
    pub actions: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, String>,
}

impl Trace {
    pub fn new<S: Into<String>>(id: impl Into<String>, actions: impl IntoIterator<Item = S>) -> Self {
        Trace {
            id: id.into(),
            actions: actions.into_iter().map(Into::into).collect(),
            meta: BTreeMap::new(),
        }
    }
}

/// Traces over a shared catalog, with each trace pre-encoded to indices.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSet {
    catalog: ActionCatalog,
    traces: Vec<Trace>,
    encoded: Vec<Vec<usize>>,
}

impl TraceSet {
    /// Validates every trace against `catalog` (known names, no repeats).
    pub fn new(catalog: ActionCatalog, traces: Vec<Trace>) -> Result<Self, TraceError> {
        let mut encoded = Vec::with_capacity(traces.len());
        for trace in &traces {
            let idx = catalog.encode(&trace.actions)?;
            let mut seen = vec![false; catalog.len()];
            for (&i, name) in idx.iter().zip(&trace.actions) {
                if std::mem::replace(&mut seen[i], true) {
                    return Err(TraceError::DuplicateAction {
                        trace_id: trace.id.clone(),
                        name: name.clone(),
                    });
                }
            }
            encoded.push(idx);
        }
        Ok(TraceSet {
            catalog,
            traces,
            encoded,
        })
    }

    /// Builds from index sequences, naming traces `{prefix}-{n}`.
    pub fn from_indices(
        catalog: ActionCatalog,
        sequences: &[Vec<usize>],
        prefix: &str,
    ) -> Result<Self, TraceError> {
        let traces = sequences
            .iter()
            .enumerate()
            .map(|(n, seq)| {
                let names = seq
                    .iter()
                    .map(|&i| {
                        catalog
                            .names()
                            .get(i)
                            .cloned()
                            .ok_or(OrderError::IndexOutOfRange { index: i, m: catalog.len() })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Trace::new(format!("{prefix}-{n}"), names))
            })
            .collect::<Result<Vec<_>, TraceError>>()?;
        TraceSet::new(catalog, traces)
    }

    pub fn catalog(&self) -> &ActionCatalog {
        &self.catalog
    }

    pub fn traces(&self) -> &[Trace] {
        &self.traces
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn encoded(&self) -> &[Vec<usize>] {
        &self.encoded
    }

    /// Appends traces, validating them against this set's catalog.
    pub fn extend(&mut self, traces: Vec<Trace>) -> Result<(), TraceError> {
        let added = TraceSet::new(self.catalog.clone(), traces)?;
        self.traces.extend(added.traces);
        self.encoded.extend(added.encoded);
        Ok(())
    }

    /// Flat file form, optionally tagged with curation provenance.
    pub fn to_flat(&self, curation: Option<Curation>) -> FlatTraceFile {
        FlatTraceFile {
            actions: self.catalog.names().to_vec(),
            traces: self.traces.iter().map(|t| t.actions.clone()).collect(),
            curation,
        }
    }
}

/// One entry of a raw agent session.
#[derive(Debug, Clone, PartialEq)]
pub enum SessionEntry {
    ActionCall {
        name: String,
        params: serde_json::Value,
        outputs: serde_json::Value,
    },
    Cognitive(String),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawSession {
    pub entries: Vec<SessionEntry>,
}

/// Keeps the catalog actions of a session in order and drops everything
/// else. Repeated actions keep their first occurrence.
pub fn project_trace(
    session: &RawSession,
    catalog: &ActionCatalog,
    id: &str,
) -> Result<Trace, TraceError> {
    let mut seen = vec![false; catalog.len()];
    let mut actions = Vec::new();
    for entry in &session.entries {
        let SessionEntry::ActionCall { name, .. } = entry else {
            continue;
        };
        let Some(i) = catalog.index_of(name) else {
            continue;
        };
        if std::mem::replace(&mut seen[i], true) {
            log::warn!("session {id}: dropping repeated action {name}");
            continue;
        }
        actions.push(name.clone());
    }
    if actions.is_empty() {
        return Err(TraceError::EmptyTrace);
    }
    Ok(Trace::new(id, actions))
}
