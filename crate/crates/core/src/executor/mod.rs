//! Deterministic SOP execution over a write-once blackboard.
//!
//! A compiled SOP pairs an estimated order with an IO registry. The runner
//! advances in logical timestamps: each step dispatches the whole frontier
//! in lexicographic order, reads inputs from the blackboard and writes the
//! outputs back. Expert mode halts on the first fault; hybrid mode hands
//! the fault to a fallback planner and resumes.

mod mock;
mod run;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::order::{ActionCatalog, CoverGraph, OrderError, Poset};

pub use mock::{mock_token, s1_scenario, s1_security_scenario, FailureMode, MockTools, Scenario};
pub use run::{
    run_expert, run_hybrid, Blackboard, BlackboardEntry, ExecOptions, ExecutionReport,
    FallbackEvent, FallbackRequest, LogEntry, Mode, OraclePlanner, SiblingPolicy, Status,
};

#[derive(Debug, thiserror::Error)]
pub enum ExecutorError {
    #[error("registry has no entry for action {0}")]
    RegistryGap(String),
    #[error("registry entry {action} has an empty slot or field name")]
    EmptyName { action: String },
    #[error("estimate has {estimate} actions but catalog has {catalog}")]
    CatalogMismatch { estimate: usize, catalog: usize },
    #[error(transparent)]
    Order(#[from] OrderError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IoSignature {
    #[serde(default)]
    pub inputs: Vec<String>,
    #[serde(default)]
    pub outputs: Vec<String>,
}

pub type IoRegistry = BTreeMap<String, IoSignature>;

/// An input slot whose registered producers are all outside the action's
/// ancestors. Slots nobody produces are external inputs and not reported.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DataFlowWarning {
    pub action: String,
    pub slot: String,
    pub producers: Vec<String>,
}

impl fmt::Display for DataFlowWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} has no reachable producer for {}", self.slot, self.action)
    }
}

#[derive(Debug, Clone)]
pub struct CompiledSop {
    pub catalog: ActionCatalog,
    pub poset: Poset,
    pub cover: CoverGraph,
    pub registry: IoRegistry,
    pub warnings: Vec<DataFlowWarning>,
}

impl CompiledSop {
    pub fn signature(&self, action: usize) -> &IoSignature {
        &self.registry[self.catalog.name(action)]
    }
}

pub fn compile_sop(
    catalog: &ActionCatalog,
    estimate: &Poset,
    registry: &IoRegistry,
) -> Result<CompiledSop, ExecutorError> {
    if estimate.m() != catalog.len() {
        return Err(ExecutorError::CatalogMismatch {
            estimate: estimate.m(),
            catalog: catalog.len(),
        });
    }
    for name in catalog.names() {
        let sig = registry
            .get(name)
            .ok_or_else(|| ExecutorError::RegistryGap(name.clone()))?;
        if sig.inputs.iter().chain(&sig.outputs).any(String::is_empty) {
            return Err(ExecutorError::EmptyName {
                action: name.clone(),
            });
        }
    }

    let mut producers: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (a, name) in catalog.names().iter().enumerate() {
        for field in &registry[name].outputs {
            producers.entry(field).or_default().push(a);
        }
    }
    let mut warnings = Vec::new();
    for (b, name) in catalog.names().iter().enumerate() {
        for slot in &registry[name].inputs {
            let Some(ps) = producers.get(slot.as_str()) else {
                continue;
            };
            if !ps.iter().any(|&a| estimate.precedes(a, b)) {
                let warning = DataFlowWarning {
                    action: name.clone(),
                    slot: slot.clone(),
                    producers: ps.iter().map(|&a| catalog.name(a).to_string()).collect(),
                };
                log::warn!("{warning}");
                warnings.push(warning);
            }
        }
    }
    if producers.values().any(|ps| ps.len() > 1) {
        log::warn!("registry has fields with several producers; the blackboard will reject the second write");
    }

    Ok(CompiledSop {
        catalog: catalog.clone(),
        poset: estimate.clone(),
        cover: estimate.transitive_reduction(),
        registry: registry.clone(),
        warnings,
    })
}
