use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{CompiledSop, ExecutorError, MockTools, Scenario};
use crate::order::{full_set, Poset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Expert,
    Hybrid,
}

/// What happens to the rest of a timestamp once one action faults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SiblingPolicy {
    /// Remaining frontier actions of the timestamp still run.
    #[default]
    Complete,
    /// Remaining frontier actions wait for the next frontier.
    Abort,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExecOptions {
    pub seed: u64,
    pub siblings: SiblingPolicy,
    /// Extra planner calls allowed when a fallback plan itself faults.
    pub max_replans: usize,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions {
            seed: 0,
            siblings: SiblingPolicy::Complete,
            max_replans: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pending,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlackboardEntry {
    pub value: String,
    /// `None` for initial fields.
    pub producer: Option<String>,
    pub timestamp: Option<u64>,
}

/// Write-once field store private to one run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Blackboard {
    entries: BTreeMap<String, BlackboardEntry>,
}

impl Blackboard {
    pub fn from_initial(initial: &BTreeMap<String, String>) -> Self {
        Blackboard {
            entries: initial
                .iter()
                .map(|(k, v)| {
                    let entry = BlackboardEntry {
                        value: v.clone(),
                        producer: None,
                        timestamp: None,
                    };
                    (k.clone(), entry)
                })
                .collect(),
        }
    }

    pub fn get(&self, field: &str) -> Option<&BlackboardEntry> {
        self.entries.get(field)
    }

    pub fn contains(&self, field: &str) -> bool {
        self.entries.contains_key(field)
    }

    pub fn entries(&self) -> &BTreeMap<String, BlackboardEntry> {
        &self.entries
    }

    /// Writes every output or none; an existing field is a conflict.
    pub fn write_all(
        &mut self,
        outputs: BTreeMap<String, String>,
        producer: &str,
        t: u64,
    ) -> Result<(), String> {
        if let Some(field) = outputs.keys().find(|f| self.entries.contains_key(*f)) {
            return Err(format!("blackboard conflict on {field}"));
        }
        for (field, value) in outputs {
            let entry = BlackboardEntry {
                value,
                producer: Some(producer.to_string()),
                timestamp: Some(t),
            };
            self.entries.insert(field, entry);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub t: u64,
    pub action: String,
    pub status: Status,
    /// Frontier at dispatch time; empty inside fallback plans.
    pub frontier: Vec<String>,
    pub fallback: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FallbackEvent {
    pub t: u64,
    pub action: String,
    pub missing: Vec<String>,
    pub reason: String,
    pub plan: Vec<String>,
    pub recovered: bool,
}

/// What the fallback planner sees.
#[derive(Debug)]
pub struct FallbackRequest<'a> {
    pub action: &'a str,
    pub missing: &'a [String],
    pub reason: &'a str,
    pub done: &'a BTreeSet<String>,
    pub blackboard: &'a Blackboard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionReport {
    pub mode: Mode,
    pub success: bool,
    /// Fraction of catalog actions completed.
    pub completeness: f64,
    pub fallback_count: usize,
    /// Intent parsing plus one call per fallback.
    pub llm_calls: usize,
    pub timesteps: u64,
    pub log: Vec<LogEntry>,
    pub status: BTreeMap<String, Status>,
    pub fallbacks: Vec<FallbackEvent>,
    pub blackboard: Blackboard,
}

impl ExecutionReport {
    /// Completed actions in execution order.
    pub fn executed(&self) -> Vec<&str> {
        self.log
            .iter()
            .filter(|e| e.status == Status::Done)
            .map(|e| e.action.as_str())
            .collect()
    }

    /// Whether actions completed outside fallback plans never precede one
    /// of their compiled predecessors.
    pub fn respects(&self, sop: &CompiledSop) -> bool {
        let seq: Vec<usize> = self
            .log
            .iter()
            .filter(|e| e.status == Status::Done && !e.fallback)
            .filter_map(|e| sop.catalog.index_of(&e.action))
            .collect();
        sop.poset.is_linear_extension(&seq)
    }
}

/// Ground-truth planner: the undone true ancestors of the faulted action in
/// lexicographic topological order, then the action itself.
#[derive(Debug, Clone)]
pub struct OraclePlanner {
    names: Vec<String>,
    truth: Poset,
}

impl OraclePlanner {
    pub fn new(scenario: &Scenario) -> Result<Self, ExecutorError> {
        let catalog = scenario.catalog();
        let truth = scenario.truth_poset(&catalog)?;
        Ok(OraclePlanner {
            names: catalog.names().to_vec(),
            truth,
        })
    }

    pub fn plan(&self, request: &FallbackRequest<'_>) -> Vec<String> {
        let Some(a) = self.names.iter().position(|n| n == request.action) else {
            return Vec::new();
        };
        let mut todo: BTreeSet<usize> = self
            .truth
            .predecessors(a)
            .ones()
            .filter(|&p| !request.done.contains(&self.names[p]))
            .collect();
        let mut plan = Vec::new();
        // names are sorted, so index order is lexicographic
        while let Some(&next) = todo
            .iter()
            .find(|&&x| !todo.iter().any(|&y| self.truth.precedes(y, x)))
        {
            todo.remove(&next);
            plan.push(self.names[next].clone());
        }
        plan.push(request.action.to_string());
        plan
    }

    pub fn as_hook(&self) -> impl FnMut(&FallbackRequest<'_>) -> Vec<String> + '_ {
        move |req| self.plan(req)
    }
}

struct Fault {
    action: usize,
    missing: Vec<String>,
    reason: String,
}

struct Runner<'a> {
    sop: &'a CompiledSop,
    tools: MockTools<'a>,
    blackboard: Blackboard,
    status: Vec<Status>,
    log: Vec<LogEntry>,
    t: u64,
}

impl Runner<'_> {
    fn name(&self, a: usize) -> &str {
        self.sop.catalog.name(a)
    }

    /// Runs one action at the current timestamp and logs the outcome.
    fn attempt(&mut self, a: usize, frontier: &[String], fallback: bool) -> Result<(), Fault> {
        let name = self.name(a).to_string();
        let sig = self.sop.signature(a);
        let missing: Vec<String> = sig
            .inputs
            .iter()
            .filter(|s| !self.blackboard.contains(s))
            .cloned()
            .collect();
        let outcome = if missing.is_empty() {
            let inputs = sig
                .inputs
                .iter()
                .map(|s| (s.clone(), self.blackboard.get(s).unwrap().value.clone()))
                .collect();
            self.tools
                .invoke(&name, &inputs)
                .and_then(|out| self.blackboard.write_all(out, &name, self.t))
        } else {
            Err(format!("missing {}", missing.join(", ")))
        };
        let (status, message) = match &outcome {
            Ok(()) => (Status::Done, None),
            Err(msg) => (Status::Failed, Some(msg.clone())),
        };
        self.status[a] = status;
        self.log.push(LogEntry {
            t: self.t,
            action: name,
            status,
            frontier: frontier.to_vec(),
            fallback,
            message,
        });
        outcome.map_err(|reason| Fault {
            action: a,
            missing,
            reason,
        })
    }

    fn done_names(&self) -> BTreeSet<String> {
        (0..self.status.len())
            .filter(|&a| self.status[a] == Status::Done)
            .map(|a| self.name(a).to_string())
            .collect()
    }

    /// Executes a plan verbatim, one timestamp per action.
    fn run_plan(&mut self, plan: &[String]) -> Result<(), Fault> {
        for step in plan {
            let Some(a) = self.sop.catalog.index_of(step) else {
                return Err(Fault {
                    action: usize::MAX,
                    missing: Vec::new(),
                    reason: format!("plan names unknown action {step}"),
                });
            };
            if self.status[a] == Status::Done {
                continue;
            }
            let result = self.attempt(a, &[], true);
            self.t += 1;
            result?;
        }
        Ok(())
    }
}

fn execute(
    sop: &CompiledSop,
    scenario: &Scenario,
    options: &ExecOptions,
    mode: Mode,
    mut planner: Option<&mut dyn FnMut(&FallbackRequest<'_>) -> Vec<String>>,
) -> ExecutionReport {
    let m = sop.catalog.len();
    let mut run = Runner {
        sop,
        tools: MockTools::new(scenario, options.seed),
        blackboard: Blackboard::from_initial(&scenario.initial),
        status: vec![Status::Pending; m],
        log: Vec::new(),
        t: 0,
    };
    let mut fallbacks: Vec<FallbackEvent> = Vec::new();
    let mut remaining = full_set(m);

    'run: loop {
        for a in 0..m {
            remaining.set(a, run.status[a] != Status::Done);
        }
        let mut frontier: Vec<usize> = sop.poset.frontier(&remaining).ones().collect();
        if frontier.is_empty() {
            break;
        }
        frontier.sort_by(|&a, &b| run.name(a).cmp(run.name(b)));
        let snapshot: Vec<String> = frontier.iter().map(|&a| run.name(a).to_string()).collect();

        let mut faults = Vec::new();
        for &a in &frontier {
            if !faults.is_empty() && options.siblings == SiblingPolicy::Abort {
                break;
            }
            if let Err(fault) = run.attempt(a, &snapshot, false) {
                faults.push(fault);
            }
        }
        run.t += 1;

        let Some(planner) = planner.as_deref_mut() else {
            if !faults.is_empty() {
                break;
            }
            continue;
        };
        for mut fault in faults {
            let mut replans = 0;
            loop {
                let done = run.done_names();
                let name = if fault.action < m {
                    run.name(fault.action).to_string()
                } else {
                    String::new()
                };
                let plan = planner(&FallbackRequest {
                    action: &name,
                    missing: &fault.missing,
                    reason: &fault.reason,
                    done: &done,
                    blackboard: &run.blackboard,
                });
                let t = run.t;
                let result = if plan.is_empty() {
                    Err(None)
                } else {
                    run.run_plan(&plan).map_err(Some)
                };
                fallbacks.push(FallbackEvent {
                    t,
                    action: name,
                    missing: fault.missing,
                    reason: fault.reason,
                    plan,
                    recovered: result.is_ok(),
                });
                match result {
                    Ok(()) => break,
                    Err(Some(next)) if replans < options.max_replans && next.action < m => {
                        replans += 1;
                        fault = next;
                    }
                    Err(_) => break 'run,
                }
            }
        }
    }

    let done = run.status.iter().filter(|&&s| s == Status::Done).count();
    let status = (0..m)
        .map(|a| (run.name(a).to_string(), run.status[a]))
        .collect();
    ExecutionReport {
        mode,
        success: done == m,
        completeness: if m == 0 { 1.0 } else { done as f64 / m as f64 },
        fallback_count: fallbacks.len(),
        llm_calls: 1 + fallbacks.len(),
        timesteps: run.t,
        log: run.log,
        status,
        fallbacks,
        blackboard: run.blackboard,
    }
}

/// Frontier execution that halts at the first faulting timestamp.
pub fn run_expert(sop: &CompiledSop, scenario: &Scenario, options: &ExecOptions) -> ExecutionReport {
    execute(sop, scenario, options, Mode::Expert, None)
}

/// Frontier execution that sends each fault to `planner` and runs the
/// returned plan before resuming. An empty plan ends the run.
pub fn run_hybrid(
    sop: &CompiledSop,
    scenario: &Scenario,
    options: &ExecOptions,
    planner: &mut dyn FnMut(&FallbackRequest<'_>) -> Vec<String>,
) -> ExecutionReport {
    execute(sop, scenario, options, Mode::Hybrid, Some(planner))
}
