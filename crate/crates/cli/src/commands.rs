use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use porder::baselines::{heuristics_baseline, majority_baseline, qj_infer};
use porder::estimation::{
    edge_marginals, has_ambiguous_pair, mode_estimate, recovery_report, threshold_estimate,
    RecoveryReport,
};
use porder::executor::{
    compile_sop, run_expert, run_hybrid, ExecutionReport, Mode, OraclePlanner, Scenario,
};
use porder::order::{load_graph, to_dot, ActionCatalog, GraphDocument, Poset};
use porder::sampler::{run_chain_to, Chain};
use porder::trace::{
    curate_to_coverage, ip_coverage, parse_trace_file, sample_linear_extension, Curation, Trace,
    TraceSet,
};

use crate::{CliError, ExperimentConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum BaselineMethod {
    Majority,
    Heuristics,
    Qj,
}

impl BaselineMethod {
    fn label(self) -> &'static str {
        match self {
            BaselineMethod::Majority => "majority",
            BaselineMethod::Heuristics => "heuristics",
            BaselineMethod::Qj => "qj",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub target: f64,
    pub realized: f64,
    pub traces: usize,
    pub attempts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateSummary {
    pub samples: usize,
    pub alphas: Vec<f64>,
    /// Some pair carries two relation masses of at least 1/3.
    pub ambiguous: bool,
    /// Mode estimate equals the threshold estimate at 1/3.
    pub mode_agrees_with_third: bool,
}

/// File-name form of a threshold.
pub fn alpha_label(alpha: f64) -> String {
    format!("{alpha:.4}")
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Failed(e.to_string()))?;
    text.push('\n');
    write(path, &text)
}

fn write_graph(dir: &Path, stem: &str, catalog: &ActionCatalog, poset: &Poset) -> Result<PathBuf, CliError> {
    let cover = poset.transitive_reduction();
    let path = dir.join(format!("{stem}.json"));
    write_json(&path, &GraphDocument::from_cover(catalog, &cover))?;
    write(&dir.join(format!("{stem}.dot")), &to_dot(catalog, &cover))?;
    Ok(path)
}

fn load_graph_file(path: &Path) -> Result<(ActionCatalog, Poset), CliError> {
    load_graph(&read(path)?).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn truth_graph(config: &ExperimentConfig) -> Result<(ActionCatalog, Poset), CliError> {
    let path = config
        .graph
        .as_ref()
        .ok_or_else(|| CliError::Config("config has no ground-truth graph".into()))?;
    load_graph_file(path)
}

/// Re-indexes `poset` from catalog `from` onto catalog `to`; both must name
/// the same actions.
pub fn align(from: &ActionCatalog, poset: &Poset, to: &ActionCatalog) -> Result<Poset, CliError> {
    let mut a: Vec<&String> = from.names().iter().collect();
    let mut b: Vec<&String> = to.names().iter().collect();
    a.sort();
    b.sort();
    if a != b {
        return Err(CliError::Config("graph and trace catalogs name different actions".into()));
    }
    let edges = poset
        .closure_edges()
        .into_iter()
        .map(|(i, j)| (to.index_of(from.name(i)).unwrap(), to.index_of(from.name(j)).unwrap()));
    Ok(Poset::transitive_closure(to.len(), edges)?)
}

pub fn load_traces(config: &ExperimentConfig) -> Result<TraceSet, CliError> {
    let path = config
        .traces
        .clone()
        .unwrap_or_else(|| config.run_dir().join("traces.json"));
    if !path.is_file() {
        return Err(CliError::Config(format!(
            "no traces at {}; run `simulate` or set `traces`",
            path.display()
        )));
    }
    parse_trace_file(&read(&path)?).map_err(|e| match e {
        porder::trace::TraceError::TargetUnreachable { .. } => e.into(),
        _ => CliError::Config(format!("{}: {e}", path.display())),
    })
}

/// Curates traces to the configured coverage and writes `traces.json` and
/// `coverage.json`.
pub fn simulate(config: &ExperimentConfig) -> Result<CoverageReport, CliError> {
    let syn = config
        .synthesis
        .as_ref()
        .ok_or_else(|| CliError::Config("config has no synthesis block".into()))?;
    let (catalog, truth) = truth_graph(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(syn.seed);
    let curated = curate_to_coverage(&catalog, &truth, syn.target_ip_cov, &mut rng, syn.max_attempts)?;
    let mut traces = curated.traces;
    let padding: Vec<Trace> = (traces.len()..syn.min_traces)
        .map(|k| {
            let seq = sample_linear_extension(&truth, &mut rng);
            Trace::new(format!("pad-{k}"), seq.iter().map(|&a| catalog.name(a).to_string()))
        })
        .collect();
    traces.extend(padding)?;
    let report = CoverageReport {
        target: syn.target_ip_cov,
        realized: ip_coverage(&traces, &truth),
        traces: traces.len(),
        attempts: curated.attempts,
    };
    let dir = config.run_dir();
    let flat = traces.to_flat(Some(Curation {
        target: report.target,
        realized: report.realized,
        seed: syn.seed,
    }));
    write_json(&dir.join("traces.json"), &flat)?;
    write_json(&dir.join("coverage.json"), &report)?;
    Ok(report)
}

/// Runs one chain per seed concurrently; returns the chain files in seed
/// order.
pub fn infer(config: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    let traces = load_traces(config)?;
    let dir = config.run_dir();
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let jobs: Vec<(u64, PathBuf)> = config
        .seeds()
        .into_iter()
        .map(|seed| (seed, dir.join(format!("chain-{seed}.jsonl"))))
        .collect();
    let results: Vec<Result<(), CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|(seed, path)| {
                let traces = &traces;
                let mut sampler = config.sampler.clone();
                sampler.seed = *seed;
                scope.spawn(move || {
                    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
                    let mut sink = BufWriter::new(file);
                    let chain = run_chain_to(&sampler, traces, &mut sink)?;
                    sink.flush().map_err(|e| CliError::io(path, e))?;
                    log::info!("chain {seed}: {} samples", chain.samples.len());
                    Ok(())
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(CliError::Failed("chain thread panicked".into()))))
            .collect()
    });
    results.into_iter().collect::<Result<Vec<()>, _>>()?;
    Ok(jobs.into_iter().map(|(_, p)| p).collect())
}

fn read_chain(path: &Path) -> Result<Chain, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    Chain::read_jsonl(BufReader::new(file)).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Pools the configured chains and writes the marginals, one graph per
/// threshold, the mode graph and `estimate.json`.
pub fn estimate(config: &ExperimentConfig) -> Result<EstimateSummary, CliError> {
    let dir = config.run_dir();
    let mut pooled: Option<Chain> = None;
    for seed in config.seeds() {
        let chain = read_chain(&dir.join(format!("chain-{seed}.jsonl")))?;
        match pooled.as_mut() {
            None => pooled = Some(chain),
            Some(p) if p.header.catalog == chain.header.catalog => p.samples.extend(chain.samples),
            Some(_) => return Err(CliError::Config("chains disagree on the catalog".into())),
        }
    }
    let chain = pooled.ok_or_else(|| CliError::Config("no chain seeds configured".into()))?;
    let catalog = chain.catalog()?;
    let marginals = edge_marginals(&chain)?;
    write(&dir.join("marginals.csv"), &marginals.to_csv(&catalog))?;
    for &alpha in &config.estimator.alpha {
        let est = threshold_estimate(&marginals, alpha)?;
        write_graph(&dir, &format!("estimate-{}", alpha_label(alpha)), &catalog, &est)?;
    }
    let mode = mode_estimate(&marginals);
    write_graph(&dir, "estimate-mode", &catalog, &mode)?;
    let summary = EstimateSummary {
        samples: chain.samples.len(),
        alphas: config.estimator.alpha.clone(),
        ambiguous: has_ambiguous_pair(&marginals),
        mode_agrees_with_third: threshold_estimate(&marginals, 1.0 / 3.0)? == mode,
    };
    write_json(&dir.join("estimate.json"), &summary)?;
    Ok(summary)
}

/// Writes `baseline-<method>.json`; the Queue-Jump baseline also keeps its
/// chain and reports the posterior mode.
pub fn baseline(config: &ExperimentConfig, method: BaselineMethod) -> Result<PathBuf, CliError> {
    let traces = load_traces(config)?;
    let dir = config.run_dir();
    let b = &config.baseline;
    let poset = match method {
        BaselineMethod::Majority => majority_baseline(&traces, b.tau)?,
        BaselineMethod::Heuristics => heuristics_baseline(&traces, b.delta)?,
        BaselineMethod::Qj => {
            let mut sampler = config.sampler.clone();
            sampler.seed = config.seeds()[0];
            let chain = qj_infer(&sampler, &traces, b.qj_jump_p)?;
            let path = dir.join(format!("chain-qj-{}.jsonl", sampler.seed));
            let mut buf = Vec::new();
            chain.write_jsonl(&mut buf)?;
            write(&path, std::str::from_utf8(&buf).expect("chain JSON is UTF-8"))?;
            mode_estimate(&edge_marginals(&chain)?)
        }
    };
    write_graph(&dir, &format!("baseline-{}", method.label()), traces.catalog(), &poset)
}

fn graph_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            name.ends_with(".json")
                && (name.starts_with("estimate-") || name.starts_with("baseline-"))
        })
        .collect();
    files.sort();
    Ok(files)
}

/// Scores `estimate`, or every estimate and baseline graph in the run
/// directory, and writes `report.json` keyed by file stem.
pub fn evaluate(
    config: &ExperimentConfig,
    estimate: Option<&Path>,
) -> Result<BTreeMap<String, RecoveryReport>, CliError> {
    let traces = load_traces(config)?;
    let catalog = traces.catalog();
    let (truth_catalog, truth) = truth_graph(config)?;
    let truth = align(&truth_catalog, &truth, catalog)?;
    let dir = config.run_dir();
    let files = match estimate {
        Some(p) => vec![p.to_path_buf()],
        None => graph_files(&dir)?,
    };
    let mut reports = BTreeMap::new();
    for path in files {
        let (est_catalog, est) = load_graph_file(&path)?;
        let est = align(&est_catalog, &est, catalog)?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("estimate").to_string();
        reports.insert(stem, recovery_report(&est, &truth, &traces)?);
    }
    write_json(&dir.join("report.json"), &reports)?;
    Ok(reports)
}

/// Compiles `estimate` (default: the first threshold graph) against the
/// configured scenario and runs it with the oracle fallback planner.
pub fn execute(
    config: &ExperimentConfig,
    mode: Option<Mode>,
    estimate: Option<&Path>,
) -> Result<ExecutionReport, CliError> {
    let exec = config
        .execute
        .as_ref()
        .ok_or_else(|| CliError::Config("config has no execute block".into()))?;
    let mode = mode.unwrap_or(exec.mode);
    let dir = config.run_dir();
    let default_graph = dir.join(format!("estimate-{}.json", alpha_label(config.estimator.alpha[0])));
    let graph = estimate.map(Path::to_path_buf).unwrap_or(default_graph);
    let (catalog, poset) = load_graph_file(&graph)?;
    let scenario = Scenario::from_json(&read(&exec.scenario)?)
        .map_err(|e| CliError::Config(format!("{}: {e}", exec.scenario.display())))?;
    let sop = compile_sop(&catalog, &poset, &scenario.registry)?;
    let report = match mode {
        Mode::Expert => run_expert(&sop, &scenario, &exec.options),
        Mode::Hybrid => {
            let oracle = OraclePlanner::new(&scenario)?;
            let mut hook = oracle.as_hook();
            run_hybrid(&sop, &scenario, &exec.options, &mut hook)
        }
    };
    let label = match mode {
        Mode::Expert => "expert",
        Mode::Hybrid => "hybrid",
    };
    write_json(&dir.join(format!("execution-{label}.json")), &report)?;
    Ok(report)
}

/// simulate, infer, estimate, baselines, evaluate and execute, skipping the
/// stages the config does not enable.
pub fn pipeline(config: &ExperimentConfig) -> Result<(), CliError> {
    if config.synthesis.is_some() {
        let cov = simulate(config)?;
        log::info!("curated {} traces at IP-Cov {:.3}", cov.traces, cov.realized);
    }
    infer(config)?;
    estimate(config)?;
    baseline(config, BaselineMethod::Majority)?;
    baseline(config, BaselineMethod::Heuristics)?;
    if config.baseline.qj {
        baseline(config, BaselineMethod::Qj)?;
    }
    if config.graph.is_some() {
        evaluate(config, None)?;
    }
    if config.execute.is_some() {
        execute(config, None, None)?;
    }
    Ok(())
}
