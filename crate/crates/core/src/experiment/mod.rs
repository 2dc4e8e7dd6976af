//! Replicated experiments: comparison metrics, plans, a resumable runner,
//! result tables and solution grids.

mod grid;
mod table;

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use grid::{parse_solution_grid, render_solution_grid, SolutionGrid};
pub use table::{AggregateRow, MetricRow, RawRow, ResultTable, Status};

use crate::baselines::{ga_solve, solve_benchmark, Benchmark, GaConfig};
use crate::error::{Error, Result};
use crate::exact::{brute_force, solve_exact};
use crate::generate::{generate_instance, AttractionDist, CustomerCase, FailureSetting, ScenarioSpec};
use crate::io;
use crate::its::{its_solve, ItsCaps};
use crate::model::{Catalog, Instance, UtilityMode};
use crate::solution::{Budget, Method, Solution};

pub const PLAN_SCHEMA: &str = "jdpew-plan/1";
/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "JDPEW_WORKERS";

/// `100 (reference - heuristic) / heuristic`.
pub fn metric_gap(reference: f64, heuristic: f64) -> Result<f64> {
    if heuristic == 0.0 {
        return Err(Error::ZeroDenominator("gap"));
    }
    Ok(100.0 * (reference - heuristic) / heuristic)
}

pub fn metric_increment(joint: f64, benchmark: f64) -> f64 {
    joint - benchmark
}

/// `100 (joint - benchmark) / benchmark`.
pub fn metric_benefit(joint: f64, benchmark: f64) -> Result<f64> {
    if benchmark == 0.0 {
        return Err(Error::ZeroDenominator("benefit"));
    }
    Ok(100.0 * (joint - benchmark) / benchmark)
}

/// Limits and seeds for one solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub time_limit: Duration,
    /// Per-block limit of the two-step method; defaults to `time_limit`.
    pub step_time_limit: Option<Duration>,
    pub seed: u64,
    pub ga: GaConfig,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            time_limit: Duration::from_secs(300),
            step_time_limit: None,
            seed: 0,
            ga: GaConfig::default(),
        }
    }
}

/// Dispatch to the solver behind `method`.
pub fn solve_with(method: Method, instance: &Instance, catalog: &Catalog, opts: &SolveOptions) -> Result<Solution> {
    let budget = Budget::new(opts.time_limit)?;
    match method {
        Method::Exact => solve_exact(instance, catalog, budget),
        Method::BruteForce => brute_force(instance, catalog),
        Method::Its => {
            let caps = ItsCaps {
                step_budget: Budget::new(opts.step_time_limit.unwrap_or(opts.time_limit))?,
                time_limit: Some(opts.time_limit),
                ..ItsCaps::default()
            };
            its_solve(instance, catalog, caps)
        }
        Method::Ga => ga_solve(instance, catalog, &opts.ga, opts.seed),
        Method::Bm1 => solve_benchmark(instance, catalog, Benchmark::Bm1, budget),
        Method::Bm2 => solve_benchmark(instance, catalog, Benchmark::Bm2, budget),
        Method::Bm3 => solve_benchmark(instance, catalog, Benchmark::Bm3, budget),
    }
}

/// Values substituted into every base scenario; empty axes keep the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Sweep {
    pub gamma: Vec<f64>,
    pub theta: Vec<f64>,
    pub customer_case: Vec<CustomerCase>,
    pub failure_setting: Vec<FailureSetting>,
    pub attraction_dist: Vec<AttractionDist>,
    pub utility_mode: Vec<UtilityMode>,
}

fn default_time_limit() -> f64 {
    300.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    /// Base scenarios; their seeds are replaced by `base_seed + replication`.
    pub scenarios: Vec<ScenarioSpec>,
    #[serde(default)]
    pub sweep: Sweep,
    pub methods: Vec<Method>,
    pub replications: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Seconds per method run.
    #[serde(default = "default_time_limit")]
    pub time_limit: f64,
    #[serde(default)]
    pub step_time_limit: Option<f64>,
    #[serde(default)]
    pub method_time_limits: BTreeMap<Method, f64>,
    #[serde(default)]
    pub ga: GaConfig,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanFile {
    schema: String,
    plan: ExperimentPlan,
}

pub fn plan_to_json(plan: &ExperimentPlan) -> Result<String> {
    io::to_json(&PlanFile {
        schema: PLAN_SCHEMA.into(),
        plan: plan.clone(),
    })
}

pub fn read_plan(path: &Path) -> Result<ExperimentPlan> {
    let f: PlanFile = io::from_json(&fs::read_to_string(path)?, PLAN_SCHEMA)?;
    f.plan.validate()?;
    Ok(f.plan)
}

fn tag<T: Serialize>(value: &T) -> String {
    serde_json::to_value(value)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

/// Short readable name of a scenario, without its seed.
pub fn scenario_label(spec: &ScenarioSpec) -> String {
    format!(
        "w{}-m{}-l{}-g{}-t{}-{}-{}-{}-{}",
        spec.w,
        spec.m,
        spec.l,
        spec.gamma,
        spec.theta,
        tag(&spec.customer_case),
        tag(&spec.failure_setting),
        tag(&spec.attraction_dist),
        tag(&spec.utility_mode)
    )
}

/// Stable hash of a scenario with its seed cleared.
pub fn scenario_hash(spec: &ScenarioSpec) -> String {
    let mut s = spec.clone();
    s.seed = 0;
    let text = io::to_json(&s).expect("scenarios serialize");
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.replications < 1 {
            return bad("replication count must be at least 1");
        }
        if self.scenarios.is_empty() || self.methods.is_empty() {
            return bad("a plan needs at least one scenario and one method");
        }
        let limits = std::iter::once(self.time_limit)
            .chain(self.step_time_limit)
            .chain(self.method_time_limits.values().copied());
        for t in limits {
            if !(t > 0.0 && t.is_finite()) {
                return bad("time limits must be positive");
            }
        }
        self.ga.validate()?;
        for s in self.expand() {
            s.validate()?;
        }
        Ok(())
    }

    /// Every base scenario crossed with every sweep axis, deduplicated, in
    /// plan order.
    pub fn expand(&self) -> Vec<ScenarioSpec> {
        fn axis<T: Clone, F: Fn(&mut ScenarioSpec, T)>(
            specs: Vec<ScenarioSpec>,
            values: &[T],
            set: F,
        ) -> Vec<ScenarioSpec> {
            if values.is_empty() {
                return specs;
            }
            specs
                .into_iter()
                .flat_map(|s| {
                    values
                        .iter()
                        .map(|v| {
                            let mut t = s.clone();
                            set(&mut t, v.clone());
                            t
                        })
                        .collect::<Vec<_>>()
                })
                .collect()
        }
        let sw = &self.sweep;
        let mut specs: Vec<ScenarioSpec> = self
            .scenarios
            .iter()
            .map(|s| ScenarioSpec { seed: 0, ..s.clone() })
            .collect();
        specs = axis(specs, &sw.gamma, |s, v| s.gamma = v);
        specs = axis(specs, &sw.theta, |s, v| s.theta = v);
        specs = axis(specs, &sw.customer_case, |s, v| s.customer_case = v);
        specs = axis(specs, &sw.failure_setting, |s, v| s.failure_setting = v);
        specs = axis(specs, &sw.attraction_dist, |s, v| s.attraction_dist = v);
        specs = axis(specs, &sw.utility_mode, |s, v| s.utility_mode = v);
        let mut seen = HashSet::new();
        specs.retain(|s| seen.insert(scenario_hash(s)));
        specs
    }

    pub fn options(&self, method: Method, seed: u64) -> SolveOptions {
        let limit = self.method_time_limits.get(&method).copied().unwrap_or(self.time_limit);
        SolveOptions {
            time_limit: Duration::from_secs_f64(limit),
            step_time_limit: self.step_time_limit.map(Duration::from_secs_f64),
            seed,
            ga: self.ga.clone(),
        }
    }
}

/// Worker count from the environment, else the available parallelism.
pub fn worker_count() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(Error::InvalidConfig(format!(
                "{WORKERS_ENV} must be a positive integer, got `{v}`"
            ))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

struct Cell {
    spec: ScenarioSpec,
    hash: String,
    label: String,
    replication: usize,
    method: Method,
}

fn run_cell(plan: &ExperimentPlan, cell: &Cell) -> RawRow {
    let seed = plan.base_seed.wrapping_add(cell.replication as u64);
    let start = Instant::now();
    let outcome = (|| {
        let spec = ScenarioSpec {
            seed,
            ..cell.spec.clone()
        };
        let inst = generate_instance(&spec)?;
        let cat = Catalog::new(spec.w)?;
        solve_with(cell.method, &inst, &cat, &plan.options(cell.method, seed))
    })();
    let mut row = RawRow {
        scenario: cell.hash.clone(),
        label: cell.label.clone(),
        replication: cell.replication,
        seed,
        method: cell.method,
        status: Status::Ok,
        profit: None,
        time_seconds: start.elapsed().as_secs_f64(),
        certificate: None,
        nodes: 0,
        error: String::new(),
    };
    match outcome {
        Ok(sol) => {
            row.profit = Some(sol.profit);
            row.time_seconds = sol.elapsed.as_secs_f64();
            row.certificate = Some(sol.certificate);
            row.nodes = sol.nodes;
        }
        Err(e) => {
            row.status = Status::Failed;
            row.error = format!("{}: {e}", e.kind());
        }
    }
    row
}

/// Write `contents` unless the file already holds exactly these bytes.
fn write_if_changed(path: &Path, contents: &str) -> Result<()> {
    if fs::read_to_string(path).ok().as_deref() != Some(contents) {
        fs::write(path, contents)?;
    }
    Ok(())
}

pub const RAW_FILE: &str = "raw.csv";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const METRICS_FILE: &str = "metrics.csv";
pub const TABLE_FILE: &str = "table.txt";
pub const SCENARIOS_FILE: &str = "scenarios.json";

/// Run every pending (scenario, replication, method) cell of the plan and
/// write raw rows, aggregates, metrics and an aligned table into `out`.
///
/// Cells already present in `out/raw.csv` are skipped; a finished plan
/// re-runs without touching any file.
pub fn run_experiment(plan: &ExperimentPlan, out: &Path) -> Result<ResultTable> {
    plan.validate()?;
    fs::create_dir_all(out)?;
    let specs = plan.expand();
    let raw_path = out.join(RAW_FILE);
    let existing = if raw_path.exists() {
        table::read_raw(&raw_path)?
    } else {
        Vec::new()
    };
    let done: HashSet<(String, usize, Method)> = existing
        .iter()
        .map(|r| (r.scenario.clone(), r.replication, r.method))
        .collect();

    let mut cells = Vec::new();
    for spec in &specs {
        let hash = scenario_hash(spec);
        let label = scenario_label(spec);
        for replication in 0..plan.replications {
            for &method in &plan.methods {
                if !done.contains(&(hash.clone(), replication, method)) {
                    cells.push(Cell {
                        spec: spec.clone(),
                        hash: hash.clone(),
                        label: label.clone(),
                        replication,
                        method,
                    });
                }
            }
        }
    }

    let catalog: Vec<serde_json::Value> = specs
        .iter()
        .map(|s| serde_json::json!({ "hash": scenario_hash(s), "label": scenario_label(s), "scenario": s }))
        .collect();
    write_if_changed(&out.join(SCENARIOS_FILE), &io::to_json(&catalog)?)?;

    if !cells.is_empty() {
        let fresh = existing.is_empty() && !raw_path.exists();
        let file = OpenOptions::new().create(true).append(true).open(&raw_path)?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(worker_count()?)
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let (tx, rx) = mpsc::channel::<RawRow>();
        let collector = std::thread::spawn(move || -> Result<()> {
            let mut writer = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
            for row in rx {
                writer.serialize(&row).map_err(|e| Error::Format(e.to_string()))?;
                writer.flush()?;
            }
            Ok(())
        });
        pool.install(|| {
            cells.par_iter().for_each_with(tx, |tx, cell| {
                // the collector only stops early on a write error, reported below
                let _ = tx.send(run_cell(plan, cell));
            })
        });
        collector.join().expect("collector thread panicked")?;
    }

    let order: Vec<String> = specs.iter().map(scenario_hash).collect();
    let mut rows = table::read_raw(&raw_path)?;
    table::sort_rows(&mut rows, &order, &plan.methods);
    let result = ResultTable::from_raw(rows, &order);
    write_if_changed(&raw_path, &result.raw_csv()?)?;
    write_if_changed(&out.join(AGGREGATE_FILE), &result.aggregate_csv()?)?;
    write_if_changed(&out.join(METRICS_FILE), &result.metrics_csv()?)?;
    write_if_changed(&out.join(TABLE_FILE), &result.render())?;
    Ok(result)
}
