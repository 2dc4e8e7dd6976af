use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use jdpew_core::experiment::{read_plan, run_experiment, solve_with, SolveOptions};
use jdpew_core::generate::{AttractionDist, CustomerCase, FailureSetting, Ladder, ScenarioSpec};
use jdpew_core::io::{self, read_instance, read_scenario, read_solution, write_instance, write_solution};
use jdpew_core::model::discount::{canonical_levels, initial_levels};
use jdpew_core::reform::{
    audit_counts, build_benchmark_program, build_misocp, build_step_program, compute_aux, export_conic,
    BenchmarkProgram, FixedBlock,
};
use jdpew_core::{render_solution_grid, Catalog, Method, UtilityMode};

#[derive(Parser)]
#[command(name = "jdpew", version, about = "Joint extended-warranty bundle design and pricing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance from a scenario file or from flags.
    Generate(GenerateArgs),
    /// Solve an instance with one method.
    Solve(SolveArgs),
    /// Run an experiment plan and write result tables.
    Benchmark(BenchmarkArgs),
    /// Export a conic program built from an instance.
    Export(ExportArgs),
    /// Print the recommendation, advertising and discount grids of a solution.
    Grid(GridArgs),
    /// Report variable and constraint counts of the conic programs.
    Audit(AuditArgs),
}

#[derive(clap::Args)]
struct GenerateArgs {
    /// Scenario file; when given, the scenario flags are ignored.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    w: usize,
    #[arg(long, default_value_t = 5)]
    m: usize,
    /// Discount levels; defaults to the subsystem count.
    #[arg(long)]
    l: Option<usize>,
    #[arg(long, default_value_t = 6.0)]
    gamma: f64,
    #[arg(long, default_value_t = 8.0)]
    theta: f64,
    #[arg(long, default_value_t = 0.05)]
    ladder_step: f64,
    #[arg(long, value_enum, default_value_t = CaseArg::Uniform)]
    customer_case: CaseArg,
    #[arg(long, value_enum, default_value_t = FailureArg::Baseline)]
    failure_setting: FailureArg,
    #[arg(long, value_enum, default_value_t = AttractionArg::Uniform)]
    attraction_dist: AttractionArg,
    #[arg(long, value_enum, default_value_t = UtilityArg::Linear)]
    utility_mode: UtilityArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the scenario used.
    #[arg(long)]
    save_scenario: Option<PathBuf>,
    /// Instance file; printed to stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseArg {
    Uniform,
    Decreasing,
    Symmetric,
}

#[derive(Clone, Copy, ValueEnum)]
enum FailureArg {
    Baseline,
    HuL,
    HuH,
    Heu,
    UnM,
    Correlated,
}

#[derive(Clone, Copy, ValueEnum)]
enum AttractionArg {
    Uniform,
    Normal,
    PowerLaw,
}

#[derive(Clone, Copy, ValueEnum)]
enum UtilityArg {
    Linear,
    Diminishing,
}

#[derive(clap::Args)]
struct SolveArgs {
    #[arg(long, short)]
    instance: PathBuf,
    /// exact, brute-force, its, ga, bm1, bm2 or bm3.
    #[arg(long, default_value = "exact")]
    method: Method,
    /// Seconds.
    #[arg(long, default_value_t = 300.0)]
    time_limit: f64,
    /// Seconds per block of the two-step method.
    #[arg(long)]
    step_time_limit: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Solution file; printed to stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct BenchmarkArgs {
    #[arg(long, short)]
    plan: PathBuf,
    /// Override the plan's replication count.
    #[arg(long)]
    reps: Option<usize>,
    /// Output directory; defaults to the plan's output or `results`.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProgramArg {
    Full,
    Design,
    Pricing,
    Bm1,
    Bm2,
    Bm3,
}

#[derive(clap::Args)]
struct ExportArgs {
    #[arg(long, short)]
    instance: PathBuf,
    #[arg(long, value_enum, default_value_t = ProgramArg::Full)]
    program: ProgramArg,
    /// Solution supplying the fixed block of `design` (levels) or `pricing`
    /// (recommendations). `design` falls back to the initial levels.
    #[arg(long)]
    solution: Option<PathBuf>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct GridArgs {
    #[arg(long, short)]
    instance: PathBuf,
    #[arg(long, short)]
    solution: PathBuf,
    /// Directory for `grid.csv` and `grid.txt`.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct AuditArgs {
    #[arg(long, short)]
    instance: PathBuf,
}

fn scenario_from_flags(a: &GenerateArgs) -> ScenarioSpec {
    ScenarioSpec {
        w: a.w,
        m: a.m,
        l: a.l.unwrap_or(a.w),
        gamma: a.gamma,
        theta: a.theta,
        ladder: Ladder::Uniform { step: a.ladder_step },
        customer_case: match a.customer_case {
            CaseArg::Uniform => CustomerCase::Uniform,
            CaseArg::Decreasing => CustomerCase::Decreasing,
            CaseArg::Symmetric => CustomerCase::Symmetric,
        },
        attraction_dist: match a.attraction_dist {
            AttractionArg::Uniform => AttractionDist::Uniform,
            AttractionArg::Normal => AttractionDist::Normal,
            AttractionArg::PowerLaw => AttractionDist::PowerLaw,
        },
        failure_setting: match a.failure_setting {
            FailureArg::Baseline => FailureSetting::Baseline,
            FailureArg::HuL => FailureSetting::HuL,
            FailureArg::HuH => FailureSetting::HuH,
            FailureArg::Heu => FailureSetting::HeU,
            FailureArg::UnM => FailureSetting::UnM,
            FailureArg::Correlated => FailureSetting::Correlated,
        },
        utility_mode: match a.utility_mode {
            UtilityArg::Linear => UtilityMode::Linear,
            UtilityArg::Diminishing => UtilityMode::Diminishing,
        },
        seed: a.seed,
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn seconds(s: f64, what: &str) -> Result<Duration> {
    if !(s > 0.0 && s.is_finite()) {
        bail!(jdpew_core::Error::InvalidConfig(format!(
            "{what} must be a positive number of seconds"
        )));
    }
    Ok(Duration::from_secs_f64(s))
}

fn load_instance(path: &Path) -> Result<jdpew_core::Instance> {
    read_instance(path).with_context(|| format!("reading {}", path.display()))
}

fn generate(a: GenerateArgs) -> Result<()> {
    let spec = match &a.scenario {
        Some(path) => read_scenario(path)?,
        None => scenario_from_flags(&a),
    };
    let inst = jdpew_core::generate_instance(&spec)?;
    if let Some(path) = &a.save_scenario {
        std::fs::write(path, io::scenario_to_json(&spec)?)?;
    }
    match &a.out {
        Some(path) => write_instance(path, &inst)?,
        None => emit(None, &io::instance_to_json(&inst)?)?,
    }
    Ok(())
}

fn solve(a: SolveArgs) -> Result<()> {
    let inst = load_instance(&a.instance)?;
    let cat = Catalog::new(inst.w)?;
    let opts = SolveOptions {
        time_limit: seconds(a.time_limit, "time limit")?,
        step_time_limit: a.step_time_limit.map(|s| seconds(s, "step time limit")).transpose()?,
        seed: a.seed,
        ..SolveOptions::default()
    };
    let sol = solve_with(a.method, &inst, &cat, &opts)?;
    match &a.out {
        Some(path) => {
            write_solution(path, &sol, &inst, &cat)?;
            println!(
                "{} profit {:.6} ({}) in {:.3} s",
                sol.method,
                sol.profit,
                sol.certificate.as_str(),
                sol.elapsed.as_secs_f64()
            );
        }
        None => {
            let file = io::SolutionFile::new(&sol, &inst, &cat)?;
            emit(None, &io::to_json(&file)?)?;
        }
    }
    Ok(())
}

fn benchmark(a: BenchmarkArgs) -> Result<()> {
    let mut plan = read_plan(&a.plan)?;
    if let Some(reps) = a.reps {
        plan.replications = reps;
    }
    let out = a
        .out
        .or_else(|| plan.output.clone())
        .unwrap_or_else(|| PathBuf::from("results"));
    let table = run_experiment(&plan, &out)?;
    print!("{}", table.render());
    Ok(())
}

fn export(a: ExportArgs) -> Result<()> {
    let inst = load_instance(&a.instance)?;
    let cat = Catalog::new(inst.w)?;
    let aux = compute_aux(&inst, &cat)?;
    let solution = a.solution.as_deref().map(read_solution).transpose()?;
    let program = match a.program {
        ProgramArg::Full => build_misocp(&inst, &cat, &aux)?,
        ProgramArg::Design => {
            let levels = match &solution {
                Some(sol) => {
                    let d = sol.decision();
                    let Some(levels) = d.levels() else {
                        let contract = (0..d.n()).find(|&i| d.level(i).is_none()).unwrap_or(0);
                        bail!(jdpew_core::Error::MalformedDiscountRow { contract });
                    };
                    canonical_levels(&cat, inst.l, &sol.y, &levels)
                }
                None => initial_levels(&cat, inst.l),
            };
            build_step_program(&inst, &cat, &aux, FixedBlock::Discounts(&levels))?
        }
        ProgramArg::Pricing => {
            let Some(sol) = &solution else {
                bail!(jdpew_core::Error::InvalidConfig(
                    "the pricing program needs --solution".into()
                ));
            };
            build_step_program(&inst, &cat, &aux, FixedBlock::Recommendations { x: &sol.x, y: &sol.y })?
        }
        ProgramArg::Bm1 => build_benchmark_program(&inst, &cat, &aux, BenchmarkProgram::Bm1)?,
        ProgramArg::Bm2 => build_benchmark_program(&inst, &cat, &aux, BenchmarkProgram::Bm2)?,
        ProgramArg::Bm3 => build_benchmark_program(&inst, &cat, &aux, BenchmarkProgram::Bm3)?,
    };
    export_conic(&program, &a.out)?;
    let c = program.counts();
    println!(
        "wrote {}: {} binary, {} continuous, {} linear rows, {} cones",
        a.out.display(),
        c.binary,
        c.continuous,
        c.linear,
        c.cone
    );
    Ok(())
}

fn grid(a: GridArgs) -> Result<()> {
    let inst = load_instance(&a.instance)?;
    let cat = Catalog::new(inst.w)?;
    let sol = read_solution(&a.solution).with_context(|| format!("reading {}", a.solution.display()))?;
    let g = render_solution_grid(&sol.decision(), &inst, &cat)?;
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("grid.csv"), &g.csv)?;
        std::fs::write(dir.join("grid.txt"), &g.text)?;
    }
    print!("{}", g.text);
    Ok(())
}

fn audit(a: AuditArgs) -> Result<()> {
    let inst = load_instance(&a.instance)?;
    let cat = Catalog::new(inst.w)?;
    let report = audit_counts(&inst, &cat)?;
    emit(None, &io::to_json(&report)?)
}

fn error_record(err: &anyhow::Error) -> serde_json::Value {
    let kind = err.downcast_ref::<jdpew_core::Error>().map_or("cli", |e| e.kind());
    let chain: Vec<String> = err.chain().map(|e| e.to_string()).collect();
    serde_json::json!({ "error": { "kind": kind, "message": chain.join(": ") } })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let record = serde_json::json!({ "error": { "kind": "usage", "message": e.to_string().trim() } });
            eprintln!("{record}");
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Solve(a) => solve(a),
        Command::Benchmark(a) => benchmark(a),
        Command::Export(a) => export(a),
        Command::Grid(a) => grid(a),
        Command::Audit(a) => audit(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_record(&e));
            ExitCode::FAILURE
        }
    }
}
