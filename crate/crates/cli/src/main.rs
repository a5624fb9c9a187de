use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use scg::bench::{records_to_csv, run_benchmark, BenchConfig};
use scg::bnb::BnbOptions;
use scg::cutgen::{CutMode, GenConfigCuts};
use scg::data::{generate_synthetic, load_csv, write_matrix_csv, write_vector_csv, GenConfig};
use scg::oracle::{enumerate_optimal, DEFAULT_TOL_OPT};
use scg::pipeline::{run_method, screen, CutSettings, Method};
use scg::relaxation::{make_bounds, solve_relaxation_fixed, upper_bound, Fixings};
use scg::{ProblemInstance, RelaxOptions, ScgError};

const EXIT_INPUT: u8 = 2;
const EXIT_LIMIT: u8 = 3;
const EXIT_REFUSAL: u8 = 4;

#[derive(Parser)]
#[command(name = "scg", version, about = "Exact sparse ridge regression with screening cuts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset
    Gen(GenArgs),
    /// Solve the root relaxation and report bounds
    Relax(RelaxArgs),
    /// Generate screening cuts
    Cuts(CutsArgs),
    /// Solve the cardinality-constrained problem
    Solve(SolveArgs),
    /// Enumerate all supports of a small instance
    Oracle(OracleArgs),
    /// Run a benchmark sweep described by a JSON file
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    #[arg(long, default_value_t = 3.5)]
    snr: f64,
    #[arg(long)]
    k0: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_x: PathBuf,
    #[arg(long)]
    out_y: PathBuf,
    #[arg(long)]
    out_beta: Option<PathBuf>,
}

#[derive(Args)]
struct InstanceArgs {
    /// Design matrix CSV (n rows, d columns)
    #[arg(long)]
    x: PathBuf,
    /// Response CSV (n rows)
    #[arg(long)]
    y: PathBuf,
    #[arg(long)]
    gamma: f64,
    #[arg(long)]
    k: usize,
}

impl InstanceArgs {
    fn load(&self) -> scg::Result<ProblemInstance> {
        load_csv(&self.x, &self.y)?.instance(self.gamma, self.k)
    }
}

#[derive(Args)]
struct RelaxArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    #[arg(long, default_value_t = scg::relaxation::DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = scg::relaxation::DEFAULT_MAX_ITER)]
    max_iter: usize,
    /// Write JSON here instead of stdout
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Inc,
    Exc,
    Both,
}

#[derive(Args)]
struct CutsArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    #[arg(long, value_enum, default_value_t = ModeArg::Both)]
    mode: ModeArg,
    /// Cut budget per family (default k inclusive, d-k exclusive)
    #[arg(long)]
    max_cuts: Option<usize>,
    #[arg(long, default_value_t = 2)]
    max_len_inc: usize,
    #[arg(long, default_value_t = 3)]
    max_len_exc: usize,
    /// Use this upper bound instead of the rounding heuristic
    #[arg(long)]
    v_ub: Option<f64>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Plain,
    Ssr,
    Scg,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Plain => Method::Plain,
            MethodArg::Ssr => Method::Ssr,
            MethodArg::Scg => Method::Scg,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::Scg)]
    method: MethodArg,
    /// Target relative MIP gap
    #[arg(long, default_value_t = scg::bnb::DEFAULT_TARGET_GAP)]
    gap: f64,
    /// Seconds
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    node_limit: Option<usize>,
    /// Report time_ms = 0 so output is reproducible
    #[arg(long)]
    no_timing: bool,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    /// CSV destination (default stdout)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(value: &serde_json::Value, dest: Option<&Path>) -> scg::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match dest {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_gen(a: &GenArgs) -> scg::Result<u8> {
    let cfg = GenConfig {
        d: a.d,
        n: a.n,
        rho: a.rho,
        snr: a.snr,
        k0: a.k0,
        seed: a.seed,
    };
    let data = generate_synthetic(&cfg)?;
    write_matrix_csv(&a.out_x, &data.dataset.x)?;
    write_vector_csv(&a.out_y, data.dataset.y.as_slice())?;
    if let Some(p) = &a.out_beta {
        write_vector_csv(p, &data.beta_star)?;
    }
    Ok(0)
}

fn cmd_relax(a: &RelaxArgs) -> scg::Result<u8> {
    let inst = a.inst.load()?;
    let opts = RelaxOptions {
        tol: a.tol,
        max_iter: a.max_iter,
    };
    let fix = Fixings::free(inst.d(), inst.k());
    let (relax, converged) = match solve_relaxation_fixed(&inst, &fix, None, &opts) {
        Ok(r) => (r, true),
        Err(ScgError::Convergence { best, .. }) => (*best, false),
        Err(e) => return Err(e),
    };
    let (v_ub, support) = upper_bound(&inst, &relax);
    let bounds = make_bounds(&inst, &relax, v_ub);
    emit(
        &json!({
            "converged": converged,
            "relaxation": relax,
            "bounds": bounds,
            "ub_support": support,
        }),
        a.json.as_deref(),
    )?;
    Ok(if converged { 0 } else { EXIT_LIMIT })
}

fn cmd_cuts(a: &CutsArgs) -> scg::Result<u8> {
    let inst = a.inst.load()?;
    let (d, k) = (inst.d(), inst.k());
    let inc = GenConfigCuts {
        mode: CutMode::Inclusive,
        max_cuts: a.max_cuts.unwrap_or(k),
        max_len: a.max_len_inc,
    };
    let exc = GenConfigCuts {
        mode: CutMode::Exclusive,
        max_cuts: a.max_cuts.unwrap_or(d - k),
        max_len: a.max_len_exc,
    };
    let settings = CutSettings {
        inclusive: matches!(a.mode, ModeArg::Inc | ModeArg::Both).then_some(inc),
        exclusive: matches!(a.mode, ModeArg::Exc | ModeArg::Both).then_some(exc),
    };
    let sc = screen(&inst, &RelaxOptions::default(), a.v_ub, &settings)?;
    let families: Vec<_> = [&sc.inclusive, &sc.exclusive].into_iter().flatten().collect();
    emit(
        &json!({
            "v_ub": sc.bounds.v_ub,
            "gap": sc.bounds.gap,
            "c_threshold": sc.bounds.c_threshold,
            "ssr": sc.fixings,
            "families": families,
        }),
        a.json.as_deref(),
    )?;
    Ok(0)
}

fn cmd_solve(a: &SolveArgs) -> scg::Result<u8> {
    let inst = a.inst.load()?;
    let opts = BnbOptions {
        target_gap: a.gap,
        node_limit: a.node_limit,
        time_limit: a.time_limit.map(Duration::from_secs_f64),
        ..BnbOptions::default()
    };
    let settings = CutSettings::defaults(inst.d(), inst.k());
    let run = run_method(&inst, a.method.into(), &opts, &settings, &RelaxOptions::default())?;
    let mut value = run.result.to_json(!a.no_timing);
    value["method"] = json!(run.method);
    emit(&value, a.json.as_deref())?;
    Ok(if run.result.status.hit_limit() { EXIT_LIMIT } else { 0 })
}

fn cmd_oracle(a: &OracleArgs) -> scg::Result<u8> {
    let inst = a.inst.load()?;
    let result = enumerate_optimal(&inst, DEFAULT_TOL_OPT)?;
    emit(&serde_json::to_value(&result)?, a.json.as_deref())?;
    Ok(0)
}

fn cmd_bench(a: &BenchArgs) -> scg::Result<u8> {
    let text = fs::read_to_string(&a.config)?;
    let cfg = BenchConfig::from_json(&text)?;
    let base = a.config.parent().unwrap_or(Path::new("."));
    let records = run_benchmark(&cfg, base)?;
    let csv = records_to_csv(&records)?;
    match &a.out {
        Some(p) => fs::write(p, csv)?,
        None => std::io::stdout().write_all(csv.as_bytes())?,
    }
    Ok(0)
}

fn exit_code(e: &ScgError) -> u8 {
    match e {
        ScgError::Input(_) | ScgError::Parse { .. } | ScgError::Io(_) | ScgError::Json(_) => EXIT_INPUT,
        ScgError::Convergence { .. } => EXIT_LIMIT,
        ScgError::OracleRefusal { .. } => EXIT_REFUSAL,
        ScgError::Infeasible => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Relax(a) => cmd_relax(a),
        Command::Cuts(a) => cmd_cuts(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
