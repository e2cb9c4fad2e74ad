use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use cralloc::channel::sample_su_channel;
use cralloc::experiments::{compare_with_oracle, runtime_scaling, sweep, trial_seed};
use cralloc::kkt::kkt_verify;
use cralloc::{Error, KktTolerances, LoadingProblem, PreparedScenario, ScenarioConfig, SweepParam};

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Parser)]
#[command(
    name = "cralloc",
    version,
    about = "Bit and power loading for OFDM cognitive radio"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Allocate one channel realization and print it as JSON.
    Solve(ChannelArgs),
    /// Monte Carlo sweep of one parameter, as CSV.
    Sweep(SweepArgs),
    /// Compare against exhaustive search on small instances, as CSV.
    OracleCompare(OracleArgs),
    /// Check the optimality conditions of the continuous solution, as JSON.
    KktCheck(ChannelArgs),
    /// Time the continuous solver over subcarrier counts, as CSV.
    Runtime(RuntimeArgs),
}

#[derive(Args)]
struct ConfigArg {
    /// Scenario file (JSON).
    #[arg(short, long)]
    config: PathBuf,
}

#[derive(Args)]
struct ChannelArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Master seed; defaults to the one in the scenario.
    #[arg(long)]
    seed: Option<u64>,
    /// Trial index under the master seed.
    #[arg(long, default_value_t = 0)]
    trial: u64,
    /// Explicit per-subcarrier CNIR instead of a random draw.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    cnir: Option<Vec<f64>>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// psi, alpha, p_aci or p_cci; defaults to the scenario's sweep block.
    #[arg(long)]
    param: Option<SweepParam>,
    /// Comma-separated sweep points.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    values: Option<Vec<f64>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Number of channel draws; defaults to the scenario's trial count.
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RuntimeArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "64,128,256,512")]
    sizes: Vec<usize>,
    /// Channel draws per size.
    #[arg(long, default_value_t = 31)]
    reps: usize,
    /// Back-to-back solves per draw.
    #[arg(long, default_value_t = 5)]
    inner: usize,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Serialize)]
struct SweepCsvRow {
    param_value: f64,
    avg_throughput: f64,
    avg_power: f64,
    cci_violation_rate: f64,
    aci_violation_rate: f64,
    ci95_throughput: f64,
    ci95_power: f64,
    ci95_cci_violation_rate: f64,
    ci95_aci_violation_rate: f64,
}

#[derive(Serialize)]
struct GapCsvRow {
    seed: u64,
    #[serde(rename = "F_proposed")]
    f_proposed: f64,
    #[serde(rename = "F_opt")]
    f_opt: f64,
    relative_gap: f64,
    proposed_s: f64,
    oracle_s: f64,
}

#[derive(Serialize)]
struct RuntimeCsvRow {
    n: usize,
    median_s: f64,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Solver(String),
    /// The reader closed stdout early.
    Closed,
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        match err {
            Error::Config(_) | Error::OracleTooLarge { .. } | Error::PathLossDomain { .. } => {
                Failure::Config(err.to_string())
            }
            other => Failure::Solver(other.to_string()),
        }
    }
}

impl From<cralloc::ConfigError> for Failure {
    fn from(err: cralloc::ConfigError) -> Self {
        Failure::Config(err.to_string())
    }
}

fn write_failure(kind: Option<std::io::ErrorKind>, msg: String) -> Failure {
    if kind == Some(std::io::ErrorKind::BrokenPipe) {
        Failure::Closed
    } else {
        Failure::Solver(format!("writing output: {msg}"))
    }
}

impl From<csv::Error> for Failure {
    fn from(err: csv::Error) -> Self {
        let kind = match err.kind() {
            csv::ErrorKind::Io(e) => Some(e.kind()),
            _ => None,
        };
        write_failure(kind, err.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(err: std::io::Error) -> Self {
        write_failure(Some(err.kind()), err.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(err: serde_json::Error) -> Self {
        write_failure(err.io_error_kind(), err.to_string())
    }
}

type CliResult = Result<(), Failure>;

fn load(arg: &ConfigArg) -> Result<ScenarioConfig, Failure> {
    let cfg = ScenarioConfig::from_path(&arg.config)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Prepared scenario and the CNIR of the requested realization.
fn realization(args: &ChannelArgs) -> Result<(PreparedScenario, Vec<f64>), Failure> {
    let cfg = load(&args.config)?;
    let prepared = PreparedScenario::new(&cfg)?;
    let cnir = match &args.cnir {
        Some(values) => {
            if values.len() != cfg.su.num_subcarriers {
                return Err(Failure::Config(format!(
                    "--cnir has {} values, scenario has {} subcarriers",
                    values.len(),
                    cfg.su.num_subcarriers
                )));
            }
            if values.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
                return Err(Failure::Config(
                    "--cnir values must be finite and non-negative".into(),
                ));
            }
            values.clone()
        }
        None => {
            let seed = args.seed.unwrap_or(cfg.experiment.seed);
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, args.trial));
            sample_su_channel(&cfg, &mut rng)?.cnir
        }
    };
    Ok((prepared, cnir))
}

fn print_json(value: &serde_json::Value) -> CliResult {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

/// JSON has no infinity; unconstrained caps print as the string "inf".
fn cap_json(cap: f64) -> serde_json::Value {
    if cap.is_infinite() {
        json!("inf")
    } else {
        json!(cap)
    }
}

fn solve(args: &ChannelArgs) -> CliResult {
    let (prepared, cnir) = realization(args)?;
    let (cont, alloc) = prepared.allocate(&cnir)?;
    let report = prepared.feasibility(&alloc, &cnir)?;
    print_json(&json!({
        "regime": cont.case_id.case_id(),
        "total_bits": alloc.total_bits(),
        "total_power_w": alloc.total_power(),
        "objective": alloc.objective,
        "feasible": report.feasible,
        "bits": alloc.bits,
        "powers_w": alloc.powers,
        "repair_steps": alloc.repair_steps,
        "continuous": {
            "bits": cont.bits,
            "powers_w": cont.powers,
            "objective": cont.objective,
            "lambda_power": cont.lambda_power,
            "lambda_aci": cont.lambda_aci,
        },
        "caps": {
            "total_w": cap_json(prepared.caps.total_cap),
            "aci_w": prepared.caps.aci_caps.iter().map(|c| cap_json(*c)).collect::<Vec<_>>(),
            "aci_usage_w": prepared.caps.aci_sums(&alloc.powers),
        },
        "cnir": cnir,
    }))
}

fn kkt_check(args: &ChannelArgs) -> CliResult {
    let (prepared, cnir) = realization(args)?;
    let su = &prepared.cfg.su;
    let problem = LoadingProblem::new(&cnir, su.alpha, &su.ber_threshold, &prepared.caps);
    let (cont, _) = prepared.allocate(&cnir)?;
    let report = kkt_verify(&cont, &problem, &KktTolerances::default())?;
    print_json(&json!({
        "regime": cont.case_id.case_id(),
        "active_subcarriers": cont.active_set.len(),
        "report": report,
    }))
}

fn csv_writer() -> csv::Writer<std::io::StdoutLock<'static>> {
    csv::Writer::from_writer(std::io::stdout().lock())
}

fn run_sweep(args: &SweepArgs) -> CliResult {
    let cfg = load(&args.config)?;
    let spec = cfg.experiment.sweep.as_ref();
    let param = args
        .param
        .or(spec.map(|s| s.param))
        .ok_or_else(|| Failure::Config("no --param and no sweep block in the scenario".into()))?;
    let values = match (&args.values, spec) {
        (Some(v), _) => v.clone(),
        (None, Some(s)) if s.param == param => s.values.clone(),
        _ => {
            return Err(Failure::Config(
                "no --values for the swept parameter".into(),
            ))
        }
    };
    let trials = args.trials.unwrap_or(cfg.experiment.trials);
    let seed = args.seed.unwrap_or(cfg.experiment.seed);
    let rows = sweep(&cfg, param, &values, trials, seed)?;
    let mut out = csv_writer();
    for row in rows {
        let s = row.stats;
        out.serialize(SweepCsvRow {
            param_value: row.value,
            avg_throughput: s.avg_throughput,
            avg_power: s.avg_power,
            cci_violation_rate: s.cci_violation_rate,
            aci_violation_rate: s.aci_violation_rate,
            ci95_throughput: s.ci95.throughput,
            ci95_power: s.ci95.power,
            ci95_cci_violation_rate: s.ci95.cci_violation_rate,
            ci95_aci_violation_rate: s.ci95.aci_violation_rate,
        })?;
    }
    out.flush()?;
    Ok(())
}

fn oracle_compare(args: &OracleArgs) -> CliResult {
    let cfg = load(&args.config)?;
    let instances = args.instances.unwrap_or(cfg.experiment.trials);
    let seed = args.seed.unwrap_or(cfg.experiment.seed);
    let cmp = compare_with_oracle(&cfg, instances, seed)?;
    let mut out = csv_writer();
    for r in &cmp.rows {
        out.serialize(GapCsvRow {
            seed: r.seed,
            f_proposed: r.f_proposed,
            f_opt: r.f_opt,
            relative_gap: r.relative_gap,
            proposed_s: r.proposed_s,
            oracle_s: r.oracle_s,
        })?;
    }
    out.flush()?;
    eprintln!("median gap {}, max gap {}", cmp.median_gap, cmp.max_gap);
    Ok(())
}

fn runtime(args: &RuntimeArgs) -> CliResult {
    let cfg = load(&args.config)?;
    let seed = args.seed.unwrap_or(cfg.experiment.seed);
    let scaling = runtime_scaling(&cfg, &args.sizes, args.reps, args.inner, seed)?;
    let mut out = csv_writer();
    for r in &scaling.rows {
        out.serialize(RuntimeCsvRow {
            n: r.n,
            median_s: r.median_s,
        })?;
    }
    out.flush()?;
    match scaling.slope {
        Some(s) => eprintln!("log-log slope {s}"),
        None => eprintln!("log-log slope undefined for a single size"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => solve(a),
        Command::Sweep(a) => run_sweep(a),
        Command::OracleCompare(a) => oracle_compare(a),
        Command::KktCheck(a) => kkt_check(a),
        Command::Runtime(a) => runtime(a),
    };
    match result {
        Ok(()) | Err(Failure::Closed) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("solver error: {msg}");
            ExitCode::from(EXIT_SOLVER)
        }
    }
}
