//! Command-line front end.
//!
//! Exit codes: 0 success, 2 invalid input (arguments, domain, validation,
//! parse), 3 I/O failure, 4 step-cap exhaustion above `--max-cap-fraction`.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_rational::BigRational;
use serde_json::json;

use hk_consensus::bounds::BoundName;
use hk_consensus::dynamics::{counterexample_config, run_trajectory, RunParams, TrajectoryResult};
use hk_consensus::estimator::{
    estimate, sample_initial, with_workers, DynamicsParams, Event, McRequest,
};
use hk_consensus::opinion::update_step;
use hk_consensus::profile::build_profile;
use hk_consensus::sweep::{self, OutputFormat, Row, SweepFile, SweepSpec};
use hk_consensus::{Configuration, Error, Scalar, ScalarMode};

#[derive(Parser)]
#[command(
    name = "hkc",
    version,
    about = "Bounded-confidence consensus simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trajectory from a JSON configuration or a sampled trial.
    Simulate(SimulateArgs),
    /// Monte Carlo estimate of one event.
    Estimate(EstimateArgs),
    /// Tabulate closed-form probabilities.
    Bounds(BoundsArgs),
    /// Sweep events and bounds over an (n, eps) grid.
    Figure(FigureArgs),
    /// Print a configuration that is connected at t=0 and disconnected at t=1.
    Counterexample(CounterexampleArgs),
}

#[derive(Args, Clone)]
struct DynamicsFlags {
    /// Step cap (default max(1000, n^3)).
    #[arg(long)]
    cap: Option<usize>,
    /// Float fixed-point tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Arithmetic: float or rational.
    #[arg(long)]
    mode: Option<ScalarMode>,
}

impl DynamicsFlags {
    fn resolve(&self, base: DynamicsParams) -> DynamicsParams {
        DynamicsParams {
            cap: self.cap.or(base.cap),
            tol: self.tol.unwrap_or(base.tol),
            mode: self.mode.unwrap_or(base.mode),
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON configuration file; without it a trial is sampled from --n/--d/--eps/--seed.
    #[arg(long, conflicts_with_all = ["n", "d", "eps"])]
    input: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value_t = sweep::DEFAULT_SEED)]
    seed: u64,
    /// Trial index within the seed's stream.
    #[arg(long, default_value_t = 0)]
    trial: u64,
    /// Write every visited state as JSON lines.
    #[arg(long)]
    dump: Option<PathBuf>,
    #[command(flatten)]
    dynamics: DynamicsFlags,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    event: Event,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = sweep::DEFAULT_TRIALS)]
    trials: u64,
    #[arg(long, default_value_t = sweep::DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Fail with exit code 4 when more trials than this hit the step cap.
    #[arg(long)]
    max_cap_fraction: Option<f64>,
    #[command(flatten)]
    dynamics: DynamicsFlags,
}

#[derive(Args)]
struct BoundsArgs {
    /// Bound names, comma separated (default: all valid for the cells).
    #[arg(long, value_delimiter = ',')]
    bound: Vec<BoundName>,
    /// Agent counts, e.g. `2-4,10`.
    #[arg(long, default_value = "2")]
    n: String,
    #[arg(long, default_value_t = 1)]
    d: usize,
    /// `start:stop:step` or a comma list.
    #[arg(long, default_value = "0.05:0.95:0.05")]
    eps_grid: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FigureArgs {
    /// TOML sweep file; flags override its keys. Without it (and without
    /// --n) the full consensus figure is produced.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    eps_grid: Option<String>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    event: Vec<Event>,
    #[arg(long, value_delimiter = ',')]
    bound: Vec<BoundName>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<OutputFormat>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    max_cap_fraction: Option<f64>,
    #[command(flatten)]
    dynamics: DynamicsFlags,
}

#[derive(Args)]
struct CounterexampleArgs {
    #[arg(long, default_value_t = 5)]
    n: usize,
}

/// Failure carrying its process exit code.
enum Failure {
    Lib(Error),
    CapExceeded(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Lib(Error::Io(_)) => 3,
            Failure::Lib(_) => 2,
            Failure::CapExceeded(_) => 4,
        }
    }
}

type CliResult = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Estimate(a) => estimate_cmd(a),
        Command::Bounds(a) => bounds_cmd(a),
        Command::Figure(a) => figure(a),
        Command::Counterexample(a) => counterexample(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Lib(e) => eprintln!("error: {e}"),
                Failure::CapExceeded(msg) => eprintln!("error: {msg}"),
            }
            ExitCode::from(f.exit_code())
        }
    }
}

fn print_json(value: &serde_json::Value) -> CliResult {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value).map_err(Error::from)?;
    writeln!(out).map_err(Error::from)?;
    Ok(())
}

fn simulate(a: SimulateArgs) -> CliResult {
    let dynamics = a.dynamics.resolve(DynamicsParams::default());
    let config = match &a.input {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(Error::from)?;
            let value: serde_json::Value = serde_json::from_str(&text).map_err(Error::from)?;
            // "p/q" strings mark an exact configuration
            if value.get("epsilon").is_some_and(|e| e.is_string()) {
                Loaded::Exact(Configuration::<BigRational>::from_json(&value)?)
            } else {
                Loaded::Float(Configuration::<f64>::from_json(&value)?)
            }
        }
        None => {
            let missing =
                || Error::InvalidArgument("simulate needs --input or --n and --eps".into());
            let n = a.n.ok_or_else(missing)?;
            let eps = a.eps.ok_or_else(missing)?;
            Loaded::Float(sample_initial(n, a.d.unwrap_or(1), eps, a.trial, a.seed)?)
        }
    };
    let params = RunParams {
        cap: dynamics.cap,
        tol: dynamics.tol,
        record: a.dump.is_some(),
    };
    match (config, dynamics.mode) {
        (Loaded::Float(c), ScalarMode::Float64) => {
            report(&run_trajectory(&c, &params)?, a.dump.as_deref())
        }
        (Loaded::Float(c), ScalarMode::ExactRational) => {
            report(&run_trajectory(&c.to_exact(), &params)?, a.dump.as_deref())
        }
        (Loaded::Exact(c), _) => report(&run_trajectory(&c, &params)?, a.dump.as_deref()),
    }
}

enum Loaded {
    Float(Configuration<f64>),
    Exact(Configuration<BigRational>),
}

fn report<S: Scalar>(r: &TrajectoryResult<S>, dump: Option<&Path>) -> CliResult {
    if let Some(path) = dump {
        sweep::write_atomically(path, |f| {
            let mut w = BufWriter::new(f);
            for (t, state) in r.history.iter().enumerate() {
                serde_json::to_writer(&mut w, &json!({ "t": t, "state": state.to_json() }))?;
                w.write_all(b"\n")?;
            }
            w.flush()?;
            Ok(())
        })?;
    }
    eprintln!("outcome {:?} after {} steps", r.outcome, r.steps);
    print_json(&json!({
        "outcome": r.outcome,
        "steps": r.steps,
        "cluster_count": r.cluster_count,
        "mode": r.final_state.mode(),
        "final_state": r.final_state.to_json(),
    }))
}

fn check_cap_fraction(limit: Option<f64>, cap_reached: u64, trials: u64, what: &str) -> CliResult {
    if let Some(limit) = limit {
        let fraction = cap_reached as f64 / trials.max(1) as f64;
        if fraction > limit {
            return Err(Failure::CapExceeded(format!(
                "{what}: {cap_reached} of {trials} trials hit the step cap ({fraction} > {limit})"
            )));
        }
    }
    Ok(())
}

fn estimate_cmd(a: EstimateArgs) -> CliResult {
    let req = McRequest::new(a.event, a.n, a.d, a.eps, a.trials, a.seed)
        .with_dynamics(a.dynamics.resolve(DynamicsParams::default()));
    let est = with_workers(a.workers, || estimate(&req))??;
    eprintln!(
        "{} n={} d={} eps={}: {}/{} (cap reached {})",
        est.event, est.n, est.d, est.eps, est.successes, est.trials, est.cap_reached
    );
    print_json(&serde_json::to_value(&est).map_err(Error::from)?)?;
    check_cap_fraction(a.max_cap_fraction, est.cap_reached, est.trials, "estimate")
}

fn bounds_cmd(a: BoundsArgs) -> CliResult {
    let n_list = sweep::parse_n_list(&a.n)?;
    let eps_grid = sweep::parse_eps_grid(&a.eps_grid)?;
    let bounds = if a.bound.is_empty() {
        BoundName::ALL
            .iter()
            .copied()
            .filter(|b| n_list.iter().all(|&n| b.validate(n, a.d).is_ok()))
            .collect()
    } else {
        a.bound
    };
    if bounds.is_empty() {
        return Err(Error::Validation(format!(
            "no bound applies to every n in {n_list:?} at d={}",
            a.d
        ))
        .into());
    }
    let table = sweep::bounds_table(&bounds, &n_list, a.d, &eps_grid)?;
    match &a.out {
        Some(path) => sweep::write_atomically(path, |f| sweep::write_bounds_csv(&table, f))?,
        None => sweep::write_bounds_csv(&table, io::stdout().lock())?,
    }
    Ok(())
}

fn figure_specs(a: &FigureArgs) -> Result<Vec<SweepSpec>, Error> {
    let file = match &a.config {
        Some(path) => SweepFile::load(path)?,
        None => SweepFile::default(),
    };
    let dynamics = a.dynamics.resolve(DynamicsParams {
        cap: file.cap,
        tol: file.tol.unwrap_or(DynamicsParams::default().tol),
        mode: file.mode.unwrap_or(ScalarMode::Float64),
    });
    let trials = a.trials.or(file.trials).unwrap_or(sweep::DEFAULT_TRIALS);
    let master_seed = a.seed.or(file.master_seed).unwrap_or(sweep::DEFAULT_SEED);
    let workers = a.workers.or(file.workers).unwrap_or(0);
    let format = a.format.or(file.format).unwrap_or_default();
    let output_path = a.out.clone().or(file.output_path.clone());

    let n_list = match &a.n {
        Some(s) => Some(sweep::parse_n_list(s)?),
        None => file.n_list.clone(),
    };
    let mut specs = match n_list {
        None => sweep::consensus_figure_panels(trials, master_seed, dynamics, workers),
        Some(n_list) => {
            let eps_grid = match &a.eps_grid {
                Some(s) => sweep::parse_eps_grid(s)?,
                None => file
                    .eps_grid
                    .clone()
                    .unwrap_or_else(sweep::default_eps_grid),
            };
            let events = if a.event.is_empty() {
                file.events.clone().unwrap_or_default()
            } else {
                a.event.clone()
            };
            let bounds = if a.bound.is_empty() {
                file.bounds.clone().unwrap_or_default()
            } else {
                a.bound.clone()
            };
            vec![SweepSpec {
                n_list,
                d: a.d.or(file.d).unwrap_or(1),
                eps_grid,
                trials,
                master_seed,
                events,
                bounds,
                output_path: None,
                format,
                dynamics,
                workers,
            }]
        }
    };
    for spec in &mut specs {
        if let Some(s) = &a.eps_grid {
            spec.eps_grid = sweep::parse_eps_grid(s)?;
        }
        spec.output_path = output_path.clone();
        spec.format = format;
    }
    Ok(specs)
}

fn figure(a: FigureArgs) -> CliResult {
    let specs = figure_specs(&a)?;
    for spec in &specs {
        spec.validate()?;
    }
    let mut rows: Vec<Row> = Vec::new();
    for spec in &specs {
        rows.extend(sweep::run_figure_sweep_with(spec, |cell| {
            let summary: Vec<String> = cell
                .rows
                .iter()
                .map(|r| format!("{}={:.4}", r.name, r.value))
                .collect();
            eprintln!("n={} eps={}: {}", cell.n, cell.eps, summary.join(" "));
        })?);
    }
    let spec = &specs[0];
    match &spec.output_path {
        Some(path) => {
            sweep::emit(&rows, path, spec.format)?;
            eprintln!("wrote {} rows to {}", rows.len(), path.display());
        }
        None => match spec.format {
            OutputFormat::Csv => sweep::write_csv(&rows, io::stdout().lock())?,
            OutputFormat::Jsonl => sweep::write_jsonl(&rows, io::stdout().lock())?,
        },
    }
    let (capped, trials) = rows
        .iter()
        .filter_map(|r| Some((r.cap_reached?, r.trials?)))
        .fold((0, 0), |acc, (c, t)| (acc.0 + c, acc.1 + t));
    check_cap_fraction(a.max_cap_fraction, capped, trials, "figure")
}

fn counterexample(a: CounterexampleArgs) -> CliResult {
    let config = counterexample_config(a.n)?;
    let next = update_step(&config);
    print_json(&json!({
        "configuration": config.to_json(),
        "profile_t0": build_profile(&config).to_json(),
        "profile_t1": build_profile(&next).to_json(),
        "state_t1": next.to_json(),
    }))
}
