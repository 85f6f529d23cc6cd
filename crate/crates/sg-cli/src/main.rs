//! `sgsolver`: solve, generate, and benchmark reachability games.
//!
//! Three subcommands:
//!
//! - `solve`: run one algorithm on one model file and print a report.
//! - `generate`: write a model from one of the built-in families.
//! - `bench`: run (model, algorithm) pairs and emit one CSV row each.
//!
//! Exit codes are a stable contract: 0 for success (the solver converged,
//! or the command has no convergence notion), 1 for usage and input
//! errors, 2 when the solve stopped without converging (iteration or time
//! budget exhausted).

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process;
use std::time::Duration;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use sg_core::{
    generate, local_propagation, minimizer_restriction, naive_bvi_with, parse_model,
    restrict_to_mdp, serialize_model, solve_dfl, solve_wp_bvi, value_iteration_with, GenerateError,
    GeneratorParams, IterOpts, ParseError, StochasticGame, StopReason, ValueVector, WpBviConfig,
};
use thiserror::Error;

#[derive(Parser)]
#[command(
    name = "sgsolver",
    version,
    about = "Solvers for two-player stochastic games with a reachability objective"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a model file and print the final bounds.
    Solve(SolveArgs),
    /// Write a model from one of the built-in families.
    Generate(GenerateArgs),
    /// Solve (model, algorithm) pairs and emit one CSV row per pair.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algorithm {
    /// Plain value iteration: lower bounds, heuristic stop, no guarantee.
    Vi,
    /// Naive bounded value iteration: stalls on end components.
    Bvi,
    /// Bounded value iteration with widest-path upper bounds.
    Wp,
    /// Bounded value iteration with end-component deflation.
    Dfl,
}

impl Algorithm {
    fn name(self) -> &'static str {
        match self {
            Algorithm::Vi => "vi",
            Algorithm::Bvi => "bvi",
            Algorithm::Wp => "wp",
            Algorithm::Dfl => "dfl",
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Model file in the line-oriented game format.
    model: PathBuf,
    #[arg(long, value_enum, default_value_t = Algorithm::Wp)]
    algorithm: Algorithm,
    /// Stopping threshold on the upper−lower gap (bvi, wp, dfl; default 1e-6).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Stopping threshold on per-iteration progress (vi only; default 1e-6).
    #[arg(long)]
    delta: Option<f64>,
    /// Widest-path / deflation cadence in iterations (wp, dfl; default 5).
    #[arg(long)]
    wp_period: Option<u64>,
    /// Iteration budget (default 1000000).
    #[arg(long)]
    max_iterations: Option<u64>,
    /// Print one line per iteration: index, lower bound, upper bound.
    #[arg(long)]
    trace: bool,
    /// Give up with exit code 2 after this many seconds.
    #[arg(long)]
    time_budget: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Write the weighted graph induced by the final bounds as DOT text
    /// (wp only).
    #[arg(long)]
    dump_graph: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Fig1,
    Fig2,
    Fig4,
    Manyecs,
    Random,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(value_enum)]
    family: FamilyArg,
    /// Gadget count (manyecs only; default 1).
    #[arg(long)]
    n: Option<usize>,
    /// Total state count including target and sink (random only; default 6).
    #[arg(long)]
    states: Option<usize>,
    /// Most actions per interior state (random only; default 3).
    #[arg(long)]
    max_actions: Option<usize>,
    /// Most successors per action (random only; default 3).
    #[arg(long)]
    max_branching: Option<usize>,
    /// Probabilities are multiples of 1/resolution (random only; default 16).
    #[arg(long)]
    resolution: Option<u32>,
    /// Generator seed (random only; default 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Model files, directories of .sg files, or inline family specs like
    /// `fig2`, `manyecs:n=1000`, `random:states=6,seed=7`.
    #[arg(required = true)]
    models: Vec<String>,
    /// Comma-separated subset of {vi, bvi, wp, dfl}.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "wp")]
    algorithms: Vec<Algorithm>,
    /// Stopping threshold on the upper−lower gap (bvi, wp, dfl; default 1e-6).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Stopping threshold on per-iteration progress (vi rows; default 1e-6).
    #[arg(long)]
    delta: Option<f64>,
    /// Widest-path / deflation cadence in iterations (wp, dfl; default 5).
    #[arg(long)]
    wp_period: Option<u64>,
    /// Iteration budget per run (default 1000000).
    #[arg(long)]
    max_iterations: Option<u64>,
    /// Per-run time budget in seconds; over-budget runs are recorded with
    /// stopped_by = timeout.
    #[arg(long)]
    time_budget: Option<f64>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Error, Debug)]
enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: {source}", path.display())]
    Model {
        path: PathBuf,
        #[source]
        source: ParseError,
    },
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Usage(String),
}

fn usage(message: impl Into<String>) -> CliError {
    CliError::Usage(message.into())
}

/// Solver knobs after defaulting and validation.
struct Settings {
    epsilon: f64,
    delta: f64,
    wp_period: u64,
    max_iter: u64,
    trace: bool,
    time_budget: Option<Duration>,
}

impl Settings {
    fn resolve(
        epsilon: Option<f64>,
        delta: Option<f64>,
        wp_period: Option<u64>,
        max_iterations: Option<u64>,
        time_budget: Option<f64>,
        trace: bool,
    ) -> Result<Self, CliError> {
        let epsilon = epsilon.unwrap_or(1e-6);
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(usage(format!("--epsilon must be positive, got {epsilon}")));
        }
        let delta = delta.unwrap_or(1e-6);
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(usage(format!("--delta must be positive, got {delta}")));
        }
        let wp_period = wp_period.unwrap_or(5);
        if wp_period == 0 {
            return Err(usage("--wp-period must be at least 1"));
        }
        let time_budget = match time_budget {
            None => None,
            Some(secs) if secs >= 0.0 && secs.is_finite() => Some(Duration::from_secs_f64(secs)),
            Some(secs) => {
                return Err(usage(format!(
                    "--time-budget must be a nonnegative number of seconds, got {secs}"
                )))
            }
        };
        Ok(Settings {
            epsilon,
            delta,
            wp_period,
            max_iter: max_iterations.unwrap_or(1_000_000),
            trace,
            time_budget,
        })
    }

    fn wp_config(&self) -> WpBviConfig {
        WpBviConfig {
            epsilon: self.epsilon,
            wp_period: self.wp_period,
            max_iter: self.max_iter,
            trace: self.trace,
            time_budget: self.time_budget,
            ..WpBviConfig::default()
        }
    }

    fn iter_opts(&self) -> IterOpts {
        IterOpts {
            trace: self.trace,
            time_budget: self.time_budget,
        }
    }
}

/// Uniform view over the four algorithms' reports.
struct Outcome {
    iterations: u64,
    solves: u64,
    value_lower: f64,
    value_upper: Option<f64>,
    stopped_by: StopReason,
    wall_time: f64,
    mec_count: Option<usize>,
    trace: Option<Vec<(u64, f64, Option<f64>)>>,
    /// Final bound vectors, for the wp graph dump.
    bounds: Option<(ValueVector, ValueVector)>,
}

fn run_algorithm(g: &StochasticGame, algorithm: Algorithm, settings: &Settings) -> Outcome {
    let init = g.initial();
    match algorithm {
        Algorithm::Vi => {
            let r =
                value_iteration_with(g, settings.delta, settings.max_iter, settings.iter_opts());
            Outcome {
                iterations: r.iterations,
                solves: 0,
                value_lower: r.values[init],
                value_upper: None,
                stopped_by: r.stopped_by,
                wall_time: r.wall_time,
                mec_count: None,
                trace: r
                    .trace
                    .map(|t| t.iter().map(|p| (p.iteration, p.lower, p.upper)).collect()),
                bounds: None,
            }
        }
        Algorithm::Bvi => {
            let r = naive_bvi_with(g, settings.epsilon, settings.max_iter, settings.iter_opts());
            Outcome {
                iterations: r.iterations,
                solves: 0,
                value_lower: r.values[init],
                value_upper: r.upper.as_ref().map(|u| u[init]),
                stopped_by: r.stopped_by,
                wall_time: r.wall_time,
                mec_count: None,
                trace: r
                    .trace
                    .map(|t| t.iter().map(|p| (p.iteration, p.lower, p.upper)).collect()),
                bounds: None,
            }
        }
        Algorithm::Wp | Algorithm::Dfl => {
            let cfg = settings.wp_config();
            let r = if algorithm == Algorithm::Wp {
                solve_wp_bvi(g, &cfg)
            } else {
                solve_dfl(g, &cfg)
            };
            Outcome {
                iterations: r.iterations,
                solves: r.wp_solves,
                value_lower: r.value_lower,
                value_upper: Some(r.value_upper),
                stopped_by: r.stopped_by,
                wall_time: r.wall_time,
                mec_count: r.mec_count,
                trace: r.trace.map(|t| {
                    t.iter()
                        .map(|p| (p.iteration, p.lower, Some(p.upper)))
                        .collect()
                }),
                bounds: Some((r.lower, r.upper)),
            }
        }
    }
}

fn exit_code(stopped_by: StopReason) -> i32 {
    match stopped_by {
        StopReason::Threshold | StopReason::Converged => 0,
        StopReason::MaxIterations | StopReason::Timeout => 2,
    }
}

fn load_model(path: &Path) -> Result<StochasticGame, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_model(&text).map_err(|source| CliError::Model {
        path: path.to_path_buf(),
        source,
    })
}

fn write_output(path: Option<&Path>, content: &str) -> Result<(), CliError> {
    match path {
        Some(path) => fs::write(path, content).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn fmt_opt<T: std::fmt::Display>(value: Option<T>) -> String {
    value.map_or_else(|| "-".to_string(), |v| v.to_string())
}

fn cmd_solve(args: SolveArgs) -> Result<i32, CliError> {
    match args.algorithm {
        Algorithm::Vi => {
            if args.epsilon.is_some() {
                return Err(usage("--epsilon does not apply to vi; use --delta"));
            }
            if args.wp_period.is_some() {
                return Err(usage("--wp-period only applies to wp and dfl"));
            }
        }
        Algorithm::Bvi => {
            if args.delta.is_some() {
                return Err(usage("--delta only applies to vi"));
            }
            if args.wp_period.is_some() {
                return Err(usage("--wp-period only applies to wp and dfl"));
            }
        }
        Algorithm::Wp | Algorithm::Dfl => {
            if args.delta.is_some() {
                return Err(usage("--delta only applies to vi"));
            }
        }
    }
    if args.dump_graph.is_some() && args.algorithm != Algorithm::Wp {
        return Err(usage("--dump-graph requires --algorithm wp"));
    }

    let settings = Settings::resolve(
        args.epsilon,
        args.delta,
        args.wp_period,
        args.max_iterations,
        args.time_budget,
        args.trace,
    )?;
    let g = load_model(&args.model)?;
    let outcome = run_algorithm(&g, args.algorithm, &settings);

    let mut report = String::new();
    if let Some(points) = &outcome.trace {
        for &(i, lower, upper) in points {
            report.push_str(&format!("trace {i} {lower} {}\n", fmt_opt(upper)));
        }
    }
    report.push_str(&format!("model: {}\n", args.model.display()));
    report.push_str(&format!("states: {}\n", g.num_states()));
    report.push_str(&format!("transitions: {}\n", g.num_transitions()));
    report.push_str(&format!("algorithm: {}\n", args.algorithm.name()));
    report.push_str(&format!("value_lower: {}\n", outcome.value_lower));
    report.push_str(&format!("value_upper: {}\n", fmt_opt(outcome.value_upper)));
    report.push_str(&format!("iterations: {}\n", outcome.iterations));
    report.push_str(&format!("solves: {}\n", outcome.solves));
    if let Some(mecs) = outcome.mec_count {
        report.push_str(&format!("mecs: {mecs}\n"));
    }
    report.push_str(&format!("time_seconds: {:.6}\n", outcome.wall_time));
    report.push_str(&format!("stopped_by: {}\n", outcome.stopped_by));
    write_output(args.output.as_deref(), &report)?;

    if let Some(path) = &args.dump_graph {
        let (lower, upper) = outcome
            .bounds
            .as_ref()
            .expect("wp always reports final bounds");
        let m = restrict_to_mdp(&g, minimizer_restriction(&g, lower))
            .expect("restriction of a valid game is valid");
        let w = local_propagation(&m, upper);
        let labels: Vec<String> = g.states().iter().map(|s| s.name().to_string()).collect();
        fs::write(path, w.to_dot(Some(&labels))).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
    }

    Ok(exit_code(outcome.stopped_by))
}

fn cmd_generate(args: GenerateArgs) -> Result<i32, CliError> {
    let reject = |flag: &str, given: bool| {
        if given {
            Err(usage(format!("{flag} does not apply to this family")))
        } else {
            Ok(())
        }
    };
    let random_flags = [
        ("--states", args.states.is_some()),
        ("--max-actions", args.max_actions.is_some()),
        ("--max-branching", args.max_branching.is_some()),
        ("--resolution", args.resolution.is_some()),
        ("--seed", args.seed.is_some()),
    ];

    let params = match args.family {
        FamilyArg::Fig1 | FamilyArg::Fig2 | FamilyArg::Fig4 => {
            reject("--n", args.n.is_some())?;
            for (flag, given) in random_flags {
                reject(flag, given)?;
            }
            match args.family {
                FamilyArg::Fig1 => GeneratorParams::fig1(),
                FamilyArg::Fig2 => GeneratorParams::fig2(),
                _ => GeneratorParams::fig4(),
            }
        }
        FamilyArg::Manyecs => {
            for (flag, given) in random_flags {
                reject(flag, given)?;
            }
            GeneratorParams::manyecs(args.n.unwrap_or(1))
        }
        FamilyArg::Random => {
            reject("--n", args.n.is_some())?;
            let mut params = GeneratorParams::random(args.seed.unwrap_or(0));
            if let Some(states) = args.states {
                params.states = states;
            }
            if let Some(max_actions) = args.max_actions {
                params.max_actions = max_actions;
            }
            if let Some(max_branching) = args.max_branching {
                params.max_branching = max_branching;
            }
            if let Some(resolution) = args.resolution {
                params.resolution = resolution;
            }
            params
        }
    };

    let g = generate(&params)?;
    write_output(args.output.as_deref(), &serialize_model(&g))?;
    Ok(0)
}

/// One model to benchmark: its display name, the manyecs N when the model
/// came from that family, and the game itself.
struct BenchInput {
    name: String,
    n: Option<usize>,
    game: StochasticGame,
}

fn file_input(path: &Path) -> Result<BenchInput, CliError> {
    let name = path.file_stem().map_or_else(
        || path.display().to_string(),
        |s| s.to_string_lossy().into_owned(),
    );
    Ok(BenchInput {
        name,
        n: None,
        game: load_model(path)?,
    })
}

fn inline_input(spec: &str) -> Result<BenchInput, CliError> {
    let (family, rest) = match spec.split_once(':') {
        Some((family, rest)) => (family, Some(rest)),
        None => (spec, None),
    };
    let mut params = match family {
        "fig1" => GeneratorParams::fig1(),
        "fig2" => GeneratorParams::fig2(),
        "fig4" => GeneratorParams::fig4(),
        "manyecs" => GeneratorParams::manyecs(1),
        "random" => GeneratorParams::random(0),
        _ => {
            return Err(usage(format!(
                "'{spec}' is neither a model file nor a family spec \
                 (families: fig1, fig2, fig4, manyecs, random)"
            )))
        }
    };

    if let Some(rest) = rest {
        for pair in rest.split(',') {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| usage(format!("'{pair}' in '{spec}' is not key=value")))?;
            let bad_key = || usage(format!("'{key}' does not apply to family '{family}'"));
            let parse_count = |what: &str| {
                value
                    .parse::<usize>()
                    .map_err(|_| usage(format!("'{value}' is not a valid {what}")))
            };
            match (family, key) {
                ("manyecs", "n") => params.n = parse_count("gadget count")?,
                ("random", "states") => params.states = parse_count("state count")?,
                ("random", "max-actions" | "max_actions") => {
                    params.max_actions = parse_count("action bound")?
                }
                ("random", "max-branching" | "max_branching") => {
                    params.max_branching = parse_count("branching bound")?
                }
                ("random", "resolution") => {
                    params.resolution = value
                        .parse()
                        .map_err(|_| usage(format!("'{value}' is not a valid resolution")))?
                }
                ("random", "seed") => {
                    params.seed = value
                        .parse()
                        .map_err(|_| usage(format!("'{value}' is not a valid seed")))?
                }
                _ => return Err(bad_key()),
            }
        }
    }

    Ok(BenchInput {
        name: family.to_string(),
        n: (family == "manyecs").then_some(params.n),
        game: generate(&params)?,
    })
}

fn collect_inputs(specs: &[String]) -> Result<Vec<BenchInput>, CliError> {
    let mut inputs = Vec::new();
    for spec in specs {
        let path = Path::new(spec);
        if path.is_dir() {
            let entries = fs::read_dir(path).map_err(|source| CliError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            let mut files: Vec<PathBuf> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|ext| ext == "sg"))
                .collect();
            files.sort();
            for file in files {
                inputs.push(file_input(&file)?);
            }
        } else if path.is_file() {
            inputs.push(file_input(path)?);
        } else {
            inputs.push(inline_input(spec)?);
        }
    }
    Ok(inputs)
}

const CSV_HEADER: [&str; 12] = [
    "model",
    "N",
    "states",
    "transitions",
    "mecs",
    "algorithm",
    "iterations",
    "solves",
    "value_lower",
    "value_upper",
    "time_seconds",
    "stopped_by",
];

fn cmd_bench(args: BenchArgs) -> Result<i32, CliError> {
    let settings = Settings::resolve(
        args.epsilon,
        args.delta,
        args.wp_period,
        args.max_iterations,
        args.time_budget,
        false,
    )?;
    let inputs = collect_inputs(&args.models)?;

    let sink: Box<dyn Write> = match &args.csv {
        Some(path) => Box::new(fs::File::create(path).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?),
        None => Box::new(io::stdout()),
    };
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(CSV_HEADER)?;

    // Rows come out in input order: models as listed, algorithms as listed.
    for input in &inputs {
        for &algorithm in &args.algorithms {
            let outcome = run_algorithm(&input.game, algorithm, &settings);
            let opt = |v: Option<String>| v.unwrap_or_default();
            writer.write_record([
                input.name.clone(),
                opt(input.n.map(|n| n.to_string())),
                input.game.num_states().to_string(),
                input.game.num_transitions().to_string(),
                opt(outcome.mec_count.map(|m| m.to_string())),
                algorithm.name().to_string(),
                outcome.iterations.to_string(),
                outcome.solves.to_string(),
                outcome.value_lower.to_string(),
                opt(outcome.value_upper.map(|v| v.to_string())),
                format!("{:.6}", outcome.wall_time),
                outcome.stopped_by.to_string(),
            ])?;
        }
    }
    writer.flush().map_err(|source| CliError::Io {
        path: args.csv.unwrap_or_else(|| PathBuf::from("<stdout>")),
        source,
    })?;
    Ok(0)
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            e.print().expect("help output is writable");
            process::exit(code);
        }
    };
    let result = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Generate(args) => cmd_generate(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(code) => process::exit(code),
        Err(err) => {
            eprintln!("error: {err}");
            process::exit(1);
        }
    }
}
