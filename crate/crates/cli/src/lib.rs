//! Command-line front end: `solve`, `bench`, `profile`, `list` and `chi-report`.
//!
//! Solver parameters come from flags, then from an optional `key=value`
//! config file (`--config`), then from the built-in defaults.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nmps_core::bench::{self, DEFAULT_TAUS};
use nmps_core::linesearch::{LambdaRule, StrategyKind, StrategyParams};
use nmps_core::problem::{self, ProblemSpec};
use nmps_core::solver::{solve, SolverConfig};
use nmps_core::stationarity;
use nmps_core::{Error, EtaSchedule};

/// Exit code for bad flags, values or config files.
pub const EXIT_USAGE: i32 = 1;
/// Exit code for unknown problems or failed solves.
pub const EXIT_PROBLEM: i32 = 2;
/// Exit code for file errors.
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "nmps", version, about = "Nonmonotone pattern search for bound-constrained problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one registry problem and print the result row.
    Solve {
        #[arg(long)]
        problem: String,
        /// Acceptance rule: nmps, cline, lambda or armijo.
        #[arg(long, default_value = "nmps")]
        strategy: String,
        /// Write the per-evaluation trace CSV here.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Run a problem x strategy matrix and write results and histories.
    Bench {
        /// Comma-separated problem names [default: all registry problems].
        #[arg(long, value_delimiter = ',')]
        problems: Vec<String>,
        /// Comma-separated strategies [default: nmps,cline,lambda,armijo].
        #[arg(long, value_delimiter = ',')]
        strategies: Vec<String>,
        /// Results CSV; best-so-far histories go to `<stem>.history.csv` beside it.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Build performance profiles from a `bench` results CSV.
    Profile {
        /// Results CSV written by `bench` (its history sidecar must sit beside it).
        #[arg(long = "in")]
        input: PathBuf,
        /// Comma-separated accuracy levels [default: 1e-1,1e-3,1e-5].
        #[arg(long, value_delimiter = ',')]
        tau: Vec<f64>,
        /// Profile CSV output (`strategy,tau,alpha,rho`).
        #[arg(long)]
        csv: Option<PathBuf>,
        /// SVG plot output.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Print the problem registry.
    List,
    /// Solve a problem and report the stationarity measure at the final point.
    ChiReport {
        #[arg(long)]
        problem: String,
        #[arg(long, default_value = "nmps")]
        strategy: String,
        /// Lipschitz constant L of the gradient.
        #[arg(long)]
        lipschitz: f64,
        /// Bound gamma on the gradient norm.
        #[arg(long)]
        gamma: f64,
        #[command(flatten)]
        solver: SolverArgs,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct SolverArgs {
    /// Initial step length [default: 1.0]
    #[arg(long)]
    pub delta0: Option<f64>,
    /// Step tolerance Delta_tol [default: 1e-6]
    #[arg(long)]
    pub tol: Option<f64>,
    /// Evaluation budget MaxFE [default: 2500]
    #[arg(long)]
    pub max_fe: Option<u64>,
    /// Iteration cap MaxIt [default: 5000]
    #[arg(long)]
    pub max_it: Option<u64>,
    /// Memory length M for nmps and lambda [default: 15]
    #[arg(long = "memory")]
    pub memory: Option<usize>,
    /// Base of the forcing sequence eta_k = base^-k [default: 1.1]
    #[arg(long)]
    pub eta_base: Option<f64>,
    /// Averaging weight r of the cline rule [default: 0.85]
    #[arg(long)]
    pub r: Option<f64>,
    /// Weights of the lambda rule: uniform or geometric:<ratio> [default: uniform]
    #[arg(long)]
    pub lambda_rule: Option<String>,
    /// Evaluation cache capacity, 0 disables [default: 100000]
    #[arg(long)]
    pub cache_capacity: Option<usize>,
    /// File of `key=value` lines using the flag names above; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Error carrying the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::UnknownProblem { .. } | Error::NonFiniteStart(_) | Error::StencilOutsideBox(_) => EXIT_PROBLEM,
            Error::Io { .. } | Error::Parse { .. } => EXIT_IO,
            _ => EXIT_USAGE,
        };
        CliError { code, message: e.to_string() }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError { code: EXIT_USAGE, message: msg.into() }
}

/// Values from a `key=value` config file. Blank lines and `#` comments are skipped.
pub fn parse_config_file(text: &str, path: &Path) -> Result<HashMap<String, String>, CliError> {
    const KEYS: [&str; 9] =
        ["delta0", "tol", "max-fe", "max-it", "memory", "eta-base", "r", "lambda-rule", "cache-capacity"];
    let mut out = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) =
            line.split_once('=').ok_or_else(|| usage(format!("{}:{}: expected key=value", path.display(), i + 1)))?;
        let key = k.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(usage(format!("{}:{}: unknown key `{}`", path.display(), i + 1, k.trim())));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

fn pick<T: std::str::FromStr>(
    flag: Option<T>,
    file: &HashMap<String, String>,
    key: &str,
    default: T,
) -> Result<T, CliError> {
    if let Some(v) = flag {
        return Ok(v);
    }
    match file.get(key) {
        Some(s) => s.parse().map_err(|_| usage(format!("invalid value `{s}` for `{key}` in config file"))),
        None => Ok(default),
    }
}

impl SolverArgs {
    /// Resolves flags, config file and defaults into a solver configuration
    /// for the given strategy.
    pub fn resolve(&self, kind: StrategyKind) -> Result<SolverConfig, CliError> {
        let file = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError {
                    code: EXIT_IO,
                    message: format!("cannot read config {}: {e}", path.display()),
                })?;
                parse_config_file(&text, path)?
            }
            None => HashMap::new(),
        };
        let defaults = SolverConfig::default();
        let base = StrategyParams::new(kind);
        let lambda_rule: String = pick(self.lambda_rule.clone(), &file, "lambda-rule", base.lambda_rule.to_string())?;
        let strategy = StrategyParams {
            kind,
            memory: pick(self.memory, &file, "memory", base.memory)?,
            r: pick(self.r, &file, "r", base.r)?,
            lambda_rule: lambda_rule.parse::<LambdaRule>().map_err(|e| usage(format!("--lambda-rule: {e}")))?,
        };
        let eta_base = pick(self.eta_base, &file, "eta-base", defaults.eta.base())?;
        let config = SolverConfig {
            delta0: pick(self.delta0, &file, "delta0", defaults.delta0)?,
            delta_tol: pick(self.tol, &file, "tol", defaults.delta_tol)?,
            max_fe: pick(self.max_fe, &file, "max-fe", defaults.max_fe)?,
            max_it: pick(self.max_it, &file, "max-it", defaults.max_it)?,
            eta: EtaSchedule::new(eta_base).map_err(|e| usage(format!("--eta-base: {e}")))?,
            strategy,
            cache_capacity: pick(self.cache_capacity, &file, "cache-capacity", defaults.cache_capacity)?,
        };
        config.validate()?;
        Ok(config)
    }
}

fn strategy_kind(token: &str) -> Result<StrategyKind, CliError> {
    token.parse().map_err(|e: Error| usage(format!("--strategy: {e}")))
}

/// Bench parallelism from `NMPS_THREADS` (0 = sequential); all cores when unset.
pub fn thread_count() -> Result<usize, CliError> {
    match std::env::var("NMPS_THREADS") {
        Ok(v) => v.trim().parse().map_err(|_| usage(format!("NMPS_THREADS: invalid value `{v}`"))),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn write_out(path: &Path, text: &str) -> Result<(), CliError> {
    bench::write_file(path, text).map_err(CliError::from)
}

/// Runs a parsed command, writing human-readable output to `out`.
pub fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError { code: EXIT_IO, message: format!("stdout: {e}") };
    match cmd {
        Command::List => {
            out.write_all(problem::registry_listing().as_bytes()).map_err(io)?;
        }
        Command::Solve { problem, strategy, trace, solver } => {
            let kind = strategy_kind(&strategy)?;
            let config = solver.resolve(kind)?;
            let p = problem::registry_get(&problem)?;
            let record = bench::run_one(&p, &config.strategy, &config, trace.is_some());
            if record.stop.is_none() {
                // Surface the solver error itself.
                solve(&p, &config)?;
            }
            if let (Some(path), Some(t)) = (&trace, &record.trace) {
                t.write_csv(path)?;
            }
            out.write_all(bench::results_csv(std::slice::from_ref(&record)).as_bytes()).map_err(io)?;
        }
        Command::Bench { problems, strategies, out: path, solver } => {
            let names: Vec<String> =
                if problems.is_empty() { problem::REGISTRY.iter().map(|s| s.to_string()).collect() } else { problems };
            let kinds: Vec<StrategyKind> = if strategies.is_empty() {
                StrategyKind::ALL.to_vec()
            } else {
                strategies.iter().map(|s| strategy_kind(s)).collect::<Result<_, _>>()?
            };
            let specs: Vec<ProblemSpec> = names.iter().map(|n| problem::registry_get(n)).collect::<Result<_, _>>()?;
            let configs: Vec<SolverConfig> = kinds.iter().map(|&k| solver.resolve(k)).collect::<Result<_, _>>()?;
            let params: Vec<StrategyParams> = configs.iter().map(|c| c.strategy).collect();
            let matrix = bench::run_matrix(&specs, &params, &configs[0], &[], thread_count()?, false)?;
            write_out(&path, &bench::results_csv(&matrix.records))?;
            write_out(&bench::history_path_for(&path), &bench::history_csv(&matrix.records))?;
            writeln!(out, "wrote {} runs to {}", matrix.records.len(), path.display()).map_err(io)?;
        }
        Command::Profile { input, tau, csv, svg } => {
            let taus = if tau.is_empty() { DEFAULT_TAUS.to_vec() } else { tau };
            if let Some(bad) = taus.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
                return Err(usage(format!("--tau: values must lie in (0, 1], got {bad}")));
            }
            let history_path = bench::history_path_for(&input);
            let records = bench::parse_records(
                &bench::read_file(&input)?,
                &bench::read_file(&history_path)?,
                &input,
                &history_path,
            )?;
            let curves = profile_curves(&records, &taus, out)?;
            if let Some(path) = csv {
                write_out(&path, &bench::profile_csv(&curves))?;
            }
            if let Some(path) = svg {
                write_out(&path, &bench::profile_svg(&curves))?;
            }
        }
        Command::ChiReport { problem, strategy, lipschitz, gamma, solver } => {
            if !(lipschitz > 0.0 && gamma > 0.0) {
                return Err(usage("--lipschitz and --gamma must be positive"));
            }
            let config = solver.resolve(strategy_kind(&strategy)?)?;
            let p = problem::registry_get(&problem)?;
            let r = solve(&p, &config)?;
            let delta = nmps_core::audit::last_polled_delta(&r.trace).unwrap_or(config.delta0);
            let row = stationarity::chi_report_row(&p, &r.x_final, delta, lipschitz, gamma)?;
            writeln!(out, "{}\n{row}", stationarity::CHI_REPORT_HEADER).map_err(io)?;
        }
    }
    Ok(())
}

/// Profiles for each accuracy level, reporting problems no strategy solved.
pub fn profile_curves(
    records: &[bench::RunRecord],
    taus: &[f64],
    out: &mut dyn Write,
) -> Result<Vec<bench::ProfileCurve>, CliError> {
    let alphas = bench::default_alphas();
    let mut curves = Vec::new();
    for &tau in taus {
        let ratios = bench::perf_ratios(&bench::ResultTable::from_records(records, tau));
        if !ratios.dropped.is_empty() {
            writeln!(out, "tau={tau:e}: unsolved by every strategy: {}", ratios.dropped.join(","))
                .map_err(|e| CliError { code: EXIT_IO, message: e.to_string() })?;
        }
        curves.extend(bench::profile(&ratios, &alphas));
    }
    Ok(curves)
}

/// Parses `argv` (including the program name) and runs it. Returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let clean = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let text = e.render().to_string();
            if clean {
                let _ = out.write_all(text.as_bytes());
                return 0;
            }
            let _ = err.write_all(text.as_bytes());
            return EXIT_USAGE;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.code
        }
    }
}
