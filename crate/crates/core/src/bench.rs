//! Benchmark harness: run matrix, Moré–Wild convergence test, performance
//! ratios and profiles, and their CSV/SVG renderings.
//!
//! A problem counts as solved by a run once the best value seen so far
//! satisfies `f0 - f >= (1 - tau) (f0 - f_L)`, where `f_L` is the best value
//! any strategy reached on that problem. `t[p][s]` is the evaluation count at
//! which that first happens, and the performance ratio is `t[p][s]` over the
//! best count on `p`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::linesearch::StrategyParams;
use crate::problem::ProblemSpec;
use crate::solver::{solve, SolverConfig, StopReason, Trace};
use crate::{Error, Result};

/// Accuracy levels used when none are given.
pub const DEFAULT_TAUS: [f64; 3] = [1e-1, 1e-3, 1e-5];

pub const RESULTS_HEADER: &str = "problem,strategy,n,fe,iters,stop,f0,f_final";
pub const HISTORY_HEADER: &str = "problem,strategy,fe,f_best";
pub const PROFILE_HEADER: &str = "strategy,tau,alpha,rho";

/// Outcome of one (problem, strategy) run, reduced to what the profiles need.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub problem: String,
    pub strategy: String,
    pub n: usize,
    pub fe: u64,
    pub iters: u64,
    /// `None` when the run failed before starting.
    pub stop: Option<StopReason>,
    pub f0: f64,
    pub f_final: f64,
    /// Best-so-far value after evaluation `fe`, kept only where it improves.
    pub history: Vec<(u64, f64)>,
    pub trace: Option<Trace>,
}

impl RunRecord {
    /// Smallest value the run ever evaluated.
    pub fn f_best(&self) -> f64 {
        self.history.last().map_or(f64::INFINITY, |&(_, f)| f)
    }

    fn failed(problem: &ProblemSpec, strategy: &str) -> Self {
        Self {
            problem: problem.name.clone(),
            strategy: strategy.to_string(),
            n: problem.dim(),
            fe: 0,
            iters: 0,
            stop: None,
            f0: f64::NAN,
            f_final: f64::NAN,
            history: Vec::new(),
            trace: None,
        }
    }
}

fn compress(best_so_far: &[(u64, f64)]) -> Vec<(u64, f64)> {
    let mut out: Vec<(u64, f64)> = Vec::new();
    for &(fe, f) in best_so_far {
        if out.last().is_none_or(|&(_, prev)| f < prev) {
            out.push((fe, f));
        }
    }
    out
}

/// Runs one strategy on one problem. Solver errors become an unsolved record.
pub fn run_one(problem: &ProblemSpec, strategy: &StrategyParams, config: &SolverConfig, keep_trace: bool) -> RunRecord {
    let label = strategy.kind.token();
    let config = config.clone().with_strategy(*strategy);
    match solve(problem, &config) {
        Ok(r) => RunRecord {
            problem: problem.name.clone(),
            strategy: label.to_string(),
            n: problem.dim(),
            fe: r.fe,
            iters: r.iterations,
            stop: Some(r.stop_reason),
            f0: r.f0,
            f_final: r.f_final,
            history: compress(&r.trace.best_so_far()),
            trace: keep_trace.then_some(r.trace),
        },
        Err(_) => RunRecord::failed(problem, label),
    }
}

/// Moré–Wild test `f0 - f >= (1 - tau) (f0 - f_L)`, inclusive.
pub fn is_solved(f0: f64, f: f64, f_l: f64, tau: f64) -> bool {
    f0 - f >= (1.0 - tau) * (f0 - f_l)
}

/// First evaluation count at which the best-so-far value passes the test.
pub fn fe_to_solve(rec: &RunRecord, f_l: f64, tau: f64) -> Option<u64> {
    rec.history.iter().find(|&&(_, f)| is_solved(rec.f0, f, f_l, tau)).map(|&(fe, _)| fe)
}

/// `t[p][s]` for one accuracy level.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub tau: f64,
    pub problems: Vec<String>,
    pub solvers: Vec<String>,
    pub f_l: Vec<f64>,
    pub t: Vec<Vec<Option<u64>>>,
}

impl ResultTable {
    /// Builds the table from run records. Problems and solvers keep their
    /// first-seen order in `records`.
    pub fn from_records(records: &[RunRecord], tau: f64) -> Self {
        let mut problems: Vec<String> = Vec::new();
        let mut solvers: Vec<String> = Vec::new();
        for r in records {
            if !problems.contains(&r.problem) {
                problems.push(r.problem.clone());
            }
            if !solvers.contains(&r.strategy) {
                solvers.push(r.strategy.clone());
            }
        }
        let by_key: BTreeMap<(&str, &str), &RunRecord> =
            records.iter().map(|r| ((r.problem.as_str(), r.strategy.as_str()), r)).collect();
        let f_l: Vec<f64> = problems
            .iter()
            .map(|p| records.iter().filter(|r| &r.problem == p).map(RunRecord::f_best).fold(f64::INFINITY, f64::min))
            .collect();
        let t = problems
            .iter()
            .zip(&f_l)
            .map(|(p, &fl)| {
                solvers
                    .iter()
                    .map(|s| by_key.get(&(p.as_str(), s.as_str())).and_then(|r| fe_to_solve(r, fl, tau)))
                    .collect()
            })
            .collect();
        Self { tau, problems, solvers, f_l, t }
    }
}

/// Performance ratios over the problems solved by at least one solver.
#[derive(Debug, Clone, PartialEq)]
pub struct Ratios {
    pub tau: f64,
    pub solvers: Vec<String>,
    pub problems: Vec<String>,
    /// Problems no solver solved; excluded from the profile denominator.
    pub dropped: Vec<String>,
    /// `r[p][s]`, `+inf` when `s` did not solve `p`.
    pub r: Vec<Vec<f64>>,
}

pub fn perf_ratios(table: &ResultTable) -> Ratios {
    let mut out = Ratios {
        tau: table.tau,
        solvers: table.solvers.clone(),
        problems: Vec::new(),
        dropped: Vec::new(),
        r: Vec::new(),
    };
    for (p, row) in table.problems.iter().zip(&table.t) {
        let Some(best) = row.iter().flatten().min().copied() else {
            out.dropped.push(p.clone());
            continue;
        };
        out.problems.push(p.clone());
        out.r.push(row.iter().map(|t| t.map_or(f64::INFINITY, |t| t as f64 / best as f64)).collect());
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileCurve {
    pub solver: String,
    pub tau: f64,
    /// `(alpha, rho(alpha))`.
    pub points: Vec<(f64, f64)>,
}

/// `{2^(j/4) : j = 0..=40}`.
pub fn default_alphas() -> Vec<f64> {
    (0..=40).map(|j| 2f64.powf(j as f64 / 4.0)).collect()
}

/// Empirical distribution of the ratios, `rho_s(alpha) = |{p : r[p][s] <= alpha}| / |P|`.
pub fn profile(ratios: &Ratios, alphas: &[f64]) -> Vec<ProfileCurve> {
    let np = ratios.problems.len();
    ratios
        .solvers
        .iter()
        .enumerate()
        .map(|(s, name)| {
            let points = alphas
                .iter()
                .map(|&a| {
                    let hits = ratios.r.iter().filter(|row| row[s] <= a).count();
                    (a, if np == 0 { 0.0 } else { hits as f64 / np as f64 })
                })
                .collect();
            ProfileCurve { solver: name.clone(), tau: ratios.tau, points }
        })
        .collect()
}

/// Records of a full benchmark plus the per-accuracy tables.
#[derive(Debug, Clone)]
pub struct Matrix {
    pub records: Vec<RunRecord>,
    pub tables: Vec<ResultTable>,
}

/// Solves every (problem, strategy) pair and builds one table per `tau`.
///
/// `threads == 0` runs sequentially; otherwise at most `threads` runs execute
/// at once. Records are ordered problem-major regardless of completion order.
pub fn run_matrix(
    problems: &[ProblemSpec],
    strategies: &[StrategyParams],
    config: &SolverConfig,
    taus: &[f64],
    threads: usize,
    keep_traces: bool,
) -> Result<Matrix> {
    if problems.is_empty() || strategies.is_empty() {
        return Err(Error::InvalidConfig("benchmark needs at least one problem and one strategy".into()));
    }
    let jobs: Vec<(&ProblemSpec, &StrategyParams)> =
        problems.iter().flat_map(|p| strategies.iter().map(move |s| (p, s))).collect();
    let records: Vec<RunRecord> = if threads == 0 {
        jobs.iter().map(|(p, s)| run_one(p, s, config, keep_traces)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
        pool.install(|| jobs.par_iter().map(|(p, s)| run_one(p, s, config, keep_traces)).collect())
    };
    let tables = taus.iter().map(|&tau| ResultTable::from_records(&records, tau)).collect();
    Ok(Matrix { records, tables })
}

fn stop_token(stop: Option<StopReason>) -> String {
    stop.map_or_else(|| "ERROR".to_string(), |s| s.to_string())
}

pub fn results_csv(records: &[RunRecord]) -> String {
    let mut out = format!("{RESULTS_HEADER}\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.problem,
            r.strategy,
            r.n,
            r.fe,
            r.iters,
            stop_token(r.stop),
            r.f0,
            r.f_final
        );
    }
    out
}

pub fn history_csv(records: &[RunRecord]) -> String {
    let mut out = format!("{HISTORY_HEADER}\n");
    for r in records {
        for (fe, f) in &r.history {
            let _ = writeln!(out, "{},{},{},{}", r.problem, r.strategy, fe, f);
        }
    }
    out
}

pub fn profile_csv(curves: &[ProfileCurve]) -> String {
    let mut out = format!("{PROFILE_HEADER}\n");
    for c in curves {
        for (a, rho) in &c.points {
            let _ = writeln!(out, "{},{},{},{}", c.solver, c.tau, a, rho);
        }
    }
    out
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line, msg: msg.into() }
}

fn fields<'a>(path: &Path, line_no: usize, line: &'a str, n: usize) -> Result<Vec<&'a str>> {
    let f: Vec<&str> = line.split(',').collect();
    if f.len() != n {
        return Err(parse_err(path, line_no, format!("expected {n} fields, got {}", f.len())));
    }
    Ok(f)
}

fn num<T: std::str::FromStr>(path: &Path, line: usize, s: &str) -> Result<T> {
    s.parse().map_err(|_| parse_err(path, line, format!("bad number `{s}`")))
}

fn check_header(path: &Path, text: &str, header: &str) -> Result<()> {
    match text.lines().next() {
        Some(h) if h.trim_end() == header => Ok(()),
        _ => Err(parse_err(path, 1, format!("expected header `{header}`"))),
    }
}

/// Parses a results CSV and its history sidecar back into records (without traces).
pub fn parse_records(results: &str, history: &str, results_path: &Path, history_path: &Path) -> Result<Vec<RunRecord>> {
    check_header(results_path, results, RESULTS_HEADER)?;
    check_header(history_path, history, HISTORY_HEADER)?;
    let mut records = Vec::new();
    for (i, line) in results.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f = fields(results_path, i + 1, line, 8)?;
        let stop = if f[5] == "ERROR" {
            None
        } else {
            Some(f[5].parse().map_err(|_| parse_err(results_path, i + 1, format!("bad stop `{}`", f[5])))?)
        };
        records.push(RunRecord {
            problem: f[0].to_string(),
            strategy: f[1].to_string(),
            n: num(results_path, i + 1, f[2])?,
            fe: num(results_path, i + 1, f[3])?,
            iters: num(results_path, i + 1, f[4])?,
            stop,
            f0: num(results_path, i + 1, f[6])?,
            f_final: num(results_path, i + 1, f[7])?,
            history: Vec::new(),
            trace: None,
        });
    }
    for (i, line) in history.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f = fields(history_path, i + 1, line, 4)?;
        let rec = records
            .iter_mut()
            .find(|r| r.problem == f[0] && r.strategy == f[1])
            .ok_or_else(|| parse_err(history_path, i + 1, format!("no results row for {},{}", f[0], f[1])))?;
        rec.history.push((num(history_path, i + 1, f[2])?, num(history_path, i + 1, f[3])?));
    }
    Ok(records)
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Sidecar path holding the best-so-far histories for a results CSV.
pub fn history_path_for(results: &Path) -> std::path::PathBuf {
    let mut name = results.file_stem().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".history.csv");
    results.with_file_name(name)
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Step plot of `rho` against `log2(alpha)`, one panel per accuracy level.
pub fn profile_svg(curves: &[ProfileCurve]) -> String {
    let mut taus: Vec<f64> = Vec::new();
    for c in curves {
        if !taus.contains(&c.tau) {
            taus.push(c.tau);
        }
    }
    let (pw, ph, margin) = (360.0, 260.0, 50.0);
    let width = margin + taus.len().max(1) as f64 * (pw + margin);
    let height = ph + 2.0 * margin + 20.0 * 4.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">"#
    );
    let mut solvers: Vec<&str> = Vec::new();
    for c in curves {
        if !solvers.contains(&c.solver.as_str()) {
            solvers.push(&c.solver);
        }
    }
    for (panel, &tau) in taus.iter().enumerate() {
        let x0 = margin + panel as f64 * (pw + margin);
        let y0 = margin;
        let in_panel: Vec<&ProfileCurve> = curves.iter().filter(|c| c.tau == tau).collect();
        let max_log = in_panel.iter().flat_map(|c| c.points.iter().map(|(a, _)| a.log2())).fold(1.0f64, f64::max);
        let px = |a: f64| x0 + pw * a.log2() / max_log;
        let py = |rho: f64| y0 + ph * (1.0 - rho);
        let _ = writeln!(s, r#"<rect x="{x0}" y="{y0}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
        let _ =
            writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">tau = {tau:e}</text>"#, x0 + pw / 2.0, y0 - 10.0);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">alpha (log2)</text>"#,
            x0 + pw / 2.0,
            y0 + ph + 35.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" transform="rotate(-90 {} {})">rho</text>"#,
            x0 - 30.0,
            y0 + ph / 2.0,
            x0 - 30.0,
            y0 + ph / 2.0
        );
        for tick in 0..=4 {
            let v = tick as f64 / 4.0;
            let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{v}</text>"#, x0 - 4.0, py(v) + 4.0);
            let lx = max_log * v;
            let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{lx}</text>"#, x0 + pw * v, y0 + ph + 15.0);
        }
        for c in in_panel {
            let color = PALETTE[solvers.iter().position(|n| *n == c.solver).unwrap_or(0) % PALETTE.len()];
            let mut pts = String::new();
            let mut prev: Option<f64> = None;
            for &(a, rho) in &c.points {
                if let Some(pr) = prev {
                    let _ = write!(pts, "{:.3},{:.3} ", px(a), py(pr));
                }
                let _ = write!(pts, "{:.3},{:.3} ", px(a), py(rho));
                prev = Some(rho);
            }
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                pts.trim_end()
            );
        }
    }
    for (i, name) in solvers.iter().enumerate() {
        let y = margin + ph + 55.0 + 18.0 * i as f64;
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            s,
            r#"<line x1="{margin}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"/>"#,
            margin + 25.0
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}">{name}</text>"#, margin + 32.0, y + 4.0);
    }
    s.push_str("</svg>\n");
    s
}
