//! The coordinate pattern search engine.
//!
//! Each outer iteration `k` polls every feasible point `x_k ± delta e_i`,
//! keeps the candidates passing the acceptance test and moves to the one with
//! the smallest objective value (lowest direction index on ties). If none
//! passes, the step is halved and the poll repeated, holding `f_ref` and
//! `eta_k` fixed, until a point is accepted or the step falls below
//! `delta_tol`. After a success the next step is `min(1, 2 delta)`.

mod cache;
mod trace;

use std::fmt;

pub use cache::{EvalCache, DEFAULT_CACHE_CAPACITY};
pub use trace::{AcceptedStep, Trace, TraceEvent};

use crate::linesearch::{accept_trial, AcceptanceStrategy, EtaSchedule, StrategyParams};
use crate::problem::{evaluate, EvalCounter, ProblemSpec};
use crate::{Bounds, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub delta0: f64,
    pub delta_tol: f64,
    pub max_fe: u64,
    /// Cap on outer iterations (accepted steps).
    pub max_it: u64,
    pub eta: EtaSchedule,
    pub strategy: StrategyParams,
    /// Zero disables the cache.
    pub cache_capacity: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            delta0: 1.0,
            delta_tol: 1e-6,
            max_fe: 2500,
            max_it: 5000,
            eta: EtaSchedule::default(),
            strategy: StrategyParams::default(),
            cache_capacity: DEFAULT_CACHE_CAPACITY,
        }
    }
}

impl SolverConfig {
    pub fn with_strategy(mut self, strategy: StrategyParams) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta0 > 0.0 && self.delta0.is_finite()) {
            return Err(Error::InvalidConfig(format!("delta0 must be positive, got {}", self.delta0)));
        }
        if !(self.delta_tol > 0.0 && self.delta_tol < self.delta0) {
            return Err(Error::InvalidConfig(format!("delta_tol must lie in (0, delta0), got {}", self.delta_tol)));
        }
        if self.max_fe == 0 || self.max_it == 0 {
            return Err(Error::InvalidConfig("max_fe and max_it must be positive".into()));
        }
        self.strategy.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StopReason {
    Tol,
    MaxFe,
    MaxIt,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::Tol => "TOL",
            StopReason::MaxFe => "MaxFE",
            StopReason::MaxIt => "MaxIt",
        })
    }
}

impl std::str::FromStr for StopReason {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "TOL" => Ok(StopReason::Tol),
            "MaxFE" => Ok(StopReason::MaxFe),
            "MaxIt" => Ok(StopReason::MaxIt),
            other => Err(Error::InvalidConfig(format!("unknown stop reason `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub x_final: Vec<f64>,
    pub f_final: f64,
    pub f0: f64,
    /// Smallest value seen over all evaluations, accepted or not.
    pub f_best: f64,
    pub stop_reason: StopReason,
    pub fe: u64,
    pub iterations: u64,
    /// Step length after the last update (below `delta_tol` on a TOL stop).
    pub delta_final: f64,
    pub trace: Trace,
}

/// Direction `dir` is `+e_{dir/2}` for even `dir` and `-e_{dir/2}` for odd.
pub fn direction(dir: usize) -> (usize, f64) {
    (dir / 2, if dir.is_multiple_of(2) { 1.0 } else { -1.0 })
}

/// The feasible points `x + delta d`, `d` in `{+e_1, -e_1, +e_2, ...}`, in that order.
pub fn poll_candidates(x: &[f64], delta: f64, bounds: &Bounds) -> Vec<(usize, Vec<f64>)> {
    (0..2 * x.len())
        .filter_map(|dir| {
            let (i, sign) = direction(dir);
            let v = x[i] + sign * delta;
            bounds.contains_coord(i, v).then(|| {
                let mut p = x.to_vec();
                p[i] = v;
                (dir, p)
            })
        })
        .collect()
}

/// `min(1, 2 delta)`.
pub fn next_delta(delta_used: f64) -> f64 {
    (2.0 * delta_used).min(1.0)
}

/// Outcome of one call to [`RunState::advance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    Accepted,
    TolStop,
    FeStop,
}

/// The evaluation budget ran out in the middle of a poll.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BudgetExhausted;

/// A candidate chosen by a poll.
#[derive(Debug, Clone, PartialEq)]
pub struct PollChoice {
    pub dir: usize,
    pub point: Vec<f64>,
    pub f: f64,
}

/// Mutable state of a single run.
#[derive(Debug, Clone)]
pub struct RunState {
    pub x: Vec<f64>,
    pub f: f64,
    pub delta: f64,
    pub k: u64,
    pub strategy: AcceptanceStrategy,
    pub counter: EvalCounter,
    pub cache: EvalCache,
    pub trace: Trace,
    f0: f64,
    f_best: f64,
    max_fe: u64,
    delta_tol: f64,
    eta: EtaSchedule,
}

impl RunState {
    /// Projects the start point, evaluates it and seeds the strategy.
    pub fn new(problem: &ProblemSpec, config: &SolverConfig) -> Result<Self> {
        config.validate()?;
        let x = problem.projected_start();
        let mut counter = EvalCounter::new();
        let f = evaluate(problem, &x, &mut counter);
        if !f.is_finite() {
            return Err(Error::NonFiniteStart(problem.name.clone()));
        }
        let mut cache = EvalCache::new(config.cache_capacity);
        cache.insert(&x, f);
        let mut trace = Trace::default();
        trace.push(TraceEvent::Start { x: x.clone(), f });
        Ok(Self {
            strategy: AcceptanceStrategy::init(&config.strategy, f),
            x,
            f,
            delta: config.delta0,
            k: 0,
            counter,
            cache,
            trace,
            f0: f,
            f_best: f,
            max_fe: config.max_fe,
            delta_tol: config.delta_tol,
            eta: config.eta,
        })
    }

    fn value_at(&mut self, problem: &ProblemSpec, p: &[f64]) -> std::result::Result<(f64, bool), BudgetExhausted> {
        if let Some(f) = self.cache.lookup(p) {
            return Ok((f, true));
        }
        if self.counter.count() >= self.max_fe {
            return Err(BudgetExhausted);
        }
        let f = evaluate(problem, p, &mut self.counter);
        self.cache.insert(p, f);
        self.f_best = self.f_best.min(f);
        Ok((f, false))
    }

    /// Evaluates every feasible poll point at the current step and returns
    /// the passing candidate with the smallest value.
    pub fn try_poll(
        &mut self,
        problem: &ProblemSpec,
        f_ref: f64,
        eta_k: f64,
    ) -> std::result::Result<Option<PollChoice>, BudgetExhausted> {
        let delta = self.delta;
        let mut best: Option<PollChoice> = None;
        for (dir, point) in poll_candidates(&self.x, delta, &problem.bounds) {
            let (f, cached) = self.value_at(problem, &point)?;
            let passed = accept_trial(f, f_ref, eta_k, delta);
            self.trace.push(TraceEvent::Eval {
                k: self.k,
                point: point.clone(),
                f,
                delta,
                dir,
                f_ref,
                eta: eta_k,
                passed,
                cached,
                non_finite: !cached && f == f64::INFINITY,
            });
            if passed && best.as_ref().is_none_or(|b| f < b.f) {
                best = Some(PollChoice { dir, point, f });
            }
        }
        Ok(best)
    }

    /// Runs one outer iteration: poll, halving on failure, until a point is
    /// accepted, the step drops below `delta_tol`, or the budget is spent.
    pub fn advance(&mut self, problem: &ProblemSpec) -> Event {
        let f_ref = self.strategy.reference_value(self.f, self.k);
        let eta_k = self.eta.eta_at(self.k);
        loop {
            match self.try_poll(problem, f_ref, eta_k) {
                Err(BudgetExhausted) => return Event::FeStop,
                Ok(Some(choice)) => {
                    self.trace.push(TraceEvent::Accept {
                        k: self.k,
                        x: choice.point.clone(),
                        f: choice.f,
                        delta: self.delta,
                        dir: choice.dir,
                        f_ref,
                        eta: eta_k,
                    });
                    self.strategy.observe_accept(choice.f, eta_k, self.k);
                    self.x = choice.point;
                    self.f = choice.f;
                    self.delta = next_delta(self.delta);
                    self.k += 1;
                    return Event::Accepted;
                }
                Ok(None) => {
                    let from = self.delta;
                    self.delta = from / 2.0;
                    self.trace.push(TraceEvent::Halve { k: self.k, from, to: self.delta });
                    if self.delta < self.delta_tol {
                        return Event::TolStop;
                    }
                }
            }
        }
    }

    fn finish(self, stop_reason: StopReason) -> RunResult {
        RunResult {
            x_final: self.x,
            f_final: self.f,
            f0: self.f0,
            f_best: self.f_best,
            stop_reason,
            fe: self.counter.count(),
            iterations: self.k,
            delta_final: self.delta,
            trace: self.trace,
        }
    }
}

/// Minimizes `problem` from its projected start point.
pub fn solve(problem: &ProblemSpec, config: &SolverConfig) -> Result<RunResult> {
    let mut state = RunState::new(problem, config)?;
    let stop = loop {
        if state.k >= config.max_it {
            break StopReason::MaxIt;
        }
        match state.advance(problem) {
            Event::Accepted => {}
            Event::TolStop => break StopReason::Tol,
            Event::FeStop => break StopReason::MaxFe,
        }
    };
    Ok(state.finish(stop))
}
