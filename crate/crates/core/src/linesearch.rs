//! Acceptance rules for trial points.
//!
//! Every rule accepts a trial value `f_trial` when
//!
//! ```text
//! f_trial <= f_ref + eta_k - delta^2
//! ```
//!
//! and differs only in how the reference value `f_ref` is built from the
//! history of accepted values:
//!
//! | token    | reference value                                              |
//! |----------|--------------------------------------------------------------|
//! | `nmps`   | max of the last `min(k, M-1) + 1` accepted values            |
//! | `cline`  | weighted running average `C_k` (with `Q_{k+1} = r Q_k + 1`)  |
//! | `lambda` | `max(f_k, sum_r lambda_r f_{k-r})` over `min(k, M-1)` values |
//! | `armijo` | the current value `f_k`                                      |

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// Memory length used by the `nmps` and `lambda` rules unless overridden.
pub const DEFAULT_MEMORY: usize = 15;
/// Base of the forcing sequence `eta_k = base^-k`.
pub const DEFAULT_ETA_BASE: f64 = 1.1;
/// Constant averaging weight of the C-line rule.
pub const DEFAULT_CLINE_R: f64 = 0.85;

/// The summable forcing sequence `eta_k = base^-k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaSchedule {
    base: f64,
}

impl Default for EtaSchedule {
    fn default() -> Self {
        Self { base: DEFAULT_ETA_BASE }
    }
}

impl EtaSchedule {
    pub fn new(base: f64) -> Result<Self> {
        if !(base > 1.0 && base.is_finite()) {
            return Err(Error::InvalidConfig(format!("eta base must be > 1, got {base}")));
        }
        Ok(Self { base })
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn eta_at(&self, k: u64) -> f64 {
        self.base.powf(-(k as f64))
    }

    /// `sum_{k>=0} eta_k = base / (base - 1)`.
    pub fn total(&self) -> f64 {
        self.base / (self.base - 1.0)
    }
}

/// The sufficient-decrease test shared by all rules. Inclusive; non-finite
/// trial values are always rejected.
pub fn accept_trial(f_trial: f64, f_ref: f64, eta_k: f64, delta: f64) -> bool {
    f_trial.is_finite() && f_trial <= acceptance_threshold(f_ref, eta_k, delta)
}

/// `f_ref + eta_k - delta^2`, evaluated in that order.
pub fn acceptance_threshold(f_ref: f64, eta_k: f64, delta: f64) -> f64 {
    f_ref + eta_k - delta * delta
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrategyKind {
    MaxMemory,
    CLine,
    Lambda,
    Armijo,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] =
        [StrategyKind::MaxMemory, StrategyKind::CLine, StrategyKind::Lambda, StrategyKind::Armijo];

    pub fn token(&self) -> &'static str {
        match self {
            StrategyKind::MaxMemory => "nmps",
            StrategyKind::CLine => "cline",
            StrategyKind::Lambda => "lambda",
            StrategyKind::Armijo => "armijo",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nmps" => Ok(StrategyKind::MaxMemory),
            "cline" => Ok(StrategyKind::CLine),
            "lambda" => Ok(StrategyKind::Lambda),
            "armijo" => Ok(StrategyKind::Armijo),
            other => Err(Error::UnknownStrategy(other.to_string())),
        }
    }
}

/// How the λ-line rule weighs the `m(k)` most recent values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaRule {
    /// `lambda_r = 1 / m(k)`.
    Uniform,
    /// `lambda_r` proportional to `ratio^r` (most recent value weighs most).
    Geometric(f64),
}

impl LambdaRule {
    fn weights(&self, m: usize) -> Vec<f64> {
        match *self {
            LambdaRule::Uniform => vec![1.0 / m as f64; m],
            LambdaRule::Geometric(ratio) => {
                let raw: Vec<f64> = (0..m).map(|r| ratio.powi(r as i32)).collect();
                let total: f64 = raw.iter().sum();
                raw.into_iter().map(|w| w / total).collect()
            }
        }
    }
}

impl fmt::Display for LambdaRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaRule::Uniform => f.write_str("uniform"),
            LambdaRule::Geometric(r) => write!(f, "geometric:{r}"),
        }
    }
}

impl FromStr for LambdaRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "uniform" {
            return Ok(LambdaRule::Uniform);
        }
        if let Some(r) = s.strip_prefix("geometric:") {
            let ratio: f64 = r.parse().map_err(|_| Error::InvalidConfig(format!("bad geometric ratio `{r}`")))?;
            if ratio > 0.0 && ratio.is_finite() {
                return Ok(LambdaRule::Geometric(ratio));
            }
        }
        Err(Error::InvalidConfig(format!("unknown lambda rule `{s}` (uniform | geometric:<ratio>)")))
    }
}

/// Parameters selecting and tuning an acceptance rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyParams {
    pub kind: StrategyKind,
    /// Memory length `M` for `nmps` and `lambda`.
    pub memory: usize,
    /// Averaging weight `r` in `[0, 1]` for `cline`.
    pub r: f64,
    pub lambda_rule: LambdaRule,
}

impl Default for StrategyParams {
    fn default() -> Self {
        Self::new(StrategyKind::MaxMemory)
    }
}

impl StrategyParams {
    pub fn new(kind: StrategyKind) -> Self {
        Self { kind, memory: DEFAULT_MEMORY, r: DEFAULT_CLINE_R, lambda_rule: LambdaRule::Uniform }
    }

    pub fn with_memory(mut self, memory: usize) -> Self {
        self.memory = memory;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.memory == 0 {
            return Err(Error::InvalidConfig("memory M must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.r) {
            return Err(Error::InvalidConfig(format!("cline r must lie in [0, 1], got {}", self.r)));
        }
        Ok(())
    }
}

/// An acceptance rule together with its memory of accepted values.
#[derive(Debug, Clone, PartialEq)]
pub enum AcceptanceStrategy {
    MaxMemory { memory: usize, history: VecDeque<f64> },
    CLine { q: f64, c: f64, r: f64 },
    Lambda { memory: usize, history: VecDeque<f64>, rule: LambdaRule },
    Armijo { last: f64 },
}

impl AcceptanceStrategy {
    /// State after observing the start value `f0` (iteration `k = 0`).
    pub fn init(params: &StrategyParams, f0: f64) -> Self {
        let seeded = |m: usize| {
            let mut h = VecDeque::with_capacity(m);
            h.push_back(f0);
            h
        };
        match params.kind {
            StrategyKind::MaxMemory => {
                AcceptanceStrategy::MaxMemory { memory: params.memory, history: seeded(params.memory) }
            }
            StrategyKind::CLine => AcceptanceStrategy::CLine { q: 1.0, c: f0, r: params.r },
            StrategyKind::Lambda => AcceptanceStrategy::Lambda {
                memory: params.memory,
                history: seeded(params.memory),
                rule: params.lambda_rule,
            },
            StrategyKind::Armijo => AcceptanceStrategy::Armijo { last: f0 },
        }
    }

    pub fn kind(&self) -> StrategyKind {
        match self {
            AcceptanceStrategy::MaxMemory { .. } => StrategyKind::MaxMemory,
            AcceptanceStrategy::CLine { .. } => StrategyKind::CLine,
            AcceptanceStrategy::Lambda { .. } => StrategyKind::Lambda,
            AcceptanceStrategy::Armijo { .. } => StrategyKind::Armijo,
        }
    }

    /// Reference value at iteration `k`, given the current value `f_current`.
    pub fn reference_value(&self, f_current: f64, k: u64) -> f64 {
        match self {
            AcceptanceStrategy::MaxMemory { history, .. } => history.iter().copied().fold(f_current, f64::max),
            AcceptanceStrategy::CLine { c, .. } => *c,
            AcceptanceStrategy::Lambda { memory, history, rule } => {
                // m(k) = min(k, M - 1); the history never holds more than M values.
                let m = (k.min(*memory as u64 - 1) as usize).min(history.len());
                if m == 0 {
                    return f_current;
                }
                let avg: f64 = rule.weights(m).iter().zip(history.iter().rev()).map(|(w, f)| w * f).sum();
                f_current.max(avg)
            }
            AcceptanceStrategy::Armijo { .. } => f_current,
        }
    }

    /// Records the newly accepted value `f_new`, produced at iteration `k`
    /// with forcing term `eta_k`.
    pub fn observe_accept(&mut self, f_new: f64, eta_k: f64, _k: u64) {
        match self {
            AcceptanceStrategy::MaxMemory { memory, history } | AcceptanceStrategy::Lambda { memory, history, .. } => {
                if history.len() == *memory {
                    history.pop_front();
                }
                history.push_back(f_new);
            }
            AcceptanceStrategy::CLine { q, c, r } => {
                let q_old = *q;
                let q_new = *r * q_old + 1.0;
                *c = (*r * q_old * (*c + eta_k) + f_new) / q_new;
                *q = q_new;
            }
            AcceptanceStrategy::Armijo { last } => *last = f_new,
        }
    }
}
