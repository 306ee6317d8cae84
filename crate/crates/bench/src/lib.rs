//! Fixtures shared by the criterion benchmarks.

use nmps_core::problem::{self, Bounds};
use nmps_core::{ProblemSpec, SolverConfig, StrategyKind, StrategyParams};

/// Registry problems timed individually: small, mid-size and the 10-D one.
pub const TIMED_PROBLEMS: [&str; 4] = ["hs4", "hs25", "hs45", "hs110"];

pub fn timed_problems() -> Vec<ProblemSpec> {
    TIMED_PROBLEMS.iter().map(|n| problem::registry_get(n).expect("registry problem")).collect()
}

pub fn config_for(kind: StrategyKind) -> SolverConfig {
    SolverConfig::default().with_strategy(StrategyParams::new(kind))
}

/// Deterministic stationarity instance in dimension `n` with a mix of active
/// and inactive bounds.
pub fn chi_instance(n: usize) -> (Vec<f64>, Vec<f64>, Bounds) {
    let bounds = Bounds::uniform(n, -1.0, 1.0).expect("valid box");
    let x = (0..n).map(|i| if i % 3 == 0 { 1.0 } else { 0.25 * (i % 4) as f64 - 0.5 }).collect();
    let g = (0..n).map(|i| ((i * 7 % 5) as f64 - 2.0) * 0.8).collect();
    (g, x, bounds)
}
