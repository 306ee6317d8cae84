//! Runs every registry problem with each strategy and prints a summary row.

use nmps_core::linesearch::{StrategyKind, StrategyParams};
use nmps_core::problem;
use nmps_core::solver::{solve, SolverConfig};

fn main() {
    println!("problem,strategy,fe,iters,stop,f0,f_final");
    for p in problem::registry() {
        for kind in StrategyKind::ALL {
            let config = SolverConfig::default().with_strategy(StrategyParams::new(kind));
            let r = solve(&p, &config).expect("solve");
            println!("{},{},{},{},{},{},{}", p.name, kind, r.fe, r.iterations, r.stop_reason, r.f0, r.f_final);
        }
    }
}
