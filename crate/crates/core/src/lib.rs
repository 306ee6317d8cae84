//! Nonmonotone pattern search for bound-constrained, derivative-free
//! minimization.
//!
//! The crate is organized around the pieces of the method:
//!
//! * [`problem`] – box-constrained problems, projection, evaluation counting
//!   and a registry of the bound-constrained Hock–Schittkowski problems.
//! * [`linesearch`] – the forcing sequence η_k and the four acceptance rules
//!   (max-memory nonmonotone, C-line, λ-line, Armijo) built on one
//!   sufficient-decrease test.
//! * [`solver`] – the coordinate-direction pattern search engine with
//!   backtracking, an evaluation cache and a replayable trace.
//! * [`stationarity`] – the stationarity measure χ, cone generators and
//!   Moreau projections used to check first-order optimality.
//! * [`bench`] – the Moré–Wild convergence test, performance ratios and
//!   profiles, and the CSV/SVG writers.
//!
//! # Example
//!
//! ```
//! use nmps_core::{problem, solver::{solve, SolverConfig, StopReason}};
//!
//! let hs4 = problem::registry_get("hs4").unwrap();
//! let result = solve(&hs4, &SolverConfig::default()).unwrap();
//! assert_eq!(result.stop_reason, StopReason::Tol);
//! assert!((result.f_final - 8.0 / 3.0).abs() < 1e-3);
//! ```

pub mod audit;
pub mod bench;
mod error;
pub mod linesearch;
pub mod problem;
pub mod solver;
pub mod stationarity;

pub use error::{Error, Result};
pub use linesearch::{AcceptanceStrategy, EtaSchedule, StrategyKind, StrategyParams};
pub use problem::{Bounds, EvalCounter, ProblemSpec};
pub use solver::{RunResult, SolverConfig, StopReason, Trace};
