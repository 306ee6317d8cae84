//! Box-constrained problems, feasibility utilities and the test-problem registry.

use std::fmt;
use std::sync::Arc;

use crate::{Error, Result};

/// The feasible box `{x : lower <= x <= upper}`.
///
/// Missing bounds are stored as `f64::NEG_INFINITY` / `f64::INFINITY`; clamping
/// and feasibility checks are no-ops on an infinite side.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), got: upper.len() });
        }
        if lower.is_empty() {
            return Err(Error::InvalidConfig("bounds must have positive dimension".into()));
        }
        for (index, (&l, &u)) in lower.iter().zip(&upper).enumerate() {
            if l.is_nan() || u.is_nan() || l == f64::INFINITY || u == f64::NEG_INFINITY || l >= u {
                return Err(Error::InvalidBounds { index, lower: l, upper: u });
            }
        }
        Ok(Self { lower, upper })
    }

    /// `[lo, hi]^dim`.
    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn unbounded(dim: usize) -> Result<Self> {
        Self::uniform(dim, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Number of finite bounds, i.e. the number of bound constraints.
    pub fn n_constraints(&self) -> usize {
        self.lower.iter().filter(|l| l.is_finite()).count() + self.upper.iter().filter(|u| u.is_finite()).count()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }

    /// Unchecked membership test; callers guarantee `x.len() == dim`.
    pub(crate) fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(&xi, (&l, &u))| l <= xi && xi <= u)
    }

    pub(crate) fn contains_coord(&self, i: usize, value: f64) -> bool {
        self.lower[i] <= value && value <= self.upper[i]
    }
}

/// Inclusive membership test `lower <= x <= upper`.
pub fn is_feasible(x: &[f64], bounds: &Bounds) -> Result<bool> {
    bounds.check_dim(x)?;
    Ok(bounds.contains(x))
}

/// Componentwise clamp onto the box.
pub fn project(x: &[f64], bounds: &Bounds) -> Result<Vec<f64>> {
    bounds.check_dim(x)?;
    Ok(x.iter().zip(bounds.lower.iter().zip(&bounds.upper)).map(|(&xi, (&l, &u))| xi.max(l).min(u)).collect())
}

/// Counts true objective evaluations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalCounter {
    count: u64,
}

impl EvalCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    fn bump(&mut self) {
        self.count += 1;
    }
}

pub type Objective = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A box-constrained minimization problem.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub bounds: Bounds,
    objective: Objective,
    /// Starting point as published; it is projected onto the box before use.
    pub start: Vec<f64>,
    pub best_known: Option<f64>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("bounds", &self.bounds)
            .field("start", &self.start)
            .field("best_known", &self.best_known)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    pub fn new<F>(name: impl Into<String>, bounds: Bounds, start: Vec<f64>, objective: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        bounds.check_dim(&start)?;
        Ok(Self { name: name.into(), bounds, objective: Arc::new(objective), start, best_known: None })
    }

    pub fn with_best_known(mut self, f: f64) -> Self {
        self.best_known = Some(f);
        self
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    /// The start point projected onto the box.
    pub fn projected_start(&self) -> Vec<f64> {
        project(&self.start, &self.bounds).expect("start dimension checked at construction")
    }

    /// Raw objective value, without counting.
    pub fn value(&self, x: &[f64]) -> f64 {
        (self.objective)(x)
    }
}

/// Evaluates the objective and counts the call.
///
/// Non-finite objective values are reported as `+inf`, which every acceptance
/// rule rejects.
pub fn evaluate(problem: &ProblemSpec, x: &[f64], counter: &mut EvalCounter) -> f64 {
    counter.bump();
    let f = problem.value(x);
    if f.is_finite() {
        f
    } else {
        f64::INFINITY
    }
}

const INF: f64 = f64::INFINITY;

/// Names of the registry problems, in table order.
pub const REGISTRY: [&str; 9] = ["hs1", "hs2", "hs3", "hs4", "hs5", "hs25", "hs38", "hs45", "hs110"];

fn rosenbrock(x: &[f64]) -> f64 {
    100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2)
}

fn hs25(x: &[f64]) -> f64 {
    (1..=99)
        .map(|i| {
            let i = i as f64;
            let u = 25.0 + (-50.0 * (0.01 * i).ln()).powf(2.0 / 3.0);
            let r = -0.01 * i + (-(u - x[1]).powf(x[2]) / x[0]).exp();
            r * r
        })
        .sum()
}

fn hs38(x: &[f64]) -> f64 {
    100.0 * (x[1] - x[0] * x[0]).powi(2)
        + (1.0 - x[0]).powi(2)
        + 90.0 * (x[3] - x[2] * x[2]).powi(2)
        + (1.0 - x[2]).powi(2)
        + 10.1 * ((x[1] - 1.0).powi(2) + (x[3] - 1.0).powi(2))
        + 19.8 * (x[1] - 1.0) * (x[3] - 1.0)
}

fn hs110(x: &[f64]) -> f64 {
    let logs: f64 = x.iter().map(|&v| (v - 2.0).ln().powi(2) + (10.0 - v).ln().powi(2)).sum();
    logs - x.iter().product::<f64>().powf(0.2)
}

/// Looks up one of the bound-constrained Hock–Schittkowski problems.
///
/// Formulas and start points follow the Hock–Schittkowski collection. The
/// best-known values were confirmed with an independent multi-start bounded
/// quasi-Newton search.
pub fn registry_get(name: &str) -> Result<ProblemSpec> {
    let b = |lo: Vec<f64>, hi: Vec<f64>| Bounds::new(lo, hi).expect("registry bounds are valid");
    let p = match name {
        "hs1" => ProblemSpec::new(name, b(vec![-INF, -1.5], vec![INF, INF]), vec![-2.0, 1.0], rosenbrock)?
            .with_best_known(0.0),
        // Start (-2, 1) is infeasible and projects to (-2, 1.5).
        "hs2" => ProblemSpec::new(name, b(vec![-INF, 1.5], vec![INF, INF]), vec![-2.0, 1.0], rosenbrock)?
            .with_best_known(0.050_426_187_9),
        "hs3" => ProblemSpec::new(name, b(vec![-INF, 0.0], vec![INF, INF]), vec![10.0, 1.0], |x| {
            x[1] + 1e-5 * (x[1] - x[0]).powi(2)
        })?
        .with_best_known(0.0),
        "hs4" => ProblemSpec::new(name, b(vec![1.0, 0.0], vec![INF, INF]), vec![1.125, 0.125], |x| {
            (x[0] + 1.0).powi(3) / 3.0 + x[1]
        })?
        .with_best_known(8.0 / 3.0),
        "hs5" => ProblemSpec::new(name, b(vec![-1.5, -3.0], vec![4.0, 3.0]), vec![0.0, 0.0], |x| {
            (x[0] + x[1]).sin() + (x[0] - x[1]).powi(2) - 1.5 * x[0] + 2.5 * x[1] + 1.0
        })?
        // -sqrt(3)/2 - pi/3
        .with_best_known(-1.913_222_954_981_036),
        "hs25" => ProblemSpec::new(name, b(vec![0.1, 0.0, 0.0], vec![100.0, 25.6, 5.0]), vec![100.0, 12.5, 3.0], hs25)?
            .with_best_known(0.0),
        "hs38" => ProblemSpec::new(name, b(vec![-10.0; 4], vec![10.0; 4]), vec![-3.0, -1.0, -3.0, -1.0], hs38)?
            .with_best_known(0.0),
        // Start (2, ..., 2) violates x1 <= 1 and projects to (1, 2, 2, 2, 2).
        "hs45" => ProblemSpec::new(name, b(vec![0.0; 5], vec![1.0, 2.0, 3.0, 4.0, 5.0]), vec![2.0; 5], |x| {
            2.0 - x.iter().product::<f64>() / 120.0
        })?
        .with_best_known(1.0),
        "hs110" => ProblemSpec::new(name, b(vec![2.001; 10], vec![9.999; 10]), vec![9.0; 10], hs110)?
            .with_best_known(-45.778_469_71),
        _ => return Err(Error::UnknownProblem { name: name.to_string(), available: REGISTRY.join(", ") }),
    };
    Ok(p)
}

/// All registry problems, in table order.
pub fn registry() -> Vec<ProblemSpec> {
    REGISTRY.iter().map(|n| registry_get(n).expect("registry name")).collect()
}

/// Registry listing, one `name,dim,n_bound_constraints,f_best_known` line per problem.
pub fn registry_listing() -> String {
    let mut out = String::from("name,dim,n_bound_constraints,f_best_known\n");
    for p in registry() {
        let best = p.best_known.map(|f| f.to_string()).unwrap_or_default();
        out.push_str(&format!("{},{},{},{}\n", p.name, p.dim(), p.bounds.n_constraints(), best));
    }
    out
}

/// Synthetic (non-registry) problem: `‖x‖²` on `[lo, hi]^n`.
pub fn sphere(start: Vec<f64>, lo: f64, hi: f64) -> Result<ProblemSpec> {
    let bounds = Bounds::uniform(start.len(), lo, hi)?;
    let best = if lo <= 0.0 && 0.0 <= hi { 0.0 } else { start.len() as f64 * lo.abs().min(hi.abs()).powi(2) };
    Ok(ProblemSpec::new("sphere", bounds, start, |x| x.iter().map(|v| v * v).sum())?.with_best_known(best))
}

/// Synthetic (non-registry) problem: 2-D Rosenbrock on `[-2, 2]²`, start `(-1.2, 1)`.
pub fn rosenbrock_box() -> ProblemSpec {
    ProblemSpec::new("rosenbrock_box", Bounds::uniform(2, -2.0, 2.0).expect("valid"), vec![-1.2, 1.0], rosenbrock)
        .expect("valid")
        .with_best_known(0.0)
}
