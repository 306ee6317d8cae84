//! Replays of recorded traces against the method's guarantees.
//!
//! These checks consume only what a [`Trace`] records, so they can be run on
//! any finished run, including those produced by the benchmark matrix.

use crate::linesearch::{accept_trial, EtaSchedule};
use crate::solver::{direction, Trace, TraceEvent};
use crate::Bounds;

/// Relative slack used where an audit sums many recorded terms.
const SUM_SLACK: f64 = 1e-12;

/// Every point in the trace (start, candidates, iterates) lies in the box.
pub fn feasibility_violations(trace: &Trace, bounds: &Bounds) -> usize {
    trace
        .events
        .iter()
        .filter(|e| {
            let p = match e {
                TraceEvent::Start { x, .. } | TraceEvent::Accept { x, .. } => x,
                TraceEvent::Eval { point, .. } => point,
                TraceEvent::Halve { .. } => return false,
            };
            !bounds.contains(p)
        })
        .count()
}

/// Accepted steps and evaluation records whose recorded decision disagrees
/// with the sufficient-decrease test replayed on the recorded fields.
pub fn acceptance_violations(trace: &Trace) -> usize {
    trace
        .events
        .iter()
        .filter(|e| match e {
            TraceEvent::Accept { f, f_ref, eta, delta, .. } => !accept_trial(*f, *f_ref, *eta, *delta),
            TraceEvent::Eval { f, f_ref, eta, delta, passed, .. } => accept_trial(*f, *f_ref, *eta, *delta) != *passed,
            _ => false,
        })
        .count()
}

/// Result of the block-decrease audit for the max-memory rule.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockAudit {
    /// Number of complete blocks compared (`k -> k + 1` transitions).
    pub blocks: usize,
    pub violations: usize,
    /// `sum_k delta^2_{l(k)-1}` over the compared blocks.
    pub step_sum: f64,
}

/// Index of the block maximum `l(k)` over `[kM - min(kM, M-1), kM]`.
fn block_argmax(values: &[f64], k: usize, memory: usize) -> usize {
    let end = k * memory;
    let start = end - end.min(memory - 1);
    (start..=end).fold(start, |best, j| if values[j] > values[best] { j } else { best })
}

/// Checks, for the iterate sequence split into blocks of `memory` accepted
/// steps with block maxima `l(k)`, that
///
/// ```text
/// f(x_{l(k+1)}) <= f(x_{l(k)}) + sum_{j=kM}^{l(k+1)-1} eta_j - delta^2_{l(k+1)-1}
/// ```
///
/// where `eta_j` and `delta_j` are the forcing term and step used to produce
/// `x_{j+1}`. Only meaningful for traces of the max-memory rule with this `memory`.
pub fn block_decrease(trace: &Trace, memory: usize) -> BlockAudit {
    let values = trace.iterate_values();
    let steps: Vec<_> = trace.accepted().collect();
    let mut audit = BlockAudit { blocks: 0, violations: 0, step_sum: 0.0 };
    if memory == 0 || values.is_empty() {
        return audit;
    }
    let mut k = 0;
    while (k + 1) * memory < values.len() {
        let l_k = block_argmax(&values, k, memory);
        let l_next = block_argmax(&values, k + 1, memory);
        let eta_sum: f64 = steps[k * memory..l_next].iter().map(|s| s.eta).sum();
        let delta = steps[l_next - 1].delta;
        let rhs = values[l_k] + eta_sum - delta * delta;
        let slack = SUM_SLACK * (values[l_k].abs() + eta_sum + 1.0);
        if values[l_next] > rhs + slack {
            audit.violations += 1;
        }
        audit.step_sum += delta * delta;
        audit.blocks += 1;
        k += 1;
    }
    audit
}

/// Summed-decrease bound: `sum_k delta^2_{l(k)-1} <= f(x_0) - f_final + sum eta`.
pub fn step_sum_bound_holds(trace: &Trace, memory: usize, eta: &EtaSchedule) -> bool {
    let values = trace.iterate_values();
    let (Some(&f0), Some(&f_final)) = (values.first(), values.last()) else {
        return true;
    };
    let audit = block_decrease(trace, memory);
    audit.step_sum <= f0 - f_final + eta.total() + SUM_SLACK * (f0.abs() + f_final.abs() + 1.0)
}

/// Last step size that was polled (the step in effect when the run stopped,
/// before the final halving).
pub fn last_polled_delta(trace: &Trace) -> Option<f64> {
    trace.events.iter().rev().find_map(|e| match e {
        TraceEvent::Eval { delta, .. } | TraceEvent::Accept { delta, .. } => Some(*delta),
        TraceEvent::Halve { from, .. } => Some(*from),
        TraceEvent::Start { .. } => None,
    })
}

/// Every polled point differs from the start by integer multiples of the
/// smallest step used along each coordinate, and every accepted point equals
/// its predecessor moved by `delta` along the recorded direction.
///
/// Exact only when the start point and all steps are dyadic, which holds for
/// the registry problems and the default `delta0 = 1`.
pub fn lattice_consistent(trace: &Trace) -> bool {
    let Some((x0, _)) = trace.start() else { return true };
    let min_delta = trace
        .events
        .iter()
        .filter_map(|e| match e {
            TraceEvent::Eval { delta, .. } => Some(*delta),
            _ => None,
        })
        .fold(f64::INFINITY, f64::min);
    if !min_delta.is_finite() {
        return true;
    }
    let on_lattice = |p: &[f64]| {
        p.iter().zip(x0).all(|(a, b)| {
            let steps = (a - b) / min_delta;
            steps == steps.round()
        })
    };
    let mut prev = x0.to_vec();
    for e in &trace.events {
        match e {
            TraceEvent::Eval { point, .. } if !on_lattice(point) => return false,
            TraceEvent::Accept { x, delta, dir, .. } => {
                let (i, sign) = direction(*dir);
                let mut expect = prev.clone();
                expect[i] += sign * delta;
                if &expect != x || !on_lattice(x) {
                    return false;
                }
                prev = x.clone();
            }
            _ => {}
        }
    }
    true
}
