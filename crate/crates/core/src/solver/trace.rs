use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::{Error, Result};

/// One entry of a run's audit trail.
#[derive(Debug, Clone, PartialEq)]
pub enum TraceEvent {
    /// Evaluation of the projected start point.
    Start { x: Vec<f64>, f: f64 },
    /// A poll candidate, either evaluated or served from the cache.
    Eval {
        k: u64,
        point: Vec<f64>,
        f: f64,
        delta: f64,
        dir: usize,
        f_ref: f64,
        eta: f64,
        /// The candidate satisfied the sufficient-decrease test.
        passed: bool,
        cached: bool,
        /// The objective returned a non-finite value (stored as `+inf`).
        non_finite: bool,
    },
    /// A new iterate `x_{k+1}` produced at iteration `k` with step `delta`.
    Accept { k: u64, x: Vec<f64>, f: f64, delta: f64, dir: usize, f_ref: f64, eta: f64 },
    /// A failed poll at `from`; the step is halved to `to`.
    Halve { k: u64, from: f64, to: f64 },
}

/// Ordered record of everything a run did.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub events: Vec<TraceEvent>,
}

/// View of an accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceptedStep<'a> {
    pub k: u64,
    pub x: &'a [f64],
    pub f: f64,
    pub delta: f64,
    pub f_ref: f64,
    pub eta: f64,
}

impl Trace {
    pub(crate) fn push(&mut self, e: TraceEvent) {
        self.events.push(e);
    }

    pub fn start(&self) -> Option<(&[f64], f64)> {
        self.events.iter().find_map(|e| match e {
            TraceEvent::Start { x, f } => Some((x.as_slice(), *f)),
            _ => None,
        })
    }

    pub fn accepted(&self) -> impl Iterator<Item = AcceptedStep<'_>> {
        self.events.iter().filter_map(|e| match e {
            TraceEvent::Accept { k, x, f, delta, f_ref, eta, .. } => {
                Some(AcceptedStep { k: *k, x, f: *f, delta: *delta, f_ref: *f_ref, eta: *eta })
            }
            _ => None,
        })
    }

    /// Objective values of the iterate sequence `f(x_0), f(x_1), ...`.
    pub fn iterate_values(&self) -> Vec<f64> {
        self.start().map(|(_, f)| f).into_iter().chain(self.accepted().map(|s| s.f)).collect()
    }

    /// Every point the objective was actually evaluated at (cache hits
    /// excluded), with its value, in evaluation order.
    pub fn evaluations(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.events.iter().filter_map(|e| match e {
            TraceEvent::Start { x, f } => Some((x.as_slice(), *f)),
            TraceEvent::Eval { point, f, cached: false, .. } => Some((point.as_slice(), *f)),
            _ => None,
        })
    }

    /// Best objective value seen after each true evaluation, as `(fe, f)`
    /// pairs with `fe` starting at 1 for the start point.
    pub fn best_so_far(&self) -> Vec<(u64, f64)> {
        let mut best = f64::INFINITY;
        self.evaluations()
            .enumerate()
            .map(|(i, (_, f))| {
                best = best.min(f);
                (i as u64 + 1, best)
            })
            .collect()
    }

    /// CSV with header `event,k,delta,dir,f,accepted`, one row per event.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("event,k,delta,dir,f,accepted\n");
        for e in &self.events {
            match e {
                TraceEvent::Start { f, .. } => {
                    let _ = writeln!(out, "start,0,,,{f},1");
                }
                TraceEvent::Eval { k, f, delta, dir, passed, cached, .. } => {
                    let tag = if *cached { "cache" } else { "eval" };
                    let _ = writeln!(out, "{tag},{k},{delta},{dir},{f},{}", u8::from(*passed));
                }
                TraceEvent::Accept { k, f, delta, dir, .. } => {
                    let _ = writeln!(out, "accept,{k},{delta},{dir},{f},1");
                }
                TraceEvent::Halve { k, to, .. } => {
                    let _ = writeln!(out, "halve,{k},{to},,,0");
                }
            }
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(self.to_csv().as_bytes()).map_err(|e| Error::io(path, e))
    }
}
