use std::fmt;
use std::io::Write;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::SolverKind;
use crate::error::Result;
use crate::problem::SmoothnessInfo;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    /// Relative iterate change reached the target.
    OptTol,
    MaxIters,
    /// The relative iterate change stopped moving.
    StalledResidual,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::OptTol => "opttol",
            Termination::MaxIters => "max_iters",
            Termination::StalledResidual => "stalled",
        })
    }
}

/// Whether an iteration took the Anderson-mixed point or the plain map output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepKind {
    #[serde(rename = "AA")]
    Accelerated,
    #[serde(rename = "UA")]
    Unaccelerated,
}

impl StepKind {
    pub fn label(self) -> &'static str {
        match self {
            StepKind::Accelerated => "AA",
            StepKind::Unaccelerated => "UA",
        }
    }
}

/// State after iteration `iter`, i.e. at `(x^iter, ε^iter)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub kind: StepKind,
    /// `F(x^k)`
    pub objective: f64,
    /// `F(x^k, ε^k)`
    pub relaxed_objective: f64,
    /// `‖H_x − x‖` of the map evaluation that produced this iterate.
    pub residual_norm: f64,
    pub opttol: f64,
    /// Optimality measure at the point the step was taken from.
    pub chi: f64,
    pub alpha_l1: Option<f64>,
    /// Guard decision; `None` for solvers without a guard.
    pub accepted: Option<bool>,
    /// Nonmonotone reference `E^k` after the update (guarded solver only).
    pub reference: Option<f64>,
    pub elapsed_s: f64,
}

impl TraceRecord {
    /// The record with its timing field zeroed, for determinism comparisons.
    pub fn without_timing(&self) -> Self {
        Self {
            elapsed_s: 0.0,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solver: SolverKind,
    pub x_final: DVector<f64>,
    pub eps_final: DVector<f64>,
    pub iterations: usize,
    pub termination: Termination,
    pub trace: Vec<TraceRecord>,
    pub accepted_aa_count: usize,
    pub rejected_aa_count: usize,
    /// `F(x⁰, ε⁰)`
    pub initial_relaxed_objective: f64,
    pub smoothness: SmoothnessInfo,
    /// Iteration after which `sign(x^k)` never changed again.
    pub last_sign_change: usize,
    /// Weights that hit the clamp over the run.
    pub weight_clamps: usize,
    /// Largest first-order violation of a map output, when debug checks ran.
    pub first_order_violation: Option<f64>,
    pub elapsed_s: f64,
}

impl SolveReport {
    /// Number of trailing iterations over which the sign pattern held.
    pub fn stable_sign_tail(&self) -> usize {
        self.iterations - self.last_sign_change
    }

    pub fn final_record(&self) -> Option<&TraceRecord> {
        self.trace.last()
    }

    /// Writes the trace as CSV with header
    /// `iter,kind,F,F_relaxed,resid_norm,opttol,chi,alpha_l1,accepted,elapsed_s`.
    pub fn write_trace_csv<W: Write>(&self, out: W) -> Result<()> {
        write_trace_csv(&self.trace, out)
    }
}

pub const TRACE_COLUMNS: [&str; 10] = [
    "iter",
    "kind",
    "F",
    "F_relaxed",
    "resid_norm",
    "opttol",
    "chi",
    "alpha_l1",
    "accepted",
    "elapsed_s",
];

pub fn write_trace_csv<W: Write>(trace: &[TraceRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_COLUMNS)?;
    for r in trace {
        w.write_record([
            r.iter.to_string(),
            r.kind.label().to_string(),
            r.objective.to_string(),
            r.relaxed_objective.to_string(),
            r.residual_norm.to_string(),
            r.opttol.to_string(),
            r.chi.to_string(),
            r.alpha_l1.map(|a| a.to_string()).unwrap_or_default(),
            r.accepted.map(|a| a.to_string()).unwrap_or_default(),
            r.elapsed_s.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
