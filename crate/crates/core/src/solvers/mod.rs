//! Solver drivers and their shared configuration.
//!
//! | solver          | step                                                        |
//! |-----------------|-------------------------------------------------------------|
//! | `irl1`          | `x ← H_x(x, ε)`                                             |
//! | `aairl1`        | Anderson mix of the last `m + 1` map outputs                |
//! | `guard_aairl1`  | mixed point if it passes the nonmonotone test, else `H_x`   |
//! | `irl2`          | reweighted ℓ2 baseline (ℓp penalty only)                    |
//! | `nesirl1`       | map applied at the extrapolation `x + α_k (x − x_prev)`     |
//!
//! All of them decay `ε ← με` and stop on the relative iterate change.

mod baselines;
mod drivers;
mod guard;
mod measures;
mod report;

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::ProblemInstance;
use crate::rng::{stream_rng, Stream};

pub use baselines::{irl2_coordinate_step, nesterov_coefficient, run_irl2, run_nesirl1};
pub use drivers::{run_aairl1, run_guard_aairl1, run_irl1};
pub use guard::GuardAccumulator;
pub use measures::{chi_measure, opttol};
pub use report::{write_trace_csv, SolveReport, StepKind, Termination, TraceRecord, TRACE_COLUMNS};

/// Number of iterations over which an unchanged opttol counts as a stall.
pub const STALL_WINDOW: usize = 100;
pub const STALL_TOL: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Irl1,
    Irl2,
    Aairl1,
    GuardAairl1,
    Nesirl1,
}

impl SolverKind {
    pub const ALL: [SolverKind; 5] = [
        SolverKind::Irl1,
        SolverKind::Irl2,
        SolverKind::Aairl1,
        SolverKind::GuardAairl1,
        SolverKind::Nesirl1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Irl1 => "irl1",
            SolverKind::Irl2 => "irl2",
            SolverKind::Aairl1 => "aairl1",
            SolverKind::GuardAairl1 => "guard_aairl1",
            SolverKind::Nesirl1 => "nesirl1",
        }
    }

    pub fn run(self, inst: &ProblemInstance, config: &SolveConfig) -> Result<SolveReport> {
        match self {
            SolverKind::Irl1 => run_irl1(inst, config),
            SolverKind::Irl2 => run_irl2(inst, config),
            SolverKind::Aairl1 => run_aairl1(inst, config),
            SolverKind::GuardAairl1 => run_guard_aairl1(inst, config),
            SolverKind::Nesirl1 => run_nesirl1(inst, config),
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .or(match key.as_str() {
                "guard" => Some(SolverKind::GuardAairl1),
                _ => None,
            })
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown solver '{s}' (expected irl1|irl2|aairl1|guard_aairl1|nesirl1)"
                ))
            })
    }
}

/// Starting point `x⁰`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialPoint {
    /// Standard Gaussian draw from the start stream of `seed`.
    Gaussian { seed: u64 },
    Zeros,
    Given(Vec<f64>),
}

impl InitialPoint {
    pub fn materialize(&self, n: usize) -> Result<DVector<f64>> {
        match self {
            InitialPoint::Gaussian { seed } => {
                let mut rng = stream_rng(*seed, Stream::Start);
                Ok(DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng)))
            }
            InitialPoint::Zeros => Ok(DVector::zeros(n)),
            InitialPoint::Given(v) => {
                crate::error::check_len("initial point", n, v.len())?;
                Ok(DVector::from_column_slice(v))
            }
        }
    }
}

/// Which weights the optimality measure uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ChiVariant {
    /// `ω_i`, as in the guard's acceptance test.
    #[default]
    Literal,
    /// `λω_i`, matching the stationarity system of the penalized problem.
    LambdaScaled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveConfig {
    /// Perturbation decay `ε ← με`.
    pub mu: f64,
    /// Anderson depth `m`.
    pub depth: usize,
    /// Nonmonotone averaging `η ∈ [0, 1]`.
    pub eta: f64,
    /// Sufficient-decrease factor `β` of the guard.
    pub beta: f64,
    pub opttol_target: f64,
    pub max_iters: usize,
    /// Uniform initial perturbation `ε⁰`.
    pub eps0: f64,
    /// Check the subproblem's first-order system after every map evaluation.
    pub debug_checks: bool,
    /// Tikhonov scale of the Anderson weight solve.
    pub tikhonov: f64,
    pub chi_variant: ChiVariant,
    pub init: InitialPoint,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            mu: 0.9,
            depth: 15,
            eta: 0.85,
            beta: 1e-11,
            opttol_target: 1e-14,
            max_iters: 50_000,
            eps0: 1.0,
            debug_checks: false,
            tikhonov: crate::anderson::DEFAULT_TIKHONOV,
            chi_variant: ChiVariant::Literal,
            init: InitialPoint::Gaussian { seed: 0 },
        }
    }
}

impl SolveConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.init = InitialPoint::Gaussian { seed };
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::invalid(msg));
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return fail(format!("mu must lie in (0, 1), got {}", self.mu));
        }
        if self.depth == 0 {
            return fail("depth must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return fail(format!("eta must lie in [0, 1], got {}", self.eta));
        }
        if !(self.beta >= 0.0) {
            return fail(format!("beta must be >= 0, got {}", self.beta));
        }
        if !(self.opttol_target > 0.0) {
            return fail(format!("opttol target must be positive, got {}", self.opttol_target));
        }
        if self.max_iters == 0 {
            return fail("max_iters must be at least 1".into());
        }
        if !(self.eps0 > 0.0 && self.eps0.is_finite()) {
            return fail(format!("eps0 must be positive, got {}", self.eps0));
        }
        if !(self.tikhonov >= 0.0 && self.tikhonov.is_finite()) {
            return fail(format!("tikhonov scale must be >= 0, got {}", self.tikhonov));
        }
        Ok(())
    }
}
