use std::time::Instant;

use nalgebra::DVector;

use super::measures::{chi_measure, opttol};
use super::report::{SolveReport, StepKind, Termination, TraceRecord};
use super::{ChiVariant, GuardAccumulator, SolveConfig, SolverKind, STALL_TOL, STALL_WINDOW};
use crate::anderson::{AlphaSolve, AndersonWindow};
use crate::error::{Error, Result};
use crate::fixed_point::{apply_map_at, first_order_violation, MapOutput, FIRST_ORDER_TOL};
use crate::problem::{ProblemInstance, SmoothnessInfo};

/// Bookkeeping shared by every driver: trace, termination, sign tracking.
pub(super) struct Run<'a> {
    pub(super) inst: &'a ProblemInstance,
    pub(super) config: &'a SolveConfig,
    pub(super) info: SmoothnessInfo,
    solver: SolverKind,
    start: Instant,
    trace: Vec<TraceRecord>,
    signs: Vec<i8>,
    last_sign_change: usize,
    stall_anchor: f64,
    stall_count: usize,
    clamps: usize,
    worst_first_order: Option<f64>,
    accepted: usize,
    rejected: usize,
    initial_relaxed: f64,
}

/// One completed iteration, as handed to [`Run::record`].
pub(super) struct Step<'s> {
    pub x_new: &'s DVector<f64>,
    pub x_old: &'s DVector<f64>,
    pub eps_new: &'s DVector<f64>,
    pub kind: StepKind,
    pub residual_norm: f64,
    pub chi: f64,
    pub alpha_l1: Option<f64>,
    pub accepted: Option<bool>,
    pub reference: Option<f64>,
    /// `F(x_new, eps_new)` if the driver already has it.
    pub relaxed: Option<f64>,
}

fn sign_pattern(x: &DVector<f64>) -> Vec<i8> {
    x.iter()
        .map(|v| if *v > 0.0 { 1 } else if *v < 0.0 { -1 } else { 0 })
        .collect()
}

/// Keeps `ε` strictly positive once `μᵏ` underflows.
pub(super) fn decay_floor(mut eps: DVector<f64>) -> DVector<f64> {
    eps.apply(|e| *e = e.max(f64::MIN_POSITIVE));
    eps
}

impl<'a> Run<'a> {
    pub(super) fn start(
        solver: SolverKind,
        inst: &'a ProblemInstance,
        config: &'a SolveConfig,
    ) -> Result<(Self, DVector<f64>, DVector<f64>)> {
        config.validate()?;
        let info = inst.estimate_lipschitz()?;
        let x = config.init.materialize(inst.dim())?;
        let eps = DVector::from_element(inst.dim(), config.eps0);
        let initial_relaxed = inst.relaxed_objective(&x, &eps)?;
        if !initial_relaxed.is_finite() {
            return Err(Error::Divergence {
                iteration: 0,
                reason: "initial objective is not finite".into(),
            });
        }
        let run = Self {
            inst,
            config,
            info,
            solver,
            start: Instant::now(),
            trace: Vec::new(),
            signs: sign_pattern(&x),
            last_sign_change: 0,
            stall_anchor: f64::NAN,
            stall_count: 0,
            clamps: 0,
            worst_first_order: config.debug_checks.then_some(0.0),
            accepted: 0,
            rejected: 0,
            initial_relaxed,
        };
        Ok((run, x, eps))
    }

    pub(super) fn initial_relaxed(&self) -> f64 {
        self.initial_relaxed
    }

    fn iteration(&self) -> usize {
        self.trace.len() + 1
    }

    /// Evaluates the map at `(x, eps)` and runs the optional first-order check.
    pub(super) fn map(&mut self, x: &DVector<f64>, eps: &DVector<f64>) -> Result<MapOutput> {
        let out = apply_map_at(self.inst, &self.info, x, eps, self.config.mu)?;
        self.clamps += out.clamped;
        if let Some(worst) = self.worst_first_order.as_mut() {
            let v = first_order_violation(&out, x, self.inst.lambda(), self.info.curvature);
            *worst = worst.max(v);
            if v > FIRST_ORDER_TOL {
                return Err(Error::Divergence {
                    iteration: self.trace.len() + 1,
                    reason: format!("first-order check of the reweighted step failed by {v:e}"),
                });
            }
        }
        Ok(out)
    }

    /// Optimality measure at the point the map was evaluated at.
    pub(super) fn chi(&self, at: &DVector<f64>, out: &MapOutput) -> Result<f64> {
        match self.config.chi_variant {
            ChiVariant::Literal => chi_measure(at, &out.gradient, &out.weights),
            ChiVariant::LambdaScaled => chi_measure(at, &out.gradient, &(&out.weights * self.inst.lambda())),
        }
    }

    pub(super) fn count_step(&mut self, kind: StepKind) {
        match kind {
            StepKind::Accelerated => self.accepted += 1,
            StepKind::Unaccelerated => self.rejected += 1,
        }
    }

    /// Appends a trace record and decides whether to stop.
    pub(super) fn record(&mut self, step: Step<'_>) -> Result<Option<Termination>> {
        let iter = self.iteration();
        let diverged = |reason: &str| Error::Divergence {
            iteration: iter,
            reason: reason.to_string(),
        };
        if step.x_new.iter().any(|v| !v.is_finite()) {
            return Err(diverged("iterate is not finite"));
        }
        let smooth = self.inst.smooth_value(step.x_new)?;
        let lambda = self.inst.lambda();
        let objective = smooth + lambda * self.inst.penalty_sum(step.x_new, None)?;
        let relaxed = match step.relaxed {
            Some(v) => v,
            None => smooth + lambda * self.inst.penalty_sum(step.x_new, Some(step.eps_new))?,
        };
        if !(objective.is_finite() && relaxed.is_finite()) {
            return Err(diverged("objective is not finite"));
        }

        let tol = opttol(step.x_new, step.x_old);
        let signs = sign_pattern(step.x_new);
        if signs != self.signs {
            self.signs = signs;
            self.last_sign_change = iter;
        }

        if (tol - self.stall_anchor).abs() <= STALL_TOL {
            self.stall_count += 1;
        } else {
            self.stall_anchor = tol;
            self.stall_count = 0;
        }

        self.trace.push(TraceRecord {
            iter,
            kind: step.kind,
            objective,
            relaxed_objective: relaxed,
            residual_norm: step.residual_norm,
            opttol: tol,
            chi: step.chi,
            alpha_l1: step.alpha_l1,
            accepted: step.accepted,
            reference: step.reference,
            elapsed_s: self.start.elapsed().as_secs_f64(),
        });

        Ok(if tol <= self.config.opttol_target {
            Some(Termination::OptTol)
        } else if self.stall_count >= STALL_WINDOW {
            Some(Termination::StalledResidual)
        } else if iter >= self.config.max_iters {
            Some(Termination::MaxIters)
        } else {
            None
        })
    }

    pub(super) fn finish(self, x: DVector<f64>, eps: DVector<f64>, termination: Termination) -> SolveReport {
        SolveReport {
            solver: self.solver,
            x_final: x,
            eps_final: eps,
            iterations: self.trace.len(),
            termination,
            accepted_aa_count: self.accepted,
            rejected_aa_count: self.rejected,
            initial_relaxed_objective: self.initial_relaxed,
            smoothness: self.info,
            last_sign_change: self.last_sign_change,
            weight_clamps: self.clamps,
            first_order_violation: self.worst_first_order,
            elapsed_s: self.start.elapsed().as_secs_f64(),
            trace: self.trace,
        }
    }
}

/// Plain reweighted ℓ1: `x^{k+1} = H_x(x^k, ε^k)`, `ε^{k+1} = με^k`.
pub fn run_irl1(inst: &ProblemInstance, config: &SolveConfig) -> Result<SolveReport> {
    let (mut run, mut x, mut eps) = Run::start(SolverKind::Irl1, inst, config)?;
    loop {
        let out = run.map(&x, &eps)?;
        let chi = run.chi(&x, &out)?;
        let eps_next = decay_floor(out.eps_next);
        run.count_step(StepKind::Unaccelerated);
        let stop = run.record(Step {
            x_new: &out.h_x,
            x_old: &x,
            eps_new: &eps_next,
            kind: StepKind::Unaccelerated,
            residual_norm: out.residual.norm(),
            chi,
            alpha_l1: None,
            accepted: None,
            reference: None,
            relaxed: None,
        })?;
        x = out.h_x;
        eps = eps_next;
        if let Some(t) = stop {
            return Ok(run.finish(x, eps, t));
        }
    }
}

/// Anderson-accelerated reweighted ℓ1 without safeguard. Only the `x` block
/// is mixed; `ε` follows `με`.
pub fn run_aairl1(inst: &ProblemInstance, config: &SolveConfig) -> Result<SolveReport> {
    let (mut run, mut x, mut eps) = Run::start(SolverKind::Aairl1, inst, config)?;
    let mut window = AndersonWindow::new(config.depth)?;
    loop {
        let out = run.map(&x, &eps)?;
        let chi = run.chi(&x, &out)?;
        let residual_norm = out.residual.norm();
        window.push(out.h_x.clone(), out.residual)?;
        let (x_new, kind, alpha_l1) = match window.solve_alpha(config.tikhonov)? {
            AlphaSolve::Weights(w) => (window.mix(&w)?, StepKind::Accelerated, Some(w.alpha_l1)),
            AlphaSolve::ZeroResiduals => (out.h_x, StepKind::Unaccelerated, None),
        };
        let eps_next = decay_floor(out.eps_next);
        run.count_step(kind);
        let stop = run.record(Step {
            x_new: &x_new,
            x_old: &x,
            eps_new: &eps_next,
            kind,
            residual_norm,
            chi,
            alpha_l1,
            accepted: None,
            reference: None,
            relaxed: None,
        })?;
        x = x_new;
        eps = eps_next;
        if let Some(t) = stop {
            return Ok(run.finish(x, eps, t));
        }
    }
}

/// Anderson-accelerated reweighted ℓ1 with a nonmonotone acceptance test.
///
/// The mixed point is taken when `F(x_AA, ε^{k+1}) ≤ E^k − β χ(x^k, ε^k)`,
/// otherwise the plain map output is. `E` starts at `F(x⁰, ε⁰)`.
pub fn run_guard_aairl1(inst: &ProblemInstance, config: &SolveConfig) -> Result<SolveReport> {
    let (mut run, mut x, mut eps) = Run::start(SolverKind::GuardAairl1, inst, config)?;
    let mut window = AndersonWindow::new(config.depth)?;
    let mut guard = GuardAccumulator::new(run.initial_relaxed(), config.eta, config.beta)?;
    loop {
        let out = run.map(&x, &eps)?;
        let chi = run.chi(&x, &out)?;
        let residual_norm = out.residual.norm();
        let eps_next = decay_floor(out.eps_next);
        window.push(out.h_x.clone(), out.residual)?;

        let candidate = match window.solve_alpha(config.tikhonov)? {
            AlphaSolve::Weights(w) => Some((window.mix(&w)?, w.alpha_l1)),
            AlphaSolve::ZeroResiduals => None,
        };
        let mut alpha_l1 = None;
        let mut accepted_point = None;
        if let Some((x_aa, l1)) = candidate {
            alpha_l1 = Some(l1);
            if x_aa.iter().all(|v| v.is_finite()) {
                let f_aa = inst.relaxed_objective(&x_aa, &eps_next)?;
                if guard.accept(f_aa, chi) {
                    accepted_point = Some((x_aa, f_aa));
                }
            }
        }
        let accepted = accepted_point.is_some();
        let (x_new, f_new, kind) = match accepted_point {
            Some((x_aa, f_aa)) => (x_aa, f_aa, StepKind::Accelerated),
            None => {
                let f = inst.relaxed_objective(&out.h_x, &eps_next)?;
                (out.h_x, f, StepKind::Unaccelerated)
            }
        };
        guard.update(f_new);
        run.count_step(kind);
        let stop = run.record(Step {
            x_new: &x_new,
            x_old: &x,
            eps_new: &eps_next,
            kind,
            residual_norm,
            chi,
            alpha_l1,
            accepted: Some(accepted),
            reference: Some(guard.reference()),
            relaxed: Some(f_new),
        })?;
        x = x_new;
        eps = eps_next;
        if let Some(t) = stop {
            return Ok(run.finish(x, eps, t));
        }
    }
}
