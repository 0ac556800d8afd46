//! Comparison solvers: reweighted ℓ2 and Nesterov-extrapolated reweighted ℓ1.

use nalgebra::DVector;

use super::drivers::{decay_floor, Run, Step};
use super::measures::chi_measure;
use super::report::{SolveReport, StepKind};
use super::{ChiVariant, SolveConfig, SolverKind};
use crate::error::{Error, Result};
use crate::problem::ProblemInstance;
use crate::regularizers::{Family, WEIGHT_CLAMP};

/// Minimizer of `g·y + (L/2)(y − x)² + λ w y²`.
pub fn irl2_coordinate_step(x: f64, g: f64, w: f64, lambda: f64, curvature: f64) -> f64 {
    (curvature * x - g) / (curvature + 2.0 * lambda * w)
}

/// Extrapolation weight `α_k = (k − 1)/(k + 2)`, with `α_0 = 0`.
pub fn nesterov_coefficient(k: usize) -> f64 {
    if k == 0 {
        0.0
    } else {
        (k as f64 - 1.0) / (k as f64 + 2.0)
    }
}

/// Reweighted ℓ2 for the ℓp penalty: each step minimizes
/// `∇f(x)ᵀy + (L/2)‖y − x‖² + λ Σ w_i y_i²` with
/// `w_i = (p/2)(x_i² + ε_i²)^{p/2 − 1}`. Iterates are dense.
pub fn run_irl2(inst: &ProblemInstance, config: &SolveConfig) -> Result<SolveReport> {
    let reg = *inst.regularizer();
    if reg.family() != Family::Lpn {
        return Err(Error::invalid(format!(
            "irl2 is defined for the lpn penalty only, got {}",
            reg.family()
        )));
    }
    let p = reg.p();
    let lambda = inst.lambda();
    let (mut run, mut x, mut eps) = Run::start(SolverKind::Irl2, inst, config)?;
    let curvature = run.info.curvature;
    loop {
        let grad = inst.smooth_gradient(&x)?;
        let n = x.len();
        let mut x_new = DVector::zeros(n);
        let mut l1_weights = DVector::zeros(n);
        for i in 0..n {
            let s = x[i] * x[i] + eps[i] * eps[i];
            let w = if s == 0.0 {
                WEIGHT_CLAMP
            } else {
                (0.5 * p * s.powf(0.5 * p - 1.0)).min(WEIGHT_CLAMP)
            };
            x_new[i] = irl2_coordinate_step(x[i], grad[i], w, lambda, curvature);
            l1_weights[i] = reg.weight(x[i].abs(), eps[i])?;
        }
        let chi = match run.config.chi_variant {
            ChiVariant::Literal => chi_measure(&x, &grad, &l1_weights)?,
            ChiVariant::LambdaScaled => chi_measure(&x, &grad, &(l1_weights * lambda))?,
        };
        let eps_next = decay_floor(&eps * run.config.mu);
        run.count_step(StepKind::Unaccelerated);
        let stop = run.record(Step {
            x_new: &x_new,
            x_old: &x,
            eps_new: &eps_next,
            kind: StepKind::Unaccelerated,
            residual_norm: (&x_new - &x).norm(),
            chi,
            alpha_l1: None,
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

/// Reweighted ℓ1 with Nesterov extrapolation: `y^k = x^k + α_k(x^k − x^{k−1})`,
/// `x^{k+1} = H_x(y^k, ε^k)` with weights evaluated at `y^k`.
pub fn run_nesirl1(inst: &ProblemInstance, config: &SolveConfig) -> Result<SolveReport> {
    let (mut run, mut x, mut eps) = Run::start(SolverKind::Nesirl1, inst, config)?;
    let mut x_prev = x.clone();
    for k in 0.. {
        let alpha = nesterov_coefficient(k);
        let y = if alpha == 0.0 {
            x.clone()
        } else {
            &x + (&x - &x_prev) * alpha
        };
        let out = run.map(&y, &eps)?;
        let chi = run.chi(&y, &out)?;
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
        x_prev = std::mem::replace(&mut x, out.h_x);
        eps = eps_next;
        if let Some(t) = stop {
            return Ok(run.finish(x, eps, t));
        }
    }
    unreachable!("the iteration counter is unbounded")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nesterov_sequence() {
        assert_eq!(nesterov_coefficient(0), 0.0);
        assert_eq!(nesterov_coefficient(1), 0.0);
        assert_eq!(nesterov_coefficient(2), 0.25);
        assert_eq!(nesterov_coefficient(3), 0.4);
    }

    #[test]
    fn irl2_step_without_weight_is_gradient_step() {
        let (x, g, l) = (0.7, -0.3, 2.0);
        assert!((irl2_coordinate_step(x, g, 0.0, 0.1, l) - (x - g / l)).abs() < 1e-15);
    }

    #[test]
    fn irl2_step_matches_vertex_of_quadratic() {
        // g·y + (L/2)(y − x)² + λ w y² = a y² + c y + const, vertex at −c/(2a)
        for &(x, g, w, lambda, l) in &[(0.5, 1.2, 3.0, 0.1, 1.5), (-2.0, 0.3, 0.01, 0.7, 4.0), (0.0, -1.0, 10.0, 0.2, 0.5)] {
            let a = 0.5 * l + lambda * w;
            let c = g - l * x;
            let vertex = -c / (2.0 * a);
            assert!((irl2_coordinate_step(x, g, w, lambda, l) - vertex).abs() < 1e-10);
        }
    }
}
