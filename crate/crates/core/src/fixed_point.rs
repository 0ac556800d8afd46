//! The reweighted-ℓ1 map `H(x, ε) = (H_x(x, ε), με)` on the compound
//! variable `θ = (x, ε)`.
//!
//! `H_x` minimizes the linearized model
//! `∇f(x)ᵀy + (L/2)‖y − x‖² + λ Σ ω(x_i, ε_i)|y_i|`, which separates into
//! one soft-threshold per coordinate.

use nalgebra::DVector;

use crate::error::{check_len, Error, Result};
use crate::problem::{ProblemInstance, SmoothnessInfo};

/// Tolerance of the first-order check on a map output.
pub const FIRST_ORDER_TOL: f64 = 1e-9;

/// The compound iterate `(x, ε)` and its iteration counter.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    pub x: DVector<f64>,
    pub eps: DVector<f64>,
    pub k: usize,
}

impl IterateState {
    pub fn new(x: DVector<f64>, eps: DVector<f64>) -> Result<Self> {
        check_len("iterate eps", x.len(), eps.len())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("iterate x"));
        }
        if eps.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return Err(Error::invalid("perturbation eps must be finite and nonnegative"));
        }
        Ok(Self { x, eps, k: 0 })
    }

    /// Starts from `x` with a uniform perturbation `eps0`.
    pub fn uniform(x: DVector<f64>, eps0: f64) -> Result<Self> {
        let eps = DVector::from_element(x.len(), eps0);
        Self::new(x, eps)
    }
}

/// One application of the map.
#[derive(Debug, Clone, PartialEq)]
pub struct MapOutput {
    /// `H_x(x, ε)`
    pub h_x: DVector<f64>,
    /// `H_ε(x, ε) = με`
    pub eps_next: DVector<f64>,
    /// `ω(x_i, ε_i)` used by the step.
    pub weights: DVector<f64>,
    /// `r₁ = H_x − x`
    pub residual: DVector<f64>,
    /// `∇f(x)` at the input point.
    pub gradient: DVector<f64>,
    /// `f(x)` at the input point.
    pub smooth_value: f64,
    /// Number of weights that hit the clamp.
    pub clamped: usize,
}

/// Closed-form minimizer of `g·y + (L/2)(y − x)² + λω|y|`.
///
/// Points exactly on a threshold fall in the zero branch.
pub fn prox_step(x: f64, g: f64, omega: f64, lambda: f64, curvature: f64) -> Result<f64> {
    if !(x.is_finite() && g.is_finite() && omega.is_finite() && lambda.is_finite() && curvature.is_finite()) {
        return Err(Error::NonFinite("prox_step input"));
    }
    if omega < 0.0 || lambda <= 0.0 || curvature <= 0.0 {
        return Err(Error::invalid(format!(
            "prox_step needs omega >= 0, lambda > 0, L > 0 (got {omega}, {lambda}, {curvature})"
        )));
    }
    Ok(soft_step(x, g, lambda * omega, curvature))
}

#[inline]
fn soft_step(x: f64, g: f64, lw: f64, l: f64) -> f64 {
    let lower = (g - lw) / l;
    let upper = (g + lw) / l;
    if x < lower {
        x - lower
    } else if x > upper {
        x - upper
    } else {
        0.0
    }
}

/// Applies `H` to `state`. `mu` must lie in `(0, 1)`.
pub fn apply_map(
    inst: &ProblemInstance,
    info: &SmoothnessInfo,
    state: &IterateState,
    mu: f64,
) -> Result<MapOutput> {
    apply_map_at(inst, info, &state.x, &state.eps, mu)
}

pub(crate) fn apply_map_at(
    inst: &ProblemInstance,
    info: &SmoothnessInfo,
    x: &DVector<f64>,
    eps: &DVector<f64>,
    mu: f64,
) -> Result<MapOutput> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::invalid(format!("mu must lie in (0, 1), got {mu}")));
    }
    let n = inst.dim();
    check_len("apply_map x", n, x.len())?;
    check_len("apply_map eps", n, eps.len())?;

    let (smooth_value, gradient) = inst.smooth_value_and_gradient(x)?;
    let reg = inst.regularizer();
    let lambda = inst.lambda();
    let l = info.curvature;

    let mut weights = DVector::zeros(n);
    let mut h_x = DVector::zeros(n);
    let mut clamped = 0;
    for i in 0..n {
        let (w, hit) = reg.weight_clamped(x[i].abs(), eps[i]).map_err(|e| match e {
            Error::WeightPole { .. } => Error::WeightPole { index: i },
            other => other,
        })?;
        clamped += hit as usize;
        weights[i] = w;
        h_x[i] = soft_step(x[i], gradient[i], lambda * w, l);
    }
    if h_x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("map output"));
    }
    let residual = &h_x - x;
    Ok(MapOutput {
        h_x,
        eps_next: eps * mu,
        weights,
        residual,
        gradient,
        smooth_value,
        clamped,
    })
}

/// Largest violation of the subproblem's optimality system at a map output:
/// `∇_i f + L(h_i − x_i) + λω_i sign(h_i) = 0` on the support of `h`, and
/// `|∇_i f − L x_i| ≤ λω_i` off it.
pub fn first_order_violation(
    out: &MapOutput,
    x: &DVector<f64>,
    lambda: f64,
    curvature: f64,
) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        let h = out.h_x[i];
        let g = out.gradient[i] + curvature * (h - x[i]);
        let lw = lambda * out.weights[i];
        let v = if h != 0.0 {
            (g + lw * h.signum()).abs()
        } else {
            (g.abs() - lw).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}
