use nalgebra::DVector;

use crate::error::{check_len, Error, Result};

/// First-order optimality measure
/// `max_i dist(−∇_i f, ω_i ∂|x_i|)`.
///
/// On the support the subdifferential is the point `ω_i sign(x_i)`, at a
/// zero coordinate it is the interval `[−ω_i, ω_i]`.
pub fn chi_measure(x: &DVector<f64>, grad: &DVector<f64>, weights: &DVector<f64>) -> Result<f64> {
    check_len("chi_measure gradient", x.len(), grad.len())?;
    check_len("chi_measure weights", x.len(), weights.len())?;
    let mut chi: f64 = 0.0;
    for i in 0..x.len() {
        let (xi, gi, wi) = (x[i], grad[i], weights[i]);
        if !(xi.is_finite() && gi.is_finite() && wi.is_finite()) {
            return Err(Error::NonFinite("chi_measure input"));
        }
        let d = if xi != 0.0 {
            (gi + wi * xi.signum()).abs()
        } else {
            (gi.abs() - wi).max(0.0)
        };
        chi = chi.max(d);
    }
    Ok(chi)
}

/// Relative change `‖x_k − x_prev‖ / ‖x_k‖`; `+∞` when `x_k = 0` but the
/// step is not, `0` when both vanish.
pub fn opttol(x_k: &DVector<f64>, x_prev: &DVector<f64>) -> f64 {
    let step = (x_k - x_prev).norm();
    let scale = x_k.norm();
    if step == 0.0 {
        0.0
    } else if scale == 0.0 {
        f64::INFINITY
    } else {
        step / scale
    }
}
