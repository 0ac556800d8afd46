//! Least-squares data model `f(x) = ½‖Ax − b‖²` with a separable concave
//! penalty, plus the quantities the reweighted solvers are built from.

mod io;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_len, Error, Result};
use crate::regularizers::RegularizerSpec;

pub use io::InstanceHeader;
pub(crate) use io::{read_vector_csv, write_vector_csv};

/// Seed of the power-iteration start vector.
const POWER_ITERATION_SEED: u64 = 0x5eed_1ab5;
const POWER_ITERATION_TOL: f64 = 1e-8;
const POWER_ITERATION_MAX: usize = 1000;
/// Relative inflation of the majorant curvature over the spectral estimate.
const CURVATURE_MARGIN: f64 = 1e-6;

/// An immutable regression problem `min ½‖Ax − b‖² + λ Σ φ(|x_i|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    a: DMatrix<f64>,
    b: DVector<f64>,
    lambda: f64,
    reg: RegularizerSpec,
}

/// Curvature constants of the smooth part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessInfo {
    /// Gradient Lipschitz constant of `f`, i.e. `σ_max(A)²`.
    pub lipschitz: f64,
    /// Curvature `L ≥ L_f` of the quadratic majorant.
    pub curvature: f64,
}

impl SmoothnessInfo {
    /// Sufficient-decrease constant `L − L_f/2` of one reweighted step.
    pub fn descent_margin(&self) -> f64 {
        self.curvature - 0.5 * self.lipschitz
    }
}

impl ProblemInstance {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, lambda: f64, reg: RegularizerSpec) -> Result<Self> {
        if a.nrows() == 0 || a.ncols() == 0 {
            return Err(Error::invalid("design matrix must be at least 1x1"));
        }
        check_len("observations", a.nrows(), b.len())?;
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("design matrix"));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("observations"));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::invalid(format!("lambda must be positive, got {lambda}")));
        }
        Ok(Self { a, b, lambda, reg })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn regularizer(&self) -> &RegularizerSpec {
        &self.reg
    }

    /// Number of observations (rows of `A`).
    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    /// Dimension of the unknown (columns of `A`).
    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    /// Same data with a different penalty or weight.
    pub fn with_penalty(&self, lambda: f64, reg: RegularizerSpec) -> Result<Self> {
        Self::new(self.a.clone(), self.b.clone(), lambda, reg)
    }

    fn check_dim(&self, context: &'static str, v: &DVector<f64>) -> Result<()> {
        check_len(context, self.dim(), v.len())
    }

    fn residual(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x - &self.b
    }

    /// `½‖Ax − b‖²`
    pub fn smooth_value(&self, x: &DVector<f64>) -> Result<f64> {
        self.check_dim("smooth_value", x)?;
        Ok(0.5 * self.residual(x).norm_squared())
    }

    /// `Aᵀ(Ax − b)`
    pub fn smooth_gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim("smooth_gradient", x)?;
        Ok(self.a.tr_mul(&self.residual(x)))
    }

    /// Value and gradient of `f` sharing one residual evaluation.
    pub fn smooth_value_and_gradient(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        self.check_dim("smooth_value_and_gradient", x)?;
        let r = self.residual(x);
        Ok((0.5 * r.norm_squared(), self.a.tr_mul(&r)))
    }

    pub(crate) fn penalty_sum(&self, x: &DVector<f64>, eps: Option<&DVector<f64>>) -> Result<f64> {
        let mut total = 0.0;
        for i in 0..x.len() {
            let e = eps.map_or(0.0, |e| e[i]);
            total += self.reg.value(x[i].abs() + e)?;
        }
        Ok(total)
    }

    /// `f(x) + λ Σ φ(|x_i|)`
    pub fn objective_value(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(self.smooth_value(x)? + self.lambda * self.penalty_sum(x, None)?)
    }

    /// `f(x) + λ Σ φ(|x_i| + ε_i)`, the smoothed objective the solvers descend.
    pub fn relaxed_objective(&self, x: &DVector<f64>, eps: &DVector<f64>) -> Result<f64> {
        self.check_dim("relaxed_objective", eps)?;
        if let Some(i) = eps.iter().position(|e| !(*e >= 0.0)) {
            return Err(Error::invalid(format!("eps[{i}] = {} is negative", eps[i])));
        }
        Ok(self.smooth_value(x)? + self.lambda * self.penalty_sum(x, Some(eps))?)
    }

    /// The reweighted-ℓ1 model at `(x_ref, eps_ref)` evaluated at `x`:
    /// `∇f(x_ref)ᵀx + (L/2)‖x − x_ref‖² + λ Σ ω(x_ref_i, eps_ref_i)|x_i|`.
    pub fn surrogate_value(
        &self,
        curvature: f64,
        x: &DVector<f64>,
        x_ref: &DVector<f64>,
        eps_ref: &DVector<f64>,
    ) -> Result<f64> {
        if !(curvature > 0.0) {
            return Err(Error::invalid(format!("curvature must be positive, got {curvature}")));
        }
        self.check_dim("surrogate_value", x)?;
        self.check_dim("surrogate_value", eps_ref)?;
        let grad = self.smooth_gradient(x_ref)?;
        let mut weighted = 0.0;
        for i in 0..x.len() {
            weighted += self.reg.weight(x_ref[i].abs(), eps_ref[i])? * x[i].abs();
        }
        Ok(grad.dot(x) + 0.5 * curvature * (x - x_ref).norm_squared() + self.lambda * weighted)
    }

    /// Estimates `L_f = λ_max(AᵀA)` by power iteration from a seeded start
    /// and derives the majorant curvature `L = max(L_f, 1)·(1 + 1e-6)`.
    pub fn estimate_lipschitz(&self) -> Result<SmoothnessInfo> {
        let lipschitz = power_iteration(&self.a)?;
        Ok(SmoothnessInfo {
            lipschitz,
            curvature: lipschitz.max(1.0) * (1.0 + CURVATURE_MARGIN),
        })
    }
}

fn power_iteration(a: &DMatrix<f64>) -> Result<f64> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("design matrix"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_ITERATION_SEED);
    let mut v = DVector::from_fn(a.ncols(), |_, _| StandardNormal.sample(&mut rng));
    v.normalize_mut();
    let mut estimate = 0.0;
    for _ in 0..POWER_ITERATION_MAX {
        let w = a.tr_mul(&(a * &v));
        estimate = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            return Ok(0.0);
        }
        let converged = (&w - estimate * &v).norm() <= POWER_ITERATION_TOL * estimate.abs();
        v = w / norm;
        if converged {
            break;
        }
    }
    Ok(estimate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regularizers::Family;

    fn identity_instance(b: &[f64]) -> ProblemInstance {
        let n = b.len();
        ProblemInstance::new(
            DMatrix::identity(n, n),
            DVector::from_column_slice(b),
            0.1,
            RegularizerSpec::lpn_half(),
        )
        .unwrap()
    }

    #[test]
    fn smooth_value_examples() {
        let x0 = DVector::zeros(2);
        assert_eq!(identity_instance(&[0.0, 0.0]).smooth_value(&x0).unwrap(), 0.0);
        assert_eq!(identity_instance(&[1.0, 1.0]).smooth_value(&x0).unwrap(), 1.0);
    }

    #[test]
    fn gradient_with_identity_design() {
        let inst = identity_instance(&[0.0, 0.0]);
        let g = inst.smooth_gradient(&DVector::from_vec(vec![3.0, -2.0])).unwrap();
        assert_eq!(g.as_slice(), &[3.0, -2.0]);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let inst = identity_instance(&[0.0, 0.0]);
        let x = DVector::zeros(3);
        assert!(matches!(inst.smooth_value(&x), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(inst.smooth_gradient(&x), Err(Error::DimensionMismatch { .. })));
        assert!(inst.relaxed_objective(&DVector::zeros(2), &x).is_err());
    }

    #[test]
    fn constructor_validates() {
        let reg = RegularizerSpec::lpn_half();
        assert!(ProblemInstance::new(DMatrix::zeros(0, 2), DVector::zeros(0), 0.1, reg).is_err());
        assert!(ProblemInstance::new(DMatrix::identity(2, 2), DVector::zeros(3), 0.1, reg).is_err());
        assert!(ProblemInstance::new(DMatrix::identity(2, 2), DVector::zeros(2), 0.0, reg).is_err());
        let mut a = DMatrix::identity(2, 2);
        a[(0, 1)] = f64::NAN;
        assert_eq!(
            ProblemInstance::new(a, DVector::zeros(2), 0.1, reg),
            Err(Error::NonFinite("design matrix"))
        );
    }

    #[test]
    fn objectives() {
        let inst = ProblemInstance::new(
            DMatrix::identity(1, 1),
            DVector::zeros(1),
            0.1,
            RegularizerSpec::new(Family::Lpn, 0.5).unwrap(),
        )
        .unwrap();
        let x = DVector::from_vec(vec![4.0]);
        let plain = inst.objective_value(&x).unwrap();
        // ½·16 + 0.1·2
        assert!((plain - 8.2).abs() < 1e-12);
        assert_eq!(inst.relaxed_objective(&x, &DVector::zeros(1)).unwrap(), plain);
        assert!(inst.relaxed_objective(&x, &DVector::from_vec(vec![0.5])).unwrap() > plain);
        assert!(inst.relaxed_objective(&x, &DVector::from_vec(vec![-0.5])).is_err());

        let zero = DVector::zeros(1);
        assert_eq!(
            inst.relaxed_objective(&zero, &zero).unwrap(),
            inst.smooth_value(&zero).unwrap()
        );
    }

    #[test]
    fn lpn_penalty_only_example() {
        // A = I₁, b = 0 contributes ½·16 from f; the penalty part alone is 0.2.
        let inst = identity_instance(&[0.0]);
        let x = DVector::from_vec(vec![4.0]);
        let penalty = inst.relaxed_objective(&x, &DVector::zeros(1)).unwrap() - inst.smooth_value(&x).unwrap();
        assert!((penalty - 0.2).abs() < 1e-15);
    }

    #[test]
    fn surrogate_at_reference_point() {
        let inst = identity_instance(&[1.0, -2.0]);
        let x_ref = DVector::from_vec(vec![0.5, 0.25]);
        let eps = DVector::from_element(2, 0.1);
        let q = inst.surrogate_value(1.5, &x_ref, &x_ref, &eps).unwrap();
        let g = inst.smooth_gradient(&x_ref).unwrap();
        let mut expected = g.dot(&x_ref);
        for i in 0..2 {
            expected += 0.1 * inst.regularizer().weight(x_ref[i], 0.1).unwrap() * x_ref[i].abs();
        }
        assert!((q - expected).abs() < 1e-14);
        assert!(inst.surrogate_value(0.0, &x_ref, &x_ref, &eps).is_err());
    }

    #[test]
    fn lipschitz_of_diagonal() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0]));
        let inst = ProblemInstance::new(a, DVector::zeros(2), 0.1, RegularizerSpec::lpn_half()).unwrap();
        let info = inst.estimate_lipschitz().unwrap();
        assert!((info.lipschitz - 9.0).abs() < 1e-6);
        assert!(info.curvature > info.lipschitz);
        assert!((info.curvature - 9.0 * (1.0 + 1e-6)).abs() < 1e-5);
    }

    #[test]
    fn curvature_never_below_one() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![0.1, 0.2]));
        let inst = ProblemInstance::new(a, DVector::zeros(2), 0.1, RegularizerSpec::lpn_half()).unwrap();
        let info = inst.estimate_lipschitz().unwrap();
        assert!((info.lipschitz - 0.04).abs() < 1e-9);
        assert_eq!(info.curvature, 1.0 + 1e-6);
        assert!(info.descent_margin() > 0.0);
    }
}
