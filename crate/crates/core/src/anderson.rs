//! Windowed Anderson mixing over map outputs.
//!
//! The window keeps the last `m + 1` pairs `(H_x, r₁)` oldest-first. Mixing
//! weights solve `min ‖Rα‖` subject to `Σα = 1`, regularized by
//! `τ‖R‖_F²‖α‖²`, whose solution is `α = G⁻¹1 / (1ᵀG⁻¹1)` with
//! `G = RᵀR + τ‖R‖_F² I`.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, Error, Result};

/// Default Tikhonov scale applied to `‖R‖_F²`.
pub const DEFAULT_TIKHONOV: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct AndersonWindow {
    depth: usize,
    h_history: VecDeque<DVector<f64>>,
    r_history: VecDeque<DVector<f64>>,
    k: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixWeights {
    /// One weight per stored pair, oldest first.
    pub alpha: DVector<f64>,
    /// `‖Rα‖` at the returned weights.
    pub objective: f64,
    /// `Σ|α_i|`
    pub alpha_l1: f64,
}

/// Result of a weight solve.
#[derive(Debug, Clone, PartialEq)]
pub enum AlphaSolve {
    Weights(MixWeights),
    /// Every stored residual is exactly zero: the iteration has reached a
    /// fixed point and there is nothing to mix.
    ZeroResiduals,
}

impl AndersonWindow {
    /// A window of mixing depth `depth ≥ 1` (holding up to `depth + 1` pairs).
    pub fn new(depth: usize) -> Result<Self> {
        if depth == 0 {
            return Err(Error::invalid("Anderson depth must be at least 1"));
        }
        Ok(Self {
            depth,
            h_history: VecDeque::with_capacity(depth + 1),
            r_history: VecDeque::with_capacity(depth + 1),
            k: 0,
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.h_history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h_history.is_empty()
    }

    /// Number of pushes so far.
    pub fn pushes(&self) -> usize {
        self.k
    }

    pub fn outputs(&self) -> impl Iterator<Item = &DVector<f64>> {
        self.h_history.iter()
    }

    pub fn residuals(&self) -> impl Iterator<Item = &DVector<f64>> {
        self.r_history.iter()
    }

    pub fn push(&mut self, h_x: DVector<f64>, residual: DVector<f64>) -> Result<()> {
        check_len("Anderson push", h_x.len(), residual.len())?;
        if let Some(first) = self.h_history.front() {
            check_len("Anderson push", first.len(), h_x.len())?;
        }
        if self.h_history.len() == self.depth + 1 {
            self.h_history.pop_front();
            self.r_history.pop_front();
        }
        self.h_history.push_back(h_x);
        self.r_history.push_back(residual);
        self.k += 1;
        Ok(())
    }

    /// Residual matrix `R` with columns oldest-first.
    pub fn residual_matrix(&self) -> DMatrix<f64> {
        let n = self.r_history.front().map_or(0, |r| r.len());
        DMatrix::from_fn(n, self.len(), |i, j| self.r_history[j][i])
    }

    pub fn solve_alpha(&self, tikhonov_scale: f64) -> Result<AlphaSolve> {
        if self.is_empty() {
            return Err(Error::invalid("cannot solve mixing weights on an empty window"));
        }
        if !(tikhonov_scale >= 0.0 && tikhonov_scale.is_finite()) {
            return Err(Error::invalid(format!("tikhonov scale must be >= 0, got {tikhonov_scale}")));
        }
        let cols: Vec<&DVector<f64>> = self.r_history.iter().collect();
        let size = cols.len();

        let mut gram = DMatrix::zeros(size, size);
        for i in 0..size {
            for j in 0..=i {
                let d = cols[i].dot(cols[j]);
                gram[(i, j)] = d;
                gram[(j, i)] = d;
            }
        }
        let frobenius_sq = gram.trace();
        if frobenius_sq == 0.0 {
            return Ok(AlphaSolve::ZeroResiduals);
        }
        if !frobenius_sq.is_finite() {
            return Err(Error::NonFinite("Anderson residuals"));
        }

        let alpha = if size == 1 {
            DVector::from_element(1, 1.0)
        } else {
            for i in 0..size {
                gram[(i, i)] += tikhonov_scale * frobenius_sq;
            }
            let chol = gram
                .cholesky()
                .ok_or_else(|| Error::invalid("Anderson Gram matrix is not positive definite"))?;
            let z = chol.solve(&DVector::from_element(size, 1.0));
            let total = z.sum();
            if !(total.is_finite() && total != 0.0) {
                return Err(Error::NonFinite("Anderson weights"));
            }
            z / total
        };

        let mut mixed = DVector::zeros(cols[0].len());
        for (a, r) in alpha.iter().zip(&cols) {
            mixed.axpy(*a, r, 1.0);
        }
        let alpha_l1 = alpha.iter().map(|a| a.abs()).sum();
        Ok(AlphaSolve::Weights(MixWeights {
            objective: mixed.norm(),
            alpha,
            alpha_l1,
        }))
    }

    /// `Σ α_i H_i` over the stored outputs, oldest first.
    pub fn mix(&self, weights: &MixWeights) -> Result<DVector<f64>> {
        check_len("Anderson mix", self.len(), weights.alpha.len())?;
        let first = self
            .h_history
            .front()
            .ok_or_else(|| Error::invalid("cannot mix an empty window"))?;
        let mut out = DVector::zeros(first.len());
        for (a, h) in weights.alpha.iter().zip(&self.h_history) {
            out.axpy(*a, h, 1.0);
        }
        Ok(out)
    }
}
