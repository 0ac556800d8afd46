use serde::Serialize;

use crate::error::{Error, Result};

/// Nonmonotone reference value of the guarded solver.
///
/// `E` is a running convex combination of the objective values seen so far,
/// biased towards recent ones by `η`:
/// `J ← ηJ + 1`, `E ← (η J_old E_old + F_new) / J`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GuardAccumulator {
    reference: f64,
    weight: f64,
    eta: f64,
    beta: f64,
}

impl GuardAccumulator {
    /// Starts at `E⁰ = initial_value`, `J⁰ = 1`.
    pub fn new(initial_value: f64, eta: f64, beta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::invalid(format!("eta must lie in [0, 1], got {eta}")));
        }
        if !(beta >= 0.0) {
            return Err(Error::invalid(format!("beta must be >= 0, got {beta}")));
        }
        if !initial_value.is_finite() {
            return Err(Error::NonFinite("initial objective"));
        }
        Ok(Self {
            reference: initial_value,
            weight: 1.0,
            eta,
            beta,
        })
    }

    /// Current reference value `E`.
    pub fn reference(&self) -> f64 {
        self.reference
    }

    /// Current accumulator weight `J`.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Nonmonotone descent test `f_aa ≤ E − β·χ`.
    pub fn accept(&self, f_aa: f64, chi: f64) -> bool {
        let margin = if chi == 0.0 { 0.0 } else { self.beta * chi };
        f_aa <= self.reference - margin
    }

    /// Folds the objective value of the new iterate into `(E, J)`.
    pub fn update(&mut self, f_new: f64) {
        let previous = self.weight;
        self.weight = self.eta * previous + 1.0;
        self.reference = (self.eta * previous * self.reference + f_new) / self.weight;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use num_traits::ToPrimitive;

    #[test]
    fn eta_zero_tracks_last_value() {
        let mut acc = GuardAccumulator::new(10.0, 0.0, 1e-11).unwrap();
        for f in [9.0, 7.5, 7.0] {
            acc.update(f);
            assert_eq!(acc.reference(), f);
            assert_eq!(acc.weight(), 1.0);
        }
    }

    #[test]
    fn eta_one_is_running_mean() {
        let values = [4.0, 3.0, 2.5, 2.0, 1.0];
        let mut acc = GuardAccumulator::new(values[0], 1.0, 0.0).unwrap();
        for (k, f) in values.iter().enumerate().skip(1) {
            acc.update(*f);
            let mean = values[..=k].iter().sum::<f64>() / (k + 1) as f64;
            assert!((acc.reference() - mean).abs() < 1e-14);
            assert_eq!(acc.weight(), (k + 1) as f64);
        }
    }

    #[test]
    fn one_step_matches_exact_recursion() {
        let mut acc = GuardAccumulator::new(10.0, 0.85, 1e-11).unwrap();
        acc.update(8.0);
        let q = |x: f64| BigRational::from_float(x).unwrap();
        let j = q(0.85) * q(1.0) + q(1.0);
        let e = (q(0.85) * q(1.0) * q(10.0) + q(8.0)) / j.clone();
        assert_eq!(acc.weight(), j.to_f64().unwrap());
        assert!((acc.reference() - e.to_f64().unwrap()).abs() <= 1e-15);
        assert!((acc.reference() - 16.5 / 1.85).abs() <= 1e-14);
    }

    #[test]
    fn acceptance_boundaries() {
        let acc = GuardAccumulator::new(5.0, 0.85, 1e-11).unwrap();
        assert!(acc.accept(5.0, 0.0));
        assert!(!acc.accept(5.0, 1.0));
        assert!(acc.accept(5.0 - 1e-11, 1.0));
        let strict = GuardAccumulator::new(5.0, 0.85, 1e300).unwrap();
        assert!(!strict.accept(-1e10, 1e-3));
        let infinite = GuardAccumulator::new(5.0, 0.85, f64::INFINITY).unwrap();
        assert!(infinite.accept(5.0, 0.0));
    }

    #[test]
    fn invalid_parameters() {
        assert!(GuardAccumulator::new(1.0, 1.5, 1e-11).is_err());
        assert!(GuardAccumulator::new(1.0, 0.5, -1.0).is_err());
        assert!(GuardAccumulator::new(f64::NAN, 0.5, 1.0).is_err());
    }

    #[test]
    fn reference_stays_between_old_and_new() {
        let mut acc = GuardAccumulator::new(3.0, 0.85, 0.0).unwrap();
        let mut prev = acc.reference();
        for f in [2.0, 5.0, 1.0, 1.0, 4.0, 0.5] {
            acc.update(f);
            let e = acc.reference();
            assert!(e >= prev.min(f) - 1e-15 && e <= prev.max(f) + 1e-15);
            assert!(acc.weight() >= 1.0);
            prev = e;
        }
    }
}
