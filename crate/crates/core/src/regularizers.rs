//! Concave sparsity penalties φ and their reweighting functions.
//!
//! Every family is a smooth, concave, strictly increasing approximation of
//! the ℓ0 count on `t = |x| ≥ 0`. The iteratively reweighted solvers only
//! consume the weight `ω(x, ε) = φ'(|x| + ε)`; the penalty value itself is
//! used for objective reporting.
//!
//! The `Tan` family carries the penalty `t / (t + p)` (the same closed form
//! as `Fra`) together with the weight `p / (1 + p²t²)`. The two are not a
//! derivative pair, so objective values reported for `Tan` do not
//! correspond to the penalty the weights minimize.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weights are clamped here so a vanishing `|x| + ε` under `Lpn` degrades
/// to a very strong shrinkage rather than to non-finite arithmetic.
pub const WEIGHT_CLAMP: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// `1 - exp(-p t)`
    Exp,
    /// `t^p`, `0 < p < 1`
    Lpn,
    /// `log(1 + p t)`
    Log,
    /// `t / (t + p)`
    Fra,
    /// `t / (t + p)` with weight `p / (1 + p² t²)`
    Tan,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Exp,
        Family::Lpn,
        Family::Log,
        Family::Fra,
        Family::Tan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Exp => "exp",
            Family::Lpn => "lpn",
            Family::Log => "log",
            Family::Fra => "fra",
            Family::Tan => "tan",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exp" => Ok(Family::Exp),
            "lpn" | "lp" => Ok(Family::Lpn),
            "log" => Ok(Family::Log),
            "fra" => Ok(Family::Fra),
            "tan" => Ok(Family::Tan),
            other => Err(Error::invalid(format!(
                "unknown regularizer '{other}' (expected exp|lpn|log|fra|tan)"
            ))),
        }
    }
}

/// A penalty family together with its sparsity hyperparameter `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct RegularizerSpec {
    family: Family,
    p: f64,
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    family: Family,
    p: f64,
}

impl TryFrom<RawSpec> for RegularizerSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        RegularizerSpec::new(raw.family, raw.p)
    }
}

impl From<RegularizerSpec> for RawSpec {
    fn from(spec: RegularizerSpec) -> Self {
        RawSpec {
            family: spec.family,
            p: spec.p,
        }
    }
}

impl RegularizerSpec {
    pub fn new(family: Family, p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::invalid(format!("regularizer p must be positive, got {p}")));
        }
        if family == Family::Lpn && p >= 1.0 {
            return Err(Error::invalid(format!("lpn requires 0 < p < 1, got {p}")));
        }
        Ok(Self { family, p })
    }

    /// ℓp with `p = 0.5`, the setting used throughout the benchmarks.
    pub fn lpn_half() -> Self {
        Self {
            family: Family::Lpn,
            p: 0.5,
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Penalty value `φ(t)` for `t ≥ 0`.
    pub fn value(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) || t.is_infinite() {
            return Err(Error::invalid(format!("penalty argument must be finite and >= 0, got {t}")));
        }
        let p = self.p;
        let v = match self.family {
            Family::Exp => -(-p * t).exp_m1(),
            Family::Lpn => {
                if t == 0.0 {
                    0.0
                } else {
                    t.powf(p)
                }
            }
            Family::Log => (p * t).ln_1p(),
            Family::Fra | Family::Tan => t / (t + p),
        };
        Ok(v)
    }

    /// Reweighting factor `φ'(x_abs + eps)`, clamped at [`WEIGHT_CLAMP`].
    pub fn weight(&self, x_abs: f64, eps: f64) -> Result<f64> {
        self.weight_clamped(x_abs, eps).map(|(w, _)| w)
    }

    /// Like [`weight`](Self::weight) but also reports whether the clamp fired.
    pub fn weight_clamped(&self, x_abs: f64, eps: f64) -> Result<(f64, bool)> {
        if !(x_abs >= 0.0) || !(eps >= 0.0) {
            return Err(Error::invalid(format!(
                "weight arguments must be >= 0, got x_abs = {x_abs}, eps = {eps}"
            )));
        }
        let t = x_abs + eps;
        if !t.is_finite() {
            return Err(Error::NonFinite("weight argument"));
        }
        let p = self.p;
        let w = match self.family {
            Family::Exp => p * (-p * t).exp(),
            Family::Lpn => {
                if t == 0.0 {
                    return Err(Error::WeightPole { index: 0 });
                }
                p * t.powf(p - 1.0)
            }
            Family::Log => p / (1.0 + p * t),
            Family::Fra => p / ((t + p) * (t + p)),
            Family::Tan => p / (1.0 + p * p * t * t),
        };
        if w > WEIGHT_CLAMP || w.is_nan() {
            Ok((WEIGHT_CLAMP, true))
        } else {
            Ok((w, false))
        }
    }
}

impl fmt::Display for RegularizerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(p={})", self.family, self.p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(family: Family, p: f64) -> RegularizerSpec {
        RegularizerSpec::new(family, p).unwrap()
    }

    #[test]
    fn value_examples() {
        assert_eq!(spec(Family::Lpn, 0.5).value(0.0).unwrap(), 0.0);
        assert_eq!(spec(Family::Lpn, 0.5).value(4.0).unwrap(), 2.0);
        let v = spec(Family::Log, 1.0).value(std::f64::consts::E - 1.0).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn value_at_zero_is_zero_for_every_family() {
        for family in Family::ALL {
            assert_eq!(spec(family, 0.5).value(0.0).unwrap(), 0.0, "{family}");
        }
    }

    #[test]
    fn weight_examples() {
        assert_eq!(spec(Family::Exp, 1.0).weight(0.0, 0.0).unwrap(), 1.0);
        assert_eq!(spec(Family::Lpn, 0.5).weight(4.0, 0.0).unwrap(), 0.25);
        assert_eq!(spec(Family::Fra, 2.0).weight(1.0, 1.0).unwrap(), 0.125);
    }

    #[test]
    fn fra_weight_matches_central_difference() {
        let s = spec(Family::Fra, 2.0);
        let h = 1e-6;
        let fd = (s.value(2.0 + h).unwrap() - s.value(2.0 - h).unwrap()) / (2.0 * h);
        assert!((fd - 0.125).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_arguments() {
        let s = spec(Family::Log, 1.0);
        assert!(s.value(-1e-9).is_err());
        assert!(s.value(f64::NAN).is_err());
        assert!(s.weight(-1.0, 0.0).is_err());
        assert!(s.weight(0.0, -1.0).is_err());
        assert!(RegularizerSpec::new(Family::Lpn, 1.0).is_err());
        assert!(RegularizerSpec::new(Family::Exp, 0.0).is_err());
        assert!(RegularizerSpec::new(Family::Exp, 3.0).is_ok());
    }

    #[test]
    fn lpn_pole_and_clamp() {
        let s = spec(Family::Lpn, 0.5);
        assert_eq!(s.weight(0.0, 0.0), Err(Error::WeightPole { index: 0 }));
        let (w, clamped) = s.weight_clamped(0.0, 1e-300).unwrap();
        assert!(clamped);
        assert_eq!(w, WEIGHT_CLAMP);
        let (_, clamped) = s.weight_clamped(0.0, 1e-6).unwrap();
        assert!(!clamped);
    }

    #[test]
    fn family_parsing() {
        for family in Family::ALL {
            assert_eq!(family.name().parse::<Family>().unwrap(), family);
        }
        assert!("scad".parse::<Family>().is_err());
    }

    #[test]
    fn serde_rejects_invalid_p() {
        let ok: RegularizerSpec = serde_json::from_str(r#"{"family":"lpn","p":0.5}"#).unwrap();
        assert_eq!(ok, RegularizerSpec::lpn_half());
        assert!(serde_json::from_str::<RegularizerSpec>(r#"{"family":"lpn","p":1.5}"#).is_err());
    }

    fn any_spec() -> impl Strategy<Value = RegularizerSpec> {
        (0usize..5, 0.05f64..0.95, 0.1f64..5.0).prop_map(|(i, lp, p)| {
            let family = Family::ALL[i];
            let p = if family == Family::Lpn { lp } else { p };
            spec(family, p)
        })
    }

    proptest! {
        #[test]
        fn weights_are_positive_and_nonincreasing(s in any_spec(), t1 in 1e-6f64..20.0, dt in 1e-6f64..20.0) {
            let w1 = s.weight(t1, 0.0).unwrap();
            let w2 = s.weight(t1 + dt, 0.0).unwrap();
            prop_assert!(w1 > 0.0 && w2 > 0.0);
            prop_assert!(w1 >= w2);
        }

        // Exp saturates to 1.0 in double precision once p·t passes about 37.
        #[test]
        fn penalty_strictly_increasing(s in any_spec(), t1 in 0.0f64..5.0, dt in 1e-3f64..5.0) {
            prop_assert!(s.value(t1 + dt).unwrap() > s.value(t1).unwrap());
        }

        // Tan is excluded: its printed penalty and weight are not a derivative pair.
        #[test]
        fn weight_matches_finite_difference(s in any_spec(), t in 0.01f64..10.0) {
            prop_assume!(s.family() != Family::Tan);
            let h = 1e-6;
            let fd = (s.value(t + h).unwrap() - s.value(t - h).unwrap()) / (2.0 * h);
            prop_assert!((s.weight(t, 0.0).unwrap() - fd).abs() <= 1e-5);
        }

        #[test]
        fn eps_enters_the_weight_argument(s in any_spec(), x in 0.0f64..5.0, e in 1e-3f64..5.0) {
            prop_assert_eq!(s.weight(x, e).unwrap(), s.weight(x + e, 0.0).unwrap());
        }
    }
}
