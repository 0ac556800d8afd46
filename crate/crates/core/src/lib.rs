//! Iteratively reweighted ℓ1 solvers for nonconvex sparse regression
//!
//! ```text
//! min_x  ½‖Ax − b‖² + λ Σ φ(|x_i|)
//! ```
//!
//! with a concave penalty `φ` from [`regularizers`]. The crate provides the
//! plain reweighted-ℓ1 fixed-point map, an Anderson-accelerated variant, a
//! globally safeguarded variant that accepts accelerated steps through a
//! nonmonotone descent test, two baselines (reweighted ℓ2 and Nesterov
//! extrapolation), and a seeded synthetic-experiment harness.
//!
//! ```no_run
//! use aairl1::harness::{generate_instance, GeneratorSpec};
//! use aairl1::solvers::{run_guard_aairl1, SolveConfig};
//!
//! let generated = generate_instance(&GeneratorSpec::desk(7)).unwrap();
//! let report = run_guard_aairl1(&generated.instance, &SolveConfig::default()).unwrap();
//! println!("{} iterations, {:?}", report.iterations, report.termination);
//! ```

pub mod anderson;
pub mod error;
pub mod fixed_point;
pub mod harness;
pub mod problem;
pub mod regularizers;
pub mod rng;
pub mod solvers;

pub use error::{Error, Result};
pub use problem::{ProblemInstance, SmoothnessInfo};
pub use regularizers::{Family, RegularizerSpec};
