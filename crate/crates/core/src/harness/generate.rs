use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use std::path::Path;

use crate::problem::{read_vector_csv, write_vector_csv, InstanceHeader, ProblemInstance};
use crate::regularizers::RegularizerSpec;
use crate::rng::{stream_rng, Stream};

/// Standard deviation of the observation noise (variance `1e-4`).
pub const DEFAULT_NOISE_STD: f64 = 1e-2;
pub const DEFAULT_LAMBDA: f64 = 0.1;

/// Parameters of one synthetic compressed-sensing instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub m: usize,
    pub n: usize,
    #[serde(rename = "K", alias = "k")]
    pub k: usize,
    pub seed: u64,
    pub noise_std: f64,
    pub lambda: f64,
    pub regularizer: RegularizerSpec,
}

impl GeneratorSpec {
    pub fn new(m: usize, n: usize, k: usize, seed: u64) -> Self {
        Self {
            m,
            n,
            k,
            seed,
            noise_std: DEFAULT_NOISE_STD,
            lambda: DEFAULT_LAMBDA,
            regularizer: RegularizerSpec::lpn_half(),
        }
    }

    /// `(m, n, K) = (100, 200, 20)` with default noise and penalty.
    pub fn desk(seed: u64) -> Self {
        Self::new(100, 200, 20, seed)
    }

    pub fn noiseless(mut self) -> Self {
        self.noise_std = 0.0;
        self
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub instance: ProblemInstance,
    pub x_true: DVector<f64>,
    pub header: InstanceHeader,
}

/// File holding the planted signal next to the instance files.
pub const X_TRUE_FILE: &str = "x_true.csv";

impl GeneratedInstance {
    /// Writes the instance files plus the planted signal.
    pub fn save(&self, dir: &Path) -> Result<()> {
        self.instance.save(dir, &self.header)?;
        write_vector_csv(&dir.join(X_TRUE_FILE), &self.x_true)
    }

    /// Reads back what [`GeneratedInstance::save`] wrote.
    pub fn load(dir: &Path) -> Result<Self> {
        let (instance, header) = ProblemInstance::load(dir)?;
        let x_true = read_vector_csv(&dir.join(X_TRUE_FILE))?;
        crate::error::check_len("planted signal", instance.dim(), x_true.len())?;
        Ok(Self {
            instance,
            x_true,
            header,
        })
    }
}

/// Draws `A` with i.i.d. standard Gaussian entries (row-major from the
/// matrix stream) and orthonormalizes its rows via the thin QR factor of
/// `Aᵀ`; plants `K` entries of `±1` on a uniformly random support; and
/// sets `b = A x_true + noise_std · z` with `z` standard Gaussian.
pub fn generate_instance(spec: &GeneratorSpec) -> Result<GeneratedInstance> {
    let GeneratorSpec { m, n, k, seed, .. } = *spec;
    if m == 0 || n == 0 {
        return Err(Error::invalid("m and n must be positive"));
    }
    if k > n {
        return Err(Error::invalid(format!("support size K = {k} exceeds n = {n}")));
    }
    if m > n {
        return Err(Error::invalid(format!("rows can only be orthonormal when m <= n (m = {m}, n = {n})")));
    }
    if !(spec.noise_std >= 0.0 && spec.noise_std.is_finite()) {
        return Err(Error::invalid(format!("noise_std must be >= 0, got {}", spec.noise_std)));
    }

    let mut rng = stream_rng(seed, Stream::Matrix);
    let gaussian = DMatrix::from_row_iterator(m, n, (0..m * n).map(|_| StandardNormal.sample(&mut rng)));
    let a = gaussian.transpose().qr().q().transpose();

    let mut support = index::sample(&mut stream_rng(seed, Stream::Support), n, k).into_vec();
    support.sort_unstable();
    let mut signs = stream_rng(seed, Stream::Signs);
    let mut x_true = DVector::zeros(n);
    for i in support {
        x_true[i] = if signs.random_bool(0.5) { 1.0 } else { -1.0 };
    }

    let mut b = &a * &x_true;
    if spec.noise_std > 0.0 {
        let mut noise = stream_rng(seed, Stream::Noise);
        for v in b.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut noise);
            *v += spec.noise_std * z;
        }
    }

    let instance = ProblemInstance::new(a, b, spec.lambda, spec.regularizer)?;
    let mut header = instance.header(Some(seed));
    header.k = Some(k);
    header.noise_std = Some(spec.noise_std);
    Ok(GeneratedInstance {
        instance,
        x_true,
        header,
    })
}
