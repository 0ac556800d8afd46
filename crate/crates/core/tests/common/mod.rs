#![allow(dead_code)]

use aairl1::{Family, ProblemInstance, RegularizerSpec};
use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

pub fn gaussian_vector<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

/// Unstructured Gaussian instance (rows not orthonormalized).
pub fn random_instance<R: Rng>(rng: &mut R, m: usize, n: usize, reg: RegularizerSpec, lambda: f64) -> ProblemInstance {
    let a = gaussian_matrix(rng, m, n);
    let b = gaussian_vector(rng, m);
    ProblemInstance::new(a, b, lambda, reg).unwrap()
}

pub fn random_regularizer<R: Rng>(rng: &mut R) -> RegularizerSpec {
    let family = Family::ALL[rng.random_range(0..Family::ALL.len())];
    let p = match family {
        Family::Lpn => rng.random_range(0.1..0.9),
        _ => rng.random_range(0.2..4.0),
    };
    RegularizerSpec::new(family, p).unwrap()
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > tol {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

pub fn rat(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite value")
}

pub fn rat_to_f64(v: &BigRational) -> f64 {
    v.to_f64().expect("representable")
}

/// Solves the integer system `M y = r` exactly with fraction-free (Bareiss)
/// elimination; only the back substitution uses rationals.
pub fn bareiss_solve(mut m: Vec<Vec<BigInt>>, mut r: Vec<BigInt>) -> Vec<BigRational> {
    let n = r.len();
    let mut prev = BigInt::one();
    for col in 0..n {
        let pivot = (col..n).find(|&i| !m[i][col].is_zero()).expect("singular system");
        m.swap(col, pivot);
        r.swap(col, pivot);
        for row in col + 1..n {
            for k in col + 1..n {
                m[row][k] = (&m[row][k] * &m[col][col] - &m[row][col] * &m[col][k]) / &prev;
            }
            r[row] = (&r[row] * &m[col][col] - &m[row][col] * &r[col]) / &prev;
            m[row][col] = BigInt::zero();
        }
        prev = m[col][col].clone();
    }
    let mut y = vec![BigRational::zero(); n];
    for row in (0..n).rev() {
        let mut acc = BigRational::from_integer(r[row].clone());
        for k in row + 1..n {
            acc -= BigRational::from_integer(m[row][k].clone()) * &y[k];
        }
        y[row] = acc / BigRational::from_integer(m[row][row].clone());
    }
    y
}

/// Exact minimizer of `αᵀ(RᵀR + τ‖R‖²_F I)α` subject to `Σα = 1`, found by
/// eliminating the last weight: `α = e_last + Nβ` with `N = [I; −1ᵀ]`.
pub fn constrained_weights_exact(r: &DMatrix<f64>, tau: f64) -> Vec<BigRational> {
    let k = r.ncols();
    if k == 1 {
        return vec![BigRational::one()];
    }
    // Scaling R by a power of two, and the whole quadratic form by the
    // denominator of τ, leaves the minimizer unchanged and makes every
    // entry an integer.
    let min_exp = r.iter().filter(|v| **v != 0.0).map(|v| v.abs().log2().floor() as i32).min().unwrap_or(0);
    let scale = rat(2f64.powi((52 - min_exp).max(0)));
    let as_int = |v: f64| {
        let q = rat(v) * &scale;
        assert!(q.is_integer());
        q.to_integer()
    };
    let cols: Vec<Vec<BigInt>> = (0..k).map(|j| r.column(j).iter().map(|v| as_int(*v)).collect()).collect();
    let tau = rat(tau);
    let (tau_num, tau_den) = (tau.numer().clone(), tau.denom().clone());
    let mut gram = vec![vec![BigInt::zero(); k]; k];
    for i in 0..k {
        for j in 0..=i {
            let d = cols[i].iter().zip(&cols[j]).fold(BigInt::zero(), |acc, (a, b)| acc + a * b) * &tau_den;
            gram[i][j] = d.clone();
            gram[j][i] = d;
        }
    }
    let frob = (0..k).fold(BigInt::zero(), |acc, i| acc + &gram[i][i]) / &tau_den;
    let shift = tau_num * frob;
    for (i, row) in gram.iter_mut().enumerate() {
        row[i] += &shift;
    }
    let last = k - 1;
    // NᵀMN and −NᵀM e_last
    let reduced: Vec<Vec<BigInt>> = (0..last)
        .map(|i| {
            (0..last)
                .map(|j| &gram[i][j] - &gram[i][last] - &gram[last][j] + &gram[last][last])
                .collect()
        })
        .collect();
    let rhs: Vec<BigInt> = (0..last).map(|i| &gram[last][last] - &gram[i][last]).collect();
    let beta = bareiss_solve(reduced, rhs);
    let tail = beta.iter().fold(BigRational::one(), |acc, b| acc - b);
    beta.into_iter().chain(std::iter::once(tail)).collect()
}

/// Least-squares line through `(i, ys[i])`: returns `(slope, r²)`.
pub fn line_fit(ys: &[f64]) -> (f64, f64) {
    let n = ys.len() as f64;
    let mean_x = (n - 1.0) / 2.0;
    let mean_y = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        let dx = i as f64 - mean_x;
        let dy = y - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r2)
}

pub fn bits(v: &DVector<f64>) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}
