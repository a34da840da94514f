//! Forward models for every instance, plus independent checks that do not
//! share code with the recovery path: trapezoid quadrature of the Gaussian
//! probe inner products and a brute-force fixed-degree annihilator.

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::annihilator::MeasurementRecord;
use crate::channel::{ChannelModel, ChannelProbeSetup, TfShift};
use crate::classic::{ClassicInstance, Frequency};
use crate::confluent::{ConfluentInstance, PolynomialMode};
use crate::dynamical::{DynamicalInstance, DynamicalProblem};
use crate::error::{contract, Result};
use crate::numerics::{least_squares_solve, vec_norm, ComplexMatrix, ComplexPolynomial};
use crate::recovery::SparseSignalModel;

/// Circularly symmetric complex Gaussian noise of standard deviation
/// `sigma` (each of the real and imaginary parts has variance
/// `sigma^2 / 2`), drawn from a ChaCha8 stream seeded with `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Noise {
    pub sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

/// Ground truth for one instance kind.
#[derive(Debug, Clone, PartialEq)]
pub enum InstanceTruth {
    Classic { instance: ClassicInstance, model: SparseSignalModel<Frequency> },
    Confluent { instance: ConfluentInstance, modes: Vec<PolynomialMode> },
    Dynamical { problem: DynamicalProblem, model: SparseSignalModel<C64> },
    Channel { setup: ChannelProbeSetup, model: ChannelModel },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisRequest {
    pub truth: InstanceTruth,
    /// Largest measurement index `L`.
    pub l_max: usize,
    pub noise: Option<Noise>,
}

/// Exact forward evaluation, plus entrywise noise when requested.
pub fn synthesize(req: &SynthesisRequest) -> Result<MeasurementRecord> {
    let clean = match &req.truth {
        InstanceTruth::Classic { instance, model } => {
            model.validate(instance)?;
            instance.measure(model, req.l_max)?
        }
        InstanceTruth::Confluent { instance, modes } => instance.measure(modes, req.l_max)?,
        InstanceTruth::Dynamical { problem, model } => {
            let inst = DynamicalInstance::new(problem.clone())?;
            model.validate(&inst)?;
            inst.measure(model, req.l_max)?
        }
        InstanceTruth::Channel { setup, model } => {
            let model = ChannelModel::new(model.paths.clone())?;
            crate::channel::channel_measure(&model, setup, req.l_max)?
        }
    };
    match req.noise {
        Some(noise) => add_noise(&clean, noise),
        None => Ok(clean),
    }
}

/// Adds noise in row-major order (real part, then imaginary part).
pub fn add_noise(meas: &MeasurementRecord, noise: Noise) -> Result<MeasurementRecord> {
    if !(noise.sigma >= 0.0 && noise.sigma.is_finite()) {
        return contract(format!("noise level must be finite and nonnegative, got {}", noise.sigma));
    }
    if noise.sigma == 0.0 {
        return Ok(meas.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let normal = Normal::new(0.0, noise.sigma / 2f64.sqrt()).expect("valid normal parameters");
    let v = meas.values();
    let data: Vec<C64> = v
        .as_slice()
        .iter()
        .map(|z| {
            let re = normal.sample(&mut rng);
            let im = normal.sample(&mut rng);
            z + C64::new(re, im)
        })
        .collect();
    MeasurementRecord::new(ComplexMatrix::from_row_major(v.rows(), v.cols(), data)?)
}

const QUAD_RADIUS: f64 = 8.0;
const QUAD_START: usize = 512;
const QUAD_MAX: usize = 1 << 18;
const QUAD_TOL: f64 = 1e-12;

fn tf_apply(lambda: TfShift, f: impl Fn(f64) -> C64) -> impl Fn(f64) -> C64 {
    move |r| C64::from_polar(1.0, std::f64::consts::TAU * r * lambda.nu) * f(r + lambda.t)
}

fn trapezoid(f: &impl Fn(f64) -> C64, n: usize) -> C64 {
    let h = 2.0 * QUAD_RADIUS / n as f64;
    let mut acc = (f(-QUAD_RADIUS) + f(QUAD_RADIUS)) * 0.5;
    for k in 1..n {
        acc += f(-QUAD_RADIUS + k as f64 * h);
    }
    acc * h
}

/// `<pi_gamma pi_s u, pi_s u>` by composite trapezoid quadrature of the
/// explicit integrand on `[-8, 8]`, halving the step until two successive
/// values agree to `1e-12`.
pub fn quadrature_inner_product(gamma: TfShift, s: TfShift) -> C64 {
    let u = |r: f64| C64::new((-r * r).exp(), 0.0);
    let probe = tf_apply(s, u);
    let shifted = tf_apply(gamma, tf_apply(s, u));
    let integrand = move |r: f64| shifted(r) * probe(r).conj();
    let mut n = QUAD_START;
    let mut prev = trapezoid(&integrand, n);
    while n < QUAD_MAX {
        n *= 2;
        let next = trapezoid(&integrand, n);
        if (next - prev).norm() < QUAD_TOL {
            return next;
        }
        prev = next;
    }
    prev
}

const SATISFIABLE_TOL: f64 = 1e-10;

/// Fixed-degree annihilator: monic of exactly `degree`, with as many
/// leading low-order coefficients forced to zero as the homogeneous system
/// allows. For a scalar sequence this is `z^k q(z)` with `q` minimal.
pub fn brute_force_annihilator(meas: &MeasurementRecord, degree: usize) -> Result<ComplexPolynomial> {
    if degree == 0 {
        return contract("degree must be positive");
    }
    let l_max = meas.l_max();
    if l_max < degree {
        return contract(format!("need L >= {degree}, got L = {l_max}"));
    }
    let s_count = meas.channels();
    let shifts = l_max - degree + 1;
    let scale = vec_norm(&meas.flatten());
    let rhs: Vec<C64> =
        (0..shifts).flat_map(|k| (0..s_count).map(move |s| (k, s))).map(|(k, s)| -meas.get(k + degree, s)).collect();

    let solve = |first: usize| -> Result<(Vec<C64>, f64)> {
        if first == degree {
            return Ok((Vec::new(), vec_norm(&rhs)));
        }
        let a = ComplexMatrix::from_fn(shifts * s_count, degree - first, |row, j| {
            meas.get(row / s_count + first + j, row % s_count)
        });
        let x = least_squares_solve(&a, &rhs)?;
        let res: Vec<C64> = a.mul_vec(&x).iter().zip(&rhs).map(|(p, q)| p - q).collect();
        Ok((x, vec_norm(&res)))
    };

    let (mut best_first, mut best) = (0, solve(0)?.0);
    for first in 1..=degree {
        let (x, res) = solve(first)?;
        if res > SATISFIABLE_TOL * scale {
            break;
        }
        best_first = first;
        best = x;
    }
    let mut coeffs = vec![C64::new(0.0, 0.0); degree + 1];
    coeffs[best_first..degree].copy_from_slice(&best);
    coeffs[degree] = C64::new(1.0, 0.0);
    ComplexPolynomial::new(coeffs)
}
