//! Exponential sums with polynomial amplitudes,
//! `x(t) = sum_gamma q_gamma(t) e^{2 pi i gamma t}`.
//!
//! A mode with amplitude degree `D` spans a `D + 1` dimensional submodule
//! (basis `t^m e^{2 pi i gamma t}`, `m = 0..=D`), so the recovery driver is
//! run with `M = D + 1`. The annihilator then has a root of multiplicity
//! `deg q_gamma + 1` at `e^{2 pi i gamma}`.

use std::cmp::Ordering;
use std::f64::consts::TAU;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::annihilator::MeasurementRecord;
use crate::classic::{circle_distance, classic_symbol, classic_symbol_inverse, Frequency};
use crate::error::{contract, Result};
use crate::numerics::{least_squares_solve, numerical_rank, vec_norm, ComplexMatrix};
use crate::recovery::{Mode, SparseSignalModel, SpectralInstance, Warning};

const UNIT_MODULUS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialMode {
    pub gamma: Frequency,
    /// Amplitude polynomial, ascending degree.
    pub q_coeffs: Vec<C64>,
}

impl From<PolynomialMode> for Mode<Frequency> {
    fn from(m: PolynomialMode) -> Self {
        Mode { gamma: m.gamma, coeffs: m.q_coeffs }
    }
}

impl From<Mode<Frequency>> for PolynomialMode {
    fn from(m: Mode<Frequency>) -> Self {
        PolynomialMode { gamma: m.gamma, q_coeffs: m.coeffs }
    }
}

/// Evaluates `sum q_gamma(t) e^{2 pi i gamma t}` directly.
pub fn confluent_sample(modes: &[PolynomialMode], t: f64) -> C64 {
    modes
        .iter()
        .map(|m| {
            let q = m.q_coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * t + c);
            q * C64::from_polar(1.0, TAU * m.gamma.value() * t)
        })
        .sum()
}

/// Confluent Vandermonde matrix `(V_1 ... V_N)`, `(K + 1) x N(D + 1)`, with
/// block `n` entry `(k, m) = k^m theta_n^k` and `0^0 = 1`.
pub fn confluent_system(thetas: &[C64], max_degree: usize, k_max: usize) -> Result<ComplexMatrix> {
    for (i, a) in thetas.iter().enumerate() {
        if (a.norm() - 1.0).abs() > UNIT_MODULUS_TOL {
            return contract(format!("node {a} is not on the unit circle"));
        }
        if thetas[i + 1..].iter().any(|b| b == a) {
            return contract(format!("duplicate node {a}"));
        }
    }
    let width = max_degree + 1;
    if k_max + 1 < thetas.len() * width {
        return contract(format!(
            "confluent system needs K + 1 >= N (D + 1) = {}, got K = {k_max}",
            thetas.len() * width
        ));
    }
    Ok(ComplexMatrix::from_fn(k_max + 1, thetas.len() * width, |k, col| {
        let (n, m) = (col / width, col % width);
        thetas[n].powu(k as u32) * (k as f64).powi(m as i32)
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialFit {
    pub modes: Vec<PolynomialMode>,
    /// `||V c - x|| / ||x||`.
    pub residual: f64,
    pub warnings: Vec<Warning>,
}

/// Solves the confluent system for the amplitude polynomials of a known
/// spectrum from samples `x(0), ..., x(K)`.
pub fn recover_polynomials(
    freqs: &[Frequency],
    samples: &[C64],
    max_degree: usize,
    rank_rel_tol: f64,
) -> Result<PolynomialFit> {
    if samples.len() < freqs.len() * (max_degree + 1) {
        return contract(format!("need at least {} samples, got {}", freqs.len() * (max_degree + 1), samples.len()));
    }
    if freqs.is_empty() {
        return Ok(PolynomialFit {
            modes: Vec::new(),
            residual: if vec_norm(samples) == 0.0 { 0.0 } else { 1.0 },
            warnings: Vec::new(),
        });
    }
    let thetas: Vec<C64> = freqs.iter().map(|f| classic_symbol(*f)).collect();
    let system = confluent_system(&thetas, max_degree, samples.len() - 1)?;
    let rank = numerical_rank(&system, rank_rel_tol)?;
    let c = least_squares_solve(&system, samples)?;
    let fitted = system.mul_vec(&c);
    let diff: Vec<C64> = fitted.iter().zip(samples).map(|(a, b)| a - b).collect();
    let norm = vec_norm(samples);
    let residual = if norm == 0.0 { vec_norm(&diff) } else { vec_norm(&diff) / norm };
    let mut warnings = Vec::new();
    if rank < system.cols() {
        warnings.push(Warning::NonUniqueCoefficients { rank, unknowns: system.cols() });
    }
    let modes = freqs
        .iter()
        .zip(c.chunks(max_degree + 1))
        .map(|(f, q)| PolynomialMode { gamma: *f, q_coeffs: q.to_vec() })
        .collect();
    Ok(PolynomialFit { modes, residual, warnings })
}

/// Polynomial-amplitude instance with amplitude degree at most `max_degree`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfluentInstance {
    pub max_degree: usize,
}

impl ConfluentInstance {
    pub fn new(max_degree: usize) -> Self {
        Self { max_degree }
    }

    /// Samples `x(l)`, `l = 0..=l_max`.
    pub fn measure(&self, modes: &[PolynomialMode], l_max: usize) -> Result<MeasurementRecord> {
        if let Some(m) = modes.iter().find(|m| m.q_coeffs.len() > self.max_degree + 1) {
            return contract(format!(
                "amplitude of degree {} exceeds the instance bound {}",
                m.q_coeffs.len() - 1,
                self.max_degree
            ));
        }
        let y: Vec<C64> = (0..=l_max).map(|l| confluent_sample(modes, l as f64)).collect();
        MeasurementRecord::scalar(&y)
    }
}

impl SpectralInstance for ConfluentInstance {
    type Point = Frequency;

    fn symbol(&self, p: &Frequency) -> C64 {
        classic_symbol(*p)
    }

    fn symbol_inverse(&self, z: C64, tol: f64) -> Result<Frequency> {
        classic_symbol_inverse(z, tol)
    }

    fn omega_contains(&self, p: &Frequency) -> bool {
        (0.0..1.0).contains(&p.value())
    }

    fn distance(&self, a: &Frequency, b: &Frequency) -> f64 {
        circle_distance(*a, *b)
    }

    fn order(&self, a: &Frequency, b: &Frequency) -> Ordering {
        a.value().total_cmp(&b.value())
    }

    fn mode_dimension(&self) -> usize {
        self.max_degree + 1
    }

    fn channels(&self) -> usize {
        1
    }

    fn coefficient_system(&self, points: &[Frequency], l_max: usize) -> Result<ComplexMatrix> {
        let thetas: Vec<C64> = points.iter().map(|f| classic_symbol(*f)).collect();
        confluent_system(&thetas, self.max_degree, l_max)
    }
}

pub fn confluent_model(modes: &[PolynomialMode]) -> SparseSignalModel<Frequency> {
    SparseSignalModel::new(modes.iter().cloned().map(Mode::from).collect())
}
