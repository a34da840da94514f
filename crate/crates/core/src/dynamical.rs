//! Sparse dynamical sampling for `x' = A x`, `x(0) = x0`.
//!
//! Samples `y_l(s) = <x(beta l), e_s>` for `s` in an index set `I` are
//! measurements with `B = e^{beta A}` and symbol `h(lambda) = e^{beta lambda}`.
//! The admissible set is the (known) spectrum of `A`, so inverting the
//! symbol is a nearest-eigenvalue lookup instead of a complex logarithm.
//!
//! Indices into the sample basis are zero-based.

use std::cmp::Ordering;
use std::f64::consts::TAU;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::annihilator::MeasurementRecord;
use crate::error::{contract, PronyError, Result};
use crate::numerics::{matrix_exponential, numerical_rank, ComplexMatrix};
use crate::recovery::{Mode, SparseSignalModel, SpectralInstance};

/// Largest allowed `||beta A||_1` for the propagator.
pub const MAX_PROPAGATOR_NORM: f64 = 50.0;
/// Projections of an eigenvector onto the sampled span below this count as zero.
pub const OBSERVABILITY_TOL: f64 = 1e-12;
/// Tolerance of the generalized-eigenvector relations.
pub const CHAIN_TOL: f64 = 1e-9;

/// A Jordan chain `x^1, ..., x^m` with `A x^1 = lambda x^1` and
/// `(A - lambda) x^k = x^{k-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenChain {
    pub lambda: C64,
    pub chain: Vec<Vec<C64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GeneralizedEigenbasis {
    pub chains: Vec<EigenChain>,
}

impl GeneralizedEigenbasis {
    pub fn new(chains: Vec<EigenChain>) -> Self {
        Self { chains }
    }

    /// Basis of eigenvectors `v_j` with eigenvalues `lambdas[j]`.
    pub fn diagonal(lambdas: &[C64], vectors: &[Vec<C64>]) -> Self {
        Self {
            chains: lambdas
                .iter()
                .zip(vectors)
                .map(|(&lambda, v)| EigenChain { lambda, chain: vec![v.clone()] })
                .collect(),
        }
    }

    /// Standard basis vectors as eigenvectors of `diag(lambdas)`.
    pub fn standard(lambdas: &[C64]) -> Self {
        Self::diagonal(lambdas, &standard_basis(lambdas.len()))
    }

    pub fn dimension(&self) -> usize {
        self.chains.iter().map(|c| c.chain.len()).sum()
    }

    /// Distinct eigenvalues in order of first appearance.
    pub fn spectrum(&self) -> Vec<C64> {
        let mut out: Vec<C64> = Vec::new();
        for c in &self.chains {
            if !out.contains(&c.lambda) {
                out.push(c.lambda);
            }
        }
        out
    }

    /// All basis vectors attached to `lambda`, chain by chain.
    pub fn vectors_for(&self, lambda: C64) -> Vec<&Vec<C64>> {
        self.chains.iter().filter(|c| c.lambda == lambda).flat_map(|c| c.chain.iter()).collect()
    }

    /// Checks the chain relations against `a` and that the vectors span.
    pub fn check_against(&self, a: &ComplexMatrix) -> Result<()> {
        let d = a.rows();
        if self.dimension() != d {
            return contract(format!("basis has {} vectors, dimension is {d}", self.dimension()));
        }
        let scale = a.frobenius_norm().max(1.0);
        for c in &self.chains {
            if c.chain.is_empty() {
                return contract("empty Jordan chain");
            }
            for (k, v) in c.chain.iter().enumerate() {
                if v.len() != d {
                    return contract(format!("basis vector of length {}, expected {d}", v.len()));
                }
                let av = a.mul_vec(v);
                let err = av
                    .iter()
                    .zip(v)
                    .enumerate()
                    .map(|(i, (x, y))| {
                        let prev = if k == 0 { C64::new(0.0, 0.0) } else { c.chain[k - 1][i] };
                        (x - c.lambda * y - prev).norm()
                    })
                    .fold(0.0, f64::max);
                let vn = v.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
                if err > CHAIN_TOL * scale * vn {
                    return contract(format!(
                        "chain relation fails for eigenvalue {} (vector {}): error {err:e}",
                        c.lambda,
                        k + 1
                    ));
                }
            }
        }
        let cols: Vec<Vec<C64>> = self.chains.iter().flat_map(|c| c.chain.iter().cloned()).collect();
        let m = ComplexMatrix::from_columns(&cols)?;
        if numerical_rank(&m, 1e-12)? < d {
            return contract("generalized eigenvectors do not span the space");
        }
        Ok(())
    }
}

pub fn standard_basis(d: usize) -> Vec<Vec<C64>> {
    (0..d).map(|i| (0..d).map(|j| C64::new(if i == j { 1.0 } else { 0.0 }, 0.0)).collect()).collect()
}

/// Unitary Fourier basis `e_s(j) = e^{2 pi i s j / d} / sqrt(d)`.
pub fn fourier_basis(d: usize) -> Vec<Vec<C64>> {
    let norm = 1.0 / (d as f64).sqrt();
    (0..d).map(|s| (0..d).map(|j| C64::from_polar(norm, TAU * (s * j) as f64 / d as f64)).collect()).collect()
}

/// `<x, e> = sum x_i conj(e_i)`.
pub fn inner(x: &[C64], e: &[C64]) -> C64 {
    x.iter().zip(e).map(|(a, b)| a * b.conj()).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicalProblem {
    pub a: ComplexMatrix,
    pub basis: GeneralizedEigenbasis,
    /// Orthonormal vectors `e_0, ..., e_{d-1}`.
    pub sample_basis: Vec<Vec<C64>>,
    /// Sampled indices into `sample_basis`.
    pub indices: Vec<usize>,
    pub beta: f64,
}

impl DynamicalProblem {
    pub fn new(
        a: ComplexMatrix,
        basis: GeneralizedEigenbasis,
        sample_basis: Vec<Vec<C64>>,
        indices: Vec<usize>,
        beta: f64,
    ) -> Result<Self> {
        let p = Self { a, basis, sample_basis, indices, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn dimension(&self) -> usize {
        self.a.rows()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.a.rows();
        if !self.a.is_square() || d == 0 {
            return contract("A must be a nonempty square matrix");
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return contract(format!("beta must be positive, got {}", self.beta));
        }
        self.basis.check_against(&self.a)?;
        if self.sample_basis.len() != d || self.sample_basis.iter().any(|e| e.len() != d) {
            return contract(format!("sample basis must be {d} vectors of length {d}"));
        }
        for (i, ei) in self.sample_basis.iter().enumerate() {
            for (j, ej) in self.sample_basis.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                if (inner(ei, ej) - want).norm() > 1e-9 {
                    return contract("sample basis is not orthonormal");
                }
            }
        }
        if self.indices.is_empty() {
            return contract("the sampled index set must be nonempty");
        }
        for (k, &s) in self.indices.iter().enumerate() {
            if s >= d {
                return contract(format!("sample index {s} out of range for dimension {d}"));
            }
            if self.indices[..k].contains(&s) {
                return contract(format!("duplicate sample index {s}"));
            }
        }
        Ok(())
    }

    /// `min |e^{beta l1} - e^{beta l2}|` over distinct eigenvalues; positive
    /// iff the symbol separates the spectrum.
    pub fn symbol_separation(&self) -> f64 {
        let vals: Vec<C64> = self.basis.spectrum().iter().map(|l| (l * self.beta).exp()).collect();
        let mut best = f64::INFINITY;
        for (i, a) in vals.iter().enumerate() {
            for b in &vals[i + 1..] {
                best = best.min((a - b).norm());
            }
        }
        best
    }
}

/// `e^{beta A}`.
pub fn build_propagator(prob: &DynamicalProblem) -> Result<ComplexMatrix> {
    let scaled = prob.a.scale(C64::new(prob.beta, 0.0));
    let norm = scaled.norm_one();
    if norm > MAX_PROPAGATOR_NORM {
        return contract(format!("||beta A||_1 = {norm} exceeds {MAX_PROPAGATOR_NORM}"));
    }
    matrix_exponential(&scaled)
}

fn sample_rows(propagator: &ComplexMatrix, prob: &DynamicalProblem, x0: &[C64], l_max: usize) -> Vec<Vec<C64>> {
    let mut x = x0.to_vec();
    let mut rows = Vec::with_capacity(l_max + 1);
    for l in 0..=l_max {
        if l > 0 {
            x = propagator.mul_vec(&x);
        }
        rows.push(prob.indices.iter().map(|&s| inner(&x, &prob.sample_basis[s])).collect());
    }
    rows
}

/// `y_l(s) = <B^l x0, e_s>` by repeated application of `B`.
pub fn dynamical_measure(prob: &DynamicalProblem, x0: &[C64], l_max: usize) -> Result<MeasurementRecord> {
    if x0.len() != prob.dimension() {
        return contract(format!("x0 has length {}, expected {}", x0.len(), prob.dimension()));
    }
    let b = build_propagator(prob)?;
    MeasurementRecord::from_rows(&sample_rows(&b, prob, x0, l_max))
}

/// The unique eigenvalue with `|e^{beta lambda} - z| <= tol`.
pub fn dynamical_symbol_inverse(z: C64, prob: &DynamicalProblem, tol: f64) -> Result<C64> {
    let hits: Vec<C64> =
        prob.basis.spectrum().into_iter().filter(|l| ((l * prob.beta).exp() - z).norm() <= tol).collect();
    match hits.len() {
        0 => Err(PronyError::SpuriousRoot { root: z }),
        1 => Ok(hits[0]),
        count => Err(PronyError::NotInjective { value: z, count }),
    }
}

/// Every eigenvector has a nonzero projection onto the sampled span.
pub fn check_observability(prob: &DynamicalProblem) -> bool {
    prob.basis.chains.iter().all(|c| {
        let v = &c.chain[0];
        let proj: f64 = prob.indices.iter().map(|&s| inner(v, &prob.sample_basis[s]).norm_sqr()).sum();
        proj.sqrt() > OBSERVABILITY_TOL
    })
}

/// Recovery instance with a precomputed propagator.
#[derive(Debug, Clone)]
pub struct DynamicalInstance {
    problem: DynamicalProblem,
    propagator: ComplexMatrix,
}

impl DynamicalInstance {
    pub fn new(problem: DynamicalProblem) -> Result<Self> {
        problem.validate()?;
        let propagator = build_propagator(&problem)?;
        Ok(Self { problem, propagator })
    }

    pub fn problem(&self) -> &DynamicalProblem {
        &self.problem
    }

    pub fn propagator(&self) -> &ComplexMatrix {
        &self.propagator
    }

    /// `x0 = sum c_{lambda m} x_lambda^m`.
    pub fn initial_state(&self, model: &SparseSignalModel<C64>) -> Result<Vec<C64>> {
        let d = self.problem.dimension();
        let mut x0 = vec![C64::new(0.0, 0.0); d];
        for m in &model.modes {
            let vecs = self.problem.basis.vectors_for(m.gamma);
            if vecs.is_empty() || m.coeffs.len() > vecs.len() {
                return contract(format!("mode {} does not match the eigenbasis", m.gamma));
            }
            for (c, v) in m.coeffs.iter().zip(vecs) {
                for (xi, vi) in x0.iter_mut().zip(v) {
                    *xi += c * vi;
                }
            }
        }
        Ok(x0)
    }

    pub fn measure(&self, model: &SparseSignalModel<C64>, l_max: usize) -> Result<MeasurementRecord> {
        let x0 = self.initial_state(model)?;
        MeasurementRecord::from_rows(&sample_rows(&self.propagator, &self.problem, &x0, l_max))
    }
}

impl SpectralInstance for DynamicalInstance {
    type Point = C64;

    fn symbol(&self, p: &C64) -> C64 {
        (p * self.problem.beta).exp()
    }

    fn symbol_inverse(&self, z: C64, tol: f64) -> Result<C64> {
        dynamical_symbol_inverse(z, &self.problem, tol)
    }

    fn omega_contains(&self, p: &C64) -> bool {
        self.problem.basis.chains.iter().any(|c| c.lambda == *p)
    }

    fn distance(&self, a: &C64, b: &C64) -> f64 {
        (a - b).norm()
    }

    fn order(&self, a: &C64, b: &C64) -> Ordering {
        a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
    }

    fn mode_dimension(&self) -> usize {
        self.problem.basis.spectrum().iter().map(|&l| self.problem.basis.vectors_for(l).len()).max().unwrap_or(1)
    }

    fn basis_len(&self, p: &C64) -> usize {
        self.problem.basis.vectors_for(*p).len()
    }

    fn channels(&self) -> usize {
        self.problem.indices.len()
    }

    fn coefficient_system(&self, points: &[C64], l_max: usize) -> Result<ComplexMatrix> {
        let mut cols: Vec<Vec<C64>> = Vec::new();
        for p in points {
            let vecs = self.problem.basis.vectors_for(*p);
            if vecs.is_empty() {
                return contract(format!("{p} is not an eigenvalue of A"));
            }
            for v in vecs {
                cols.push(sample_rows(&self.propagator, &self.problem, v, l_max).concat());
            }
        }
        ComplexMatrix::from_columns(&cols)
    }
}

/// Model with one coefficient vector per listed eigenvalue.
pub fn dynamical_model(modes: &[(C64, Vec<C64>)]) -> SparseSignalModel<C64> {
    SparseSignalModel::new(modes.iter().map(|(l, c)| Mode { gamma: *l, coeffs: c.clone() }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn diag_problem(lambdas: &[C64], sample: Vec<Vec<C64>>, indices: Vec<usize>, beta: f64) -> DynamicalProblem {
        DynamicalProblem::new(
            ComplexMatrix::diagonal(lambdas),
            GeneralizedEigenbasis::standard(lambdas),
            sample,
            indices,
            beta,
        )
        .unwrap()
    }

    #[test]
    fn propagator_examples() {
        let p = diag_problem(&[c(0.0, 0.0); 2], standard_basis(2), vec![0], 3.7);
        assert!(build_propagator(&p).unwrap().max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);

        let p = diag_problem(&[c(0.0, PI), c(0.0, 0.0)], standard_basis(2), vec![0], 1.0);
        let want = ComplexMatrix::diagonal(&[c(-1.0, 0.0), c(1.0, 0.0)]);
        assert!(build_propagator(&p).unwrap().max_abs_diff(&want) < 1e-14);

        let lambdas: Vec<C64> = (0..4).map(|k| c(0.0, TAU / 4.0 * k as f64)).collect();
        let p = diag_problem(&lambdas, standard_basis(4), vec![0], 1.0);
        let want = ComplexMatrix::diagonal(&[c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)]);
        assert!(build_propagator(&p).unwrap().max_abs_diff(&want) < 1e-14);
    }

    #[test]
    fn propagator_norm_guard() {
        let p = diag_problem(&[c(60.0, 0.0)], standard_basis(1), vec![0], 1.0);
        assert!(build_propagator(&p).is_err());
    }

    #[test]
    fn measure_examples() {
        let p = diag_problem(&[c(0.0, 0.0); 2], standard_basis(2), vec![0], 1.0);
        let zero = dynamical_measure(&p, &[c(0.0, 0.0); 2], 3).unwrap();
        assert_eq!(zero.max_modulus(), 0.0);
        let y = dynamical_measure(&p, &[c(1.0, 0.0), c(0.0, 0.0)], 2).unwrap();
        for l in 0..=2 {
            assert!((y.get(l, 0) - c(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn on_grid_single_fourier_mode_is_geometric() {
        // x0 = delta_k, sampled against Fourier vector e_0: y_l = e^{2 pi i k l / d} / sqrt(d)
        let d = 4;
        let lambdas: Vec<C64> = (0..d).map(|k| c(0.0, TAU * k as f64 / d as f64)).collect();
        let p = diag_problem(&lambdas, fourier_basis(d), vec![0], 1.0);
        let mut x0 = vec![c(0.0, 0.0); d];
        x0[1] = c(1.0, 0.0);
        let y = dynamical_measure(&p, &x0, 7).unwrap();
        for l in 0..=7 {
            let want = C64::from_polar(0.5, TAU * l as f64 / 4.0);
            assert!((y.get(l, 0) - want).norm() < 1e-13);
        }
    }

    #[test]
    fn symbol_inverse_examples() {
        let p = diag_problem(&[c(0.0, 0.0), c(0.0, PI)], standard_basis(2), vec![0], 1.0);
        assert_eq!(dynamical_symbol_inverse(c(1.0, 0.0), &p, 1e-6).unwrap(), c(0.0, 0.0));
        assert_eq!(dynamical_symbol_inverse(c(-1.0, 0.0), &p, 1e-6).unwrap(), c(0.0, PI));
        assert!(matches!(dynamical_symbol_inverse(c(0.0, 1.0), &p, 1e-6), Err(PronyError::SpuriousRoot { .. })));
    }

    #[test]
    fn aliased_beta_is_not_injective() {
        let p = diag_problem(&[c(0.0, 0.0), c(0.0, TAU)], standard_basis(2), vec![0], 1.0);
        assert!(p.symbol_separation() < 1e-12);
        assert!(matches!(
            dynamical_symbol_inverse(c(1.0, 0.0), &p, 1e-6),
            Err(PronyError::NotInjective { count: 2, .. })
        ));
    }

    #[test]
    fn observability_examples() {
        let lambdas = [c(0.0, 0.0), c(0.0, 1.0), c(0.0, 2.0)];
        let p = diag_problem(&lambdas, fourier_basis(3), vec![2], 1.0);
        assert!(check_observability(&p));
        let p = diag_problem(&lambdas, standard_basis(3), vec![1], 1.0);
        assert!(!check_observability(&p));
        let p = diag_problem(&lambdas, standard_basis(3), vec![0, 1, 2], 1.0);
        assert!(check_observability(&p));
    }

    #[test]
    fn jordan_chain_relations_are_checked() {
        let lam = c(0.0, 0.5);
        let a = ComplexMatrix::from_rows(&[vec![lam, c(1.0, 0.0)], vec![c(0.0, 0.0), lam]]).unwrap();
        let good = GeneralizedEigenbasis::new(vec![EigenChain { lambda: lam, chain: standard_basis(2) }]);
        assert!(good.check_against(&a).is_ok());
        let bad = GeneralizedEigenbasis::standard(&[lam, lam]);
        assert!(bad.check_against(&a).is_err());
    }

    #[test]
    fn rejects_bad_setups() {
        let lambdas = [c(0.0, 0.0), c(0.0, 1.0)];
        let a = ComplexMatrix::diagonal(&lambdas);
        let basis = GeneralizedEigenbasis::standard(&lambdas);
        assert!(DynamicalProblem::new(a.clone(), basis.clone(), standard_basis(2), vec![], 1.0).is_err());
        assert!(DynamicalProblem::new(a.clone(), basis.clone(), standard_basis(2), vec![2], 1.0).is_err());
        assert!(DynamicalProblem::new(a.clone(), basis.clone(), standard_basis(2), vec![0], 0.0).is_err());
        let skew = vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(1.0, 0.0), c(1.0, 0.0)]];
        assert!(DynamicalProblem::new(a, basis, skew, vec![0], 1.0).is_err());
    }
}
