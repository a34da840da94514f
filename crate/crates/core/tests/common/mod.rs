//! Seeded generators for random test instances.
#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

use prony::channel::{torus_distance, ChannelModel, ChannelPath, TfShift};
use prony::classic::{circle_distance, Frequency};
use prony::confluent::PolynomialMode;
use prony::dynamical::{standard_basis, DynamicalProblem, GeneralizedEigenbasis};
use prony::numerics::svd;
use prony::{ComplexMatrix, Mode, SparseSignalModel, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Complex number with modulus uniform in `[lo, hi]` and uniform phase.
pub fn coeff(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> C64 {
    C64::from_polar(rng.random_range(lo..=hi), rng.random_range(0.0..TAU))
}

pub fn gaussian_complex(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// `n` frequencies with pairwise circle distance at least `sep`.
pub fn separated_frequencies(rng: &mut ChaCha8Rng, n: usize, sep: f64) -> Vec<Frequency> {
    loop {
        let f: Vec<Frequency> = (0..n).map(|_| Frequency::new(rng.random_range(0.0..1.0)).unwrap()).collect();
        let ok = f.iter().enumerate().all(|(i, a)| f[i + 1..].iter().all(|b| circle_distance(*a, *b) >= sep));
        if ok {
            return f;
        }
    }
}

pub struct ClassicCase {
    pub kappa: usize,
    pub model: SparseSignalModel<Frequency>,
}

/// `kappa` in `1..=max_kappa`, `kappa` modes, separation `sep`, `|c|` in `[0.1, 10]`.
pub fn classic_case(rng: &mut ChaCha8Rng, max_kappa: usize, sep: f64) -> ClassicCase {
    let kappa = rng.random_range(1..=max_kappa);
    let freqs = separated_frequencies(rng, kappa, sep);
    let modes = freqs.into_iter().map(|g| Mode { gamma: g, coeffs: vec![coeff(rng, 0.1, 10.0)] }).collect();
    ClassicCase { kappa, model: SparseSignalModel::new(modes) }
}

pub struct ConfluentCase {
    pub kappa: usize,
    pub max_degree: usize,
    pub modes: Vec<PolynomialMode>,
}

/// `kappa <= max_kappa` modes with amplitude degree up to `D <= max_degree`;
/// each amplitude has a leading coefficient of modulus in `[0.5, 2]`.
pub fn confluent_case(rng: &mut ChaCha8Rng, max_kappa: usize, max_degree: usize, sep: f64) -> ConfluentCase {
    let kappa = rng.random_range(1..=max_kappa);
    let d = rng.random_range(0..=max_degree);
    let freqs = separated_frequencies(rng, kappa, sep);
    let modes = freqs
        .into_iter()
        .map(|g| {
            let deg = rng.random_range(0..=d);
            let q = (0..=deg).map(|_| coeff(rng, 0.5, 2.0)).collect();
            PolynomialMode { gamma: g, q_coeffs: q }
        })
        .collect();
    ConfluentCase { kappa, max_degree: d, modes }
}

/// Unitary matrix from the SVD of a random complex matrix.
pub fn random_unitary(rng: &mut ChaCha8Rng, d: usize) -> ComplexMatrix {
    let m = ComplexMatrix::from_fn(d, d, |_, _| gaussian_complex(rng));
    svd(&m).unwrap().u
}

pub struct DynamicalCase {
    pub problem: DynamicalProblem,
    pub model: SparseSignalModel<C64>,
}

/// `A = Q diag(lambda) Q^*` on `C^d` with lambda on a jittered grid of
/// frequencies and mild damping, sampled in the standard basis at `n_idx`
/// random indices; `support` random eigenvalues carry coefficients.
pub fn dynamical_case(rng: &mut ChaCha8Rng, d: usize, max_support: usize, n_idx: usize) -> DynamicalCase {
    let lambdas: Vec<C64> = (0..d)
        .map(|k| {
            let omega = -PI + TAU * (k as f64 + 0.5 + rng.random_range(-0.3..0.3)) / d as f64;
            C64::new(-rng.random_range(0.0..0.05), omega)
        })
        .collect();
    let q = random_unitary(rng, d);
    let a = q.matmul(&ComplexMatrix::diagonal(&lambdas)).matmul(&q.conj_transpose());
    let vectors: Vec<Vec<C64>> = (0..d).map(|j| q.column(j)).collect();
    let basis = GeneralizedEigenbasis::diagonal(&lambdas, &vectors);
    let mut idx: Vec<usize> = (0..d).collect();
    for i in 0..n_idx {
        let j = rng.random_range(i..d);
        idx.swap(i, j);
    }
    idx.truncate(n_idx);
    let problem = DynamicalProblem::new(a, basis, standard_basis(d), idx, 1.0).unwrap();
    let support = rng.random_range(1..=max_support);
    let mut pick: Vec<usize> = (0..d).collect();
    for i in 0..support {
        let j = rng.random_range(i..d);
        pick.swap(i, j);
    }
    let modes =
        pick[..support].iter().map(|&k| Mode { gamma: lambdas[k], coeffs: vec![coeff(rng, 0.5, 2.0)] }).collect();
    DynamicalCase { problem, model: SparseSignalModel::new(modes) }
}

/// `n <= max_paths` paths in `[0, 1)^2` with torus separation `sep` and
/// gains of modulus in `[0.5, 2]`.
pub fn channel_case(rng: &mut ChaCha8Rng, max_paths: usize, sep: f64) -> ChannelModel {
    let n = rng.random_range(1..=max_paths);
    loop {
        let pts: Vec<TfShift> =
            (0..n).map(|_| TfShift::new(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0))).collect();
        if pts.iter().enumerate().all(|(i, a)| pts[i + 1..].iter().all(|b| torus_distance(*a, *b) >= sep)) {
            let paths = pts.into_iter().map(|g| ChannelPath { gamma: g, c: coeff(rng, 0.5, 2.0) }).collect();
            return ChannelModel::new(paths).unwrap();
        }
    }
}

/// Largest distance from each recovered root to the nearest `h(F)` value.
pub fn max_root_offset(roots: &[C64], h_of_f: &[C64]) -> f64 {
    roots.iter().map(|r| h_of_f.iter().map(|h| (r - h).norm()).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
}
