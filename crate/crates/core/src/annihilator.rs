//! Block-Hankel annihilator system and the minimal annihilating polynomial.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{contract, PronyError, Result};
use crate::numerics::{least_squares_solve, numerical_rank, polynomial_roots, ComplexMatrix, ComplexPolynomial};

/// Measurements `y_l(s)`: one row per power index `l = 0..=L`, one column
/// per output channel `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<C64>>", into = "Vec<Vec<C64>>")]
pub struct MeasurementRecord {
    values: ComplexMatrix,
}

impl MeasurementRecord {
    pub fn new(values: ComplexMatrix) -> Result<Self> {
        if values.rows() < 2 {
            return contract(format!("a measurement record needs L >= 1, got {} rows", values.rows()));
        }
        if values.cols() < 1 {
            return contract("a measurement record needs at least one channel");
        }
        if !values.is_finite() {
            return contract("measurements must be finite");
        }
        Ok(Self { values })
    }

    /// Single-channel record from a sequence `y_0, ..., y_L`.
    pub fn scalar(samples: &[C64]) -> Result<Self> {
        Self::new(ComplexMatrix::from_fn(samples.len(), 1, |i, _| samples[i]))
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        Self::new(ComplexMatrix::from_rows(rows)?)
    }

    pub fn values(&self) -> &ComplexMatrix {
        &self.values
    }

    /// Largest power index `L`.
    pub fn l_max(&self) -> usize {
        self.values.rows() - 1
    }

    pub fn channels(&self) -> usize {
        self.values.cols()
    }

    pub fn get(&self, l: usize, s: usize) -> C64 {
        self.values[(l, s)]
    }

    /// Row-major flattening, index `l * S + s`.
    pub fn flatten(&self) -> Vec<C64> {
        self.values.as_slice().to_vec()
    }

    pub fn max_modulus(&self) -> f64 {
        crate::numerics::max_modulus(self.values.as_slice())
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self { values: self.values.scale(factor) }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if (self.values.rows(), self.values.cols()) != (other.values.rows(), other.values.cols()) {
            return contract("adding measurement records of different shapes");
        }
        Ok(Self { values: self.values.add(&other.values) })
    }
}

impl TryFrom<Vec<Vec<C64>>> for MeasurementRecord {
    type Error = PronyError;

    fn try_from(rows: Vec<Vec<C64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<MeasurementRecord> for Vec<Vec<C64>> {
    fn from(m: MeasurementRecord) -> Self {
        (0..m.values.rows()).map(|i| m.values.row(i).to_vec()).collect()
    }
}

/// What to do with annihilator roots that have no admissible preimage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpuriousPolicy {
    #[default]
    Error,
    /// Drop the root and record a warning.
    Warn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoveryConfig {
    /// Maximal cardinality of the spectrum.
    pub kappa: usize,
    /// Maximal dimension of a single-point spectral submodule.
    #[serde(rename = "M", default = "default_m")]
    pub m: usize,
    #[serde(default = "defaults::rank_rel_tol")]
    pub rank_rel_tol: f64,
    #[serde(default = "defaults::zero_root_tol")]
    pub zero_root_tol: f64,
    #[serde(default = "defaults::root_match_tol")]
    pub root_match_tol: f64,
    /// Roots closer than this are merged into one multiple root (at most
    /// `M` per cluster).
    #[serde(default = "defaults::cluster_tol")]
    pub cluster_tol: f64,
    /// Modes whose whole coefficient vector is below this are dropped.
    #[serde(default = "defaults::coeff_drop_tol")]
    pub coeff_drop_tol: f64,
    #[serde(default)]
    pub on_spurious: SpuriousPolicy,
}

fn default_m() -> usize {
    1
}

pub mod defaults {
    pub fn rank_rel_tol() -> f64 {
        1e-10
    }
    pub fn zero_root_tol() -> f64 {
        1e-8
    }
    pub fn root_match_tol() -> f64 {
        1e-6
    }
    pub fn cluster_tol() -> f64 {
        1e-2
    }
    pub fn coeff_drop_tol() -> f64 {
        1e-10
    }
}

impl RecoveryConfig {
    pub fn new(kappa: usize, m: usize) -> Self {
        Self {
            kappa,
            m,
            rank_rel_tol: defaults::rank_rel_tol(),
            zero_root_tol: defaults::zero_root_tol(),
            root_match_tol: defaults::root_match_tol(),
            cluster_tol: defaults::cluster_tol(),
            coeff_drop_tol: defaults::coeff_drop_tol(),
            on_spurious: SpuriousPolicy::Error,
        }
    }

    /// Overrides one tolerance by its field name.
    pub fn set_tolerance(&mut self, key: &str, value: f64) -> Result<()> {
        let slot = match key {
            "rank_rel_tol" => &mut self.rank_rel_tol,
            "zero_root_tol" => &mut self.zero_root_tol,
            "root_match_tol" => &mut self.root_match_tol,
            "cluster_tol" => &mut self.cluster_tol,
            "coeff_drop_tol" => &mut self.coeff_drop_tol,
            _ => return contract(format!("unknown tolerance '{key}'")),
        };
        *slot = value;
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        if self.kappa < 1 || self.m < 1 {
            return contract(format!("kappa and M must be >= 1 (kappa = {}, M = {})", self.kappa, self.m));
        }
        let tols = [
            ("rank_rel_tol", self.rank_rel_tol),
            ("zero_root_tol", self.zero_root_tol),
            ("root_match_tol", self.root_match_tol),
            ("cluster_tol", self.cluster_tol),
            ("coeff_drop_tol", self.coeff_drop_tol),
        ];
        for (name, v) in tols {
            if !(v > 0.0 && v.is_finite()) {
                return contract(format!("{name} must be positive and finite, got {v}"));
            }
        }
        Ok(())
    }

    /// Annihilator degree bound `kappa * M`.
    pub fn degree_bound(&self) -> usize {
        self.kappa * self.m
    }

    /// Smallest usable `L = 2 kappa M - 1`.
    pub fn required_l(&self) -> usize {
        2 * self.degree_bound() - 1
    }
}

/// A nonzero root of the annihilator together with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootCluster {
    pub value: C64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnihilatorResult {
    /// Monic minimal annihilator.
    pub poly: ComplexPolynomial,
    /// Distinct nonzero roots.
    pub r_min: Vec<RootCluster>,
    /// All roots with multiplicity, including any near zero.
    pub roots: Vec<C64>,
    pub hankel_rank: usize,
    /// The Hankel rank exceeded `kappa * M` and was capped.
    pub rank_saturated: bool,
    /// `max_k |sum_l a_l y_{l+k}| / max|y|` over every shift the record allows.
    pub annihilation_residual: f64,
}

impl AnnihilatorResult {
    pub fn r_min_values(&self) -> Vec<C64> {
        self.r_min.iter().map(|r| r.value).collect()
    }
}

/// Stacked block-Hankel matrix: row `k * S + s`, column `l` holds
/// `y_{l+k}(s)` for `k = 0..=L-degree`, `l = 0..=degree`.
pub fn build_block_hankel(meas: &MeasurementRecord, degree: usize) -> Result<ComplexMatrix> {
    if degree == 0 {
        return contract("Hankel degree must be at least 1");
    }
    let required = 2 * degree - 1;
    if meas.l_max() < required {
        return Err(PronyError::NotEnoughMeasurements { required, got: meas.l_max() });
    }
    let s_count = meas.channels();
    let blocks = meas.l_max() - degree + 1;
    Ok(ComplexMatrix::from_fn(blocks * s_count, degree + 1, |row, l| {
        let (k, s) = (row / s_count, row % s_count);
        meas.get(l + k, s)
    }))
}

/// Finds the monic annihilator of minimal degree from the rank of the
/// block-Hankel matrix and returns its nonzero roots.
pub fn minimal_annihilator(meas: &MeasurementRecord, cfg: &RecoveryConfig) -> Result<AnnihilatorResult> {
    cfg.validate()?;
    let bound = cfg.degree_bound();
    let hankel = build_block_hankel(meas, bound)?;
    let mut rank = numerical_rank(&hankel, cfg.rank_rel_tol)?;
    let saturated = rank > bound;
    rank = rank.min(bound);

    if rank == 0 {
        return Ok(AnnihilatorResult {
            poly: ComplexPolynomial::one(),
            r_min: Vec::new(),
            roots: Vec::new(),
            hankel_rank: 0,
            rank_saturated: false,
            annihilation_residual: 0.0,
        });
    }

    let lhs = hankel.columns(0..rank);
    let rhs: Vec<C64> = hankel.column(rank).iter().map(|z| -z).collect();
    let mut coeffs = least_squares_solve(&lhs, &rhs)?;
    coeffs.push(C64::new(1.0, 0.0));
    let poly = ComplexPolynomial::new(coeffs)?;
    let roots = polynomial_roots(&poly)?;
    let mut r_min = cluster_roots(&poly, &roots, cfg);
    let zero_mult = roots.len() - r_min.iter().map(|c| c.multiplicity).sum::<usize>();
    if let Some(refined) = refine_against_data(meas, &r_min, zero_mult, cfg.cluster_tol) {
        r_min = refined;
    }
    let annihilation_residual = annihilation_residual(meas, &poly);
    Ok(AnnihilatorResult { poly, r_min, roots, hankel_rank: rank, rank_saturated: saturated, annihilation_residual })
}

/// Relative size of `sum_l a_l y_{l+k}` over all shifts `k` available in
/// the record.
pub fn annihilation_residual(meas: &MeasurementRecord, poly: &ComplexPolynomial) -> f64 {
    let scale = meas.max_modulus();
    if scale == 0.0 {
        return 0.0;
    }
    let deg = poly.degree();
    if deg > meas.l_max() {
        return f64::INFINITY;
    }
    let a = poly.coeffs();
    let mut worst: f64 = 0.0;
    for k in 0..=meas.l_max() - deg {
        for s in 0..meas.channels() {
            let v: C64 = a.iter().enumerate().map(|(l, al)| al * meas.get(l + k, s)).sum();
            worst = worst.max(v.norm());
        }
    }
    worst / scale
}

/// Groups nearby nonzero roots into multiple roots of size at most `M` and
/// refines each group on the matching derivative.
fn cluster_roots(poly: &ComplexPolynomial, roots: &[C64], cfg: &RecoveryConfig) -> Vec<RootCluster> {
    let mut nonzero: Vec<C64> = roots.iter().copied().filter(|z| z.norm() > cfg.zero_root_tol).collect();
    nonzero.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut used = vec![false; nonzero.len()];
    let mut out = Vec::new();
    for i in 0..nonzero.len() {
        if used[i] {
            continue;
        }
        let mut members: Vec<(usize, f64)> = (i..nonzero.len())
            .filter(|&j| !used[j])
            .map(|j| (j, (nonzero[j] - nonzero[i]).norm()))
            .filter(|&(_, d)| d <= cfg.cluster_tol)
            .collect();
        members.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        members.truncate(cfg.m.max(1));
        for &(j, _) in &members {
            used[j] = true;
        }
        let mult = members.len();
        let centroid = members.iter().map(|&(j, _)| nonzero[j]).sum::<C64>() / mult as f64;
        let value = if mult > 1 { refine_multiple(poly, centroid, mult, cfg.cluster_tol) } else { centroid };
        out.push(RootCluster { value, multiplicity: mult });
    }
    out
}

// A root of multiplicity m is a simple root of the (m-1)-th derivative.
fn refine_multiple(poly: &ComplexPolynomial, start: C64, mult: usize, radius: f64) -> C64 {
    let mut d = poly.clone();
    for _ in 1..mult {
        match d.derivative() {
            Some(next) => d = next,
            None => return start,
        }
    }
    let Some(dd) = d.derivative() else { return start };
    let mut z = start;
    let mut fz = d.eval(z).norm();
    for _ in 0..8 {
        let slope = dd.eval(z);
        if slope.norm() == 0.0 {
            break;
        }
        let cand = z - d.eval(z) / slope;
        let fc = d.eval(cand).norm();
        if !(fc < fz) || (cand - start).norm() > radius {
            break;
        }
        z = cand;
        fz = fc;
    }
    z
}

const FIT_ITERATIONS: usize = 30;

// Sequences spanned by a root z of multiplicity m are l^k z^l, k < m; a
// root at zero contributes unit impulses.
fn fit_basis(clusters: &[RootCluster], nodes: &[C64], zero_mult: usize, l: usize) -> Vec<C64> {
    let mut row = Vec::new();
    for (c, z) in clusters.iter().zip(nodes) {
        let zl = z.powu(l as u32);
        for k in 0..c.multiplicity {
            row.push(zl * (l as f64).powi(k as i32));
        }
    }
    for k in 0..zero_mult {
        row.push(C64::new(if l == k { 1.0 } else { 0.0 }, 0.0));
    }
    row
}

/// Gauss-Newton on the exponential-polynomial model of the measurements,
/// moving each cluster value by at most `radius`. Returns `None` when the
/// system is underdetermined or the fit does not improve.
fn refine_against_data(
    meas: &MeasurementRecord,
    clusters: &[RootCluster],
    zero_mult: usize,
    radius: f64,
) -> Option<Vec<RootCluster>> {
    let n = clusters.len();
    if n == 0 {
        return None;
    }
    let (rows, s_count) = (meas.l_max() + 1, meas.channels());
    let k: usize = clusters.iter().map(|c| c.multiplicity).sum::<usize>() + zero_mult;
    let unknowns = n + k * s_count;
    if rows * s_count < unknowns {
        return None;
    }
    let start: Vec<C64> = clusters.iter().map(|c| c.value).collect();
    let y = meas.flatten();

    let amplitudes = |nodes: &[C64]| -> Option<ComplexMatrix> {
        let basis = ComplexMatrix::from_fn(rows, k, |l, j| fit_basis(clusters, nodes, zero_mult, l)[j]);
        let cols: Vec<Vec<C64>> =
            (0..s_count).map(|s| least_squares_solve(&basis, &meas.values().column(s))).collect::<Result<_>>().ok()?;
        ComplexMatrix::from_columns(&cols).ok()
    };
    let residual = |nodes: &[C64], w: &ComplexMatrix| -> Vec<C64> {
        let mut r = y.clone();
        for l in 0..rows {
            let b = fit_basis(clusters, nodes, zero_mult, l);
            for s in 0..s_count {
                r[l * s_count + s] -= b.iter().enumerate().map(|(j, v)| v * w[(j, s)]).sum::<C64>();
            }
        }
        r
    };

    let mut nodes = start.clone();
    let mut w = amplitudes(&nodes)?;
    let mut r = residual(&nodes, &w);
    let initial = crate::numerics::vec_norm(&r);
    let mut best = initial;
    for _ in 0..FIT_ITERATIONS {
        if best == 0.0 {
            break;
        }
        let jac = ComplexMatrix::from_fn(rows * s_count, unknowns, |row, col| {
            let (l, s) = (row / s_count, row % s_count);
            if col < n {
                // d/dz of sum_k w_k l^k z^l
                let z = nodes[col];
                if l == 0 {
                    return C64::new(0.0, 0.0);
                }
                let offset: usize = clusters[..col].iter().map(|c| c.multiplicity).sum();
                let dz = z.powu(l as u32 - 1) * l as f64;
                (0..clusters[col].multiplicity).map(|m| dz * (l as f64).powi(m as i32) * w[(offset + m, s)]).sum()
            } else {
                let (j, ss) = ((col - n) / s_count, (col - n) % s_count);
                if ss == s {
                    fit_basis(clusters, &nodes, zero_mult, l)[j]
                } else {
                    C64::new(0.0, 0.0)
                }
            }
        });
        let step = crate::numerics::least_squares_solve_with(&jac, &r, 1e-15).ok()?;
        let cand_nodes: Vec<C64> = nodes.iter().zip(&step).map(|(z, d)| z + d).collect();
        if cand_nodes.iter().zip(&start).any(|(a, b)| (a - b).norm() > radius) {
            break;
        }
        let cand_w = amplitudes(&cand_nodes)?;
        let cand_r = residual(&cand_nodes, &cand_w);
        let norm = crate::numerics::vec_norm(&cand_r);
        if !(norm < best) {
            break;
        }
        let gain = best / norm;
        nodes = cand_nodes;
        w = cand_w;
        r = cand_r;
        best = norm;
        if gain < 1.0 + 1e-3 {
            break;
        }
    }
    if !(best < initial) {
        return None;
    }
    Some(clusters.iter().zip(nodes).map(|(c, value)| RootCluster { value, multiplicity: c.multiplicity }).collect())
}
