//! Instance-independent spectral recovery: roots to spectral points, then
//! spectral points to coefficients.

use std::cmp::Ordering;
use std::fmt::Debug;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::annihilator::{minimal_annihilator, AnnihilatorResult, MeasurementRecord, RecoveryConfig, SpuriousPolicy};
use crate::error::{contract, PronyError, Result};
use crate::numerics::{least_squares_solve, numerical_rank, vec_norm, ComplexMatrix};

/// Everything recovery needs to know about a concrete problem class: the
/// symbol `h` and its inverse on the admissible set, the coordinate
/// geometry, and the linear system for the coefficients.
pub trait SpectralInstance {
    type Point: Clone + Debug + PartialEq;

    fn symbol(&self, p: &Self::Point) -> C64;

    /// Preimage of `z` under the symbol, or an error when none exists
    /// within `tol`.
    fn symbol_inverse(&self, z: C64, tol: f64) -> Result<Self::Point>;

    fn omega_contains(&self, p: &Self::Point) -> bool;

    fn distance(&self, a: &Self::Point, b: &Self::Point) -> f64;

    /// Deterministic total order used for reporting.
    fn order(&self, a: &Self::Point, b: &Self::Point) -> Ordering;

    /// Upper bound `M` on the dimension of a single-point submodule.
    fn mode_dimension(&self) -> usize;

    /// Number of basis elements attached to `p`.
    fn basis_len(&self, _p: &Self::Point) -> usize {
        self.mode_dimension()
    }

    /// Output channel count `S`.
    fn channels(&self) -> usize;

    /// Matrix mapping the stacked coefficients of `points` to the
    /// row-major flattened measurements `y_l(s)`, `l = 0..=l_max`.
    fn coefficient_system(&self, points: &[Self::Point], l_max: usize) -> Result<ComplexMatrix>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mode<P> {
    pub gamma: P,
    pub coeffs: Vec<C64>,
}

/// `x = sum_gamma sum_m c_{gamma m} x_gamma^m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseSignalModel<P> {
    pub modes: Vec<Mode<P>>,
}

impl<P> Default for SparseSignalModel<P> {
    fn default() -> Self {
        Self { modes: Vec::new() }
    }
}

impl<P: Clone> SparseSignalModel<P> {
    pub fn new(modes: Vec<Mode<P>>) -> Self {
        Self { modes }
    }

    pub fn points(&self) -> Vec<P> {
        self.modes.iter().map(|m| m.gamma.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Checks the model invariants against an instance: distinct points
    /// inside the admissible set, nonzero coefficient vectors of
    /// admissible length.
    pub fn validate<I: SpectralInstance<Point = P>>(&self, inst: &I) -> Result<()> {
        for (i, m) in self.modes.iter().enumerate() {
            if !inst.omega_contains(&m.gamma) {
                return contract(format!("mode {i} lies outside the admissible set"));
            }
            if m.coeffs.is_empty() || m.coeffs.len() > inst.basis_len(&m.gamma) {
                return contract(format!(
                    "mode {i} has {} coefficients, allowed 1..={}",
                    m.coeffs.len(),
                    inst.basis_len(&m.gamma)
                ));
            }
            if m.coeffs.iter().all(|c| c.norm() == 0.0) {
                return contract(format!("mode {i} has an all-zero coefficient vector"));
            }
            for other in &self.modes[i + 1..] {
                if inst.distance(&m.gamma, &other.gamma) == 0.0 {
                    return contract("spectral points must be pairwise distinct");
                }
            }
        }
        Ok(())
    }
}

/// Non-fatal findings attached to a recovery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Warning {
    SpuriousRoot { root: C64, reason: String },
    NonUniqueCoefficients { rank: usize, unknowns: usize },
    RankSaturated { rank: usize, bound: usize },
    LargeResidual { which: String, value: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientFit<P> {
    pub model: SparseSignalModel<P>,
    /// `||C c - y|| / ||y||` (0 for a zero record).
    pub residual: f64,
    pub rank: usize,
    pub unknowns: usize,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recovery<P> {
    pub model: SparseSignalModel<P>,
    pub annihilator: AnnihilatorResult,
    pub coefficient_residual: f64,
    pub coefficient_rank: usize,
    pub warnings: Vec<Warning>,
}

impl<P> Recovery<P> {
    pub fn is_clean(&self) -> bool {
        self.warnings.is_empty()
    }
}

/// Relative residual above which a fit is reported as suspicious.
pub const RESIDUAL_WARN_TOL: f64 = 1e-6;

fn invert_root<I: SpectralInstance>(inst: &I, root: C64, cfg: &RecoveryConfig) -> Result<I::Point> {
    let p = inst.symbol_inverse(root, cfg.root_match_tol)?;
    if !inst.omega_contains(&p) || (inst.symbol(&p) - root).norm() > cfg.root_match_tol {
        return Err(PronyError::SpuriousRoot { root });
    }
    Ok(p)
}

/// Maps the nonzero annihilator roots back to spectral points, sorted by
/// the instance order. Any root without an admissible preimage is an error.
pub fn recover_spectrum<I: SpectralInstance>(
    ann: &AnnihilatorResult,
    inst: &I,
    cfg: &RecoveryConfig,
) -> Result<Vec<I::Point>> {
    let mut points = ann.r_min.iter().map(|r| invert_root(inst, r.value, cfg)).collect::<Result<Vec<_>>>()?;
    points.sort_by(|a, b| inst.order(a, b));
    Ok(points)
}

/// Like [`recover_spectrum`] but collects unmatched roots as warnings.
pub fn recover_spectrum_lenient<I: SpectralInstance>(
    ann: &AnnihilatorResult,
    inst: &I,
    cfg: &RecoveryConfig,
) -> (Vec<I::Point>, Vec<Warning>) {
    let mut points = Vec::new();
    let mut warnings = Vec::new();
    for r in &ann.r_min {
        match invert_root(inst, r.value, cfg) {
            Ok(p) => points.push(p),
            Err(e) => warnings.push(Warning::SpuriousRoot { root: r.value, reason: e.to_string() }),
        }
    }
    points.sort_by(|a, b| inst.order(a, b));
    // distinct roots can invert to the same point when the symbol is not injective
    points.dedup_by(|a, b| inst.distance(a, b) == 0.0);
    (points, warnings)
}

/// Least-squares solve of the instance coefficient system for the given
/// spectrum; modes whose coefficients all vanish are dropped.
pub fn recover_coefficients<I: SpectralInstance>(
    points: &[I::Point],
    meas: &MeasurementRecord,
    inst: &I,
    cfg: &RecoveryConfig,
) -> Result<CoefficientFit<I::Point>> {
    if meas.channels() != inst.channels() {
        return contract(format!("record has {} channels, instance expects {}", meas.channels(), inst.channels()));
    }
    let y = meas.flatten();
    let ynorm = vec_norm(&y);
    if points.is_empty() {
        return Ok(CoefficientFit {
            model: SparseSignalModel::default(),
            residual: if ynorm == 0.0 { 0.0 } else { 1.0 },
            rank: 0,
            unknowns: 0,
            warnings: Vec::new(),
        });
    }
    let system = inst.coefficient_system(points, meas.l_max())?;
    if system.rows() != y.len() {
        return contract("coefficient system row count does not match the record");
    }
    let unknowns = system.cols();
    let rank = numerical_rank(&system, cfg.rank_rel_tol)?;
    let c = least_squares_solve(&system, &y)?;
    let fitted = system.mul_vec(&c);
    let res: Vec<C64> = fitted.iter().zip(&y).map(|(a, b)| a - b).collect();
    let residual = if ynorm == 0.0 { vec_norm(&res) } else { vec_norm(&res) / ynorm };

    let mut warnings = Vec::new();
    if rank < unknowns {
        warnings.push(Warning::NonUniqueCoefficients { rank, unknowns });
    }
    let mut modes = Vec::with_capacity(points.len());
    let mut offset = 0;
    for p in points {
        let n = inst.basis_len(p);
        let coeffs = c[offset..offset + n].to_vec();
        offset += n;
        if coeffs.iter().any(|z| z.norm() >= cfg.coeff_drop_tol) {
            modes.push(Mode { gamma: p.clone(), coeffs });
        }
    }
    Ok(CoefficientFit { model: SparseSignalModel { modes }, residual, rank, unknowns, warnings })
}

/// Full pipeline: minimal annihilator, spectrum, coefficients.
pub fn run_recovery<I: SpectralInstance>(
    meas: &MeasurementRecord,
    inst: &I,
    cfg: &RecoveryConfig,
) -> Result<Recovery<I::Point>> {
    if meas.channels() != inst.channels() {
        return contract(format!("record has {} channels, instance expects {}", meas.channels(), inst.channels()));
    }
    let ann = minimal_annihilator(meas, cfg)?;
    let (points, mut warnings) = match cfg.on_spurious {
        SpuriousPolicy::Error => (recover_spectrum(&ann, inst, cfg)?, Vec::new()),
        SpuriousPolicy::Warn => recover_spectrum_lenient(&ann, inst, cfg),
    };
    let fit = recover_coefficients(&points, meas, inst, cfg)?;
    warnings.extend(fit.warnings.iter().cloned());
    if fit.residual > RESIDUAL_WARN_TOL {
        warnings.push(Warning::LargeResidual { which: "coefficients".into(), value: fit.residual });
    }
    if ann.annihilation_residual > RESIDUAL_WARN_TOL {
        warnings.push(Warning::LargeResidual { which: "annihilation".into(), value: ann.annihilation_residual });
    }
    let bound = cfg.degree_bound();
    if ann.rank_saturated || (ann.hankel_rank == bound && !warnings.is_empty()) {
        warnings.insert(0, Warning::RankSaturated { rank: ann.hankel_rank, bound });
    }
    Ok(Recovery {
        model: fit.model,
        annihilator: ann,
        coefficient_residual: fit.residual,
        coefficient_rank: fit.rank,
        warnings,
    })
}

/// Thresholds for [`validate_symbol`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolChecks {
    /// Pairwise separation of symbol values must exceed this.
    pub separation_tol: f64,
    /// `|h|` must exceed this everywhere on the grid.
    pub modulus_tol: f64,
    /// Largest allowed `dist(h^{-1}(h(gamma)), gamma)`.
    pub round_trip_tol: f64,
    /// Tolerance handed to the symbol inverse.
    pub inverse_tol: f64,
}

impl Default for SymbolChecks {
    fn default() -> Self {
        Self { separation_tol: 1e-12, modulus_tol: 1e-12, round_trip_tol: 1e-9, inverse_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub grid_points: usize,
    pub min_separation: f64,
    pub min_modulus: f64,
    pub max_round_trip_error: f64,
    pub injective: bool,
    pub nonvanishing: bool,
    pub round_trip_ok: bool,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.injective && self.nonvanishing && self.round_trip_ok
    }
}

/// Empirical check of the recovery hypotheses on a grid: `h` one-to-one,
/// bounded away from zero, and inverted by `symbol_inverse`.
pub fn validate_symbol<I: SpectralInstance>(inst: &I, grid: &[I::Point], checks: &SymbolChecks) -> ValidationReport {
    let values: Vec<C64> = grid.iter().map(|p| inst.symbol(p)).collect();
    let mut min_sep = f64::INFINITY;
    for (i, a) in values.iter().enumerate() {
        for b in &values[i + 1..] {
            min_sep = min_sep.min((a - b).norm());
        }
    }
    let min_mod = values.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    let max_rt = grid
        .iter()
        .zip(&values)
        .map(|(p, &z)| match inst.symbol_inverse(z, checks.inverse_tol) {
            Ok(q) => inst.distance(p, &q),
            Err(_) => f64::INFINITY,
        })
        .fold(0.0, f64::max);
    ValidationReport {
        grid_points: grid.len(),
        min_separation: min_sep,
        min_modulus: min_mod,
        max_round_trip_error: max_rt,
        injective: min_sep > checks.separation_tol,
        nonvanishing: min_mod > checks.modulus_tol,
        round_trip_ok: max_rt <= checks.round_trip_tol,
    }
}
