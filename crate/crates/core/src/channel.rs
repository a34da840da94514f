//! Identification of time-varying channels `X = sum c_gamma pi_gamma`,
//! `gamma = (t, nu) in [0, 1)^2`, probed with time-frequency shifts of the
//! Gaussian `u(r) = e^{-r^2}`.
//!
//! `pi_(t, nu) u (r) = e^{2 pi i r nu} u(r + t)`; the character of `gamma`
//! at `g = (x, xi)` is `e^{2 pi i (x nu - t xi)}`.

use std::cmp::Ordering;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::annihilator::{minimal_annihilator, MeasurementRecord, RecoveryConfig};
use crate::error::{contract, PronyError, Result};
use crate::numerics::{least_squares_solve, numerical_rank, vec_norm, ComplexMatrix};
use crate::recovery::{Mode, SparseSignalModel, SpectralInstance, Warning, RESIDUAL_WARN_TOL};
use crate::shift::{ShiftCombination, ShiftTerm};

/// A point `(t, nu)` of the time-frequency plane. Serialized as `[t, nu]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct TfShift {
    pub t: f64,
    pub nu: f64,
}

impl TfShift {
    pub const ORIGIN: TfShift = TfShift { t: 0.0, nu: 0.0 };

    pub fn new(t: f64, nu: f64) -> Self {
        Self { t, nu }
    }

    pub fn in_unit_square(&self) -> bool {
        (0.0..1.0).contains(&self.t) && (0.0..1.0).contains(&self.nu)
    }
}

impl From<[f64; 2]> for TfShift {
    fn from(v: [f64; 2]) -> Self {
        Self { t: v[0], nu: v[1] }
    }
}

impl From<TfShift> for [f64; 2] {
    fn from(s: TfShift) -> Self {
        [s.t, s.nu]
    }
}

fn wrap_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Euclidean distance on the torus `R^2 / Z^2`.
pub fn torus_distance(a: TfShift, b: TfShift) -> f64 {
    wrap_dist(a.t, b.t).hypot(wrap_dist(a.nu, b.nu))
}

/// `gamma(x, xi) = e^{2 pi i (x nu_gamma - t_gamma xi)}`.
pub fn eval_character(gamma: TfShift, g: TfShift) -> C64 {
    C64::from_polar(1.0, TAU * (g.t * gamma.nu - gamma.t * g.nu))
}

/// `<pi_gamma pi_s u, pi_s u>` for `u(r) = e^{-r^2}`:
/// `sqrt(pi/2) e^{-t^2/2 - pi^2 nu^2/2 - i pi t nu} e^{2 pi i (t nu_s - t_s nu)}`.
pub fn gaussian_cross_term(gamma: TfShift, s: TfShift) -> C64 {
    let (t, nu) = (gamma.t, gamma.nu);
    let modulus = FRAC_PI_2.sqrt() * (-0.5 * t * t - 0.5 * PI * PI * nu * nu).exp();
    let phase = -PI * t * nu + TAU * (t * s.nu - s.t * nu);
    C64::from_polar(modulus, phase)
}

fn default_shift() -> ShiftCombination<TfShift> {
    ShiftCombination::new(vec![
        ShiftTerm { b: C64::new(1.0, 0.0), g: TfShift::new(0.0, -1.0 / 12.0) },
        ShiftTerm { b: C64::new(0.0, 1.0), g: TfShift::new(-1.0 / 12.0, 0.0) },
    ])
    .expect("default shift is valid")
}

/// Probe set `K` and the operator `B = sum b_n T(g_n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelProbeSetup {
    pub probes: Vec<TfShift>,
    pub shift: ShiftCombination<TfShift>,
}

impl Default for ChannelProbeSetup {
    /// Single probe at the origin and the injective symbol
    /// `h(t, nu) = e^{i pi t / 6} + i e^{-i pi nu / 6}`.
    fn default() -> Self {
        Self { probes: vec![TfShift::ORIGIN], shift: default_shift() }
    }
}

impl ChannelProbeSetup {
    pub fn new(probes: Vec<TfShift>, shift: ShiftCombination<TfShift>) -> Result<Self> {
        let s = Self { probes, shift };
        s.validate()?;
        Ok(s)
    }

    pub fn with_probes(probes: Vec<TfShift>) -> Result<Self> {
        Self::new(probes, default_shift())
    }

    pub fn validate(&self) -> Result<()> {
        if self.probes.is_empty() {
            return contract("a channel setup needs at least one probe");
        }
        if self.probes.iter().any(|p| !p.t.is_finite() || !p.nu.is_finite()) {
            return contract("probe coordinates must be finite");
        }
        Ok(())
    }

    pub fn has_default_symbol(&self) -> bool {
        self.shift == default_shift()
    }

    /// `h` and its partial derivatives in `t` and `nu`.
    fn symbol_jet(&self, gamma: TfShift) -> (C64, C64, C64) {
        let mut h = C64::new(0.0, 0.0);
        let mut dt = C64::new(0.0, 0.0);
        let mut dnu = C64::new(0.0, 0.0);
        for term in self.shift.terms() {
            let e = term.b * eval_character(gamma, term.g);
            h += e;
            dt += e * C64::new(0.0, -TAU * term.g.nu);
            dnu += e * C64::new(0.0, TAU * term.g.t);
        }
        (h, dt, dnu)
    }

    /// All `gamma in [0, 1)^2` with `|h(gamma) - z| <= tol`, by grid search
    /// and Gauss-Newton refinement.
    pub fn preimages(&self, z: C64, tol: f64) -> Vec<TfShift> {
        self.preimages_up_to(z, tol, usize::MAX)
    }

    /// Like [`Self::preimages`], stopping once `limit` points are found.
    pub fn preimages_up_to(&self, z: C64, tol: f64, limit: usize) -> Vec<TfShift> {
        let n = PREIMAGE_GRID;
        let cost = |p: TfShift| (self.symbol_jet(p).0 - z).norm_sqr();
        let mut starts = grid_local_minima(n, |i, j| cost(grid_point(i, j, n)));
        starts.sort_by(|a, b| cost(*a).total_cmp(&cost(*b)));
        let mut found: Vec<TfShift> = Vec::new();
        for start in starts {
            if found.len() >= limit {
                break;
            }
            let g = refine(start, |p| {
                let (h, dt, dnu) = self.symbol_jet(p);
                vec![(h - z, dt, dnu)]
            });
            let Some(g) = snap_to_square(g, tol) else { continue };
            if (channel_symbol(g, self) - z).norm() <= tol && !found.iter().any(|f| torus_distance(*f, g) < 1e-7) {
                found.push(g);
            }
        }
        found.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.nu.total_cmp(&b.nu)));
        found
    }
}

const PREIMAGE_GRID: usize = 64;
const INTERSECT_GRID: usize = 256;

fn grid_point(i: usize, j: usize, n: usize) -> TfShift {
    TfShift::new(i as f64 / n as f64, j as f64 / n as f64)
}

/// Grid cells no larger than their four neighbours.
fn grid_local_minima(n: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<TfShift> {
    let c: Vec<f64> = (0..n * n).map(|k| cost(k / n, k % n)).collect();
    let at = |i: isize, j: isize| {
        if i < 0 || j < 0 || i >= n as isize || j >= n as isize {
            f64::INFINITY
        } else {
            c[i as usize * n + j as usize]
        }
    };
    let mut out = Vec::new();
    for i in 0..n as isize {
        for j in 0..n as isize {
            let v = at(i, j);
            if v <= at(i - 1, j) && v <= at(i + 1, j) && v <= at(i, j - 1) && v <= at(i, j + 1) {
                out.push(grid_point(i as usize, j as usize, n));
            }
        }
    }
    out
}

/// Gauss-Newton on residuals `r_k(p)` with complex partials `(dr/dt, dr/dnu)`.
fn refine(mut p: TfShift, residuals: impl Fn(TfShift) -> Vec<(C64, C64, C64)>) -> TfShift {
    for _ in 0..50 {
        let rs = residuals(p);
        // normal equations of the real 2-parameter problem
        let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (r, dt, dn) in &rs {
            a11 += dt.norm_sqr();
            a22 += dn.norm_sqr();
            a12 += (dt.conj() * dn).re;
            b1 += (dt.conj() * r).re;
            b2 += (dn.conj() * r).re;
        }
        let Some((s1, s2)) = solve_sym2(a11, a12, a22, b1, b2) else { break };
        p = TfShift::new(p.t - s1, p.nu - s2);
        if s1.hypot(s2) < 1e-15 {
            break;
        }
    }
    p
}

/// Minimum-norm solution of a symmetric positive semidefinite 2x2 system.
fn solve_sym2(a11: f64, a12: f64, a22: f64, b1: f64, b2: f64) -> Option<(f64, f64)> {
    let tr = a11 + a22;
    let det = a11 * a22 - a12 * a12;
    let disc = ((a11 - a22) * 0.5).hypot(a12);
    let l1 = tr * 0.5 + disc;
    if !(l1 > 0.0) {
        return None;
    }
    if det.abs() > 1e-12 * l1 * l1 {
        return Some(((a22 * b1 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det));
    }
    // rank one: project onto the leading eigenvector
    let (v1, v2) = if a12.abs() > 0.0 {
        (l1 - a22, a12)
    } else if a11 >= a22 {
        (1.0, 0.0)
    } else {
        (0.0, 1.0)
    };
    let n = v1.hypot(v2);
    let (v1, v2) = (v1 / n, v2 / n);
    let coef = (v1 * b1 + v2 * b2) / l1;
    Some((coef * v1, coef * v2))
}

/// Accepts `p` if it lies in `[0, 1)^2` up to `tol` below zero.
fn snap_to_square(p: TfShift, tol: f64) -> Option<TfShift> {
    let fix = |x: f64| {
        if (-tol..0.0).contains(&x) {
            Some(0.0)
        } else if (0.0..1.0).contains(&x) {
            Some(x)
        } else {
            None
        }
    };
    Some(TfShift::new(fix(p.t)?, fix(p.nu)?))
}

/// `h(gamma) = sum b_n gamma(g_n)`.
pub fn channel_symbol(gamma: TfShift, setup: &ChannelProbeSetup) -> C64 {
    setup.shift.symbol(|g| eval_character(gamma, *g))
}

/// Closed-form inverse of the default symbol.
pub fn goodh_inverse(z: C64) -> Result<TfShift> {
    goodh_inverse_tol(z, 1e-12)
}

/// [`goodh_inverse`] accepting coordinates down to `-tol` (snapped to 0)
/// and arcsine arguments up to `tol` outside `[-1, 1]`.
pub fn goodh_inverse_tol(z: C64, tol: f64) -> Result<TfShift> {
    let r2 = z.norm_sqr();
    if r2 == 0.0 || !r2.is_finite() {
        return Err(PronyError::SpuriousRoot { root: z });
    }
    let clamp = |a: f64| {
        if a.abs() <= 1.0 {
            Some(a)
        } else if a.abs() <= 1.0 + tol {
            Some(a.signum())
        } else {
            None
        }
    };
    let a1 = clamp((r2 - 2.0) / 2.0).ok_or(PronyError::SpuriousRoot { root: z })?;
    let a2 = clamp((z.re * z.re - z.im * z.im) / r2).ok_or(PronyError::SpuriousRoot { root: z })?;
    let (s1, s2) = (a1.asin(), a2.asin());
    let p = TfShift::new(3.0 / PI * (s1 - s2), 3.0 / PI * (s1 + s2));
    snap_to_square(p, tol).ok_or(PronyError::SpuriousRoot { root: z })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelPath {
    pub gamma: TfShift,
    pub c: C64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ChannelModel {
    pub paths: Vec<ChannelPath>,
}

impl ChannelModel {
    pub fn new(paths: Vec<ChannelPath>) -> Result<Self> {
        for (i, p) in paths.iter().enumerate() {
            if !p.gamma.in_unit_square() {
                return contract(format!("path {i} at ({}, {}) lies outside [0, 1)^2", p.gamma.t, p.gamma.nu));
            }
            if p.c.norm() == 0.0 {
                return contract(format!("path {i} has zero gain"));
            }
            if paths[..i].iter().any(|q| torus_distance(q.gamma, p.gamma) == 0.0) {
                return contract("path shifts must be pairwise distinct");
            }
        }
        Ok(Self { paths })
    }

    pub fn to_sparse(&self) -> SparseSignalModel<TfShift> {
        SparseSignalModel::new(self.paths.iter().map(|p| Mode { gamma: p.gamma, coeffs: vec![p.c] }).collect())
    }

    pub fn from_sparse(model: &SparseSignalModel<TfShift>) -> Self {
        Self { paths: model.modes.iter().map(|m| ChannelPath { gamma: m.gamma, c: m.coeffs[0] }).collect() }
    }
}

/// `y_l(s) = sum_gamma c_gamma h(gamma)^l m_gamma(s)`.
pub fn channel_measure(model: &ChannelModel, setup: &ChannelProbeSetup, l_max: usize) -> Result<MeasurementRecord> {
    setup.validate()?;
    let terms: Vec<(C64, Vec<C64>)> = model
        .paths
        .iter()
        .map(|p| {
            let m = setup.probes.iter().map(|s| p.c * gaussian_cross_term(p.gamma, *s)).collect();
            (channel_symbol(p.gamma, setup), m)
        })
        .collect();
    let rows: Vec<Vec<C64>> = (0..=l_max)
        .map(|l| (0..setup.probes.len()).map(|s| terms.iter().map(|(h, m)| m[s] * h.powu(l as u32)).sum()).collect())
        .collect();
    MeasurementRecord::from_rows(&rows)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ChannelInstance {
    pub setup: ChannelProbeSetup,
}

impl ChannelInstance {
    pub fn new(setup: ChannelProbeSetup) -> Result<Self> {
        setup.validate()?;
        Ok(Self { setup })
    }

    pub fn measure(&self, model: &ChannelModel, l_max: usize) -> Result<MeasurementRecord> {
        channel_measure(model, &self.setup, l_max)
    }
}

impl SpectralInstance for ChannelInstance {
    type Point = TfShift;

    fn symbol(&self, p: &TfShift) -> C64 {
        channel_symbol(*p, &self.setup)
    }

    fn symbol_inverse(&self, z: C64, tol: f64) -> Result<TfShift> {
        if self.setup.has_default_symbol() {
            return goodh_inverse_tol(z, tol);
        }
        let pre = self.setup.preimages_up_to(z, tol, 2);
        match pre.len() {
            0 => Err(PronyError::SpuriousRoot { root: z }),
            1 => Ok(pre[0]),
            count => Err(PronyError::NotInjective { value: z, count }),
        }
    }

    fn omega_contains(&self, p: &TfShift) -> bool {
        p.in_unit_square()
    }

    fn distance(&self, a: &TfShift, b: &TfShift) -> f64 {
        torus_distance(*a, *b)
    }

    fn order(&self, a: &TfShift, b: &TfShift) -> Ordering {
        a.t.total_cmp(&b.t).then(a.nu.total_cmp(&b.nu))
    }

    fn mode_dimension(&self) -> usize {
        1
    }

    fn channels(&self) -> usize {
        self.setup.probes.len()
    }

    fn coefficient_system(&self, points: &[TfShift], l_max: usize) -> Result<ComplexMatrix> {
        let s_count = self.setup.probes.len();
        let h: Vec<C64> = points.iter().map(|p| self.symbol(p)).collect();
        let m: Vec<Vec<C64>> =
            points.iter().map(|p| self.setup.probes.iter().map(|s| gaussian_cross_term(*p, *s)).collect()).collect();
        Ok(ComplexMatrix::from_fn((l_max + 1) * s_count, points.len(), |row, j| {
            let (l, s) = (row / s_count, row % s_count);
            h[j].powu(l as u32) * m[j][s]
        }))
    }
}

/// Regular grid of `n x n` points over `[0, 1)^2`.
pub fn unit_square_grid(n: usize) -> Vec<TfShift> {
    (0..n * n).map(|k| grid_point(k / n, k % n, n)).collect()
}

/// Result of the several-operator recovery.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiRecovery {
    pub model: ChannelModel,
    /// Candidate points consistent with every root set, before the fit.
    pub candidates: Vec<TfShift>,
    pub residual: f64,
    pub rank: usize,
    pub warnings: Vec<Warning>,
}

/// Recovers a channel from records taken with several operators `B`, none
/// of which needs an injective symbol: candidates are the points whose
/// symbol under every `B` is a root of that record's annihilator; a joint
/// coefficient fit then zeroes out the ghosts.
pub fn recover_multi(runs: &[(ChannelInstance, MeasurementRecord)], cfg: &RecoveryConfig) -> Result<MultiRecovery> {
    if runs.is_empty() {
        return contract("need at least one (setup, record) pair");
    }
    let mut roots: Vec<Vec<C64>> = Vec::with_capacity(runs.len());
    for (inst, meas) in runs {
        if meas.channels() != inst.channels() {
            return contract("record channel count does not match the probe set");
        }
        roots.push(minimal_annihilator(meas, cfg)?.r_min_values());
    }
    let y: Vec<C64> = runs.iter().flat_map(|(_, m)| m.flatten()).collect();
    let ynorm = vec_norm(&y);
    if roots.iter().any(|r| r.is_empty()) {
        let residual = if ynorm == 0.0 { 0.0 } else { 1.0 };
        return Ok(MultiRecovery {
            model: ChannelModel::default(),
            candidates: vec![],
            residual,
            rank: 0,
            warnings: vec![],
        });
    }

    let nearest = |h: C64, rs: &[C64]| -> C64 {
        *rs.iter().min_by(|a, b| (h - **a).norm().total_cmp(&(h - **b).norm())).expect("nonempty roots")
    };
    let cost = |p: TfShift| -> f64 {
        runs.iter().zip(&roots).map(|((inst, _), rs)| (inst.symbol(&p) - nearest(inst.symbol(&p), rs)).norm_sqr()).sum()
    };
    let n = INTERSECT_GRID;
    let starts = grid_local_minima(n, |i, j| cost(grid_point(i, j, n)));
    let mut candidates: Vec<TfShift> = Vec::new();
    for start in starts {
        let p = refine(start, |p| {
            runs.iter()
                .zip(&roots)
                .map(|((inst, _), rs)| {
                    let (h, dt, dn) = inst.setup.symbol_jet(p);
                    (h - nearest(h, rs), dt, dn)
                })
                .collect()
        });
        let Some(p) = snap_to_square(p, cfg.root_match_tol) else { continue };
        let worst = runs
            .iter()
            .zip(&roots)
            .map(|((inst, _), rs)| (inst.symbol(&p) - nearest(inst.symbol(&p), rs)).norm())
            .fold(0.0, f64::max);
        if worst <= cfg.root_match_tol && !candidates.iter().any(|c| torus_distance(*c, p) < 1e-7) {
            candidates.push(p);
        }
    }
    candidates.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.nu.total_cmp(&b.nu)));
    if candidates.is_empty() {
        return Ok(MultiRecovery {
            model: ChannelModel::default(),
            candidates,
            residual: if ynorm == 0.0 { 0.0 } else { 1.0 },
            rank: 0,
            warnings: vec![Warning::LargeResidual { which: "coefficients".into(), value: 1.0 }],
        });
    }

    let blocks = runs
        .iter()
        .map(|(inst, meas)| inst.coefficient_system(&candidates, meas.l_max()))
        .collect::<Result<Vec<_>>>()?;
    let total_rows: usize = blocks.iter().map(|b| b.rows()).sum();
    let mut data = Vec::with_capacity(total_rows * candidates.len());
    for b in &blocks {
        data.extend_from_slice(b.as_slice());
    }
    let system = ComplexMatrix::from_row_major(total_rows, candidates.len(), data)?;
    let rank = numerical_rank(&system, cfg.rank_rel_tol)?;
    let c = least_squares_solve(&system, &y)?;
    let fitted = system.mul_vec(&c);
    let res: Vec<C64> = fitted.iter().zip(&y).map(|(a, b)| a - b).collect();
    let residual = if ynorm == 0.0 { vec_norm(&res) } else { vec_norm(&res) / ynorm };
    let mut warnings = Vec::new();
    if rank < candidates.len() {
        warnings.push(Warning::NonUniqueCoefficients { rank, unknowns: candidates.len() });
    }
    if residual > RESIDUAL_WARN_TOL {
        warnings.push(Warning::LargeResidual { which: "coefficients".into(), value: residual });
    }
    let paths = candidates
        .iter()
        .zip(&c)
        .filter(|(_, c)| c.norm() >= cfg.coeff_drop_tol)
        .map(|(g, c)| ChannelPath { gamma: *g, c: *c })
        .collect();
    Ok(MultiRecovery { model: ChannelModel { paths }, candidates, residual, rank, warnings })
}
