//! Off-grid Prony: `x(t) = sum c_gamma e^{2 pi i gamma t}` with
//! `gamma in [0, 1)`, sampled at the integers.

use std::cmp::Ordering;
use std::f64::consts::TAU;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::annihilator::MeasurementRecord;
use crate::error::{contract, PronyError, Result};
use crate::numerics::ComplexMatrix;
use crate::recovery::{Mode, SparseSignalModel, SpectralInstance};
use crate::shift::ShiftCombination;

/// A frequency in `[0, 1)`, in cycles per unit time.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Frequency(f64);

impl Frequency {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&gamma) {
            return contract(format!("frequency {gamma} is outside [0, 1)"));
        }
        Ok(Self(gamma))
    }

    /// Reduces any real number into `[0, 1)`.
    pub fn wrapped(gamma: f64) -> Self {
        let g = gamma.rem_euclid(1.0);
        Self(if g >= 1.0 { 0.0 } else { g })
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Frequency {
    type Error = PronyError;

    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Frequency> for f64 {
    fn from(f: Frequency) -> f64 {
        f.0
    }
}

/// `min(|a - b|, 1 - |a - b|)`.
pub fn circle_distance(a: Frequency, b: Frequency) -> f64 {
    let d = (a.0 - b.0).abs();
    d.min(1.0 - d)
}

/// `e^{2 pi i gamma}`.
pub fn classic_symbol(gamma: Frequency) -> C64 {
    C64::from_polar(1.0, TAU * gamma.0)
}

/// `arg(z) / 2 pi` reduced to `[0, 1)`; `z` must lie within `tol` of the
/// unit circle.
pub fn classic_symbol_inverse(z: C64, tol: f64) -> Result<Frequency> {
    if (z.norm() - 1.0).abs() > tol {
        return Err(PronyError::SpuriousRoot { root: z });
    }
    Ok(Frequency::wrapped(z.arg() / TAU))
}

/// Vandermonde matrix with entry `(l, j) = e^{2 pi i gamma_j l}`.
pub fn classic_coefficient_system(freqs: &[Frequency], l_max: usize) -> Result<ComplexMatrix> {
    check_distinct(freqs)?;
    Ok(ComplexMatrix::from_fn(l_max + 1, freqs.len(), |l, j| C64::from_polar(1.0, TAU * freqs[j].0 * l as f64)))
}

fn check_distinct(freqs: &[Frequency]) -> Result<()> {
    for (i, a) in freqs.iter().enumerate() {
        if freqs[i + 1..].iter().any(|b| b.0 == a.0) {
            return contract(format!("duplicate frequency {}", a.0));
        }
    }
    Ok(())
}

/// `x(t) = sum_j c_j e^{2 pi i gamma_j t}`.
pub fn classic_sample(modes: &[(Frequency, C64)], t: f64) -> C64 {
    modes.iter().map(|(g, c)| c * C64::from_polar(1.0, TAU * g.0 * t)).sum()
}

/// Classic instance with a configurable `B = sum b_n T(g_n)`, `g_n` real.
/// The default is the unit shift `B = T(1)`, which gives `y_l = x(l)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassicInstance {
    pub shift: ShiftCombination<f64>,
}

impl Default for ClassicInstance {
    fn default() -> Self {
        Self { shift: ShiftCombination::single(1.0) }
    }
}

const INVERSE_GRID: usize = 4096;

impl ClassicInstance {
    pub fn new(shift: ShiftCombination<f64>) -> Self {
        Self { shift }
    }

    fn is_unit_shift(&self) -> bool {
        let t = self.shift.terms();
        t.len() == 1 && t[0].b == C64::new(1.0, 0.0) && t[0].g == 1.0
    }

    fn symbol_and_derivative(&self, gamma: f64) -> (C64, C64) {
        let mut h = C64::new(0.0, 0.0);
        let mut dh = C64::new(0.0, 0.0);
        for term in self.shift.terms() {
            let e = term.b * C64::from_polar(1.0, TAU * gamma * term.g);
            h += e;
            dh += e * C64::new(0.0, TAU * term.g);
        }
        (h, dh)
    }

    fn periodic(&self) -> bool {
        self.shift.terms().iter().all(|t| t.g.fract() == 0.0)
    }

    /// All `gamma in [0, 1)` with `|h(gamma) - z| <= tol`, located on a grid
    /// and refined by Gauss-Newton.
    pub fn preimages(&self, z: C64, tol: f64) -> Vec<Frequency> {
        let n = INVERSE_GRID;
        let err: Vec<f64> = (0..n).map(|k| (self.symbol_and_derivative(k as f64 / n as f64).0 - z).norm()).collect();
        let periodic = self.periodic();
        let mut found: Vec<Frequency> = Vec::new();
        for k in 0..n {
            let prev = if k == 0 {
                if periodic {
                    err[n - 1]
                } else {
                    f64::INFINITY
                }
            } else {
                err[k - 1]
            };
            let next = if k + 1 == n {
                if periodic {
                    err[0]
                } else {
                    f64::INFINITY
                }
            } else {
                err[k + 1]
            };
            if !(err[k] <= prev && err[k] <= next) {
                continue;
            }
            let mut g = k as f64 / n as f64;
            for _ in 0..60 {
                let (h, dh) = self.symbol_and_derivative(g);
                let d2 = dh.norm_sqr();
                if d2 == 0.0 {
                    break;
                }
                let step = (dh.conj() * (h - z)).re / d2;
                g -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            let cand = if periodic {
                Frequency::wrapped(g)
            } else {
                match Frequency::new(g) {
                    Ok(f) => f,
                    Err(_) => continue,
                }
            };
            if (self.symbol(&cand) - z).norm() <= tol && !found.iter().any(|f| circle_distance(*f, cand) < 1e-7) {
                found.push(cand);
            }
        }
        found.sort_by(|a, b| a.0.total_cmp(&b.0));
        found
    }

    /// Forward model `y_l = (B^l x)(0) = sum c_gamma h(gamma)^l`.
    pub fn measure(&self, model: &SparseSignalModel<Frequency>, l_max: usize) -> Result<MeasurementRecord> {
        let y: Vec<C64> = if self.is_unit_shift() {
            let modes: Vec<(Frequency, C64)> = model.modes.iter().map(|m| (m.gamma, m.coeffs[0])).collect();
            (0..=l_max).map(|l| classic_sample(&modes, l as f64)).collect()
        } else {
            let h: Vec<(C64, C64)> = model.modes.iter().map(|m| (self.symbol(&m.gamma), m.coeffs[0])).collect();
            (0..=l_max).map(|l| h.iter().map(|(z, c)| c * z.powu(l as u32)).sum()).collect()
        };
        MeasurementRecord::scalar(&y)
    }
}

impl SpectralInstance for ClassicInstance {
    type Point = Frequency;

    fn symbol(&self, p: &Frequency) -> C64 {
        if self.is_unit_shift() {
            classic_symbol(*p)
        } else {
            self.symbol_and_derivative(p.0).0
        }
    }

    fn symbol_inverse(&self, z: C64, tol: f64) -> Result<Frequency> {
        if self.is_unit_shift() {
            return classic_symbol_inverse(z, tol);
        }
        let pre = self.preimages(z, tol);
        match pre.len() {
            0 => Err(PronyError::SpuriousRoot { root: z }),
            1 => Ok(pre[0]),
            count => Err(PronyError::NotInjective { value: z, count }),
        }
    }

    fn omega_contains(&self, p: &Frequency) -> bool {
        (0.0..1.0).contains(&p.0)
    }

    fn distance(&self, a: &Frequency, b: &Frequency) -> f64 {
        circle_distance(*a, *b)
    }

    fn order(&self, a: &Frequency, b: &Frequency) -> Ordering {
        a.0.total_cmp(&b.0)
    }

    fn mode_dimension(&self) -> usize {
        1
    }

    fn channels(&self) -> usize {
        1
    }

    fn coefficient_system(&self, points: &[Frequency], l_max: usize) -> Result<ComplexMatrix> {
        if self.is_unit_shift() {
            return classic_coefficient_system(points, l_max);
        }
        check_distinct(points)?;
        let h: Vec<C64> = points.iter().map(|p| self.symbol(p)).collect();
        Ok(ComplexMatrix::from_fn(l_max + 1, points.len(), |l, j| h[j].powu(l as u32)))
    }
}

/// Single-coefficient model from `(gamma, c)` pairs.
pub fn classic_model(modes: &[(f64, C64)]) -> Result<SparseSignalModel<Frequency>> {
    let modes = modes
        .iter()
        .map(|&(g, c)| Ok(Mode { gamma: Frequency::new(g)?, coeffs: vec![c] }))
        .collect::<Result<Vec<_>>>()?;
    Ok(SparseSignalModel::new(modes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shift::ShiftTerm;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn f(g: f64) -> Frequency {
        Frequency::new(g).unwrap()
    }

    #[test]
    fn symbol_values() {
        assert!((classic_symbol(f(0.0)) - c(1.0, 0.0)).norm() < 1e-15);
        assert!((classic_symbol(f(0.25)) - c(0.0, 1.0)).norm() < 1e-15);
        assert!((classic_symbol(f(0.5)) - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn symbol_inverse_values() {
        assert_eq!(classic_symbol_inverse(c(1.0, 0.0), 1e-6).unwrap().value(), 0.0);
        assert!((classic_symbol_inverse(c(0.0, 1.0), 1e-6).unwrap().value() - 0.25).abs() < 1e-15);
        assert!((classic_symbol_inverse(c(0.0, -1.0), 1e-6).unwrap().value() - 0.75).abs() < 1e-15);
        assert!(matches!(classic_symbol_inverse(c(0.5, 0.0), 1e-6), Err(PronyError::SpuriousRoot { .. })));
    }

    #[test]
    fn inverse_near_one_stays_in_range() {
        let z = C64::from_polar(1.0, -1e-18);
        let g = classic_symbol_inverse(z, 1e-6).unwrap().value();
        assert!((0.0..1.0).contains(&g));
    }

    #[test]
    fn coefficient_system_examples() {
        let m = classic_coefficient_system(&[f(0.0)], 1).unwrap();
        assert_eq!(m, ComplexMatrix::from_rows(&[vec![c(1.0, 0.0)], vec![c(1.0, 0.0)]]).unwrap());
        let m = classic_coefficient_system(&[f(0.0), f(0.5)], 1).unwrap();
        let want =
            ComplexMatrix::from_rows(&[vec![c(1.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(-1.0, 0.0)]]).unwrap();
        assert!(m.max_abs_diff(&want) < 1e-15);
        assert!(classic_coefficient_system(&[f(0.1), f(0.1)], 3).is_err());
    }

    #[test]
    fn three_node_vandermonde_is_nonsingular() {
        // det V(1, i, -1) = (i - 1)(-1 - 1)(-1 - i) = -4  (hand expansion)
        let m = classic_coefficient_system(&[f(0.0), f(0.25), f(0.5)], 2).unwrap();
        let det = m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
            - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
            + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)]);
        assert!((det - c(-4.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn frequency_range_enforced() {
        assert!(Frequency::new(1.0).is_err());
        assert!(Frequency::new(-0.1).is_err());
        assert_eq!(Frequency::wrapped(1.25).value(), 0.25);
        assert!((circle_distance(f(0.05), f(0.95)) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn round_trip_on_grid() {
        let inst = ClassicInstance::default();
        for k in 0..1000 {
            let g = f(k as f64 / 1000.0);
            let back = inst.symbol_inverse(inst.symbol(&g), 1e-6).unwrap();
            assert!(circle_distance(g, back) <= 1e-12);
        }
    }

    #[test]
    fn general_shift_is_inverted_numerically() {
        // B = T(1) + 0.5 T(2): h(g) = e^{2 pi i g} + 0.5 e^{4 pi i g}, injective on [0, 1)
        let inst = ClassicInstance::new(
            ShiftCombination::new(vec![ShiftTerm { b: c(1.0, 0.0), g: 1.0 }, ShiftTerm { b: c(0.5, 0.0), g: 2.0 }])
                .unwrap(),
        );
        for &g in &[0.0, 0.13, 0.5, 0.77, 0.999] {
            let back = inst.symbol_inverse(inst.symbol(&f(g)), 1e-8).unwrap();
            assert!(circle_distance(f(g), back) < 1e-10, "{g} -> {}", back.value());
        }
    }

    #[test]
    fn non_injective_shift_is_reported() {
        let inst = ClassicInstance::new(ShiftCombination::single(2.0));
        let z = inst.symbol(&f(0.1));
        assert!(matches!(inst.symbol_inverse(z, 1e-8), Err(PronyError::NotInjective { count: 2, .. })));
    }
}
