use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::ComplexMatrix;
use crate::error::{contract, PronyError, Result};

/// Residual bound used by [`polynomial_roots`]:
/// `|p(z)| <= ROOT_EVAL_TOL * max|coeff| * max(1, |z|)^degree`.
pub const ROOT_EVAL_TOL: f64 = 1e-8;

const QR_MAX_ITER_PER_EIG: usize = 60;

/// Complex polynomial with coefficients in ascending degree order.
///
/// The constant zero polynomial is not representable; trailing zero
/// coefficients are trimmed on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<C64>", into = "Vec<C64>")]
pub struct ComplexPolynomial {
    coeffs: Vec<C64>,
}

impl TryFrom<Vec<C64>> for ComplexPolynomial {
    type Error = PronyError;

    fn try_from(v: Vec<C64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ComplexPolynomial> for Vec<C64> {
    fn from(p: ComplexPolynomial) -> Self {
        p.coeffs
    }
}

impl ComplexPolynomial {
    pub fn new(mut coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return contract("polynomial coefficients must be finite");
        }
        while coeffs.last().is_some_and(|z| *z == C64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            return contract("the zero polynomial is not allowed");
        }
        Ok(Self { coeffs })
    }

    /// The constant polynomial 1 (trivial annihilator).
    pub fn one() -> Self {
        Self { coeffs: vec![C64::new(1.0, 0.0)] }
    }

    /// Monic polynomial `prod (z - r)`.
    pub fn from_roots(roots: &[C64]) -> Self {
        let mut coeffs = vec![C64::new(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![C64::new(0.0, 0.0); coeffs.len() + 1];
            for (k, &a) in coeffs.iter().enumerate() {
                next[k + 1] += a;
                next[k] -= a * r;
            }
            coeffs = next;
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> C64 {
        *self.coeffs.last().unwrap()
    }

    pub fn is_monic(&self) -> bool {
        self.leading() == C64::new(1.0, 0.0)
    }

    pub fn to_monic(&self) -> Self {
        let lead = self.leading();
        let mut coeffs: Vec<C64> = self.coeffs.iter().map(|c| c / lead).collect();
        *coeffs.last_mut().unwrap() = C64::new(1.0, 0.0);
        Self { coeffs }
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Derivative; the derivative of a constant is reported as `None`.
    pub fn derivative(&self) -> Option<Self> {
        if self.degree() == 0 {
            return None;
        }
        let coeffs = self.coeffs.iter().enumerate().skip(1).map(|(k, &c)| c * k as f64).collect();
        Some(Self { coeffs })
    }

    pub fn max_coeff_modulus(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Residual bound check matching [`ROOT_EVAL_TOL`].
    pub fn is_root(&self, z: C64, tol: f64) -> bool {
        let scale = self.max_coeff_modulus() * z.norm().max(1.0).powi(self.degree() as i32);
        self.eval(z).norm() <= tol * scale
    }
}

/// All roots of `p` with multiplicity, from the eigenvalues of the balanced
/// companion matrix, followed by a guarded Newton polish.
pub fn polynomial_roots(p: &ComplexPolynomial) -> Result<Vec<C64>> {
    if p.degree() == 0 {
        return contract("cannot take roots of a degree-0 polynomial");
    }
    let monic = p.to_monic();
    let c = monic.coeffs();
    // exact zero roots are split off so the companion matrix stays nonsingular
    let zeros = c.iter().take_while(|z| **z == C64::new(0.0, 0.0)).count();
    let reduced = &c[zeros..];
    let n = reduced.len() - 1;
    let mut roots = vec![C64::new(0.0, 0.0); zeros];
    if n == 0 {
        return Ok(roots);
    }
    if n == 1 {
        roots.push(-reduced[0]);
        return Ok(roots);
    }
    let mut comp = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        comp[(0, j)] = -reduced[n - 1 - j];
    }
    for i in 1..n {
        comp[(i, i - 1)] = C64::new(1.0, 0.0);
    }
    balance(&mut comp);
    let eig = hessenberg_eigenvalues(comp)?;
    let reduced_poly = ComplexPolynomial { coeffs: reduced.to_vec() };
    let deriv = reduced_poly.derivative().unwrap();
    roots.extend(eig.into_iter().map(|z| polish(&reduced_poly, &deriv, z)));
    Ok(roots)
}

fn polish(p: &ComplexPolynomial, dp: &ComplexPolynomial, mut z: C64) -> C64 {
    let mut fz = p.eval(z).norm();
    for _ in 0..3 {
        let d = dp.eval(z);
        if d.norm() == 0.0 {
            break;
        }
        let cand = z - p.eval(z) / d;
        let fc = p.eval(cand).norm();
        if !(fc < fz) {
            break;
        }
        z = cand;
        fz = fc;
    }
    z
}

/// Parlett–Reinsch diagonal similarity balancing with radix 2.
fn balance(m: &mut ComplexMatrix) {
    let n = m.rows();
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].l1_norm();
                    r += m[(i, j)].l1_norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / 2.0;
            while c < g {
                f *= 2.0;
                c *= 4.0;
            }
            g = r * 2.0;
            while c >= g {
                f /= 2.0;
                c /= 4.0;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                    m[(j, i)] *= f;
                }
            }
        }
    }
}

/// Eigenvalues of an upper Hessenberg matrix by single-shift complex QR
/// with Wilkinson shifts and periodic exceptional shifts.
pub fn hessenberg_eigenvalues(mut h: ComplexMatrix) -> Result<Vec<C64>> {
    let n = h.rows();
    if !h.is_square() {
        return contract("eigenvalues of a non-square matrix");
    }
    let zero = C64::new(0.0, 0.0);
    let mut eig = vec![zero; n];
    if n == 0 {
        return Ok(eig);
    }
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    loop {
        if hi == 0 {
            eig[0] = h[(0, 0)];
            break;
        }
        let mut lo = hi;
        while lo > 0 {
            let s = h[(lo, lo)].l1_norm() + h[(lo - 1, lo - 1)].l1_norm();
            let s = if s == 0.0 { 1.0 } else { s };
            if h[(lo, lo - 1)].l1_norm() <= f64::EPSILON * s {
                h[(lo, lo - 1)] = zero;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            eig[hi] = h[(hi, hi)];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > QR_MAX_ITER_PER_EIG * n {
            return Err(PronyError::NoConvergence("Hessenberg QR".into()));
        }
        let mu = if iter.is_multiple_of(10) {
            h[(hi, hi)] + C64::new(0.75 * h[(hi, hi - 1)].norm(), 0.0)
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        for k in lo..=hi {
            h[(k, k)] -= mu;
        }
        let mut rots = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            for j in k..=hi {
                let x = h[(k, j)];
                let y = h[(k + 1, j)];
                h[(k, j)] = x * c + s * y;
                h[(k + 1, j)] = -s.conj() * x + y * c;
            }
            h[(k + 1, k)] = zero;
            rots.push((c, s));
        }
        for (idx, &(c, s)) in rots.iter().enumerate() {
            let k = lo + idx;
            for i in lo..=(k + 1).min(hi) {
                let x = h[(i, k)];
                let y = h[(i, k + 1)];
                h[(i, k)] = x * c + s.conj() * y;
                h[(i, k + 1)] = -s * x + y * c;
            }
        }
        for k in lo..=hi {
            h[(k, k)] += mu;
        }
    }
    Ok(eig)
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let tr = a + d;
    let det = a * d - b * c;
    let disc = (tr * tr * 0.25 - det).sqrt();
    let l1 = tr * 0.5 + disc;
    let l2 = tr * 0.5 - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

// G = [[c, s], [-conj(s), c]] with G [a; b] = [r; 0]
fn givens(a: C64, b: C64) -> (f64, C64) {
    if b == C64::new(0.0, 0.0) {
        return (1.0, C64::new(0.0, 0.0));
    }
    if a == C64::new(0.0, 0.0) {
        return (0.0, C64::new(1.0, 0.0) * (b.conj() / b.norm()));
    }
    let na = a.norm();
    let norm = na.hypot(b.norm());
    let c = na / norm;
    let s = (a / na) * b.conj() / norm;
    (c, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Greedy multiset matching; returns the worst pairing distance.
    fn multiset_distance(a: &[C64], b: &[C64]) -> f64 {
        assert_eq!(a.len(), b.len());
        let mut used = vec![false; b.len()];
        let mut worst: f64 = 0.0;
        for x in a {
            let (j, d) = b
                .iter()
                .enumerate()
                .filter(|(j, _)| !used[*j])
                .map(|(j, y)| (j, (x - y).norm()))
                .min_by(|p, q| p.1.total_cmp(&q.1))
                .unwrap();
            used[j] = true;
            worst = worst.max(d);
        }
        worst
    }

    #[test]
    fn trims_and_rejects_zero() {
        let p = ComplexPolynomial::new(vec![c(1.0, 0.0), c(2.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(p.degree(), 1);
        assert!(ComplexPolynomial::new(vec![c(0.0, 0.0)]).is_err());
    }

    #[test]
    fn roots_of_z2_plus_1() {
        let p = ComplexPolynomial::new(vec![c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let r = polynomial_roots(&p).unwrap();
        assert!(multiset_distance(&r, &[c(0.0, 1.0), c(0.0, -1.0)]) < 1e-12);
    }

    #[test]
    fn double_root() {
        let p = ComplexPolynomial::new(vec![c(1.0, 0.0), c(-2.0, 0.0), c(1.0, 0.0)]).unwrap();
        let r = polynomial_roots(&p).unwrap();
        assert!(multiset_distance(&r, &[c(1.0, 0.0), c(1.0, 0.0)]) < 1e-7);
        for z in &r {
            assert!(p.is_root(*z, ROOT_EVAL_TOL));
        }
    }

    #[test]
    fn planted_cubic() {
        // (z-2)(z+1)(z-i) = z^3 - (1+i) z^2 + (-2+i) z + 2i
        let p = ComplexPolynomial::new(vec![c(0.0, 2.0), c(-2.0, 1.0), c(-1.0, -1.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(p, ComplexPolynomial::from_roots(&[c(2.0, 0.0), c(-1.0, 0.0), c(0.0, 1.0)]));
        let r = polynomial_roots(&p).unwrap();
        assert!(multiset_distance(&r, &[c(2.0, 0.0), c(-1.0, 0.0), c(0.0, 1.0)]) < 1e-9);
    }

    #[test]
    fn degree_zero_is_contract_violation() {
        assert!(matches!(polynomial_roots(&ComplexPolynomial::one()), Err(PronyError::Contract(_))));
    }

    #[test]
    fn exact_zero_roots() {
        let p = ComplexPolynomial::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let r = polynomial_roots(&p).unwrap();
        assert!(multiset_distance(&r, &[c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]) < 1e-14);
    }

    fn separated_roots() -> impl Strategy<Value = Vec<C64>> {
        proptest::collection::vec((0.0f64..2.0, 0.0f64..std::f64::consts::TAU), 1..=8)
            .prop_map(|v| v.into_iter().map(|(r, t)| C64::from_polar(r, t)).collect::<Vec<_>>())
            .prop_filter("pairwise distance >= 0.1", |v| {
                v.iter().enumerate().all(|(i, a)| v[i + 1..].iter().all(|b| (a - b).norm() >= 0.1))
            })
    }

    proptest! {
        #[test]
        fn roots_invert_expansion(roots in separated_roots()) {
            let p = ComplexPolynomial::from_roots(&roots);
            let got = polynomial_roots(&p).unwrap();
            prop_assert!(multiset_distance(&got, &roots) <= 1e-8);
            for z in &got {
                prop_assert!(p.is_root(*z, ROOT_EVAL_TOL));
            }
        }
    }
}
