use num_complex::Complex64 as C64;

use super::ComplexMatrix;
use crate::error::{contract, PronyError, Result};

const JACOBI_TOL: f64 = 1e-15;
const MAX_SWEEPS: usize = 80;

/// Thin singular value decomposition `m = u * diag(s) * v^H`.
///
/// `s` is sorted in decreasing order. Columns of `u` belonging to a zero
/// singular value are left zero.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub s: Vec<f64>,
    pub v: ComplexMatrix,
}

/// One-sided (Hestenes) Jacobi SVD with a fixed cyclic sweep order.
pub fn svd(m: &ComplexMatrix) -> Result<Svd> {
    if m.rows() == 0 || m.cols() == 0 {
        return contract("svd of an empty matrix");
    }
    if m.rows() < m.cols() {
        let t = svd(&m.conj_transpose())?;
        return Ok(Svd { u: t.v, s: t.s, v: t.u });
    }
    let (rows, n) = (m.rows(), m.cols());
    // column-major working copies
    let mut a: Vec<Vec<C64>> = (0..n).map(|j| m.column(j)).collect();
    let mut v: Vec<Vec<C64>> = (0..n)
        .map(|j| {
            let mut e = vec![C64::new(0.0, 0.0); n];
            e[j] = C64::new(1.0, 0.0);
            e
        })
        .collect();

    let floor = (rows as f64 * f64::EPSILON).powi(2);
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = a[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = a[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma: C64 = a[p].iter().zip(&a[q]).map(|(x, y)| x.conj() * y).sum();
                let g = gamma.norm();
                if g == 0.0 || g <= JACOBI_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                // a column at rounding level next to a large one never passes the relative test
                if alpha.min(beta) <= floor * alpha.max(beta) {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let ph = phase.conj();
                rotate(&mut a, p, q, c, s, ph);
                rotate(&mut v, p, q, c, s, ph);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(PronyError::NoConvergence("Jacobi SVD sweeps exhausted".into()));
    }

    let norms: Vec<f64> = a.iter().map(|col| col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));

    let s: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let u = ComplexMatrix::from_fn(rows, n, |i, k| {
        let j = order[k];
        if norms[j] > 0.0 {
            a[j][i] / norms[j]
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let vm = ComplexMatrix::from_fn(n, n, |i, k| v[order[k]][i]);
    Ok(Svd { u, s, v: vm })
}

// [x_p, x_q] <- [c x_p - s ph x_q, s x_p + c ph x_q]
fn rotate(cols: &mut [Vec<C64>], p: usize, q: usize, c: f64, s: f64, ph: C64) {
    let (left, right) = cols.split_at_mut(q);
    let xp = &mut left[p];
    let xq = &mut right[0];
    for (a, b) in xp.iter_mut().zip(xq.iter_mut()) {
        let bp = ph * *b;
        let na = *a * c - bp * s;
        let nb = *a * s + bp * c;
        *a = na;
        *b = nb;
    }
}

pub fn singular_values(m: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(svd(m)?.s)
}

/// Number of singular values strictly above `rel_tol * sigma_max`.
pub fn numerical_rank(m: &ComplexMatrix, rel_tol: f64) -> Result<usize> {
    if !(rel_tol > 0.0) {
        return contract(format!("rank tolerance must be positive, got {rel_tol}"));
    }
    let s = singular_values(m)?;
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return Ok(0);
    }
    Ok(s.iter().filter(|&&x| x > rel_tol * smax).count())
}

/// Minimum-norm least-squares solution, discarding singular values below
/// `eps * max(rows, cols) * sigma_max`.
pub fn least_squares_solve(m: &ComplexMatrix, rhs: &[C64]) -> Result<Vec<C64>> {
    let rcond = f64::EPSILON * m.rows().max(m.cols()) as f64;
    least_squares_solve_with(m, rhs, rcond)
}

pub fn least_squares_solve_with(m: &ComplexMatrix, rhs: &[C64], rcond: f64) -> Result<Vec<C64>> {
    if m.rows() != rhs.len() {
        return contract(format!("least squares: matrix has {} rows but rhs has length {}", m.rows(), rhs.len()));
    }
    if m.rows() == 0 || m.cols() == 0 {
        return contract("least squares needs at least one row and one column");
    }
    let d = svd(m)?;
    let smax = d.s.first().copied().unwrap_or(0.0);
    let mut x = vec![C64::new(0.0, 0.0); m.cols()];
    for (k, &sk) in d.s.iter().enumerate() {
        if sk == 0.0 || sk <= rcond * smax {
            continue;
        }
        let coef: C64 = (0..m.rows()).map(|i| d.u[(i, k)].conj() * rhs[i]).sum::<C64>() / sk;
        for (j, xj) in x.iter_mut().enumerate() {
            *xj += d.v[(j, k)] * coef;
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn rounding_level_column_converges() {
        let m = ComplexMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(1e-17, 3e-17)],
            vec![c(0.5, 0.5), c(-2e-17, 1e-17)],
            vec![c(0.0, 2.0), c(4e-17, 0.0)],
        ])
        .unwrap();
        let d = svd(&m).unwrap();
        assert!(d.s[1] < 1e-15 * d.s[0]);
        assert_eq!(numerical_rank(&m, 1e-10).unwrap(), 1);
    }

    fn close(a: &[C64], b: &[C64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() <= tol)
    }

    #[test]
    fn lstsq_identity() {
        let m = ComplexMatrix::identity(2);
        let x = least_squares_solve(&m, &[c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        assert!(close(&x, &[c(1.0, 0.0), c(0.0, 1.0)], 1e-15));
    }

    #[test]
    fn lstsq_consistent_overdetermined() {
        let m = ComplexMatrix::from_rows(&[vec![c(1.0, 0.0)], vec![c(1.0, 0.0)]]).unwrap();
        let x = least_squares_solve(&m, &[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!(close(&x, &[c(1.0, 0.0)], 1e-15));
    }

    #[test]
    fn lstsq_minimum_norm_underdetermined() {
        // a + b = 2 with minimal |a|^2 + |b|^2 is a = b = 1
        let m = ComplexMatrix::from_rows(&[vec![c(1.0, 0.0), c(1.0, 0.0)]]).unwrap();
        let x = least_squares_solve(&m, &[c(2.0, 0.0)]).unwrap();
        assert!(close(&x, &[c(1.0, 0.0), c(1.0, 0.0)], 1e-14));
    }

    #[test]
    fn lstsq_dimension_mismatch() {
        let m = ComplexMatrix::identity(2);
        assert!(matches!(least_squares_solve(&m, &[c(1.0, 0.0)]), Err(PronyError::Contract(_))));
    }

    #[test]
    fn rank_examples() {
        assert_eq!(numerical_rank(&ComplexMatrix::identity(3), 1e-10).unwrap(), 3);
        let d = ComplexMatrix::diagonal(&[c(1.0, 0.0), c(1e-14, 0.0)]);
        assert_eq!(numerical_rank(&d, 1e-10).unwrap(), 1);
        assert_eq!(numerical_rank(&ComplexMatrix::zeros(2, 3), 1e-10).unwrap(), 0);
        assert!(numerical_rank(&d, 0.0).is_err());
    }

    #[test]
    fn svd_reconstructs_wide_matrix() {
        let m = ComplexMatrix::from_fn(2, 4, |i, j| c((i + 2 * j) as f64, (i as f64) - 0.5 * j as f64));
        let d = svd(&m).unwrap();
        let us = ComplexMatrix::from_fn(d.u.rows(), d.s.len(), |i, k| d.u[(i, k)] * d.s[k]);
        let back = us.matmul(&d.v.conj_transpose());
        assert!(back.max_abs_diff(&m) < 1e-12);
        assert!(d.s.windows(2).all(|w| w[0] >= w[1]));
    }

    fn complex_entry() -> impl Strategy<Value = C64> {
        (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| C64::new(a, b))
    }

    proptest! {
        #[test]
        fn square_solve_reproduces_rhs(
            entries in proptest::collection::vec(complex_entry(), 25),
            rhs in proptest::collection::vec(complex_entry(), 5),
        ) {
            // diagonal shift keeps the instances well conditioned
            let mut m = ComplexMatrix::from_row_major(5, 5, entries).unwrap();
            for i in 0..5 {
                m[(i, i)] += C64::new(6.0, 0.0);
            }
            let x = least_squares_solve(&m, &rhs).unwrap();
            let r: Vec<C64> = m.mul_vec(&x).iter().zip(&rhs).map(|(a, b)| a - b).collect();
            let rn = super::super::vec_norm(&r);
            prop_assert!(rn <= 1e-10 * super::super::vec_norm(&rhs).max(1e-300));
        }

        #[test]
        fn rank_is_scale_invariant(
            entries in proptest::collection::vec(complex_entry(), 12),
            k in 0usize..4,
            scale in complex_entry().prop_filter("nonzero", |z| z.norm() > 1e-3),
        ) {
            let base = ComplexMatrix::from_row_major(4, 3, entries).unwrap();
            // zero out k columns to vary the rank
            let m = ComplexMatrix::from_fn(4, 3, |i, j| if j < k { C64::new(0.0, 0.0) } else { base[(i, j)] });
            let r1 = numerical_rank(&m, 1e-10).unwrap();
            let r2 = numerical_rank(&m.scale(scale * 1e3), 1e-10).unwrap();
            prop_assert_eq!(r1, r2);
        }
    }
}
