use num_complex::Complex64 as C64;

use super::{lu_solve, ComplexMatrix};
use crate::error::{contract, Result};

// Padé degrees and 1-norm thresholds for scaling and squaring (Higham 2005).
const THETA: [(usize, f64); 4] =
    [(3, 1.495585217958292e-2), (5, 2.53939833006323e-1), (7, 9.504178996162932e-1), (9, 2.097847961257068)];
const THETA_13: f64 = 5.371920351148152;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] =
    [17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0, 2162160.0, 110880.0, 3960.0, 90.0, 1.0];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Matrix exponential by Padé approximation with scaling and squaring.
pub fn matrix_exponential(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return contract(format!("matrix exponential of a {}x{} matrix", m.rows(), m.cols()));
    }
    let n = m.rows();
    if n == 0 {
        return Ok(ComplexMatrix::zeros(0, 0));
    }
    let norm = m.norm_one();
    for &(deg, theta) in &THETA {
        if norm <= theta {
            let b: &[f64] = match deg {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                _ => &B9,
            };
            return low_order_pade(m, b);
        }
    }
    let s = if norm > THETA_13 { (norm / THETA_13).log2().ceil() as i32 } else { 0 };
    let scaled = m.scale(C64::new(0.5f64.powi(s), 0.0));
    let mut x = pade13(&scaled)?;
    for _ in 0..s {
        x = x.matmul(&x);
    }
    Ok(x)
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn low_order_pade(a: &ComplexMatrix, b: &[f64]) -> Result<ComplexMatrix> {
    let n = a.rows();
    let id = ComplexMatrix::identity(n);
    let a2 = a.matmul(a);
    // even powers A^0, A^2, A^4, ...
    let mut powers = vec![id.clone()];
    while powers.len() * 2 < b.len() {
        let next = powers.last().unwrap().matmul(&a2);
        powers.push(next);
    }
    let mut u_inner = ComplexMatrix::zeros(n, n);
    let mut v = ComplexMatrix::zeros(n, n);
    for (k, p) in powers.iter().enumerate() {
        v = v.add(&p.scale(real(b[2 * k])));
        u_inner = u_inner.add(&p.scale(real(b[2 * k + 1])));
    }
    let u = a.matmul(&u_inner);
    lu_solve(&v.sub(&u), &v.add(&u))
}

fn pade13(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.rows();
    let id = ComplexMatrix::identity(n);
    let a2 = a.matmul(a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);
    let b = |k: usize| real(B13[k]);

    let u_hi = a6.scale(b(13)).add(&a4.scale(b(11))).add(&a2.scale(b(9)));
    let u_lo = a6.scale(b(7)).add(&a4.scale(b(5))).add(&a2.scale(b(3))).add(&id.scale(b(1)));
    let u = a.matmul(&a6.matmul(&u_hi).add(&u_lo));

    let v_hi = a6.scale(b(12)).add(&a4.scale(b(10))).add(&a2.scale(b(8)));
    let v_lo = a6.scale(b(6)).add(&a4.scale(b(4))).add(&a2.scale(b(2))).add(&id.scale(b(0)));
    let v = a6.matmul(&v_hi).add(&v_lo);

    lu_solve(&v.sub(&u), &v.add(&u))
}
