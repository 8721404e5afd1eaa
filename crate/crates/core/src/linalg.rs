//! Dense complex linear algebra: a fast GEMM wrapper, Kronecker products,
//! Hermitian eigendecomposition helpers and the matrix exponential.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// `c ← alpha·a·b + beta·c`.
///
/// nalgebra's own complex product is unblocked; this routes through the
/// packed kernels of `matrixmultiply`, which is an order of magnitude faster
/// for the few-hundred-dimensional motional spaces.
pub fn gemm(alpha: C64, a: &CMat, b: &CMat, beta: C64, c: &mut CMat) {
    let (m, k) = a.shape();
    let (k2, n) = b.shape();
    assert_eq!(k, k2, "gemm: inner dimensions differ");
    assert_eq!(c.shape(), (m, n), "gemm: output shape");
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        *c *= beta;
        return;
    }
    // SAFETY: Complex<f64> is repr(C) with layout [re, im]; nalgebra storage
    // is contiguous column-major so element (i, j) lives at i + j·nrows.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [alpha.re, alpha.im],
            a.as_ptr() as *const [f64; 2],
            1,
            m as isize,
            b.as_ptr() as *const [f64; 2],
            1,
            k as isize,
            [beta.re, beta.im],
            c.as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
}

pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    let mut c = CMat::zeros(a.nrows(), b.ncols());
    gemm(ONE, a, b, ZERO, &mut c);
    c
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMat::zeros(ar * br, ac * bc);
    for j in 0..ac {
        for i in 0..ar {
            let s = a[(i, j)];
            if s == ZERO {
                continue;
            }
            for q in 0..bc {
                for p in 0..br {
                    out[(i * br + p, j * bc + q)] = s * b[(p, q)];
                }
            }
        }
    }
    out
}

pub fn frobenius(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// ‖A − A†‖_F ≤ tol·‖A‖_F.
pub fn is_hermitian(a: &CMat, tol: f64) -> bool {
    if !a.is_square() {
        return false;
    }
    let n = a.nrows();
    let mut diff = 0.0;
    for j in 0..n {
        for i in 0..n {
            diff += (a[(i, j)] - a[(j, i)].conj()).norm_sqr();
        }
    }
    diff.sqrt() <= tol * frobenius(a).max(f64::MIN_POSITIVE)
}

pub fn is_finite(a: &CMat) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Eigendecomposition `H = Q·diag(λ)·Q†` of a Hermitian matrix, eigenvalues
/// ascending.
pub fn eigh(h: &CMat) -> (DVector<f64>, CMat) {
    let eig = h.clone().symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vecs = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

/// `Q·diag(d)·Q†`.
pub fn from_eigen(q: &CMat, d: &[C64]) -> CMat {
    let mut qd = q.clone();
    for (j, &dj) in d.iter().enumerate() {
        for z in qd.column_mut(j).iter_mut() {
            *z *= dj;
        }
    }
    let mut out = CMat::zeros(q.nrows(), q.nrows());
    gemm(ONE, &qd, &q.adjoint(), ZERO, &mut out);
    out
}

/// `exp(−i·H·t)` for Hermitian `H`.
pub fn expm_hermitian(h: &CMat, t: f64) -> CMat {
    let (vals, q) = eigh(h);
    let d: Vec<C64> = vals.iter().map(|&l| (-I * l * t).exp()).collect();
    from_eigen(&q, &d)
}

/// Divided differences of `f(λ) = e^{−iλt}`, written so that nearly
/// degenerate pairs stay accurate.
fn exp_divided_difference(li: f64, lj: f64, t: f64) -> C64 {
    let d = li - lj;
    let mean = 0.5 * (li + lj);
    let phase = (-I * mean * t).exp();
    let x = 0.5 * d * t;
    if x.abs() < 1e-8 {
        -I * t * phase * (1.0 - x * x / 6.0)
    } else {
        -I * phase * (2.0 * x.sin() / d)
    }
}

/// Fréchet derivative of `H ↦ exp(−iHt)` at Hermitian `H` in direction `E`,
/// computed in the eigenbasis of `H` with divided differences.
pub fn expm_frechet_hermitian(h: &CMat, e: &CMat, t: f64) -> CMat {
    let (vals, q) = eigh(h);
    let n = vals.len();
    let qh = q.adjoint();
    let mut inner = matmul(&matmul(&qh, e), &q);
    for j in 0..n {
        for i in 0..n {
            inner[(i, j)] *= exp_divided_difference(vals[i], vals[j], t);
        }
    }
    matmul(&matmul(&q, &inner), &qh)
}

fn one_norm(a: &CMat) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
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
const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068),
];
const THETA13: f64 = 5.371920351148152;

fn add_scaled(acc: &mut CMat, s: f64, m: &CMat) {
    for (a, b) in acc.iter_mut().zip(m.iter()) {
        *a += b * s;
    }
}

fn identity_scaled(n: usize, s: f64) -> CMat {
    CMat::from_diagonal_element(n, n, C64::new(s, 0.0))
}

/// Low-order diagonal Padé numerator/denominator pieces `(U, V)`.
fn pade_low(a: &CMat, b: &[f64]) -> (CMat, CMat) {
    let n = a.nrows();
    let a2 = matmul(a, a);
    let mut powers = vec![a2.clone()];
    for _ in 2..b.len() / 2 {
        let next = matmul(powers.last().unwrap(), &a2);
        powers.push(next);
    }
    let mut u_inner = identity_scaled(n, b[1]);
    let mut v = identity_scaled(n, b[0]);
    for (k, p) in powers.iter().enumerate() {
        add_scaled(&mut u_inner, b[2 * k + 3], p);
        add_scaled(&mut v, b[2 * k + 2], p);
    }
    (matmul(a, &u_inner), v)
}

fn pade13(a: &CMat) -> (CMat, CMat) {
    let b = &PADE13;
    let n = a.nrows();
    let a2 = matmul(a, a);
    let a4 = matmul(&a2, &a2);
    let a6 = matmul(&a4, &a2);

    let mut t = a6.clone() * C64::new(b[13], 0.0);
    add_scaled(&mut t, b[11], &a4);
    add_scaled(&mut t, b[9], &a2);
    let mut u_inner = matmul(&a6, &t);
    add_scaled(&mut u_inner, b[7], &a6);
    add_scaled(&mut u_inner, b[5], &a4);
    add_scaled(&mut u_inner, b[3], &a2);
    add_scaled(&mut u_inner, b[1], &identity_scaled(n, 1.0));
    let u = matmul(a, &u_inner);

    let mut t = a6.clone() * C64::new(b[12], 0.0);
    add_scaled(&mut t, b[10], &a4);
    add_scaled(&mut t, b[8], &a2);
    let mut v = matmul(&a6, &t);
    add_scaled(&mut v, b[6], &a6);
    add_scaled(&mut v, b[4], &a4);
    add_scaled(&mut v, b[2], &a2);
    add_scaled(&mut v, b[0], &identity_scaled(n, 1.0));
    (u, v)
}

fn pade_solve(u: CMat, v: CMat) -> Result<CMat> {
    let p = &v + &u;
    let q = v - u;
    q.lu()
        .solve(&p)
        .ok_or_else(|| Error::Numeric("singular Padé denominator in expm".into()))
}

/// Matrix exponential of a general complex matrix by scaling and squaring
/// with diagonal Padé approximants (degree chosen from the 1-norm).
pub fn expm(a: &CMat) -> Result<CMat> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "expm needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if !is_finite(a) {
        return Err(Error::Numeric("non-finite entry passed to expm".into()));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(a.clone());
    }
    let norm = one_norm(a);
    for (m, theta) in THETA {
        if norm <= theta {
            let b: &[f64] = match m {
                3 => &PADE3,
                5 => &PADE5,
                7 => &PADE7,
                _ => &PADE9,
            };
            let (u, v) = pade_low(a, b);
            return pade_solve(u, v);
        }
    }
    let s = ((norm / THETA13).log2().ceil()).max(0.0) as i32;
    let scaled = a * C64::new(0.5f64.powi(s), 0.0);
    let (u, v) = pade13(&scaled);
    let mut r = pade_solve(u, v)?;
    for _ in 0..s {
        r = matmul(&r, &r);
    }
    if !is_finite(&r) {
        return Err(Error::Numeric("expm overflowed".into()));
    }
    Ok(r)
}

/// Relative Frobenius distance ‖a − b‖/max(‖b‖, 1).
pub fn rel_diff(a: &CMat, b: &CMat) -> f64 {
    frobenius(&(a - b)) / frobenius(b).max(1.0)
}
