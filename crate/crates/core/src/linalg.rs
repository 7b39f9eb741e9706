//! Dense complex matrix helpers shared by every solver.
//!
//! Matrices are `nalgebra` column-major `DMatrix<Complex64>`. Products that sit
//! on hot paths go through `matrixmultiply::zgemm`, which is several times
//! faster than the generic complex kernel.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Builds a complex matrix from a row-major real array.
pub fn real_matrix(n: usize, rows: &[f64]) -> CMat {
    assert_eq!(rows.len(), n * n, "real_matrix: expected {} entries", n * n);
    CMat::from_fn(n, n, |i, j| c(rows[i * n + j], 0.0))
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn dagger(a: &CMat) -> CMat {
    a.adjoint()
}

pub fn trace(a: &CMat) -> Complex64 {
    a.diagonal().iter().sum()
}

pub fn frobenius(a: &CMat) -> f64 {
    libm::sqrt(a.iter().map(|z| z.norm_sqr()).sum::<f64>())
}

/// Largest singular value.
pub fn spectral_norm(a: &CMat) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let (vals, _) = eigh(&mul_op(a, Op::H, a, Op::N));
    libm::sqrt(vals.last().copied().unwrap_or(0.0).max(0.0))
}

/// Largest element-wise deviation `|a_ij - conj(a_ji)|`.
pub fn hermitian_deviation(a: &CMat) -> f64 {
    let n = a.nrows();
    let mut dev = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            dev = dev.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Replaces `a` by `(a + a†)/2`.
pub fn hermitize(a: &mut CMat) {
    let n = a.nrows();
    for j in 0..n {
        for i in 0..j {
            let avg = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = avg;
            a[(j, i)] = avg.conj();
        }
        a[(j, j)] = c(a[(j, j)].re, 0.0);
    }
}

pub fn ensure_hermitian(a: &CMat, what: &'static str, tol: f64) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::Argument(alloc::format!("{what} is not square")));
    }
    let scale = 1.0f64.max(a.iter().fold(0.0f64, |m, z| m.max(z.norm())));
    let deviation = hermitian_deviation(a);
    if deviation > tol * scale {
        return Err(Error::NotHermitian { what, deviation });
    }
    Ok(())
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Operand flavour for [`gemm`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    /// Use the matrix as stored.
    N,
    /// Use the conjugate transpose.
    H,
}

impl Op {
    fn dims(self, m: &CMat) -> (usize, usize) {
        match self {
            Op::N => (m.nrows(), m.ncols()),
            Op::H => (m.ncols(), m.nrows()),
        }
    }

}

/// `out <- alpha * op(a) * op(b) + beta * out`.
pub fn gemm(out: &mut CMat, alpha: Complex64, a: &CMat, opa: Op, b: &CMat, opb: Op, beta: Complex64) {
    let (m, k) = opa.dims(a);
    let (k2, n) = opb.dims(b);
    assert_eq!(k, k2, "gemm: inner dimensions differ");
    assert_eq!((out.nrows(), out.ncols()), (m, n), "gemm: output shape");
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        *out *= beta;
        return;
    }
    // zgemm has no conjugate flag, so adjoint operands are materialized.
    let a_h;
    let a = match opa {
        Op::N => a,
        Op::H => {
            a_h = a.adjoint();
            &a_h
        }
    };
    let b_h;
    let b = match opb {
        Op::N => b,
        Op::H => {
            b_h = b.adjoint();
            &b_h
        }
    };
    let std = matrixmultiply::CGemmOption::Standard;
    let ldc = out.nrows() as isize;
    // SAFETY: Complex64 is repr(C) {re, im}, identical in layout to [f64; 2];
    // the strides describe column-major storage of matrices whose shapes were
    // checked above, so every addressed element lies inside its buffer.
    unsafe {
        matrixmultiply::zgemm(
            std,
            std,
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
            out.as_mut_ptr() as *mut [f64; 2],
            1,
            ldc,
        );
    }
}

pub fn mul(a: &CMat, b: &CMat) -> CMat {
    mul_op(a, Op::N, b, Op::N)
}

pub fn mul_op(a: &CMat, opa: Op, b: &CMat, opb: Op) -> CMat {
    let (m, _) = opa.dims(a);
    let (_, n) = opb.dims(b);
    let mut out = CMat::zeros(m, n);
    gemm(&mut out, ONE, a, opa, b, opb, ZERO);
    out
}

/// `Y diag(d) Y†`.
pub fn spectral_sum(y: &CMat, d: &[Complex64]) -> CMat {
    let mut yd = y.clone();
    for (j, &dj) in d.iter().enumerate() {
        for i in 0..yd.nrows() {
            yd[(i, j)] *= dj;
        }
    }
    mul_op(&yd, Op::N, y, Op::H)
}

/// Hermitian eigendecomposition with ascending eigenvalues.
///
/// Each eigenvector is rotated so that its largest-modulus component is real
/// and positive, which makes the output a deterministic function of the input.
pub fn eigh(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    let eig = nalgebra::SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]).then(i.cmp(&j)));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        let mut pivot = ZERO;
        let mut best = -1.0;
        for z in v.iter() {
            // strict comparison keeps the first of equal-modulus candidates
            if z.norm() > best + 1e-14 {
                best = z.norm();
                pivot = *z;
            }
        }
        let phase = if best > 0.0 { pivot.conj() / pivot.norm() } else { ONE };
        for i in 0..n {
            vectors[(i, col)] = v[i] * phase;
        }
    }
    (values, vectors)
}

pub fn inverse(a: &CMat, what: &'static str) -> Result<CMat> {
    a.clone().try_inverse().ok_or(Error::Singular(what))
}

/// Commutator `[a, b]`.
pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    let mut out = mul(a, b);
    gemm(&mut out, -ONE, b, Op::N, a, Op::N, ONE);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, seed: u64) -> CMat {
        let mut s = seed;
        CMat::from_fn(n, n, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let b = (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            c(a, b)
        })
    }

    #[test]
    fn gemm_matches_naive_product_for_all_operand_flavours() {
        let a = sample(5, 1);
        let b = sample(5, 2);
        for (opa, opb) in [(Op::N, Op::N), (Op::H, Op::N), (Op::N, Op::H), (Op::H, Op::H)] {
            let ea = if opa == Op::H { a.adjoint() } else { a.clone() };
            let eb = if opb == Op::H { b.adjoint() } else { b.clone() };
            let diff = frobenius(&(mul_op(&a, opa, &b, opb) - &ea * &eb));
            assert!(diff < 1e-13, "{opa:?} {opb:?}: {diff}");
        }
    }

    #[test]
    fn rectangular_gemm() {
        let a = CMat::from_fn(3, 4, |i, j| c(i as f64, j as f64));
        let b = CMat::from_fn(4, 2, |i, j| c(j as f64 - i as f64, 1.0));
        assert!(frobenius(&(mul(&a, &b) - &a * &b)) < 1e-13);
    }

    #[test]
    fn eigh_reconstructs_and_sorts() {
        let m = sample(6, 7);
        let h = (&m + m.adjoint()) * c(0.5, 0.0);
        let (vals, vecs) = eigh(&h);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let d: Vec<Complex64> = vals.iter().map(|&v| c(v, 0.0)).collect();
        assert!(frobenius(&(spectral_sum(&vecs, &d) - &h)) < 1e-12);
        assert!(frobenius(&(vecs.adjoint() * &vecs - identity(6))) < 1e-12);
    }

    #[test]
    fn spectral_norm_of_diagonal_and_nilpotent() {
        let d = CMat::from_diagonal(&nalgebra::DVector::from_vec(alloc::vec![c(-3.0, 0.0), c(0.0, 2.0)]));
        assert!((spectral_norm(&d) - 3.0).abs() < 1e-14);
        let n = CMat::from_fn(2, 2, |i, j| if i == 0 && j == 1 { c(0.0, 5.0) } else { ZERO });
        assert!((spectral_norm(&n) - 5.0).abs() < 1e-14);
    }

    #[test]
    fn hermitize_projects_onto_hermitian_part() {
        let mut m = sample(4, 3);
        let expected = (&m + m.adjoint()) * c(0.5, 0.0);
        hermitize(&mut m);
        assert!(frobenius(&(m - expected)) < 1e-15);
    }
}
