use alloc::vec::Vec;

use num_complex::Complex64;

use super::hamiltonian::FloquetOperator;
use crate::error::Result;
use crate::linalg::{self, c, CMat};

const HERMITIAN_TOL: f64 = 1e-12;
const TIE_TOL: f64 = 1e-12;

/// Eigenvectors `Y` and ascending quasienergies `Λ` of a Floquet operator,
/// `Y† Hᶠ Y = diag(Λ)`.
#[derive(Debug, Clone)]
pub struct FloquetEigensystem {
    vectors: CMat,
    quasienergies: Vec<f64>,
    n_max: usize,
    dim: usize,
    omega: f64,
}

impl FloquetEigensystem {
    /// `Y`, one eigenvector per column.
    pub fn vectors(&self) -> &CMat {
        &self.vectors
    }

    pub fn quasienergies(&self) -> &[f64] {
        &self.quasienergies
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn size(&self) -> usize {
        self.quasienergies.len()
    }

    /// `Y diag(Λ) Y†`.
    pub fn reconstruct(&self) -> CMat {
        let d: Vec<Complex64> = self.quasienergies.iter().map(|&e| c(e, 0.0)).collect();
        linalg::spectral_sum(&self.vectors, &d)
    }

    /// Largest element of `|Y†Y − 𝟙|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = linalg::mul_op(&self.vectors, linalg::Op::H, &self.vectors, linalg::Op::N);
        let n = g.nrows();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - c(want, 0.0)).norm());
            }
        }
        worst
    }

    /// Weight of eigenvector `k` on replica `n`.
    pub fn replica_weight(&self, k: usize, n: i32) -> f64 {
        let start = super::hamiltonian::replica_index(self.n_max, self.dim, n, 0);
        (start..start + self.dim).map(|i| self.vectors[(i, k)].norm_sqr()).sum()
    }

    /// Quasienergies of the eigenvectors whose weight centroid lies within
    /// `window` replicas of the centre, ascending. These are the states least
    /// affected by truncation.
    pub fn central_quasienergies(&self, window: usize) -> Vec<f64> {
        (0..self.size())
            .filter(|&k| {
                let centroid: f64 = (-(self.n_max as i32)..=self.n_max as i32)
                    .map(|n| n as f64 * self.replica_weight(k, n))
                    .sum();
                libm::fabs(centroid) <= window as f64 + 0.5
            })
            .map(|k| self.quasienergies[k])
            .collect()
    }
}

/// Diagonalizes a Hermitian Floquet operator.
///
/// Eigenvalues come out ascending; exactly degenerate eigenvalues (to 1e-12
/// relative) are ordered by ascending central-replica weight.
pub fn quasi_eigensystem(f: &FloquetOperator) -> Result<FloquetEigensystem> {
    linalg::ensure_hermitian(f.matrix(), "Floquet operator", HERMITIAN_TOL)?;
    let (values, vectors) = linalg::eigh(f.matrix());
    let mut sys = FloquetEigensystem {
        vectors,
        quasienergies: values,
        n_max: f.n_max(),
        dim: f.dim(),
        omega: f.omega(),
    };
    order_ties(&mut sys);
    Ok(sys)
}

fn order_ties(sys: &mut FloquetEigensystem) {
    let n = sys.size();
    let central: Vec<f64> = (0..n).map(|k| sys.replica_weight(k, 0)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n
            && sys.quasienergies[end] - sys.quasienergies[start]
                <= TIE_TOL * (1.0 + libm::fabs(sys.quasienergies[start]))
        {
            end += 1;
        }
        order[start..end].sort_by(|&a, &b| central[a].total_cmp(&central[b]).then(a.cmp(&b)));
        start = end;
    }
    if order.iter().enumerate().all(|(i, &k)| i == k) {
        return;
    }
    let vectors = CMat::from_fn(n, n, |i, j| sys.vectors[(i, order[j])]);
    let values = order.iter().map(|&k| sys.quasienergies[k]).collect();
    sys.vectors = vectors;
    sys.quasienergies = values;
}
