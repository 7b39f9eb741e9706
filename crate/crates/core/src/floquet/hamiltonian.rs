use alloc::collections::BTreeMap;
use alloc::format;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat};

const PAIRING_TOL: f64 = 1e-12;

/// Time-periodic operator `O(t) = Σₙ O⁽ⁿ⁾ e^{inωt}` given by its harmonics.
///
/// Construction enforces `O⁽⁻ⁿ⁾ = (O⁽ⁿ⁾)†`, i.e. `O(t)` is Hermitian at every
/// instant. The zero harmonic is always present.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierHamiltonian {
    components: BTreeMap<i32, CMat>,
    omega: f64,
    dim: usize,
}

impl FourierHamiltonian {
    pub fn new<I>(omega: f64, components: I) -> Result<Self>
    where
        I: IntoIterator<Item = (i32, CMat)>,
    {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::Argument(format!("driving frequency must be positive, got {omega}")));
        }
        let components: BTreeMap<i32, CMat> = components.into_iter().collect();
        let dim = match components.values().next() {
            Some(m) => m.nrows(),
            None => return Err(Error::Construction("no Fourier components given".into())),
        };
        if dim == 0 {
            return Err(Error::Construction("zero-dimensional Hilbert space".into()));
        }
        for (n, m) in &components {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::Construction(format!(
                    "component {n} has shape {}x{}, expected {dim}x{dim}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::Construction(format!("component {n} has non-finite entries")));
            }
        }
        let mut components = components;
        components.entry(0).or_insert_with(|| CMat::zeros(dim, dim));
        for (&n, m) in &components {
            if n < 0 {
                continue;
            }
            let scale = 1.0f64.max(m.iter().fold(0.0f64, |a, z| a.max(z.norm())));
            let deviation = match components.get(&-n) {
                Some(partner) => (m.adjoint() - partner).iter().fold(0.0f64, |a, z| a.max(z.norm())),
                None => m.iter().fold(0.0f64, |a, z| a.max(z.norm())),
            };
            if deviation > PAIRING_TOL * scale {
                return Err(Error::Construction(format!(
                    "harmonics {n} and {} are not Hermitian conjugates (deviation {deviation:.3e})",
                    -n
                )));
            }
        }
        for (&n, m) in &components {
            if n < 0 && !components.contains_key(&-n) {
                let size = m.iter().fold(0.0f64, |a, z| a.max(z.norm()));
                if size > PAIRING_TOL {
                    return Err(Error::Construction(format!("harmonic {n} has no partner {}", -n)));
                }
            }
        }
        Ok(Self { components, omega, dim })
    }

    /// A time-independent operator, carried with a nominal driving frequency.
    pub fn time_independent(h0: CMat, omega: f64) -> Result<Self> {
        Self::new(omega, [(0, h0)])
    }

    /// `H(t) = H₀ + V cos(ωt)`, i.e. `H⁽±¹⁾ = V/2` for Hermitian `V`.
    pub fn cosine_drive(h0: CMat, v: CMat, omega: f64) -> Result<Self> {
        let half = v * c(0.5, 0.0);
        Self::new(omega, [(0, h0), (1, half.clone()), (-1, half.adjoint())])
    }

    /// `H(t) = H₀ + V sin(ωt)` for Hermitian `V`: `H⁽¹⁾ = −iV/2`, `H⁽⁻¹⁾ = iV/2`.
    pub fn sine_drive(h0: CMat, v: CMat, omega: f64) -> Result<Self> {
        let plus = &v * c(0.0, -0.5);
        let minus = &v * c(0.0, 0.5);
        Self::new(omega, [(0, h0), (1, plus), (-1, minus)])
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn period(&self) -> f64 {
        2.0 * core::f64::consts::PI / self.omega
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &BTreeMap<i32, CMat> {
        &self.components
    }

    pub fn component(&self, n: i32) -> Option<&CMat> {
        self.components.get(&n)
    }

    /// Largest stored `|n|`.
    pub fn max_harmonic(&self) -> usize {
        self.components.keys().map(|n| n.unsigned_abs() as usize).max().unwrap_or(0)
    }

    pub fn is_static(&self) -> bool {
        self.components
            .iter()
            .all(|(&n, m)| n == 0 || m.iter().all(|z| *z == Complex64::new(0.0, 0.0)))
    }

    /// Evaluates `H(t)`.
    pub fn at(&self, t: f64) -> CMat {
        let mut out = CMat::zeros(self.dim, self.dim);
        for (&n, m) in &self.components {
            let phase = Complex64::from_polar(1.0, n as f64 * self.omega * t);
            out.zip_apply(m, |o, x| *o += x * phase);
        }
        linalg::hermitize(&mut out);
        out
    }

    /// Upper bound on `sup_t ‖H(t)‖₂`: the sum of the spectral norms of the
    /// harmonics.
    pub fn norm_bound(&self) -> f64 {
        self.components.values().map(linalg::spectral_norm).sum()
    }

    /// Applies the same linear map to every harmonic. The map must commute
    /// with the adjoint for the result to stay valid.
    pub fn map<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(&CMat) -> CMat,
    {
        Self::new(self.omega, self.components.iter().map(|(&n, m)| (n, f(m))))
    }
}

/// Block operator on the truncated replica space `{|n⟩ : |n| ≤ n_max} ⊗ ℂᵈ`.
///
/// Storage order is a fixed contract: replica index `n` ascending from
/// `−n_max` is the outer index, the Hilbert index is inner, so element
/// `(n, α)` sits at row `(n + n_max)·d + α`.
#[derive(Debug, Clone, PartialEq)]
pub struct FloquetOperator {
    n_max: usize,
    dim: usize,
    omega: f64,
    matrix: CMat,
}

impl FloquetOperator {
    pub fn from_matrix(matrix: CMat, n_max: usize, dim: usize, omega: f64) -> Result<Self> {
        let size = (2 * n_max + 1) * dim;
        if matrix.nrows() != size || matrix.ncols() != size {
            return Err(Error::Argument(format!(
                "Floquet matrix must be {size}x{size}, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { n_max, dim, omega, matrix })
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

    pub fn replicas(&self) -> usize {
        2 * self.n_max + 1
    }

    pub fn size(&self) -> usize {
        self.replicas() * self.dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    /// Row/column of the basis element `|n⟩ ⊗ |α⟩`.
    pub fn index(&self, n: i32, alpha: usize) -> usize {
        replica_index(self.n_max, self.dim, n, alpha)
    }

    /// Copy of block `(n, m)`.
    pub fn block(&self, n: i32, m: i32) -> CMat {
        let (r, c) = (self.index(n, 0), self.index(m, 0));
        self.matrix.view((r, c), (self.dim, self.dim)).into_owned()
    }
}

pub(crate) fn replica_index(n_max: usize, dim: usize, n: i32, alpha: usize) -> usize {
    let shifted = n + n_max as i32;
    assert!(shifted >= 0 && (shifted as usize) <= 2 * n_max, "replica {n} outside ±{n_max}");
    assert!(alpha < dim);
    shifted as usize * dim + alpha
}

/// `Σₙ Lₙ ⊗ O⁽ⁿ⁾` truncated to `|n| ≤ n_max`, without the `N̂ω` term.
pub fn lift_fourier(o: &FourierHamiltonian, n_max: usize) -> FloquetOperator {
    let d = o.dim();
    let reps = 2 * n_max + 1;
    let mut m = CMat::zeros(reps * d, reps * d);
    for row in 0..reps {
        for col in 0..reps {
            let harmonic = row as i32 - col as i32;
            if let Some(block) = o.component(harmonic) {
                m.view_mut((row * d, col * d), (d, d)).copy_from(block);
            }
        }
    }
    FloquetOperator { n_max, dim: d, omega: o.omega(), matrix: m }
}

/// `𝟙_F ⊗ op`.
pub fn lift_static(op: &CMat, n_max: usize, omega: f64) -> FloquetOperator {
    let reps = 2 * n_max + 1;
    let matrix = linalg::kron(&linalg::identity(reps), op);
    FloquetOperator { n_max, dim: op.nrows(), omega, matrix }
}

/// Floquet Hamiltonian `Σₙ Lₙ ⊗ H⁽ⁿ⁾ + N̂ ⊗ 𝟙 ω` on `|n| ≤ n_max`.
///
/// A truncation below the highest stored harmonic is legal (the dropped
/// couplings simply do not fit) and only logged.
pub fn assemble_floquet_hamiltonian(h: &FourierHamiltonian, n_max: usize) -> FloquetOperator {
    if n_max < h.max_harmonic() {
        log::warn!(
            "n_max = {n_max} is below the highest harmonic {}; outer couplings are truncated",
            h.max_harmonic()
        );
    }
    let mut f = lift_fourier(h, n_max);
    let d = h.dim();
    for row in 0..(2 * n_max + 1) {
        let shift = (row as f64 - n_max as f64) * h.omega();
        for a in 0..d {
            f.matrix[(row * d + a, row * d + a)] += c(shift, 0.0);
        }
    }
    f
}
