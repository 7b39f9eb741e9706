use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::context::DissipatorContext;
use super::fock::Ladder;
use crate::error::{Error, Result};
use crate::floquet::check_density;
use crate::linalg::{self, CMat, Op};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    /// `2^M × 2^M` Fock-space density with time-dependent dissipators.
    Hilbert,
    /// Replica-space density with static dissipators.
    Floquet,
}

/// System density matrix in either representation.
///
/// In the Floquet flavour the physical state is read off the replica column
/// `⟨n|ρᶠ|0⟩`; the raw trace of `ρᶠ` is `2n_max+1` and is not normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedDensityMatrix {
    flavor: Flavor,
    data: CMat,
    time: f64,
}

impl ReducedDensityMatrix {
    /// Validated physical state: Hermitian, unit trace, positive semidefinite.
    pub fn hilbert(data: CMat, time: f64) -> Result<Self> {
        check_density(&data, data.nrows())?;
        Ok(Self { flavor: Flavor::Hilbert, data, time })
    }

    /// `ρᶠ = 𝟙 ⊗ ρ₀` on the replica space of `ctx`.
    pub fn floquet_from(rho0: &CMat, time: f64, ctx: &DissipatorContext) -> Result<Self> {
        check_density(rho0, ctx.hilbert_dim())?;
        let reps = 2 * ctx.n_max() + 1;
        Ok(Self { flavor: Flavor::Floquet, data: linalg::kron(&linalg::identity(reps), rho0), time })
    }

    /// Any Hermitian matrix of the right flavour, without a trace or
    /// positivity requirement. Dissipators are linear and accept these.
    pub fn from_hermitian(flavor: Flavor, data: CMat, time: f64) -> Result<Self> {
        linalg::ensure_hermitian(&data, "density matrix", 1e-10)?;
        Ok(Self { flavor, data, time })
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn data(&self) -> &CMat {
        &self.data
    }

    pub fn into_data(self) -> CMat {
        self.data
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Fourier components `ρ⁽ⁿ⁾ = ⟨n|ρᶠ|0⟩` (Floquet flavour) or the single
    /// component `n = 0` (Hilbert flavour).
    pub fn components(&self, ctx: &DissipatorContext) -> BTreeMap<i32, CMat> {
        match self.flavor {
            Flavor::Hilbert => BTreeMap::from([(0, self.data.clone())]),
            Flavor::Floquet => floquet_components(&self.data, ctx.n_max(), ctx.hilbert_dim()),
        }
    }

    /// Physical density `ρ(t) = Σₙ ρ⁽ⁿ⁾ e^{inωt}` at the stored time.
    pub fn physical(&self, ctx: &DissipatorContext) -> CMat {
        match self.flavor {
            Flavor::Hilbert => self.data.clone(),
            Flavor::Floquet => physical_state(&self.data, ctx.n_max(), ctx.hilbert_dim(), ctx.omega(), self.time),
        }
    }
}

pub(crate) fn floquet_components(data: &CMat, n_max: usize, d: usize) -> BTreeMap<i32, CMat> {
    let mut out = BTreeMap::new();
    for (row, n) in (-(n_max as i32)..=n_max as i32).enumerate() {
        out.insert(n, data.view((row * d, n_max * d), (d, d)).into_owned());
    }
    out
}

pub(crate) fn physical_state(data: &CMat, n_max: usize, d: usize, omega: f64, t: f64) -> CMat {
    let mut out = CMat::zeros(d, d);
    for (row, n) in (-(n_max as i32)..=n_max as i32).enumerate() {
        let ph = Complex64::from_polar(1.0, n as f64 * omega * t);
        out.zip_apply(&data.view((row * d, n_max * d), (d, d)).into_owned(), |o, x| *o += x * ph);
    }
    out
}

/// Operators defining `Y(ρ) = Kρ − Σ_α [c_α ρ R_α + c†_α ρ S_α]`.
pub(crate) struct Generator<'a> {
    pub k: CMat,
    pub r: Vec<CMat>,
    pub s: Vec<CMat>,
    pub annihilators: &'a [Ladder],
    pub creators: &'a [Ladder],
}

impl Generator<'_> {
    /// `out = Y(ρ)`, using `scratch` as workspace.
    pub fn apply(&self, rho: &CMat, out: &mut CMat, scratch: &mut CMat) {
        linalg::gemm(out, linalg::ONE, &self.k, Op::N, rho, Op::N, linalg::ZERO);
        for a in 0..self.r.len() {
            linalg::gemm(scratch, linalg::ONE, rho, Op::N, &self.r[a], Op::N, linalg::ZERO);
            self.annihilators[a].mul_left_add(scratch, -linalg::ONE, out);
            linalg::gemm(scratch, linalg::ONE, rho, Op::N, &self.s[a], Op::N, linalg::ZERO);
            self.creators[a].mul_left_add(scratch, -linalg::ONE, out);
        }
    }

    /// `−Y(ρ) − Y(ρ†)†`, linear over complex `ρ`.
    pub fn dissipate(&self, rho: &CMat) -> CMat {
        let n = rho.nrows();
        let mut y1 = CMat::zeros(n, n);
        let mut y2 = CMat::zeros(n, n);
        let mut scratch = CMat::zeros(n, n);
        self.apply(rho, &mut y1, &mut scratch);
        self.apply(&rho.adjoint(), &mut y2, &mut scratch);
        -(y1 + y2.adjoint())
    }
}

impl DissipatorContext {
    /// Dissipative generator of the Hilbert flavour at time `t`; with
    /// `coherent` the Hamiltonian term `iH(t)` is folded into `K`.
    pub(crate) fn hilbert_generator(&self, t: f64, coherent: bool) -> Generator<'_> {
        let mut k = self.hilbert.p.at(t);
        if coherent {
            let h = self.hamiltonian().at(t);
            k.zip_apply(&h, |o, x| *o += x * linalg::I);
        }
        Generator {
            k,
            r: self.hilbert.r.iter().map(|h| h.at(t)).collect(),
            s: self.hilbert.s.iter().map(|h| h.at(t)).collect(),
            annihilators: &self.annihilators,
            creators: &self.creators,
        }
    }

    pub(crate) fn floquet_generator(&self, coherent: bool) -> Generator<'_> {
        let mut k = self.floquet.p.clone();
        if coherent {
            k.zip_apply(&self.floquet.hamiltonian, |o, x| *o += x * linalg::I);
        }
        Generator {
            k,
            r: self.floquet.r.clone(),
            s: self.floquet.s.clone(),
            annihilators: &self.floquet.annihilators,
            creators: &self.floquet.creators,
        }
    }
}

fn check_flavor(rho: &ReducedDensityMatrix, want: Flavor, size: usize) -> Result<()> {
    if rho.flavor() != want {
        return Err(Error::Argument(format!("expected a {want:?}-flavour density, got {:?}", rho.flavor())));
    }
    if rho.data().nrows() != size || rho.data().ncols() != size {
        return Err(Error::Argument(format!(
            "density has shape {}x{}, context expects {size}x{size}",
            rho.data().nrows(),
            rho.data().ncols()
        )));
    }
    Ok(())
}

/// Lead-induced part of `dρ/dt` in the Hilbert flavour at time `t`.
pub fn dissipator_hilbert(rho: &ReducedDensityMatrix, t: f64, ctx: &DissipatorContext) -> Result<CMat> {
    check_flavor(rho, Flavor::Hilbert, ctx.hilbert_dim())?;
    Ok(ctx.hilbert_generator(t, false).dissipate(rho.data()))
}

/// Lead-induced part of `dρᶠ/dt` in the Floquet flavour (time-independent).
pub fn dissipator_floquet(rho: &ReducedDensityMatrix, ctx: &DissipatorContext) -> Result<CMat> {
    check_flavor(rho, Flavor::Floquet, ctx.floquet_dim())?;
    Ok(ctx.floquet_generator(false).dissipate(rho.data()))
}
