use alloc::collections::BTreeMap;
use alloc::format;

use num_complex::Complex64;

use super::eigen::FloquetEigensystem;
use super::hamiltonian::FourierHamiltonian;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, Op};

/// Hilbert-space propagator reconstructed from a Floquet eigensystem.
#[derive(Debug, Clone)]
pub struct Evolution {
    pub u: CMat,
    /// `‖U†U − 𝟙‖_F`, nonzero only through replica truncation.
    pub unitarity_defect: f64,
}

/// Expectation value assembled from Fourier components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservableValue {
    pub value: f64,
    /// Imaginary part discarded from the harmonic sum.
    pub imag_residue: f64,
}

fn check_interval(t: f64, t0: f64) -> Result<f64> {
    let tau = t - t0;
    if !(tau >= 0.0) {
        return Err(Error::Argument(format!("evolution requires t >= t0, got t = {t}, t0 = {t0}")));
    }
    Ok(tau)
}

fn phases(eig: &FloquetEigensystem, tau: f64) -> impl Iterator<Item = Complex64> + '_ {
    eig.quasienergies().iter().map(move |&e| Complex64::from_polar(1.0, -e * tau))
}

/// `Uᶠ(τ) = Y e^{−iΛτ} Y†`.
pub fn floquet_propagator(eig: &FloquetEigensystem, tau: f64) -> CMat {
    let d: alloc::vec::Vec<Complex64> = phases(eig, tau).collect();
    linalg::spectral_sum(eig.vectors(), &d)
}

/// Column block `⟨·|Uᶠ(τ)|0⟩`, shape `(2n_max+1)d × d`.
fn propagator_central_column(eig: &FloquetEigensystem, tau: f64) -> CMat {
    let d = eig.dim();
    let y = eig.vectors();
    let start = eig.n_max() * d;
    // rows of Y belonging to replica 0, conjugate-transposed: Y†[:, block 0]
    let mut b = y.rows(start, d).adjoint();
    for (k, ph) in phases(eig, tau).enumerate() {
        for a in 0..d {
            b[(k, a)] *= ph;
        }
    }
    linalg::mul(y, &b)
}

/// `U(t, t₀) = Σₖ ⟨k| Y e^{−iΛ(t−t₀)} Y† |0⟩ e^{ikωt}`.
pub fn floquet_evolution(eig: &FloquetEigensystem, t: f64, t0: f64) -> Result<Evolution> {
    let tau = check_interval(t, t0)?;
    let d = eig.dim();
    let col = propagator_central_column(eig, tau);
    let mut u = CMat::zeros(d, d);
    for (row, k) in (-(eig.n_max() as i32)..=eig.n_max() as i32).enumerate() {
        let phase = Complex64::from_polar(1.0, k as f64 * eig.omega() * t);
        u.zip_apply(&col.rows(row * d, d), |o, x| *o += x * phase);
    }
    let defect = linalg::frobenius(&(linalg::mul_op(&u, Op::H, &u, Op::N) - linalg::identity(d)));
    Ok(Evolution { u, unitarity_defect: defect })
}

/// `ρ(t) = U(t,t₀) ρ₀ U(t,t₀)†` with `U` from [`floquet_evolution`].
pub fn evolve_density(eig: &FloquetEigensystem, rho0: &CMat, t: f64, t0: f64) -> Result<CMat> {
    check_dim(eig.dim(), rho0, "initial density")?;
    let u = floquet_evolution(eig, t, t0)?.u;
    Ok(linalg::mul_op(&linalg::mul(&u, rho0), Op::N, &u, Op::H))
}

/// Fourier components `ρ⁽ⁿ⁾(t) = ⟨n|ρᶠ(t)|0⟩` of the density evolved in
/// Floquet space from `ρᶠ(t₀) = 𝟙 ⊗ ρ₀`.
pub fn density_components(
    eig: &FloquetEigensystem,
    rho0: &CMat,
    t: f64,
    t0: f64,
) -> Result<BTreeMap<i32, CMat>> {
    let tau = check_interval(t, t0)?;
    let d = eig.dim();
    check_dim(d, rho0, "initial density")?;
    let uf = floquet_propagator(eig, tau);
    let size = uf.nrows();
    let mut w = CMat::zeros(size, size);
    for j in 0..eig.n_max() * 2 + 1 {
        let block = linalg::mul(&uf.columns(j * d, d).into_owned(), rho0);
        w.columns_mut(j * d, d).copy_from(&block);
    }
    let r = uf.rows(eig.n_max() * d, d).into_owned();
    let col = linalg::mul_op(&w, Op::N, &r, Op::H);
    let mut out = BTreeMap::new();
    for (row, n) in (-(eig.n_max() as i32)..=eig.n_max() as i32).enumerate() {
        out.insert(n, col.rows(row * d, d).into_owned());
    }
    Ok(out)
}

/// `⟨O(t)⟩ = Σ_m Tr(Σₙ O⁽ᵐ⁻ⁿ⁾ ρ⁽ⁿ⁾(t)) e^{imωt}`; the driving frequency is
/// taken from the observable.
pub fn floquet_observable(
    o: &FourierHamiltonian,
    rho_components: &BTreeMap<i32, CMat>,
    t: f64,
) -> Result<ObservableValue> {
    let mut acc = c(0.0, 0.0);
    for (&n, rho_n) in rho_components {
        check_dim(o.dim(), rho_n, "density component")?;
        for (&k, o_k) in o.components() {
            let m = k + n;
            let phase = Complex64::from_polar(1.0, m as f64 * o.omega() * t);
            acc += trace_product(o_k, rho_n) * phase;
        }
    }
    Ok(ObservableValue { value: acc.re, imag_residue: acc.im })
}

/// `Tr(a b)` without forming the product.
pub fn trace_product(a: &CMat, b: &CMat) -> Complex64 {
    let n = a.nrows();
    let mut s = c(0.0, 0.0);
    for i in 0..n {
        for k in 0..a.ncols() {
            s += a[(i, k)] * b[(k, i)];
        }
    }
    s
}

fn check_dim(d: usize, m: &CMat, what: &str) -> Result<()> {
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::Argument(format!(
            "{what} has shape {}x{}, expected {d}x{d}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floquet::{assemble_floquet_hamiltonian, quasi_eigensystem};
    use crate::linalg::real_matrix;

    fn undriven(h0: CMat, omega: f64, n_max: usize) -> FloquetEigensystem {
        let h = FourierHamiltonian::time_independent(h0, omega).unwrap();
        quasi_eigensystem(&assemble_floquet_hamiltonian(&h, n_max)).unwrap()
    }

    /// `exp(−iHτ)` from the eigendecomposition of the static `H`.
    fn static_propagator(h0: &CMat, tau: f64) -> CMat {
        let (vals, vecs) = linalg::eigh(h0);
        let d: alloc::vec::Vec<Complex64> = vals.iter().map(|&e| Complex64::from_polar(1.0, -e * tau)).collect();
        linalg::spectral_sum(&vecs, &d)
    }

    #[test]
    fn zero_time_evolution_is_identity() {
        let eig = undriven(real_matrix(2, &[0.4, 0.3, 0.3, -0.1]), 1.0, 2);
        let ev = floquet_evolution(&eig, 1.7, 1.7).unwrap();
        assert!(linalg::frobenius(&(ev.u - linalg::identity(2))) < 1e-12);
    }

    #[test]
    fn undriven_evolution_is_the_static_exponential_for_any_truncation() {
        let h0 = real_matrix(2, &[0.4, 0.3, 0.3, -0.1]);
        for n_max in [0, 1, 4] {
            let eig = undriven(h0.clone(), 0.9, n_max);
            let ev = floquet_evolution(&eig, 3.2, 0.5).unwrap();
            let want = static_propagator(&h0, 2.7);
            assert!(linalg::frobenius(&(ev.u - want)) < 1e-12, "n_max = {n_max}");
            assert!(ev.unitarity_defect < 1e-12);
        }
    }

    #[test]
    fn backwards_time_is_rejected() {
        let eig = undriven(linalg::identity(1), 1.0, 0);
        assert!(floquet_evolution(&eig, 0.0, 1.0).is_err());
    }

    #[test]
    fn static_observable_on_static_state_is_a_single_trace() {
        let o = FourierHamiltonian::time_independent(real_matrix(2, &[1.0, 0.5, 0.5, -2.0]), 1.0).unwrap();
        let rho = real_matrix(2, &[0.7, 0.1, 0.1, 0.3]);
        let mut comps = BTreeMap::new();
        comps.insert(0, rho.clone());
        let v = floquet_observable(&o, &comps, 12.3).unwrap();
        assert!((v.value - (0.7 + 0.05 + 0.05 - 0.6)).abs() < 1e-15);
        assert_eq!(v.imag_residue, 0.0);
    }

    #[test]
    fn identity_observable_reads_the_trace() {
        let h = FourierHamiltonian::cosine_drive(
            real_matrix(2, &[1.0, 0.0, 0.0, -1.0]),
            real_matrix(2, &[0.0, 0.6, 0.6, 0.0]),
            1.5,
        )
        .unwrap();
        let eig = quasi_eigensystem(&assemble_floquet_hamiltonian(&h, 12)).unwrap();
        let rho0 = real_matrix(2, &[0.8, 0.2, 0.2, 0.2]);
        let comps = density_components(&eig, &rho0, 4.0, 0.0).unwrap();
        let id = FourierHamiltonian::time_independent(linalg::identity(2), 1.5).unwrap();
        let v = floquet_observable(&id, &comps, 4.0).unwrap();
        assert!((v.value - 1.0).abs() < 1e-10, "{}", v.value);
        assert!(v.imag_residue.abs() < 1e-10);
    }

    #[test]
    fn dimension_mismatch_is_an_argument_error() {
        let o = FourierHamiltonian::time_independent(linalg::identity(3), 1.0).unwrap();
        let mut comps = BTreeMap::new();
        comps.insert(0, linalg::identity(2));
        assert!(matches!(floquet_observable(&o, &comps, 0.0), Err(Error::Argument(_))));
    }
}
