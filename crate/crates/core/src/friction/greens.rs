use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::floquet::FloquetOperator;
use crate::lead::LeadSpec;
use crate::linalg::{self, c, CMat, Op};

/// Retarded and lesser Floquet Green's functions at one energy.
#[derive(Debug, Clone)]
pub struct FloquetGreens {
    pub retarded: CMat,
    pub lesser: CMat,
}

/// `Σ_l Γ_l` lifted block-diagonally, `𝟙_F ⊗ Σ_l Γ_l`.
pub(crate) fn lifted_gamma(leads: &[LeadSpec], n_max: usize) -> CMat {
    let d = leads[0].dim();
    let mut g = CMat::zeros(d, d);
    for l in leads {
        g += l.gamma();
    }
    linalg::kron(&linalg::identity(2 * n_max + 1), &g)
}

/// Lesser self-energy, block-diagonal with blocks `i Σ_l Γ_l f_l(ε − nω)`.
pub(crate) fn lesser_self_energy(eps: f64, leads: &[LeadSpec], n_max: usize, omega: f64) -> CMat {
    let d = leads[0].dim();
    let reps = 2 * n_max + 1;
    let mut s = CMat::zeros(reps * d, reps * d);
    for (row, n) in (-(n_max as i32)..=n_max as i32).enumerate() {
        let mut block = s.view_mut((row * d, row * d), (d, d));
        for l in leads {
            let f = l.occupation(eps - n as f64 * omega);
            block.zip_apply(l.gamma(), |o, g| *o += g * c(0.0, f));
        }
    }
    s
}

fn check_leads(hf: &FloquetOperator, leads: &[LeadSpec]) -> Result<()> {
    if leads.is_empty() {
        return Err(Error::Argument("at least one lead is required".into()));
    }
    if let Some(l) = leads.iter().find(|l| l.dim() != hf.dim()) {
        return Err(Error::Argument(format!(
            "lead dimension {} does not match the system dimension {}",
            l.dim(),
            hf.dim()
        )));
    }
    Ok(())
}

/// `Gᴿ(ε) = (ε − hᶠ + (i/2)Γᶠ)⁻¹` and `G<(ε) = Gᴿ Σ<(ε) Gᴿ†`.
///
/// The replica shift `nω` already sits on the diagonal of `hᶠ`, so lead
/// occupations are evaluated at `ε − nω` in replica `n`; at zero driving this
/// reduces block by block to the static wide-band Green's functions.
pub fn floquet_greens(eps: f64, hf: &FloquetOperator, leads: &[LeadSpec]) -> Result<FloquetGreens> {
    check_leads(hf, leads)?;
    let gamma = lifted_gamma(leads, hf.n_max());
    let size = hf.size();
    let mut m = CMat::from_fn(size, size, |i, j| -hf.matrix()[(i, j)] + gamma[(i, j)] * c(0.0, 0.5));
    for i in 0..size {
        m[(i, i)] += c(eps, 0.0);
    }
    let retarded = linalg::inverse(&m, "retarded Green's function")?;
    let sigma = lesser_self_energy(eps, leads, hf.n_max(), hf.omega());
    let lesser = linalg::mul_op(&linalg::mul(&retarded, &sigma), Op::N, &retarded, Op::H);
    Ok(FloquetGreens { retarded, lesser })
}

/// Precomputed spectral data for energy scans when `Σ_l Γ_l = g·𝟙`: then
/// `Gᴿ = Y diag(1/(ε − λ + ig/2)) Y†` with `(λ, Y)` the eigensystem of `hᶠ`.
pub(crate) struct Spectral {
    pub lambda: Vec<f64>,
    pub y: CMat,
    pub width: f64,
}

impl Spectral {
    /// `Some` when the total hybridization is proportional to the identity.
    pub fn try_new(hf: &FloquetOperator, leads: &[LeadSpec]) -> Option<Self> {
        let d = hf.dim();
        let mut g = CMat::zeros(d, d);
        for l in leads {
            g += l.gamma();
        }
        let width = g[(0, 0)].re;
        let scale = width.abs().max(1e-300);
        for i in 0..d {
            for j in 0..d {
                let expected = if i == j { width } else { 0.0 };
                if (g[(i, j)] - c(expected, 0.0)).norm() > 1e-14 * scale.max(1.0) {
                    return None;
                }
            }
        }
        if width <= 0.0 {
            return None;
        }
        let (lambda, y) = linalg::eigh(hf.matrix());
        Some(Self { lambda, y, width })
    }

    pub fn resolvent_diagonal(&self, eps: f64) -> Vec<num_complex::Complex64> {
        self.lambda.iter().map(|&l| c(1.0, 0.0) / c(eps - l, 0.5 * self.width)).collect()
    }
}
