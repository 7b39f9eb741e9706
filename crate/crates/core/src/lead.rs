//! Wide-band fermionic reservoirs.

use alloc::format;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::thermal::fermi;

/// A reservoir with energy-independent hybridization `Γ`, chemical potential
/// `μ` and inverse temperature `β`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeadSpec {
    gamma: CMat,
    mu: f64,
    beta: f64,
}

impl LeadSpec {
    pub fn new(gamma: CMat, mu: f64, beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::Argument(format!("inverse temperature must be positive, got {beta}")));
        }
        if !mu.is_finite() {
            return Err(Error::Argument(format!("chemical potential must be finite, got {mu}")));
        }
        if gamma.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Argument("hybridization matrix has non-finite entries".into()));
        }
        linalg::ensure_hermitian(&gamma, "hybridization matrix", 1e-12)?;
        let mut h = gamma.clone();
        linalg::hermitize(&mut h);
        let (vals, _) = linalg::eigh(&h);
        if vals.first().is_some_and(|&v| v < -1e-12) {
            return Err(Error::Argument(format!(
                "hybridization matrix is not positive semidefinite (eigenvalue {:.3e})",
                vals[0]
            )));
        }
        Ok(Self { gamma: h, mu, beta })
    }

    /// Lead coupled with strengths `gammas` to each orbital separately.
    pub fn diagonal(gammas: &[f64], mu: f64, beta: f64) -> Result<Self> {
        let n = gammas.len();
        let g = CMat::from_fn(n, n, |i, j| if i == j { linalg::c(gammas[i], 0.0) } else { linalg::ZERO });
        Self::new(g, mu, beta)
    }

    pub fn gamma(&self) -> &CMat {
        &self.gamma
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn dim(&self) -> usize {
        self.gamma.nrows()
    }

    pub fn occupation(&self, energy: f64) -> f64 {
        fermi(energy, self.mu, self.beta)
    }
}
