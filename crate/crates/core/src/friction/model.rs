use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::floquet::FourierHamiltonian;
use crate::lead::LeadSpec;
use crate::linalg::{c, real_matrix, CMat};

/// Driven two-level junction with two nuclear coordinates `(x, y)`:
/// `h = [[x+Δ, Ay + B cos ωt], [Ay + B cos ωt, −x−Δ]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct JunctionModel {
    pub a: f64,
    pub b: f64,
    pub delta: f64,
    pub omega: f64,
    pub leads: Vec<LeadSpec>,
    pub n_max: usize,
}

/// Default replica truncation for `B/ω ≤ 2`.
pub const DEFAULT_N_MAX: usize = 8;

impl JunctionModel {
    pub fn new(a: f64, b: f64, delta: f64, omega: f64, leads: Vec<LeadSpec>, n_max: usize) -> Result<Self> {
        let m = Self { a, b, delta, omega, leads, n_max };
        m.validate()?;
        Ok(m)
    }

    /// Two leads, lead `k` coupled to orbital `k` only with strength `gammas[k]`,
    /// sharing one chemical potential and temperature.
    pub fn with_orbital_leads(
        a: f64,
        b: f64,
        delta: f64,
        omega: f64,
        gammas: [f64; 2],
        mu: f64,
        beta: f64,
        n_max: usize,
    ) -> Result<Self> {
        let leads = alloc::vec![
            LeadSpec::diagonal(&[gammas[0], 0.0], mu, beta)?,
            LeadSpec::diagonal(&[0.0, gammas[1]], mu, beta)?,
        ];
        Self::new(a, b, delta, omega, leads, n_max)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("A", self.a), ("B", self.b), ("Delta", self.delta)] {
            if !v.is_finite() {
                return Err(Error::Argument(format!("{name} must be finite, got {v}")));
            }
        }
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(Error::Argument(format!("omega must be positive, got {}", self.omega)));
        }
        if self.leads.is_empty() {
            return Err(Error::Argument("junction needs at least one lead".into()));
        }
        for (i, l) in self.leads.iter().enumerate() {
            if l.dim() != 2 {
                return Err(Error::Argument(format!("lead {i} must be 2x2")));
            }
            let g = l.gamma();
            if g[(0, 1)].norm() > 1e-14 || g[(1, 0)].norm() > 1e-14 {
                return Err(Error::Argument(format!("lead {i} hybridization must be diagonal")));
            }
        }
        Ok(())
    }

    pub fn with_b(&self, b: f64) -> Self {
        Self { b, ..self.clone() }
    }

    /// `Σ_l Γ_l`.
    pub fn total_gamma(&self) -> CMat {
        let mut g = CMat::zeros(2, 2);
        for l in &self.leads {
            g += l.gamma();
        }
        g
    }

    /// `∂h/∂x` and `∂h/∂y`.
    pub fn derivatives(&self) -> [CMat; 2] {
        [real_matrix(2, &[1.0, 0.0, 0.0, -1.0]), real_matrix(2, &[0.0, self.a, self.a, 0.0])]
    }
}

/// Fourier components of the junction Hamiltonian at fixed nuclei:
/// `h⁽⁰⁾ = [[x+Δ, Ay], [Ay, −x−Δ]]` and `h⁽±¹⁾ = (B/2)σₓ`.
pub fn model_fourier(m: &JunctionModel, x: f64, y: f64) -> Result<FourierHamiltonian> {
    let h0 = real_matrix(2, &[x + m.delta, m.a * y, m.a * y, -x - m.delta]);
    if m.b == 0.0 {
        return FourierHamiltonian::time_independent(h0, m.omega);
    }
    let half = CMat::from_fn(2, 2, |i, j| if i != j { c(0.5 * m.b, 0.0) } else { c(0.0, 0.0) });
    FourierHamiltonian::new(m.omega, [(-1, half.clone()), (0, h0), (1, half)])
}
