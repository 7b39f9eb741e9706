use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Driven Anderson–Holstein impurity with a dimensionless oscillator:
/// `H₀ = (ω/2)(x² + p²)`, `H₁ = H₀ + √2·g·x + E_d`, level driven as `A sin Ωt`.
#[derive(Debug, Clone, PartialEq)]
pub struct AhParams {
    pub e_d: f64,
    pub a: f64,
    pub big_omega: f64,
    pub g: f64,
    pub hbar_omega: f64,
    pub kt: f64,
    pub gamma: f64,
    pub mu: f64,
    pub n_bessel: usize,
}

/// Bessel terms needed for a sum-rule defect below `1e-12` when `A/Ω ≤ 10`.
pub fn default_n_bessel(a: f64, big_omega: f64) -> usize {
    libm::ceil(libm::fabs(a) / big_omega) as usize + 20
}

impl AhParams {
    /// Validated parameters with `n_bessel` from [`default_n_bessel`].
    pub fn new(e_d: f64, a: f64, big_omega: f64, g: f64, hbar_omega: f64, kt: f64, gamma: f64, mu: f64) -> Result<Self> {
        if !(big_omega.is_finite() && big_omega > 0.0) {
            return Err(Error::Argument(format!("Omega must be positive, got {big_omega}")));
        }
        let p = Self { e_d, a, big_omega, g, hbar_omega, kt, gamma, mu, n_bessel: default_n_bessel(a, big_omega) };
        p.validate()?;
        Ok(p)
    }

    /// Renormalized level `E_d = g²/ħω`, `μ = 0`, and the remaining values from
    /// the reference transient-dynamics setup.
    pub fn reference(a: f64, big_omega: f64) -> Result<Self> {
        let (g, hbar_omega) = (0.0075, 0.003);
        Self::new(g * g / hbar_omega, a, big_omega, g, hbar_omega, 0.01, 0.01, 0.0)
    }

    pub fn with_n_bessel(mut self, n: usize) -> Result<Self> {
        self.n_bessel = n;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("E_d", self.e_d),
            ("A", self.a),
            ("Omega", self.big_omega),
            ("g", self.g),
            ("hbar_omega", self.hbar_omega),
            ("kT", self.kt),
            ("Gamma", self.gamma),
            ("mu", self.mu),
        ];
        if let Some((k, v)) = finite.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Argument(format!("{k} must be finite, got {v}")));
        }
        for (k, v) in [("hbar_omega", self.hbar_omega), ("Gamma", self.gamma), ("kT", self.kt), ("Omega", self.big_omega)] {
            if v <= 0.0 {
                return Err(Error::Argument(format!("{k} must be positive, got {v}")));
            }
        }
        let need = default_n_bessel(self.a, self.big_omega);
        if self.n_bessel < need {
            return Err(Error::Argument(format!("n_bessel must be at least ceil(|A|/Omega) + 20 = {need}, got {}", self.n_bessel)));
        }
        Ok(())
    }

    pub fn beta(&self) -> f64 {
        1.0 / self.kt
    }

    /// Diabatic gap `ΔV = H₁ − H₀ = √2·g·x + E_d`.
    pub fn gap(&self, x: f64) -> f64 {
        core::f64::consts::SQRT_2 * self.g * x + self.e_d
    }

    /// Precomputed Bessel weights for repeated rate evaluations.
    pub fn weights(&self) -> BesselWeights {
        BesselWeights::new(self)
    }
}

/// `J_n(A/Ω)²` for `|n| ≤ n_bessel` together with the lead parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct BesselWeights {
    shifts: Vec<f64>,
    weights: Vec<f64>,
    mu: f64,
    beta: f64,
}

impl BesselWeights {
    fn new(prm: &AhParams) -> Self {
        let z = prm.a / prm.big_omega;
        let n = prm.n_bessel as i32;
        let mut shifts = Vec::with_capacity(2 * prm.n_bessel + 1);
        let mut weights = Vec::with_capacity(2 * prm.n_bessel + 1);
        for k in -n..=n {
            let j = libm::jn(k, z);
            shifts.push(k as f64 * prm.big_omega);
            weights.push(j * j);
        }
        let s = Self { shifts, weights, mu: prm.mu, beta: prm.beta() };
        let defect = (s.sum_rule() - 1.0).abs();
        if defect > 1e-10 {
            log::warn!("Bessel sum rule defect {defect:.2e} with n_bessel = {}", prm.n_bessel);
        }
        s
    }

    /// `Σ_n J_n(A/Ω)²`, one in the untruncated limit.
    pub fn sum_rule(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `(f̃(ε), 1 − f̃(ε))`, each summed from its own tail-accurate terms.
    pub fn occupation_pair(&self, eps: f64) -> (f64, f64) {
        let mut f = 0.0;
        let mut h = 0.0;
        for (s, w) in self.shifts.iter().zip(&self.weights) {
            let x = self.beta * (eps - s - self.mu);
            let e = libm::exp(-libm::fabs(x));
            let (small, large) = (e / (1.0 + e), 1.0 / (1.0 + e));
            if x >= 0.0 {
                f += w * small;
                h += w * large;
            } else {
                f += w * large;
                h += w * small;
            }
        }
        (f.clamp(0.0, 1.0), h.clamp(0.0, 1.0))
    }
}

/// Time-averaged Bessel-modified Fermi function
/// `f̃(ε) = Σ_{|n|≤n_bessel} J_n(A/Ω)² f(ε − nΩ)`.
pub fn bessel_fermi(eps: f64, prm: &AhParams) -> f64 {
    prm.weights().occupation_pair(eps).0
}

/// `(γ₀→₁, γ₁→₀) = (Γ f̃(ΔV), Γ (1 − f̃(ΔV)))` at oscillator position `x`.
pub fn hop_rates(x: f64, prm: &AhParams) -> (f64, f64) {
    rates_with(&prm.weights(), x, prm)
}

#[inline]
pub(crate) fn rates_with(w: &BesselWeights, x: f64, prm: &AhParams) -> (f64, f64) {
    let (f, h) = w.occupation_pair(prm.gap(x));
    (prm.gamma * f, prm.gamma * h)
}

/// Population `f̃(E_d)(1 − e^{−Γt})` of an initially empty level at `g = 0`.
pub fn analytic_population(prm: &AhParams, t: f64) -> Result<f64> {
    if prm.g != 0.0 {
        return Err(Error::Argument(format!("analytic population needs g = 0, got {}", prm.g)));
    }
    Ok(bessel_fermi(prm.e_d, prm) * -libm::expm1(-prm.gamma * t))
}
