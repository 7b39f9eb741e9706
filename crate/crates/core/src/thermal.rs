//! Fermi–Dirac occupations.

/// `f(ε) = 1 / (1 + exp(β(ε − μ)))`, evaluated without overflow.
#[inline]
pub fn fermi(energy: f64, mu: f64, beta: f64) -> f64 {
    let x = beta * (energy - mu);
    if x >= 0.0 {
        let e = libm::exp(-x);
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + libm::exp(x))
    }
}

/// `1 − f(ε)` without cancellation.
#[inline]
pub fn fermi_complement(energy: f64, mu: f64, beta: f64) -> f64 {
    fermi(-energy, -mu, beta)
}
