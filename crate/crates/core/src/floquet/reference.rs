use alloc::format;
use alloc::vec::Vec;

use super::hamiltonian::FourierHamiltonian;
use crate::error::{Error, Result};
use crate::integrate::{substeps, Rk4};
use crate::linalg::{self, CMat, Op};

/// Step control for the direct time-dependent integrator.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReferenceOptions {
    /// Largest RK4 step. Defaults to `min(T/1000, 0.01/‖H‖)`.
    pub max_step: Option<f64>,
}

impl ReferenceOptions {
    pub fn step_for(&self, h: &FourierHamiltonian) -> f64 {
        let mut step = h.period() / 1000.0;
        let norm = h.norm_bound();
        if norm > 0.0 {
            step = step.min(0.01 / norm);
        }
        match self.max_step {
            Some(s) => step.min(s),
            None => step,
        }
    }
}

/// Rejects anything that is not a Hermitian, unit-trace, positive
/// semidefinite `d×d` matrix.
pub fn check_density(rho: &CMat, dim: usize) -> Result<()> {
    if rho.nrows() != dim || rho.ncols() != dim {
        return Err(Error::Argument(format!(
            "density matrix has shape {}x{}, expected {dim}x{dim}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    linalg::ensure_hermitian(rho, "density matrix", 1e-10)?;
    let tr = linalg::trace(rho);
    if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
        return Err(Error::Argument(format!("density matrix trace is {tr}, expected 1")));
    }
    let mut h = rho.clone();
    linalg::hermitize(&mut h);
    let (vals, _) = linalg::eigh(&h);
    if vals[0] < -1e-10 {
        return Err(Error::Argument(format!("density matrix has negative eigenvalue {:.3e}", vals[0])));
    }
    Ok(())
}

pub(crate) fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::Argument("empty time grid".into()));
    }
    if t_grid.iter().any(|t| !t.is_finite()) || t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Argument("time grid must be finite and ascending".into()));
    }
    Ok(())
}

/// Direct integration of `dρ/dt = −i[H(t), ρ]` with fixed-step RK4 and
/// per-step Hermitization. Returns one density per grid time, the first
/// being `rho0` at `t_grid[0]`.
pub fn reference_propagate(h: &FourierHamiltonian, rho0: &CMat, t_grid: &[f64]) -> Result<Vec<CMat>> {
    reference_propagate_with(h, rho0, t_grid, ReferenceOptions::default())
}

pub fn reference_propagate_with(
    h: &FourierHamiltonian,
    rho0: &CMat,
    t_grid: &[f64],
    opts: ReferenceOptions,
) -> Result<Vec<CMat>> {
    check_density(rho0, h.dim())?;
    check_grid(t_grid)?;
    let max_step = opts.step_for(h);
    let d = h.dim();
    let mut rk = Rk4::new(d, d);
    let mut rho = rho0.clone();
    let mut out = Vec::with_capacity(t_grid.len());
    out.push(rho.clone());
    let minus_i = linalg::c(0.0, -1.0);
    let plus_i = linalg::c(0.0, 1.0);
    let mut rhs = |t: f64, y: &CMat, dy: &mut CMat| {
        let ht = h.at(t);
        linalg::gemm(dy, minus_i, &ht, Op::N, y, Op::N, linalg::ZERO);
        linalg::gemm(dy, plus_i, y, Op::N, &ht, Op::N, linalg::ONE);
    };
    for w in t_grid.windows(2) {
        let n = substeps(w[1] - w[0], max_step);
        if n > 0 {
            let dt = (w[1] - w[0]) / n as f64;
            for s in 0..n {
                rk.step(&mut rhs, w[0] + s as f64 * dt, &mut rho, dt);
                linalg::hermitize(&mut rho);
            }
        }
        out.push(rho.clone());
    }
    Ok(out)
}

/// Result of [`reference_propagate_converged`].
#[derive(Debug, Clone)]
pub struct ConvergedReference {
    pub densities: Vec<CMat>,
    pub step: f64,
    /// Largest change of the monitored observable under the last halving.
    pub change: f64,
}

/// Halves the integrator step, starting from the default, until the
/// expectation of `observable` changes by less than `tol` at every grid time.
pub fn reference_propagate_converged(
    h: &FourierHamiltonian,
    rho0: &CMat,
    t_grid: &[f64],
    observable: &CMat,
    tol: f64,
) -> Result<ConvergedReference> {
    let expect = |series: &[CMat]| -> Vec<f64> {
        series.iter().map(|r| super::evolution::trace_product(observable, r).re).collect()
    };
    let mut step = ReferenceOptions::default().step_for(h);
    let mut densities = reference_propagate_with(h, rho0, t_grid, ReferenceOptions { max_step: Some(step) })?;
    let mut values = expect(&densities);
    for _ in 0..12 {
        step *= 0.5;
        let finer = reference_propagate_with(h, rho0, t_grid, ReferenceOptions { max_step: Some(step) })?;
        let finer_values = expect(&finer);
        let change = values
            .iter()
            .zip(&finer_values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        densities = finer;
        values = finer_values;
        if change < tol {
            return Ok(ConvergedReference { densities, step, change });
        }
    }
    Err(Error::NumericalAbort(format!("reference integrator did not reach tolerance {tol:.1e}")))
}
