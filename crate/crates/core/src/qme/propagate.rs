use alloc::format;
use alloc::vec::Vec;

use super::context::DissipatorContext;
use super::dissipator::{physical_state, Flavor, Generator, ReducedDensityMatrix};
use crate::error::{Error, Result};
use crate::floquet::check_grid;
use crate::integrate::{substeps, Rk4};
use crate::linalg::{self, CMat};

/// Step control for [`propagate_qme`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QmeOptions {
    /// Largest RK4 step; the default is `min(T/400, a/‖L‖)` with `‖L‖` a
    /// bound on the physical generator and `a` = 0.02 (Hilbert) or 0.05
    /// (Floquet).
    pub dt: Option<f64>,
}

/// Output of [`propagate_qme`].
#[derive(Debug, Clone)]
pub struct QmeSeries {
    pub times: Vec<f64>,
    /// Physical trace `Tr ρ(t)`; in the Floquet flavour this carries the
    /// replica truncation error.
    pub traces: Vec<f64>,
    /// `observables[i][k]` is observable `k` at `times[i]`.
    pub observables: Vec<Vec<f64>>,
    pub final_state: ReducedDensityMatrix,
    pub dt: f64,
    /// Largest drift of the conserved trace, per driving period. The
    /// conserved quantity is `Tr ρ` (Hilbert) or `Tr ρᶠ/(2n_max+1)` (Floquet).
    pub trace_drift_per_period: f64,
    /// Smallest eigenvalue of the physical density over the output times.
    pub min_eigenvalue: f64,
}

/// Largest tolerated drift of the conserved trace before the run aborts.
pub const TRACE_ABORT: f64 = 1e-4;

pub fn default_dt(ctx: &DissipatorContext, flavor: Flavor) -> f64 {
    let mut bound = ctx.hamiltonian().norm_bound();
    for l in ctx.leads() {
        bound += linalg::trace(l.gamma()).re;
    }
    let period = 2.0 * core::f64::consts::PI / ctx.omega();
    let accuracy = match flavor {
        Flavor::Hilbert => 0.02,
        Flavor::Floquet => 0.05,
    };
    let mut dt = period / 400.0;
    if bound > 0.0 {
        dt = dt.min(accuracy / bound);
    }
    if flavor == Flavor::Floquet {
        // Outer replicas rotate at up to n_max·ω; keep RK4 well inside its
        // stability region for them.
        dt = dt.min(1.0 / (bound + ctx.n_max() as f64 * ctx.omega()));
    }
    dt
}

/// Integrates the Redfield equation of the flavour of `rho0` over `t_grid`
/// with fixed-step RK4 and per-step Hermitization, recording static Fock-space
/// `observables` at each grid time.
pub fn propagate_qme(
    rho0: &ReducedDensityMatrix,
    t_grid: &[f64],
    ctx: &DissipatorContext,
    observables: &[CMat],
    opts: QmeOptions,
) -> Result<QmeSeries> {
    check_grid(t_grid)?;
    let flavor = rho0.flavor();
    let d = ctx.hilbert_dim();
    let size = match flavor {
        Flavor::Hilbert => d,
        Flavor::Floquet => ctx.floquet_dim(),
    };
    if rho0.data().nrows() != size || rho0.data().ncols() != size {
        return Err(Error::Argument(format!("initial density must be {size}x{size}")));
    }
    for o in observables {
        if o.nrows() != d || o.ncols() != d {
            return Err(Error::Argument(format!("observables must be {d}x{d}")));
        }
    }
    let max_step = match opts.dt {
        Some(dt) if dt.is_finite() && dt > 0.0 => dt,
        Some(dt) => return Err(Error::Argument(format!("time step must be positive, got {dt}"))),
        None => default_dt(ctx, flavor),
    };
    let n_max = ctx.n_max();
    let omega = ctx.omega();
    let norm = match flavor {
        Flavor::Hilbert => 1.0,
        Flavor::Floquet => (2 * n_max + 1) as f64,
    };
    let conserved = |rho: &CMat| linalg::trace(rho).re / norm;

    let floquet_gen = (flavor == Flavor::Floquet).then(|| ctx.floquet_generator(true));
    let mut z = CMat::zeros(size, size);
    let mut scratch = CMat::zeros(size, size);
    let mut rhs = |t: f64, y: &CMat, dy: &mut CMat| {
        let local;
        let gen: &Generator = match &floquet_gen {
            Some(g) => g,
            None => {
                local = ctx.hilbert_generator(t, true);
                &local
            }
        };
        gen.apply(y, &mut z, &mut scratch);
        for j in 0..size {
            for i in 0..size {
                dy[(i, j)] = -(z[(i, j)] + z[(j, i)].conj());
            }
        }
    };

    let mut rho = rho0.data().clone();
    let c0 = conserved(&rho);
    let mut max_drift = 0.0f64;
    let mut min_eig = f64::INFINITY;
    let mut times = Vec::with_capacity(t_grid.len());
    let mut traces = Vec::with_capacity(t_grid.len());
    let mut values = Vec::with_capacity(t_grid.len());
    let mut record = |t: f64, rho: &CMat, min_eig: &mut f64| {
        let phys = match flavor {
            Flavor::Hilbert => rho.clone(),
            Flavor::Floquet => physical_state(rho, n_max, d, omega, t),
        };
        let mut herm = phys.clone();
        linalg::hermitize(&mut herm);
        let (ev, _) = linalg::eigh(&herm);
        if ev[0] < *min_eig {
            if ev[0] < -1e-10 && *min_eig >= -1e-10 {
                log::warn!("density lost positivity at t = {t}: minimum eigenvalue {:.3e}", ev[0]);
            }
            *min_eig = ev[0];
        }
        times.push(t);
        traces.push(linalg::trace(&phys).re);
        values.push(observables.iter().map(|o| crate::floquet::trace_product(o, &phys).re).collect());
    };

    let mut rk = Rk4::new(size, size);
    record(t_grid[0], &rho, &mut min_eig);
    for w in t_grid.windows(2) {
        let n = substeps(w[1] - w[0], max_step);
        if n > 0 {
            let dt = (w[1] - w[0]) / n as f64;
            for s in 0..n {
                let t = w[0] + s as f64 * dt;
                rk.step(&mut rhs, t, &mut rho, dt);
                linalg::hermitize(&mut rho);
                let c = conserved(&rho);
                if !c.is_finite() || rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return Err(Error::NumericalAbort(format!("non-finite density at t = {}", t + dt)));
                }
                let drift = (c - c0).abs();
                if drift > TRACE_ABORT {
                    return Err(Error::NumericalAbort(format!(
                        "trace drifted by {drift:.3e} at t = {}; reduce the time step (dt = {dt:.3e})",
                        t + dt
                    )));
                }
                max_drift = max_drift.max(drift);
            }
        }
        record(w[1], &rho, &mut min_eig);
    }
    let t_end = *t_grid.last().unwrap();
    let periods = ((t_end - t_grid[0]) * omega / (2.0 * core::f64::consts::PI)).max(1.0);
    let final_state = match flavor {
        Flavor::Hilbert => ReducedDensityMatrix::from_hermitian(Flavor::Hilbert, rho, t_end)?,
        Flavor::Floquet => ReducedDensityMatrix::from_hermitian(Flavor::Floquet, rho, t_end)?,
    };
    Ok(QmeSeries {
        times,
        traces,
        observables: values,
        final_state,
        dt: max_step,
        trace_drift_per_period: max_drift / periods,
        min_eigenvalue: min_eig,
    })
}
