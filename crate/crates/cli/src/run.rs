//! Turns a resolved [`RunConfig`] into a dataset and writes it.

use std::path::PathBuf;

use floqdyn_core::floquet::{
    assemble_floquet_hamiltonian, converge_truncation, density_components, evolve_density, floquet_evolution,
    floquet_observable, quasi_eigensystem, reference_propagate_converged, trace_product, FourierHamiltonian,
};
use floqdyn_core::friction::{scan_points, scan_row, ScanRow};
use floqdyn_core::qme::{propagate_qme, Flavor, QmeOptions, ReducedDensityMatrix};
use floqdyn_core::surface_hopping::{run_trajectory, EnsembleAccumulator, Schedule};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{FloquetConfig, FrictionConfig, QmeConfig, RunConfig, ShConfig};
use crate::error::{CliError, Result};
use crate::output::{csv_bytes, meta_path, write_atomic, DataTable, Metadata};

/// Environment variable holding the default worker cap.
pub const THREADS_ENV: &str = "FLOQDYN_THREADS";

/// Columns of a friction scan.
pub const FRICTION_COLUMNS: [&str; 9] =
    ["x", "y", "B", "gamma_xx", "gamma_xy", "gamma_yx", "gamma_yy", "gamma_S_xy", "gamma_A_xy"];

/// Columns of a surface-hopping run.
pub const SH_COLUMNS: [&str; 5] = ["t", "N_mean", "N_stderr", "Ek_mean", "Ek_stderr"];

/// Trajectories evaluated concurrently before they are folded in order.
const SH_BATCH: usize = 256;

#[derive(Debug, Clone)]
pub struct Dataset {
    pub table: DataTable,
    pub diagnostics: serde_json::Value,
    pub approximate: bool,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub csv: PathBuf,
    pub meta: PathBuf,
    pub dataset: Dataset,
    pub threads: usize,
}

/// Worker cap: command line, then the config key, then [`THREADS_ENV`].
/// `None` leaves the choice to the thread pool.
pub fn resolve_threads(flag: Option<usize>, cfg: &RunConfig) -> Result<Option<usize>> {
    if let Some(n) = flag.or(cfg.threads()) {
        return match n {
            0 => Err(CliError::invalid("--threads", "must be at least 1")),
            n => Ok(Some(n)),
        };
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::invalid(THREADS_ENV, format!("expected a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(None),
    }
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Io(format!("thread pool: {e}")))
}

/// Computes the dataset of `cfg` without touching the file system.
pub fn compute(cfg: &RunConfig, threads: Option<usize>) -> Result<Dataset> {
    let pool = pool(threads)?;
    match cfg {
        RunConfig::FloquetPropagate(c) => floquet(c),
        RunConfig::QmeRun(c) => qme(c),
        RunConfig::FrictionScan(c) => pool.install(|| friction(c)),
        RunConfig::ShRun(c) => pool.install(|| surface_hopping(c)),
    }
}

/// Computes the dataset and writes the CSV and its metadata sidecar.
pub fn execute(cfg: &RunConfig, threads: Option<usize>) -> Result<Report> {
    let threads_used = threads.unwrap_or_else(rayon::current_num_threads);
    let dataset = compute(cfg, threads)?;
    let csv = cfg.output_path().to_path_buf();
    let meta = meta_path(&csv);
    write_atomic(&csv, &csv_bytes(&dataset.table)?)?;
    let record = Metadata {
        tool: "floqdyn",
        version: env!("CARGO_PKG_VERSION"),
        workflow: cfg.workflow().name(),
        seed: cfg.seed().to_string(),
        threads: threads_used,
        columns: dataset.table.columns.clone(),
        rows: dataset.table.rows.len(),
        approximate: dataset.approximate,
        effective_config: cfg.echo(),
        diagnostics: dataset.diagnostics.clone(),
    };
    write_atomic(&meta, &record.to_json())?;
    Ok(Report { csv, meta, dataset, threads: threads_used })
}

fn floquet(cfg: &FloquetConfig) -> Result<Dataset> {
    let s = cfg.setup()?;
    let n = &cfg.numerics;
    let h = &s.hamiltonian;
    let obs = FourierHamiltonian::time_independent(s.observable.clone(), h.omega())?;
    let series = |n_max: usize| -> floqdyn_core::Result<Vec<f64>> {
        let eig = quasi_eigensystem(&assemble_floquet_hamiltonian(h, n_max))?;
        s.times
            .iter()
            .map(|&t| Ok(floquet_observable(&obs, &density_components(&eig, &s.rho0, t, 0.0)?, t)?.value))
            .collect()
    };
    let conv = converge_truncation(n.n_max.unwrap(), n.n_max_limit.unwrap(), n.truncation_tol.unwrap(), series)?;
    log::info!("replica truncation converged at n_max = {} (change {:.2e})", conv.n_max, conv.change);

    let eig = quasi_eigensystem(&assemble_floquet_hamiltonian(h, conv.n_max))?;
    let d = h.dim();
    let (mut imag, mut unitarity) = (0.0f64, 0.0f64);
    let mut populations = Vec::with_capacity(s.times.len());
    for &t in &s.times {
        imag = imag.max(floquet_observable(&obs, &density_components(&eig, &s.rho0, t, 0.0)?, t)?.imag_residue.abs());
        unitarity = unitarity.max(floquet_evolution(&eig, t, 0.0)?.unitarity_defect);
        let rho = evolve_density(&eig, &s.rho0, t, 0.0)?;
        populations.push((0..d).map(|k| rho[(k, k)].re).collect::<Vec<f64>>());
    }

    let reference = if n.reference.unwrap() {
        let r = reference_propagate_converged(h, &s.rho0, &s.times, &s.observable, n.reference_tol.unwrap())?;
        let values: Vec<f64> = r.densities.iter().map(|rho| trace_product(&s.observable, rho).re).collect();
        Some((values, r.step, r.change))
    } else {
        None
    };

    let mut columns = vec!["t".to_string(), "observable".to_string()];
    if reference.is_some() {
        columns.push("observable_reference".into());
        columns.push("abs_error".into());
    }
    columns.extend((0..d).map(|k| format!("population_{k}")));
    let mut table = DataTable::new(columns);
    let (mut max_abs, mut scale) = (0.0f64, 0.0f64);
    for (i, &t) in s.times.iter().enumerate() {
        let mut row = vec![t, conv.values[i]];
        if let Some((values, _, _)) = &reference {
            let err = (conv.values[i] - values[i]).abs();
            max_abs = max_abs.max(err);
            scale = scale.max(values[i].abs());
            row.push(values[i]);
            row.push(err);
        }
        row.extend_from_slice(&populations[i]);
        table.push(row);
    }
    let reference_diag = reference.as_ref().map(|(_, step, change)| {
        json!({
            "step": step,
            "step_change": change,
            "max_abs_error": max_abs,
            "max_rel_error": if scale > 0.0 { max_abs / scale } else { max_abs },
        })
    });
    Ok(Dataset {
        table,
        diagnostics: json!({
            "n_max": conv.n_max,
            "truncation_change": conv.change,
            "max_imag_residue": imag,
            "max_unitarity_defect": unitarity,
            "reference": reference_diag,
        }),
        approximate: false,
    })
}

fn qme(cfg: &QmeConfig) -> Result<Dataset> {
    let s = cfg.setup()?;
    let ctx = &s.context;
    let rho = match s.flavor {
        Flavor::Hilbert => ReducedDensityMatrix::hilbert(s.rho0.clone(), 0.0)?,
        Flavor::Floquet => ReducedDensityMatrix::floquet_from(&s.rho0, 0.0, ctx)?,
    };
    let orbitals = ctx.one_body().dim();
    let observables: Vec<_> = (0..orbitals).map(|k| ctx.number(k)).collect();
    let out = propagate_qme(&rho, &s.times, ctx, &observables, QmeOptions { dt: cfg.numerics.dt })?;
    let mut columns = vec!["t".to_string(), "trace".to_string()];
    columns.extend((0..orbitals).map(|k| format!("N_{k}")));
    let mut table = DataTable::new(columns);
    for (i, &t) in out.times.iter().enumerate() {
        let mut row = vec![t, out.traces[i]];
        row.extend_from_slice(&out.observables[i]);
        table.push(row);
    }
    Ok(Dataset {
        table,
        diagnostics: json!({
            "flavor": match s.flavor { Flavor::Hilbert => "hilbert", Flavor::Floquet => "floquet" },
            "n_max": ctx.n_max(),
            "dt": out.dt,
            "trace_drift_per_period": out.trace_drift_per_period,
            "min_eigenvalue": out.min_eigenvalue,
        }),
        approximate: false,
    })
}

fn friction(cfg: &FrictionConfig) -> Result<Dataset> {
    let s = cfg.setup()?;
    let points = scan_points(&s.xs, &s.ys, &s.bs);
    log::info!("friction scan: {} points on {} threads", points.len(), rayon::current_num_threads());
    let rows: Vec<ScanRow> = points
        .par_iter()
        .map(|&(x, y, b)| scan_row(&s.model, x, y, b, &s.grid))
        .collect::<floqdyn_core::Result<Vec<_>>>()?;
    let mut table = DataTable::new(FRICTION_COLUMNS);
    let mut unconverged = 0usize;
    let (mut grid_change, mut imag) = (0.0f64, 0.0f64);
    let (mut min_samples, mut max_samples) = (usize::MAX, 0usize);
    let mut peak_a: Vec<f64> = vec![0.0; s.bs.len()];
    for r in &rows {
        table.push(r.values().to_vec());
        let d = &r.diagnostics;
        unconverged += usize::from(!d.converged);
        grid_change = grid_change.max(d.grid_change);
        imag = imag.max(d.imag_residue);
        min_samples = min_samples.min(d.samples);
        max_samples = max_samples.max(d.samples);
        let k = s.bs.iter().position(|&b| b == r.b).expect("scan amplitude");
        peak_a[k] = peak_a[k].max(r.antisymmetric_xy().abs());
    }
    let per_b: Vec<_> = s.bs.iter().zip(&peak_a).map(|(b, p)| json!({ "B": b, "max_abs_gamma_A_xy": p })).collect();
    Ok(Dataset {
        table,
        diagnostics: json!({
            "points": rows.len(),
            "n_max": s.model.n_max,
            "max_grid_change": grid_change,
            "unconverged_points": unconverged,
            "max_imag_residue": imag,
            "samples": [min_samples, max_samples],
            "per_amplitude": per_b,
        }),
        approximate: unconverged > 0,
    })
}

fn surface_hopping(cfg: &ShConfig) -> Result<Dataset> {
    let (prm, opts) = cfg.ensemble()?;
    let schedule = Schedule::resolve(&prm, &opts)?;
    let mut acc = EnsembleAccumulator::new(&schedule, opts.steady_window)?;
    let indices: Vec<u64> = (0..opts.n_traj as u64).collect();
    for batch in indices.chunks(SH_BATCH) {
        let records = batch
            .par_iter()
            .map(|&i| run_trajectory(&prm, &opts, &schedule, i))
            .collect::<floqdyn_core::Result<Vec<_>>>()?;
        for r in &records {
            acc.add(r);
        }
        log::debug!("{} of {} trajectories done", batch[batch.len() - 1] + 1, opts.n_traj);
    }
    let series = acc.finish(opts.seed, schedule.dt);
    let mut table = DataTable::new(SH_COLUMNS);
    for k in 0..series.t_grid.len() {
        table.push(vec![series.t_grid[k], series.n_mean[k], series.n_stderr[k], series.ek_mean[k], series.ek_stderr[k]]);
    }
    let steady = series.steady.map(|s| {
        json!({
            "t_start": s.t_start,
            "t_end": s.t_end,
            "N_mean": s.n_mean,
            "N_stderr": s.n_stderr,
            "Ek_mean": s.ek_mean,
            "Ek_stderr": s.ek_stderr,
        })
    });
    Ok(Dataset {
        table,
        diagnostics: json!({
            "n_traj": series.n_traj,
            "dt": series.dt,
            "n_bessel": prm.n_bessel,
            "bessel_sum_rule_defect": (prm.weights().sum_rule() - 1.0).abs(),
            "steady_state": steady,
        }),
        approximate: false,
    })
}
