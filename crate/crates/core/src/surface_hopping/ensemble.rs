use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::model::{rates_with, AhParams, BesselWeights};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryState {
    pub x: f64,
    pub p: f64,
    /// 0 empty, 1 occupied.
    pub surface: u8,
    pub t: f64,
}

impl TrajectoryState {
    pub fn new(x: f64, p: f64, surface: u8) -> Result<Self> {
        if surface > 1 {
            return Err(Error::Argument(format!("surface must be 0 or 1, got {surface}")));
        }
        if !(x.is_finite() && p.is_finite()) {
            return Err(Error::Argument("x and p must be finite".into()));
        }
        Ok(Self { x, p, surface, t: 0.0 })
    }

    /// Energy on the active diabatic surface.
    pub fn energy(&self, prm: &AhParams) -> f64 {
        let h0 = 0.5 * prm.hbar_omega * (self.x * self.x + self.p * self.p);
        if self.surface == 1 {
            h0 + prm.gap(self.x)
        } else {
            h0
        }
    }

    pub fn kinetic(&self, prm: &AhParams) -> f64 {
        0.5 * prm.hbar_omega * self.p * self.p
    }
}

/// Largest step allowed by `dt·Γ ≤ 0.02` and `dt·ω ≤ 0.02`.
pub fn max_dt(prm: &AhParams) -> f64 {
    0.02 / prm.gamma.max(prm.hbar_omega)
}

pub fn check_dt(dt: f64, prm: &AhParams) -> Result<()> {
    let limit = max_dt(prm) * (1.0 + 1e-12);
    if !(dt.is_finite() && dt > 0.0 && dt <= limit) {
        return Err(Error::Argument(format!(
            "dt = {dt} violates dt*Gamma <= 0.02 and dt*hbar_omega <= 0.02 (max {})",
            max_dt(prm)
        )));
    }
    Ok(())
}

/// One surface-hopping step: velocity Verlet on the active surface, then one
/// uniform draw `ζ` tested against `γ_exit·dt`. Hops keep `(x, p)` unchanged.
pub fn sh_step<R: Rng + ?Sized>(s: TrajectoryState, dt: f64, prm: &AhParams, rng: &mut R) -> Result<TrajectoryState> {
    check_dt(dt, prm)?;
    Ok(step_with(s, dt, prm, &prm.weights(), rng))
}

#[inline]
fn step_with<R: Rng + ?Sized>(s: TrajectoryState, dt: f64, prm: &AhParams, w: &BesselWeights, rng: &mut R) -> TrajectoryState {
    let w0 = prm.hbar_omega;
    let shift = if s.surface == 1 { core::f64::consts::SQRT_2 * prm.g } else { 0.0 };
    let force = |x: f64| -w0 * x - shift;
    let p_half = s.p + 0.5 * dt * force(s.x);
    let x = s.x + dt * w0 * p_half;
    let p = p_half + 0.5 * dt * force(x);
    let (up, down) = rates_with(w, x, prm);
    let exit = if s.surface == 0 { up } else { down };
    let zeta: f64 = rng.random();
    let surface = if zeta < exit * dt { 1 - s.surface } else { s.surface };
    TrajectoryState { x, p, surface, t: s.t + dt }
}

/// Initial conditions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Initial {
    /// `(x, p) = (0, 0)` on the empty surface.
    #[default]
    Rest,
    /// `(x, p)` drawn from the thermal distribution of the empty surface.
    Boltzmann,
    Fixed(TrajectoryState),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleOptions {
    pub n_traj: usize,
    pub t_max: f64,
    /// Default [`max_dt`].
    pub dt: Option<f64>,
    /// Output spacing, rounded to a whole number of steps; default `t_max/200`.
    pub output_interval: Option<f64>,
    pub initial: Initial,
    pub seed: u64,
    /// Averaging window `[t_start, t_end]` for steady-state estimates.
    pub steady_window: Option<(f64, f64)>,
}

impl EnsembleOptions {
    pub fn new(n_traj: usize, t_max: f64, seed: u64) -> Self {
        Self { n_traj, t_max, dt: None, output_interval: None, initial: Initial::Rest, seed, steady_window: None }
    }
}

/// Resolved time stepping of an ensemble run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub dt: f64,
    pub steps_per_output: usize,
    pub outputs: usize,
}

impl Schedule {
    pub fn resolve(prm: &AhParams, opts: &EnsembleOptions) -> Result<Self> {
        prm.validate()?;
        if opts.n_traj == 0 {
            return Err(Error::Argument("n_traj must be at least 1".into()));
        }
        if !(opts.t_max.is_finite() && opts.t_max > 0.0) {
            return Err(Error::Argument(format!("t_max must be positive, got {}", opts.t_max)));
        }
        let dt = opts.dt.unwrap_or_else(|| max_dt(prm));
        check_dt(dt, prm)?;
        let interval = opts.output_interval.unwrap_or(opts.t_max / 200.0);
        if !(interval.is_finite() && interval > 0.0) {
            return Err(Error::Argument(format!("output interval must be positive, got {interval}")));
        }
        let steps_per_output = (libm::round(interval / dt) as usize).max(1);
        let outputs = libm::ceil(opts.t_max / (dt * steps_per_output as f64) - 1e-9) as usize;
        if let Some((a, b)) = opts.steady_window {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::Argument(format!("steady window [{a}, {b}] is empty")));
            }
        }
        Ok(Self { dt, steps_per_output, outputs })
    }

    /// Output times, starting at zero.
    pub fn times(&self) -> Vec<f64> {
        (0..=self.outputs).map(|k| (k * self.steps_per_output) as f64 * self.dt).collect()
    }
}

/// Deterministic generator of trajectory `index`: key from `seed`, stream
/// from `index`.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Occupation and kinetic energy of one trajectory at each output time.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub occupation: Vec<u8>,
    pub kinetic: Vec<f64>,
}

pub fn run_trajectory(prm: &AhParams, opts: &EnsembleOptions, schedule: &Schedule, index: u64) -> Result<TrajectoryRecord> {
    let weights = prm.weights();
    let mut rng = trajectory_rng(opts.seed, index);
    let mut s = match opts.initial {
        Initial::Rest => TrajectoryState { x: 0.0, p: 0.0, surface: 0, t: 0.0 },
        Initial::Boltzmann => {
            let sd = libm::sqrt(prm.kt / prm.hbar_omega);
            let normal = Normal::new(0.0, sd).map_err(|e| Error::Argument(format!("{e}")))?;
            TrajectoryState { x: normal.sample(&mut rng), p: normal.sample(&mut rng), surface: 0, t: 0.0 }
        }
        Initial::Fixed(s) => TrajectoryState::new(s.x, s.p, s.surface)?,
    };
    let mut rec = TrajectoryRecord {
        occupation: Vec::with_capacity(schedule.outputs + 1),
        kinetic: Vec::with_capacity(schedule.outputs + 1),
    };
    rec.occupation.push(s.surface);
    rec.kinetic.push(s.kinetic(prm));
    for k in 1..=schedule.outputs {
        for _ in 0..schedule.steps_per_output {
            s = step_with(s, schedule.dt, prm, &weights, &mut rng);
        }
        if !(s.x.is_finite() && s.p.is_finite()) {
            return Err(Error::NumericalAbort(format!("trajectory {index} diverged before output {k}")));
        }
        rec.occupation.push(s.surface);
        rec.kinetic.push(s.kinetic(prm));
    }
    Ok(rec)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    pub t_start: f64,
    pub t_end: f64,
    /// Ensemble mean of per-trajectory window averages, and its standard error.
    pub n_mean: f64,
    pub n_stderr: f64,
    pub ek_mean: f64,
    pub ek_stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSeries {
    pub t_grid: Vec<f64>,
    pub n_mean: Vec<f64>,
    pub n_stderr: Vec<f64>,
    pub ek_mean: Vec<f64>,
    pub ek_stderr: Vec<f64>,
    pub n_traj: usize,
    pub seed: u64,
    pub dt: f64,
    pub steady: Option<SteadyState>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    sum: f64,
    sq: f64,
}

impl Moments {
    fn add(&mut self, v: f64) {
        self.sum += v;
        self.sq += v * v;
    }

    fn finish(&self, n: usize) -> (f64, f64) {
        let nf = n as f64;
        let mean = self.sum / nf;
        if n < 2 {
            return (mean, 0.0);
        }
        let var = ((self.sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
        (mean, libm::sqrt(var / nf))
    }
}

/// Ordered fold of trajectory records into ensemble statistics. Records must
/// be added in trajectory-index order for bit-reproducible sums.
pub struct EnsembleAccumulator {
    times: Vec<f64>,
    n: Vec<Moments>,
    ek: Vec<Moments>,
    window: Option<(usize, usize, f64, f64)>,
    steady_n: Moments,
    steady_ek: Moments,
    count: usize,
}

impl EnsembleAccumulator {
    pub fn new(schedule: &Schedule, steady_window: Option<(f64, f64)>) -> Result<Self> {
        let times = schedule.times();
        let window = match steady_window {
            None => None,
            Some((a, b)) => {
                let first = times.iter().position(|&t| t >= a - 1e-9 * schedule.dt);
                let last = times.iter().rposition(|&t| t <= b + 1e-9 * schedule.dt);
                match (first, last) {
                    (Some(i), Some(j)) if i <= j => Some((i, j, times[i], times[j])),
                    _ => return Err(Error::Argument(format!("steady window [{a}, {b}] holds no output time"))),
                }
            }
        };
        let len = times.len();
        Ok(Self {
            times,
            n: alloc::vec![Moments::default(); len],
            ek: alloc::vec![Moments::default(); len],
            window,
            steady_n: Moments::default(),
            steady_ek: Moments::default(),
            count: 0,
        })
    }

    pub fn add(&mut self, rec: &TrajectoryRecord) {
        for (k, (&o, &e)) in rec.occupation.iter().zip(&rec.kinetic).enumerate() {
            self.n[k].add(o as f64);
            self.ek[k].add(e);
        }
        if let Some((i, j, _, _)) = self.window {
            let len = (j - i + 1) as f64;
            let n: f64 = rec.occupation[i..=j].iter().map(|&o| o as f64).sum::<f64>() / len;
            let e: f64 = rec.kinetic[i..=j].iter().sum::<f64>() / len;
            self.steady_n.add(n);
            self.steady_ek.add(e);
        }
        self.count += 1;
    }

    pub fn finish(self, seed: u64, dt: f64) -> EnsembleSeries {
        let c = self.count;
        let (n_mean, n_stderr): (Vec<f64>, Vec<f64>) = self.n.iter().map(|m| m.finish(c)).unzip();
        let (ek_mean, ek_stderr): (Vec<f64>, Vec<f64>) = self.ek.iter().map(|m| m.finish(c)).unzip();
        let steady = self.window.map(|(_, _, a, b)| {
            let (nm, ns) = self.steady_n.finish(c);
            let (em, es) = self.steady_ek.finish(c);
            SteadyState { t_start: a, t_end: b, n_mean: nm, n_stderr: ns, ek_mean: em, ek_stderr: es }
        });
        EnsembleSeries { t_grid: self.times, n_mean, n_stderr, ek_mean, ek_stderr, n_traj: c, seed, dt, steady }
    }
}

/// Ensemble of independent trajectories folded in index order.
pub fn run_ensemble(prm: &AhParams, opts: &EnsembleOptions) -> Result<EnsembleSeries> {
    let schedule = Schedule::resolve(prm, opts)?;
    let mut acc = EnsembleAccumulator::new(&schedule, opts.steady_window)?;
    for i in 0..opts.n_traj {
        acc.add(&run_trajectory(prm, opts, &schedule, i as u64)?);
    }
    Ok(acc.finish(opts.seed, schedule.dt))
}
