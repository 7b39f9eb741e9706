//! Surface hopping for the driven Anderson–Holstein model with
//! time-averaged Bessel-modified Fermi rates.

mod ensemble;
mod model;
#[cfg(test)]
mod tests;

pub use ensemble::{
    check_dt, max_dt, run_ensemble, run_trajectory, sh_step, trajectory_rng, EnsembleAccumulator, EnsembleOptions,
    EnsembleSeries, Initial, Schedule, SteadyState, TrajectoryRecord, TrajectoryState,
};
pub use model::{analytic_population, bessel_fermi, default_n_bessel, hop_rates, AhParams, BesselWeights};
