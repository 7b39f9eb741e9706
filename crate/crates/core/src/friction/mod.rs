//! Electronic friction from Floquet Green's functions for a driven
//! two-level junction, and a Langevin sampler built on it.

mod greens;
mod langevin;
mod model;
mod scan;
mod tensor;

pub use greens::{floquet_greens, FloquetGreens};
pub use langevin::{langevin_trajectory, FrictionSource, FrictionTable, LangevinOptions, LangevinSeries};
pub use model::{model_fourier, JunctionModel, DEFAULT_N_MAX};
pub use scan::{friction_scan, scan_points, scan_row, ScanRow};
pub use tensor::{
    friction_split, friction_tensor, split, EnergyGrid, FrictionDiagnostics, FrictionTensor, ReplicaTrace,
};
