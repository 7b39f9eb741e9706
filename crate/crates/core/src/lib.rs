//! Numerical core for periodically driven open quantum systems.
//!
//! The crate is `no_std` (it needs `alloc`) and free of I/O. It covers
//!
//! * [`floquet`]: Floquet Hamiltonians, quasienergies, propagation and a
//!   direct time-dependent reference integrator;
//! * [`qme`]: Redfield master equations in Hilbert space (time-dependent
//!   dressed dissipators) and in Floquet space (static dissipators);
//! * [`friction`]: electronic friction from Floquet Green's functions and a
//!   Langevin sampler built on it;
//! * [`surface_hopping`]: Bessel-modified Fermi rates and surface hopping
//!   for the driven Anderson–Holstein model.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod error;
pub mod floquet;
pub mod friction;
mod integrate;
pub mod lead;
pub mod linalg;
pub mod qme;
pub mod surface_hopping;
pub mod thermal;

pub use error::{Error, Result};
pub use lead::LeadSpec;
