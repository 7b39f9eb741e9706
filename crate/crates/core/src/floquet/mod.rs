//! Floquet representation of time-periodic Hamiltonians: assembly of the
//! replica-space operator, its eigensystem, propagation, observables, and a
//! direct time-domain integrator used to cross-check all of them.

mod convergence;
mod eigen;
mod evolution;
mod hamiltonian;
mod reference;

pub use convergence::{converge_truncation, Converged};
pub use eigen::{quasi_eigensystem, FloquetEigensystem};
pub use evolution::{
    density_components, evolve_density, floquet_evolution, floquet_observable, floquet_propagator,
    trace_product, Evolution, ObservableValue,
};
pub use hamiltonian::{
    assemble_floquet_hamiltonian, lift_fourier, lift_static, FloquetOperator, FourierHamiltonian,
};
pub(crate) use reference::check_grid;
pub use reference::{
    check_density, reference_propagate, reference_propagate_converged, reference_propagate_with,
    ConvergedReference, ReferenceOptions,
};
