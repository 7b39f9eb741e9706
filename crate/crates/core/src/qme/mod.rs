//! Redfield quantum master equations for quadratic systems coupled to
//! wide-band fermionic leads, in the Hilbert-space form (time-dependent
//! dressed dissipators) and the Floquet-space form (static dissipators).

mod context;
mod dissipator;
mod fock;
mod propagate;

pub use context::{build_context, DissipatorContext, DressedPair, Harmonics};
pub use dissipator::{dissipator_floquet, dissipator_hilbert, Flavor, ReducedDensityMatrix};
pub use fock::{FockSpace, Ladder, MAX_MODES};
pub use propagate::{default_dt, propagate_qme, QmeOptions, QmeSeries, TRACE_ABORT};

pub use crate::lead::LeadSpec;
