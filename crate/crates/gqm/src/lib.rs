//! Numerical toolkit for quantum mechanics done geometrically: the space of
//! pure states is treated as a Kahler manifold (projective Hilbert space
//! with the Fubini-Study metric and symplectic form), observables induce
//! Hamiltonian vector fields, and uncertainty relations become statements
//! about areas and energies of maps into state space.
//!
//! The crate is organized bottom-up:
//!
//! - [`hilbert`]: states, Hermitian observables, Hamiltonian fields, exact
//!   Schrodinger flow, seeded random ensembles.
//! - [`projective`]: points of projective space with a canonical gauge, the
//!   Fubini-Study metric/symplectic pair, and the complex structure.
//! - [`uncertainty`]: variances, covariances, and the Robertson-Schrodinger
//!   inequality in both its operator and geometric forms.
//! - [`pointwise`]: the differential of a two-parameter map into state space
//!   and the pointwise energy identity relating area, symplectic density,
//!   and the antiholomorphic energy.
//! - [`surface`]: discretized maps from a rectangle into state space,
//!   integrated energy/area functionals, holomorphic samples, perturbations,
//!   and harmonic relaxation.

pub mod config;
pub mod error;
pub mod hilbert;
pub mod pointwise;
pub mod projective;
pub mod surface;
pub mod uncertainty;

pub use config::Config;
pub use error::{GqmError, Result};
