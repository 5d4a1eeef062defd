//! Numerical laboratory for the classical 2D Coulomb plasma associated with
//! Laughlin-type quantum Hall states.
//!
//! The squared modulus of a Laughlin state with an arbitrary holomorphic
//! symmetric prefactor is, after rescaling lengths by `sqrt(N-1)`, the Gibbs
//! weight `exp(-N H_N)` of a classical one-component plasma with logarithmic
//! pair repulsion, quadratic confinement and an N-body correlation term. This
//! crate evaluates that Hamiltonian ([`model`]), minimizes it and audits the
//! minimal-separation and density bounds of its ground states
//! ([`ground_state`]), samples its Gibbs measure by Metropolis MCMC and
//! estimates densities and potential energies ([`gibbs`]), and solves the
//! bathtub variational problem that governs the large-N energy floor
//! ([`bathtub`]).

pub mod bathtub;
mod error;
pub mod gibbs;
pub mod ground_state;
pub mod io;
pub mod model;
pub mod seed;

pub use error::{Error, Result};
pub use model::{
    Composite, Configuration, CorrelationFactor, OneBodyPolynomial, PairPolynomial, PlasmaParams,
    Point2, Potential, Trivial,
};
