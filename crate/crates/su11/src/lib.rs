//! Numerical toolkit for the group SU(1,1).
//!
//! The crate provides four layers that build on one another:
//!
//! * [`group`] — exact defining-representation arithmetic: parametrizations,
//!   group law, exponential/logarithm maps, region classification, invariant
//!   measures, and the triangular (normal/antinormal-order) factorization.
//! * [`synthesis`] — approximation of a target element by a finite word in
//!   the three-gate alphabet {e^{theta1 sigma_x}, e^{-theta2 sigma_x},
//!   e^{i phi3 sigma_z}}, plus the energy-constrained accuracy bound.
//! * [`fock`] — truncated Fock-space realizations of the algebra (single-mode
//!   even/odd sectors, paired two-mode sectors), sector unitaries, closed-form
//!   matrix elements, formal-dimension integrals and square-summability
//!   diagnostics.
//! * [`tomography`] — regularized group-integral tomography: frame
//!   coefficients, processing functions, measure sampling, simulated
//!   measurements and Monte Carlo reconstruction.
//! * [`adjoint`] — the SO+(2,1) image of the group and the conjugating
//!   elements that reduce any one-parameter subgroup to e^{i chi K_z} or
//!   e^{i chi K_x}.

pub mod adjoint;
pub mod checks;
pub mod error;
pub mod fock;
pub mod group;
pub mod quad;
pub mod synthesis;
pub mod tomography;

pub use error::{AdjointError, FockError, GroupError, SynthError, TomoError};
pub use group::{
    AlgebraDirection, ExpClass, GroupElement, HyperbolicParams, HyperboloidCoords, NormClass,
};
