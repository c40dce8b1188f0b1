//! Lower bounds on the position-momentum spread product of spin-0 and spin-1
//! bosons.
//!
//! The crate is organised bottom-up:
//!
//! * [`numkernel`] holds the shared numerics (damped semi-infinite quadrature,
//!   Sturm-bisection for symmetric tridiagonal matrices, normalized descent).
//! * [`kg_fields`] evaluates Klein-Gordon wavepackets in position space, their
//!   charge and energy densities, and position-space dispersions.
//! * [`potentials`] builds the effective radial potentials `W(q)` of the
//!   dimensionless eigenproblems `-u'' + W u = 2γ u`.
//! * [`eigensolver`] computes ground levels by shooting and by a finite
//!   difference matrix, and sweeps `γ(d)`.
//! * [`variational`] evaluates the dispersion functionals in momentum space and
//!   minimizes the uncertainty product directly.
//! * [`cli`] is the `relbosons` command line front end.

pub mod cli;
pub mod eigensolver;
pub mod kg_fields;
pub mod numkernel;
pub mod potentials;
pub mod variational;

pub use eigensolver::{EigenResult, RadialGrid};
pub use potentials::{Channel, DValue, PotentialSpec, Spin};
