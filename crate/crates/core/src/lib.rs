//! Variational orbits of the planar Sitnikov problem.
//!
//! Two equal primaries collide along a line at every integer time while a
//! massless body moves on the perpendicular axis with height `y(t)`. Its
//! Lagrangian is `½ẏ² + 1/√(x(t)² + y²)`, where `x(t)` is the regularized
//! period-1 collision orbit of the primaries ([`kepler`]).
//!
//! Orbits are labelled by the sign of `y` at integer times ([`symbolic`]).
//! The crate discretizes the action ([`action`]), minimizes it over
//! symbol-constrained periodic classes ([`periodic`]), builds homoclinic and
//! heteroclinic connections between those periodic orbits by minimizing a
//! renormalized action on growing windows ([`connection`]), and checks the
//! structural properties of the results ([`verification`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod action;
pub mod connection;
mod error;
pub mod export;
pub mod kepler;
pub mod optim;
pub mod periodic;
mod solve;
pub mod symbolic;
pub mod tolerances;
pub mod verification;

pub use action::{Bc, DiscreteAction, Grid, Trajectory};
pub use connection::{ConnectingOrbit, ConnectionOptions, ConnectionProblem};
pub use error::{Error, Result};
pub use kepler::KeplerDrive;
pub use periodic::{PeriodicOptions, PeriodicOrbit, RhoCache};
pub use symbolic::{ConnectionSpec, PeriodicSymbols, Sign, SymbolWord};
pub use tolerances::Tolerances;
pub use verification::{OrderingVerdict, VerificationReport};
