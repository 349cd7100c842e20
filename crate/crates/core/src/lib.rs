//! Capacity-achieving input amplitude distributions for the discrete-time
//! complex AWGN channel `y = x + n`, `n ~ CN(0, 2)`, when the receiver also
//! harvests energy through a nonlinear rectenna.
//!
//! Two constraint families are supported:
//!
//! * average power, peak amplitude and *delivered power* (an even polynomial
//!   `g(r) = Σ α_i r^{2i}` of the input amplitude), see [`RdpProblem`];
//! * average power, peak amplitude and *output outage* (probability that the
//!   received amplitude lands inside `[A_l, A_u]`), see [`OopProblem`].
//!
//! With a uniform independent phase the mutual information reduces to a
//! functional of the amplitude law alone, `I = H(F) − 1` nats, so everything
//! below works with [`DiscreteAmplitudeDistribution`]. The [`solver`] finds
//! finite-support maximizers and certifies them with the Lagrangian
//! optimality conditions; [`theory`] carries the closed-form results for an
//! unbounded peak and [`mc_oracle`] is an independent Monte-Carlo check.
//!
//! The crate is `no_std` (with `alloc`); the `std` feature only adds
//! `std::error::Error` impls.
#![cfg_attr(not(feature = "std"), no_std)]
#![warn(missing_debug_implementations)]

extern crate alloc;

mod error;

pub mod channel;
pub mod constraints;
pub mod mc_oracle;
pub mod quadrature;
pub mod solver;
pub mod specfun;
pub mod theory;

pub use channel::{DiscreteAmplitudeDistribution, MixtureDistribution};
pub use constraints::{EvenPolynomial, OopProblem, Problem, RdpProblem};
pub use error::{Error, Result};
pub use solver::{KktReport, Multipliers, Solution, SolverConfig};

