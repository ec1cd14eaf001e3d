//! Apprenticeship learning as Euclidean projection onto the feature-expectations
//! polytope of a tabular MDP.
//!
//! The library provides:
//!
//! * [`mdp`] — MDP-without-reward representation, policies, exact (dynamic
//!   programming) and Monte Carlo feature-expectation computation.
//! * [`oracle`] — the linear-minimization oracle: optimal deterministic policy
//!   for a linear reward, via exact value iteration or tabular Q-learning.
//! * [`solvers`] — conditional gradient, away-step conditional gradient,
//!   stochastic Frank-Wolfe, and a multiplicative-weights baseline.
//! * [`polytope`] — brute-force polytope oracle for tiny MDPs: vertex
//!   enumeration, min-norm-point projection, hull membership, facial distance.
//! * [`envs`] — the gridworld and three-lane car benchmark environments.
//! * [`expert`] — expert trajectory sampling and sample-budget calculators.
//! * [`harness`] — experiment runner, CSV/SVG emission, verification battery.

pub mod envs;
pub mod error;
pub mod expert;
pub mod harness;
pub mod instances;
pub mod mdp;
pub mod oracle;
pub mod polytope;
pub mod rng;
pub mod solvers;

pub use error::{Error, Result};
