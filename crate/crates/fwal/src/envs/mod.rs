//! Benchmark environments exposed both as explicit [`MdpSpec`] tensors and
//! as native step simulators.
//!
//! The two views are built from independent code paths and cross-checked in
//! tests; solvers that treat the environment as a black box use the
//! simulator, verification and exact planning use the tensor.
//!
//! [`MdpSpec`]: crate::mdp::MdpSpec

mod carsim;
mod gridworld;

pub use carsim::{build_carsim, CarSim, CarSimConfig};
pub use gridworld::{build_gridworld, Gridworld, GridworldConfig};
