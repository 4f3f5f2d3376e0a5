//! Gaussian-process modelling of a phenomenon over a road network with a
//! team of mobile sensors: graph-embedded kernels, exact and sparse
//! regression, decentralized fusion through local/global summaries, and
//! entropy-driven walk planning over a coordination graph.

pub mod active;
pub mod error;
pub mod fusion;
pub mod gp;
pub mod io;
pub mod linalg;
pub mod road_kernel;
pub mod sim;
pub mod synthetic;

pub use error::{Error, Result};
