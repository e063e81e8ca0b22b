//! Road-edge energy consumption from measured speed profiles.
//!
//! The pipeline is: condition raw GPS speed samples ([`filter`]), integrate
//! the longitudinal dynamics of the vehicle over each road section
//! ([`dynamics`]), then search the road graph for minimum-energy paths and
//! collapse them into an [`EnergyGraph`] over the nodes the router cares
//! about ([`graph`]).

pub mod dynamics;
pub mod filter;
pub mod graph;
pub mod matrix;
mod profile;

pub use dynamics::{edge_energy, instantaneous_power, VehicleParams, JOULES_PER_KWH};
pub use filter::{kalman_smooth, rms_error, savitzky_golay};
pub use graph::{
    build_energy_graph, min_energy_path, path_energy, EnergyGraph, RoadEdge, RoadGraph,
    RoadVertex, TimeModel,
};
pub use matrix::NamedMatrix;
pub use profile::{SpeedProfile, SpeedSample};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("invalid speed profile: {0}")]
    Profile(String),
    #[error("invalid path: {0}")]
    Path(String),
    #[error("no path from {from} to {to}")]
    NoPath { from: String, to: String },
    #[error("negative-energy cycle reachable from {0}; check elevations and profiles")]
    NegativeCycle(String),
    #[error("invalid road graph: {0}")]
    Graph(String),
    #[error("matrix error: {0}")]
    Matrix(String),
}
