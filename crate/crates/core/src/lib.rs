//! Energy-aware routing and charge scheduling for electric vehicle fleets.
//!
//! * [`energy`]: speed-profile filtering, longitudinal-dynamics edge energy,
//!   minimum-energy paths and the condensed energy graph.
//! * [`evrp`]: pickup-and-delivery routing with time windows, load and
//!   battery limits; route validation, exact and heuristic solvers.
//! * [`schedule`]: route-to-vehicle assignment and charge scheduling over a
//!   discretised horizon, solved with binary differential evolution.
//! * [`degradation`]: lithium-ion lifetime loss and its money cost.
//! * [`fleet`]: file formats, scenario configs and the end-to-end pipeline.

pub mod degradation;
pub mod energy;
pub mod evrp;
pub mod fleet;
pub mod schedule;
