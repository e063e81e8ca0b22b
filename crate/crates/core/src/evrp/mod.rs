//! Pickup-and-delivery routing with time windows, passenger capacity and a
//! battery floor.
//!
//! Every request is a pickup/delivery pair served by one route. Routes leave
//! the start depot fully charged and finish at the end depot; inter-route
//! state of charge is the scheduler's business.

mod exact;
mod insertion;
mod validate;

pub use exact::{solve_exact, ExactLimits};
pub use insertion::solve_insertion_heuristic;
pub use validate::{validate_route, RouteCheck, Violation, ViolationKind};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::EnergyGraph;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvrpError {
    #[error("invalid instance: {0}")]
    Instance(String),
    #[error("unknown location '{0}'")]
    UnknownLocation(String),
    #[error("request {request} ('{id}') cannot be served by any feasible route")]
    Infeasible { request: usize, id: String },
    #[error("search limits reached before any complete solution was found")]
    NoIncumbent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportRequest {
    #[serde(default)]
    pub id: String,
    pub pickup: String,
    pub delivery: String,
    /// Passengers.
    pub q: u32,
    /// Pickup window (s since horizon start).
    pub a: f64,
    pub b: f64,
    /// Delivery window; defaults to `[a, big_m]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delivery_window: Option<[f64; 2]>,
}

/// A charging stop a route may visit when station stops are enabled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteStation {
    pub location: String,
    pub charge_kwh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvrpInstance {
    pub graph: EnergyGraph,
    pub depot_start: String,
    pub depot_end: String,
    pub requests: Vec<TransportRequest>,
    /// Passenger capacity.
    pub capacity: u32,
    pub battery_kwh: f64,
    pub e_min_kwh: f64,
    pub big_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_routes: Option<usize>,
    /// Service time spent at every pickup, delivery and station stop.
    #[serde(default)]
    pub dwell_s: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stations: Vec<RouteStation>,
    #[serde(default)]
    pub allow_station_stops: bool,
}

/// One stop of a route. The derived order is the tie-break order between
/// equal-energy solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Stop {
    DepotStart,
    Pickup { request: usize },
    Delivery { request: usize },
    Station { station: usize },
    DepotEnd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Visit {
    pub stop: Stop,
    pub location: String,
    pub w_s: f64,
    pub y: i64,
    pub e_kwh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub visits: Vec<Visit>,
    pub energy_kwh: f64,
    /// Latest depot departure that reaches the first stop without waiting.
    pub depart_s: f64,
    pub end_s: f64,
}

impl Route {
    pub fn stops(&self) -> Vec<Stop> {
        self.visits.iter().map(|v| v.stop).collect()
    }

    pub fn requests(&self) -> Vec<usize> {
        self.visits
            .iter()
            .filter_map(|v| match v.stop {
                Stop::Pickup { request } => Some(request),
                _ => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    LimitsExhausted,
    Heuristic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvrpSolution {
    pub routes: Vec<Route>,
    pub total_energy_kwh: f64,
    pub status: SolveStatus,
    pub nodes_explored: u64,
}

impl EvrpSolution {
    /// Orders routes by stop sequence and sums their energy in that order,
    /// so equal route sets always give bit-identical totals.
    pub fn from_routes(mut routes: Vec<Route>, status: SolveStatus, nodes_explored: u64) -> Self {
        routes.sort_by_cached_key(|r| r.stops());
        let total_energy_kwh = canonical_total(routes.iter().map(|r| r.energy_kwh));
        Self {
            routes,
            total_energy_kwh,
            status,
            nodes_explored,
        }
    }
}

/// Sum in iteration order starting from zero.
pub(crate) fn canonical_total(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, |acc, v| acc + v)
}

/// Instance with locations resolved to graph indices.
pub(crate) struct Prepared<'a> {
    pub inst: &'a EvrpInstance,
    pub d1: usize,
    pub d2: usize,
    pub pickup: Vec<usize>,
    pub delivery: Vec<usize>,
    pub station: Vec<usize>,
}

impl<'a> Prepared<'a> {
    pub fn new(inst: &'a EvrpInstance) -> Result<Self, EvrpError> {
        let g = &inst.graph;
        let n = g.len();
        if g.energy_kwh.len() != n
            || g.time_s.len() != n
            || g.energy_kwh.iter().chain(&g.time_s).any(|r| r.len() != n)
        {
            return Err(EvrpError::Instance("energy graph is not square".into()));
        }
        let find = |name: &str| {
            g.index_of(name)
                .ok_or_else(|| EvrpError::UnknownLocation(name.to_string()))
        };
        if inst.capacity == 0 {
            return Err(EvrpError::Instance("capacity must be positive".into()));
        }
        if !(inst.e_min_kwh >= 0.0 && inst.battery_kwh > inst.e_min_kwh) {
            return Err(EvrpError::Instance(format!(
                "need battery > e_min >= 0, got B = {}, e_min = {}",
                inst.battery_kwh, inst.e_min_kwh
            )));
        }
        if !(inst.dwell_s >= 0.0) {
            return Err(EvrpError::Instance("dwell must be non-negative".into()));
        }
        let mut pickup = Vec::with_capacity(inst.requests.len());
        let mut delivery = Vec::with_capacity(inst.requests.len());
        for (i, r) in inst.requests.iter().enumerate() {
            if r.q == 0 {
                return Err(EvrpError::Instance(format!("request {i} carries no passengers")));
            }
            let [da, db] = r.delivery_window.unwrap_or([r.a, inst.big_m]);
            if !(r.a <= r.b && da <= db) {
                return Err(EvrpError::Instance(format!("request {i} has an empty window")));
            }
            if !(inst.big_m > r.b && (r.delivery_window.is_none() || inst.big_m > db)) {
                return Err(EvrpError::Instance(format!(
                    "big_m {} must exceed every window end (request {i})",
                    inst.big_m
                )));
            }
            pickup.push(find(&r.pickup)?);
            delivery.push(find(&r.delivery)?);
        }
        let station = inst
            .stations
            .iter()
            .map(|s| {
                if s.charge_kwh >= 0.0 {
                    find(&s.location)
                } else {
                    Err(EvrpError::Instance(format!(
                        "station '{}' has a negative charge amount",
                        s.location
                    )))
                }
            })
            .collect::<Result<_, _>>()?;
        Ok(Self {
            inst,
            d1: find(&inst.depot_start)?,
            d2: find(&inst.depot_end)?,
            pickup,
            delivery,
            station,
        })
    }

    pub fn max_routes(&self) -> usize {
        self.inst.max_routes.unwrap_or(self.inst.requests.len())
    }

    pub fn location(&self, stop: Stop) -> Option<usize> {
        match stop {
            Stop::DepotStart => Some(self.d1),
            Stop::DepotEnd => Some(self.d2),
            Stop::Pickup { request } => self.pickup.get(request).copied(),
            Stop::Delivery { request } => self.delivery.get(request).copied(),
            Stop::Station { station } => self.station.get(station).copied(),
        }
    }

    pub fn is_depot(&self, loc: usize) -> bool {
        loc == self.d1 || loc == self.d2
    }

    pub fn window(&self, stop: Stop) -> (f64, f64) {
        let m = self.inst.big_m;
        match stop {
            Stop::Pickup { request } => {
                let r = &self.inst.requests[request];
                (r.a, r.b)
            }
            Stop::Delivery { request } => {
                let r = &self.inst.requests[request];
                let [a, b] = r.delivery_window.unwrap_or([r.a, m]);
                (a, b)
            }
            _ => (0.0, m),
        }
    }

    pub fn demand(&self, stop: Stop) -> i64 {
        match stop {
            Stop::Pickup { request } => self.inst.requests[request].q as i64,
            Stop::Delivery { request } => -(self.inst.requests[request].q as i64),
            _ => 0,
        }
    }

    pub fn dwell(&self, stop: Stop) -> f64 {
        match stop {
            Stop::DepotStart | Stop::DepotEnd => 0.0,
            _ => self.inst.dwell_s,
        }
    }

    pub fn name(&self, loc: usize) -> &str {
        &self.inst.graph.names[loc]
    }
}
