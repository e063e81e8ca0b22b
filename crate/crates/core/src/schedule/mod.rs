//! Route-to-vehicle assignment and charge scheduling over a discretised
//! horizon.
//!
//! A schedule is an assignment matrix `a[k][s]` plus one action per vehicle
//! and interval. Charging at a remote station costs a round trip of
//! `reroute_intervals` each way and `reroute_kwh` of energy, which is
//! drawn on the travel intervals only.

mod check;
mod cost;
mod de;
mod encoding;
mod soc;

pub use check::{check_schedule, ScheduleViolation, ViolationKind};
pub use cost::{evaluate_cost, CostBreakdown};
pub use de::{
    de_crossover, de_mutate, de_optimize, draw_run_length, greedy_schedule, random_feasible_schedule, DeParams,
    DeResult,
};
pub use encoding::{decode, encode, Decoded, Layout};
pub use soc::{simulate_soc, simulate_vehicle, SocTrace, VehicleTrace};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::degradation::DegradationParams;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("invalid scheduling instance: {0}")]
    Instance(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("schedule refers to unknown station {0}")]
    UnknownStation(usize),
    #[error("schedule shape does not match the instance: {0}")]
    Shape(String),
    #[error("no feasible schedule found during initialisation: {0}")]
    Initialization(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Horizon {
    pub intervals: usize,
    #[serde(default = "default_interval_s")]
    pub interval_s: f64,
    /// Wall-clock hour of interval 0, for reporting.
    #[serde(default)]
    pub start_hour: f64,
}

fn default_interval_s() -> f64 {
    1800.0
}

impl Horizon {
    pub fn new(intervals: usize, interval_s: f64, start_hour: f64) -> Result<Self, ScheduleError> {
        let h = Self {
            intervals,
            interval_s,
            start_hour,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<(), ScheduleError> {
        if self.intervals == 0 || !(self.interval_s > 0.0) {
            return Err(ScheduleError::Instance(format!(
                "horizon needs N >= 1 and a positive interval, got N = {}, {} s",
                self.intervals, self.interval_s
            )));
        }
        Ok(())
    }

    pub fn interval_hours(&self) -> f64 {
        self.interval_s / 3600.0
    }

    pub fn total_hours(&self) -> f64 {
        self.intervals as f64 * self.interval_hours()
    }

    /// "HH:MM" label of the start of interval `i`.
    pub fn clock(&self, i: usize) -> String {
        let minutes = (self.start_hour * 60.0 + i as f64 * self.interval_s / 60.0).round() as i64;
        let m = minutes.rem_euclid(24 * 60);
        format!("{:02}:{:02}", m / 60, m % 60)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteTask {
    pub id: String,
    pub start: usize,
    pub end: usize,
    /// kWh drawn in each interval; zero outside `[start, end]`.
    pub energy: Vec<f64>,
}

impl RouteTask {
    pub fn new(id: impl Into<String>, start: usize, end: usize, energy: Vec<f64>) -> Result<Self, ScheduleError> {
        let id = id.into();
        if start > end || end >= energy.len() {
            return Err(ScheduleError::Instance(format!(
                "task '{id}' spans [{start}, {end}] outside a {}-interval horizon",
                energy.len()
            )));
        }
        if energy
            .iter()
            .enumerate()
            .any(|(i, e)| !e.is_finite() || ((i < start || i > end) && *e != 0.0))
        {
            return Err(ScheduleError::Instance(format!(
                "task '{id}' draws energy outside its interval span"
            )));
        }
        Ok(Self { id, start, end, energy })
    }

    /// Spreads `energy_kwh` over the intervals overlapped by
    /// `[depart_s, end_s]` in proportion to the overlap.
    pub fn from_times(
        id: impl Into<String>,
        depart_s: f64,
        end_s: f64,
        energy_kwh: f64,
        horizon: &Horizon,
    ) -> Result<Self, ScheduleError> {
        let id = id.into();
        let d = horizon.interval_s;
        let limit = horizon.intervals as f64 * d;
        if !(depart_s >= 0.0 && end_s >= depart_s && end_s <= limit) {
            return Err(ScheduleError::Instance(format!(
                "task '{id}' runs [{depart_s}, {end_s}] s outside the horizon [0, {limit}] s"
            )));
        }
        let start = ((depart_s / d).floor() as usize).min(horizon.intervals - 1);
        let end = if end_s > depart_s {
            (((end_s / d).ceil() as usize).max(1) - 1).max(start)
        } else {
            start
        };
        let mut energy = vec![0.0; horizon.intervals];
        if end_s > depart_s {
            let span = end_s - depart_s;
            for (i, slot) in energy.iter_mut().enumerate().take(end + 1).skip(start) {
                let lo = (i as f64 * d).max(depart_s);
                let hi = ((i + 1) as f64 * d).min(end_s);
                *slot = energy_kwh * (hi - lo).max(0.0) / span;
            }
        } else {
            energy[start] = energy_kwh;
        }
        Self::new(id, start, end, energy)
    }

    pub fn total_kwh(&self) -> f64 {
        self.energy.iter().sum()
    }

    pub fn overlaps(&self, other: &RouteTask) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

/// `d_s(i)`: 1 while the task occupies interval `i`.
pub fn unavailability(task: &RouteTask, i: usize) -> u8 {
    u8::from(task.start <= i && i <= task.end)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Station {
    pub id: String,
    pub rate_kw: f64,
    pub efficiency: f64,
    /// Money per charging interval.
    pub tariff: Vec<f64>,
    /// Charging spots per interval.
    pub availability: Vec<u32>,
    /// Travel intervals each way; 0 at the depot.
    #[serde(default)]
    pub reroute_intervals: usize,
    /// Round-trip travel energy (kWh); 0 at the depot.
    #[serde(default)]
    pub reroute_kwh: f64,
    #[serde(default)]
    pub allow_discharge: bool,
}

impl Station {
    /// Battery gain of one charging interval.
    pub fn charge_quantum(&self, horizon: &Horizon) -> f64 {
        self.efficiency * self.rate_kw * horizon.interval_hours()
    }

    /// Battery loss of one discharging interval.
    pub fn discharge_quantum(&self, horizon: &Horizon) -> f64 {
        self.rate_kw * horizon.interval_hours() / self.efficiency
    }

    pub fn is_remote(&self) -> bool {
        self.reroute_intervals > 0 || self.reroute_kwh > 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    pub id: String,
    pub battery_kwh: f64,
    pub soc_min_kwh: f64,
    pub soc_max_kwh: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(tag = "action", content = "station", rename_all = "snake_case")]
pub enum Action {
    #[default]
    Idle,
    Charge(usize),
    Discharge(usize),
}

impl Action {
    pub fn station(self) -> Option<usize> {
        match self {
            Action::Idle => None,
            Action::Charge(x) | Action::Discharge(x) => Some(x),
        }
    }

    pub fn sign(self) -> i8 {
        match self {
            Action::Idle => 0,
            Action::Charge(_) => 1,
            Action::Discharge(_) => -1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    /// `assign[k][s]`: vehicle `k` drives route `s`.
    pub assign: Vec<Vec<bool>>,
    /// `actions[k][i]`.
    pub actions: Vec<Vec<Action>>,
}

impl Schedule {
    pub fn idle(vehicles: usize, routes: usize, intervals: usize) -> Self {
        Self {
            assign: vec![vec![false; routes]; vehicles],
            actions: vec![vec![Action::Idle; intervals]; vehicles],
        }
    }

    /// Builds the assignment matrix from a vehicle index per route.
    pub fn from_owners(owners: &[usize], vehicles: usize, intervals: usize) -> Self {
        let mut s = Self::idle(vehicles, owners.len(), intervals);
        for (route, &k) in owners.iter().enumerate() {
            s.assign[k][route] = true;
        }
        s
    }

    /// Vehicle of each route, when assigned exactly once.
    pub fn owners(&self) -> Vec<Option<usize>> {
        let routes = self.assign.first().map_or(0, Vec::len);
        (0..routes)
            .map(|s| {
                let mut who = self.assign.iter().enumerate().filter(|(_, row)| row[s]);
                match (who.next(), who.next()) {
                    (Some((k, _)), None) => Some(k),
                    _ => None,
                }
            })
            .collect()
    }

    pub fn routes_of(&self, k: usize) -> Vec<usize> {
        self.assign[k]
            .iter()
            .enumerate()
            .filter_map(|(s, &a)| a.then_some(s))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulingInstance {
    pub horizon: Horizon,
    pub vehicles: Vec<Vehicle>,
    pub stations: Vec<Station>,
    pub tasks: Vec<RouteTask>,
    /// Global V2B switch; a station must also allow it.
    #[serde(default)]
    pub allow_discharge: bool,
    #[serde(default)]
    pub use_degradation: bool,
    #[serde(default)]
    pub degradation: DegradationParams,
    /// Allowed shortfall of the final SOC below SOC_max; defaults to the
    /// largest single charge quantum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soc_end_tolerance_kwh: Option<f64>,
}

impl SchedulingInstance {
    pub fn validate(&self) -> Result<(), ScheduleError> {
        self.horizon.validate()?;
        let n = self.horizon.intervals;
        if self.vehicles.is_empty() {
            return Err(ScheduleError::Instance("fleet is empty".into()));
        }
        for v in &self.vehicles {
            if !(v.battery_kwh > 0.0
                && 0.0 <= v.soc_min_kwh
                && v.soc_min_kwh <= v.soc_max_kwh
                && v.soc_max_kwh <= v.battery_kwh)
            {
                return Err(ScheduleError::Instance(format!(
                    "vehicle '{}' needs 0 <= SOC_min <= SOC_max <= B",
                    v.id
                )));
            }
        }
        for s in &self.stations {
            if !(s.rate_kw > 0.0 && s.efficiency > 0.0 && s.efficiency <= 1.0) {
                return Err(ScheduleError::Instance(format!(
                    "station '{}' needs rate > 0 and efficiency in (0, 1]",
                    s.id
                )));
            }
            if s.tariff.len() != n || s.availability.len() != n {
                return Err(ScheduleError::Instance(format!(
                    "station '{}' series must have {n} entries",
                    s.id
                )));
            }
            if !(s.reroute_kwh >= 0.0) || s.tariff.iter().any(|p| !p.is_finite()) {
                return Err(ScheduleError::Instance(format!(
                    "station '{}' has invalid reroute energy or tariff",
                    s.id
                )));
            }
        }
        for t in &self.tasks {
            if t.energy.len() != n || t.end >= n || t.start > t.end {
                return Err(ScheduleError::Instance(format!(
                    "task '{}' does not fit the horizon",
                    t.id
                )));
            }
        }
        if self.soc_end_tolerance_kwh.is_some_and(|t| !(t >= 0.0)) {
            return Err(ScheduleError::Instance("negative SOC tolerance".into()));
        }
        self.degradation
            .validate()
            .map_err(|e| ScheduleError::Instance(e.to_string()))
    }

    pub fn soc_end_tolerance(&self) -> f64 {
        self.soc_end_tolerance_kwh.unwrap_or_else(|| {
            self.stations
                .iter()
                .map(|s| s.charge_quantum(&self.horizon))
                .fold(0.0, f64::max)
        })
    }

    pub fn discharge_allowed(&self, station: usize) -> bool {
        self.allow_discharge && self.stations.get(station).is_some_and(|s| s.allow_discharge)
    }

    pub fn check_shape(&self, schedule: &Schedule) -> Result<(), ScheduleError> {
        let (k, s, n) = (self.vehicles.len(), self.tasks.len(), self.horizon.intervals);
        if schedule.assign.len() != k || schedule.assign.iter().any(|r| r.len() != s) {
            return Err(ScheduleError::Shape(format!("assignment must be {k} x {s}")));
        }
        if schedule.actions.len() != k || schedule.actions.iter().any(|r| r.len() != n) {
            return Err(ScheduleError::Shape(format!("actions must be {k} x {n}")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests;
