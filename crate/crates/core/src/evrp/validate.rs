use serde::{Deserialize, Serialize};

use super::{EvrpError, EvrpInstance, Prepared, Route, Stop, Visit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// Not a single start-depot to end-depot walk.
    Structure,
    Window,
    Load,
    Battery,
    /// Pickup/delivery pairing or order.
    Pairing,
    /// Left the depot area again after returning to it.
    Depot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub stop: usize,
    pub detail: String,
}

/// A route annotated by forward propagation, plus everything it breaks.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteCheck {
    pub route: Route,
    pub violations: Vec<Violation>,
}

impl RouteCheck {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<Route, Vec<Violation>> {
        if self.violations.is_empty() {
            Ok(self.route)
        } else {
            Err(self.violations)
        }
    }
}

/// Propagates service times (earliest feasible), load and battery along
/// `stops` and reports every violated constraint.
pub fn validate_route(
    inst: &EvrpInstance,
    stops: &[Stop],
    initial_energy: f64,
) -> Result<RouteCheck, EvrpError> {
    let prep = Prepared::new(inst)?;
    check(&prep, stops, initial_energy)
}

pub(crate) fn check(
    prep: &Prepared<'_>,
    stops: &[Stop],
    initial_energy: f64,
) -> Result<RouteCheck, EvrpError> {
    let inst = prep.inst;
    let n_req = inst.requests.len();
    let mut violations = Vec::new();
    let mut push = |kind, stop, detail: String| violations.push(Violation { kind, stop, detail });

    let mut locs = Vec::with_capacity(stops.len());
    for &s in stops {
        let loc = prep.location(s).ok_or_else(|| {
            EvrpError::Instance(format!("stop {s:?} refers to an unknown request or station"))
        })?;
        locs.push(loc);
    }

    if stops.first() != Some(&Stop::DepotStart) {
        push(ViolationKind::Structure, 0, "route must start at the start depot".into());
    }
    if stops.len() < 2 || stops.last() != Some(&Stop::DepotEnd) {
        push(
            ViolationKind::Structure,
            stops.len().saturating_sub(1),
            "route must end at the end depot".into(),
        );
    }
    for (k, s) in stops.iter().enumerate() {
        let interior = k > 0 && k + 1 < stops.len();
        if interior && matches!(s, Stop::DepotStart | Stop::DepotEnd) {
            push(ViolationKind::Structure, k, "depot inside the route".into());
        }
        if !inst.allow_station_stops && matches!(s, Stop::Station { .. }) {
            push(ViolationKind::Structure, k, "station stops are disabled".into());
        }
    }

    let mut picked = vec![None; n_req];
    let mut delivered = vec![None; n_req];
    let mut visits = Vec::with_capacity(stops.len());
    let mut w = 0.0;
    let mut y: i64 = 0;
    let mut e = initial_energy;
    let mut energy = 0.0;
    let mut back_at_depot = false;

    for (k, &s) in stops.iter().enumerate() {
        let loc = locs[k];
        let (a, b) = prep.window(s);
        if k == 0 {
            w = a;
        } else {
            let prev = locs[k - 1];
            let c = inst.graph.energy(prev, loc);
            w = a.max(w + prep.dwell(stops[k - 1]) + inst.graph.time(prev, loc));
            e -= c;
            energy += c;
            if back_at_depot && !prep.is_depot(loc) {
                push(
                    ViolationKind::Depot,
                    k,
                    format!("'{}' visited after returning to the depot", prep.name(loc)),
                );
            }
            if prep.is_depot(loc) {
                back_at_depot = true;
            }
        }
        if w > b {
            push(
                ViolationKind::Window,
                k,
                format!("service at {w:.1} s after window end {b:.1} s"),
            );
        }
        if e < inst.e_min_kwh {
            push(
                ViolationKind::Battery,
                k,
                format!("battery {e:.4} kWh below floor {:.4} kWh", inst.e_min_kwh),
            );
        }
        match s {
            Stop::Pickup { request } => {
                if picked[request].replace(k).is_some() {
                    push(ViolationKind::Pairing, k, format!("request {request} picked up twice"));
                }
            }
            Stop::Delivery { request } => {
                if delivered[request].replace(k).is_some() {
                    push(ViolationKind::Pairing, k, format!("request {request} delivered twice"));
                }
                if picked[request].is_none() {
                    push(
                        ViolationKind::Pairing,
                        k,
                        format!("request {request} delivered before pickup"),
                    );
                }
            }
            Stop::Station { station } => {
                e = inst.battery_kwh.min(e + inst.stations[station].charge_kwh);
            }
            Stop::DepotStart | Stop::DepotEnd => {}
        }
        y += prep.demand(s);
        if y < 0 || y > inst.capacity as i64 {
            push(
                ViolationKind::Load,
                k,
                format!("load {y} outside [0, {}]", inst.capacity),
            );
        }
        visits.push(Visit {
            stop: s,
            location: prep.name(loc).to_string(),
            w_s: w,
            y,
            e_kwh: e,
        });
    }
    for r in 0..n_req {
        if let (Some(p), None) = (picked[r], delivered[r]) {
            push(ViolationKind::Pairing, p, format!("request {r} never delivered"));
        }
    }

    let depart_s = match (locs.first(), locs.get(1), visits.get(1)) {
        (Some(&d1), Some(&first), Some(v)) if stops.len() > 2 => {
            v.w_s - inst.graph.time(d1, first)
        }
        _ => visits.first().map_or(0.0, |v| v.w_s),
    };
    let end_s = visits.last().map_or(0.0, |v| v.w_s);
    Ok(RouteCheck {
        route: Route {
            visits,
            energy_kwh: energy,
            depart_s,
            end_s,
        },
        violations,
    })
}
