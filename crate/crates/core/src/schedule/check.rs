use serde::{Deserialize, Serialize};

use super::soc::station_runs;
use super::{simulate_soc, Action, Schedule, ScheduleError, SchedulingInstance, SocTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// Route not assigned to exactly one vehicle.
    Assignment,
    /// Two routes of one vehicle overlap in time.
    Overlap,
    /// Action while the vehicle is on a route.
    Busy,
    SocBounds,
    /// Final SOC outside `[SOC_max - tolerance, SOC_max]`.
    Boundary,
    /// Reroute travel window not idle or outside the horizon.
    Reroute,
    Availability,
    Discharge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleViolation {
    pub kind: ViolationKind,
    pub vehicle: Option<usize>,
    pub interval: Option<usize>,
    pub detail: String,
}

const SOC_EPS: f64 = 1e-9;

/// Every violated constraint; empty means feasible.
pub fn check_schedule(
    schedule: &Schedule,
    inst: &SchedulingInstance,
) -> Result<Vec<ScheduleViolation>, ScheduleError> {
    let trace = simulate_soc(inst, schedule)?;
    Ok(check_with_trace(schedule, inst, &trace))
}

pub(crate) fn check_with_trace(
    schedule: &Schedule,
    inst: &SchedulingInstance,
    trace: &SocTrace,
) -> Vec<ScheduleViolation> {
    let mut out = Vec::new();
    let mut push = |kind, vehicle, interval, detail: String| {
        out.push(ScheduleViolation {
            kind,
            vehicle,
            interval,
            detail,
        })
    };
    let n = inst.horizon.intervals;

    for (s, owner) in schedule.owners().iter().enumerate() {
        if owner.is_none() {
            let count = schedule.assign.iter().filter(|row| row[s]).count();
            push(
                ViolationKind::Assignment,
                None,
                None,
                format!("route '{}' assigned to {count} vehicles", inst.tasks[s].id),
            );
        }
    }

    for (k, actions) in schedule.actions.iter().enumerate() {
        let routes = schedule.routes_of(k);
        let mut busy = vec![false; n];
        for (a, &s1) in routes.iter().enumerate() {
            let t1 = &inst.tasks[s1];
            for &s2 in &routes[a + 1..] {
                if t1.overlaps(&inst.tasks[s2]) {
                    push(
                        ViolationKind::Overlap,
                        Some(k),
                        Some(t1.start.max(inst.tasks[s2].start)),
                        format!("routes '{}' and '{}' overlap", t1.id, inst.tasks[s2].id),
                    );
                }
            }
            busy[t1.start..=t1.end].iter_mut().for_each(|b| *b = true);
        }
        for (i, a) in actions.iter().enumerate() {
            if busy[i] && *a != Action::Idle {
                push(ViolationKind::Busy, Some(k), Some(i), "action while on a route".into());
            }
            if let Action::Discharge(x) = a {
                if !inst.discharge_allowed(*x) {
                    push(
                        ViolationKind::Discharge,
                        Some(k),
                        Some(i),
                        format!("discharge not allowed at '{}'", inst.stations[*x].id),
                    );
                }
            }
        }
        for (x, first, last) in station_runs(actions) {
            let d = inst.stations[x].reroute_intervals;
            if d == 0 {
                continue;
            }
            let mut window = Vec::with_capacity(2 * d);
            let mut outside = false;
            for j in 1..=d {
                match first.checked_sub(j) {
                    Some(i) => window.push(i),
                    None => outside = true,
                }
                if last + j < n {
                    window.push(last + j);
                } else {
                    outside = true;
                }
            }
            if outside {
                push(
                    ViolationKind::Reroute,
                    Some(k),
                    Some(first),
                    format!("trip to '{}' leaves the horizon", inst.stations[x].id),
                );
            }
            if let Some(&i) = window.iter().find(|&&i| busy[i] || actions[i] != Action::Idle) {
                push(
                    ViolationKind::Reroute,
                    Some(k),
                    Some(i),
                    format!("vehicle not free to travel to '{}'", inst.stations[x].id),
                );
            }
        }

        let v = &inst.vehicles[k];
        let soc = &trace.vehicles[k].soc;
        for (i, &e) in soc.iter().enumerate() {
            if e < v.soc_min_kwh - SOC_EPS || e > v.soc_max_kwh + SOC_EPS {
                push(
                    ViolationKind::SocBounds,
                    Some(k),
                    Some(i),
                    format!(
                        "SOC {e:.4} kWh outside [{}, {}]",
                        v.soc_min_kwh, v.soc_max_kwh
                    ),
                );
            }
        }
        let end = soc[n];
        let tol = inst.soc_end_tolerance();
        if (soc[0] - v.soc_max_kwh).abs() > SOC_EPS
            || end < v.soc_max_kwh - tol - SOC_EPS
            || end > v.soc_max_kwh + SOC_EPS
        {
            push(
                ViolationKind::Boundary,
                Some(k),
                Some(n),
                format!(
                    "SOC runs {:.4} -> {end:.4} kWh, must return to {} within {tol:.4}",
                    soc[0], v.soc_max_kwh
                ),
            );
        }
    }

    for (x, st) in inst.stations.iter().enumerate() {
        for i in 0..n {
            let count = schedule
                .actions
                .iter()
                .filter(|row| row[i].station() == Some(x))
                .count() as u32;
            if count > st.availability[i] {
                push(
                    ViolationKind::Availability,
                    None,
                    Some(i),
                    format!("{count} vehicles at '{}', {} spots", st.id, st.availability[i]),
                );
            }
        }
    }
    out
}
