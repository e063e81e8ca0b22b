use serde::{Deserialize, Serialize};

use super::{Action, Horizon, RouteTask, Schedule, ScheduleError, SchedulingInstance, Station};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VehicleTrace {
    /// SOC at interval boundaries `0..=N` (kWh).
    pub soc: Vec<f64>,
    pub charged_kwh: f64,
    pub discharged_kwh: f64,
    pub route_kwh: f64,
    pub reroute_kwh: f64,
}

impl VehicleTrace {
    pub fn net_change(&self) -> f64 {
        self.charged_kwh - self.discharged_kwh - self.route_kwh - self.reroute_kwh
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SocTrace {
    pub vehicles: Vec<VehicleTrace>,
}

/// Maximal runs of consecutive actions at one station: `(station, first, last)`.
pub(crate) fn station_runs(actions: &[Action]) -> Vec<(usize, usize, usize)> {
    let mut runs: Vec<(usize, usize, usize)> = Vec::new();
    for (i, a) in actions.iter().enumerate() {
        if let Some(x) = a.station() {
            match runs.last_mut() {
                Some(run) if run.0 == x && run.2 + 1 == i => run.2 = i,
                _ => runs.push((x, i, i)),
            }
        }
    }
    runs
}

/// Per-interval reroute energy of an action timeline.
pub(crate) fn reroute_profile(
    actions: &[Action],
    stations: &[Station],
) -> Result<Vec<f64>, ScheduleError> {
    let n = actions.len();
    let mut out = vec![0.0; n];
    for (x, first, last) in station_runs(actions) {
        let st = stations.get(x).ok_or(ScheduleError::UnknownStation(x))?;
        if !st.is_remote() {
            continue;
        }
        let d = st.reroute_intervals;
        if d == 0 {
            out[first] += st.reroute_kwh;
            continue;
        }
        let share = st.reroute_kwh / (2 * d) as f64;
        for k in 1..=d {
            out[first.saturating_sub(k)] += share;
            out[(last + k).min(n - 1)] += share;
        }
    }
    Ok(out)
}

/// One vehicle's recurrence:
/// `SOC(i+1) = SOC(i) + charge(i) - route(i) - reroute(i)`.
pub fn simulate_vehicle(
    horizon: &Horizon,
    tasks: &[&RouteTask],
    actions: &[Action],
    stations: &[Station],
    soc0: f64,
) -> Result<VehicleTrace, ScheduleError> {
    let n = horizon.intervals;
    if actions.len() != n {
        return Err(ScheduleError::Shape(format!(
            "{} actions for a {n}-interval horizon",
            actions.len()
        )));
    }
    let reroute = reroute_profile(actions, stations)?;
    let mut tr = VehicleTrace {
        soc: Vec::with_capacity(n + 1),
        ..VehicleTrace::default()
    };
    let mut soc = soc0;
    tr.soc.push(soc);
    for i in 0..n {
        let gain = match actions[i] {
            Action::Idle => 0.0,
            Action::Charge(x) => {
                let q = stations.get(x).ok_or(ScheduleError::UnknownStation(x))?.charge_quantum(horizon);
                tr.charged_kwh += q;
                q
            }
            Action::Discharge(x) => {
                let q = stations.get(x).ok_or(ScheduleError::UnknownStation(x))?.discharge_quantum(horizon);
                tr.discharged_kwh += q;
                -q
            }
        };
        let drive: f64 = tasks.iter().map(|t| t.energy[i]).sum();
        tr.route_kwh += drive;
        tr.reroute_kwh += reroute[i];
        soc += gain - drive - reroute[i];
        tr.soc.push(soc);
    }
    Ok(tr)
}

/// Every vehicle starts at its SOC_max.
pub fn simulate_soc(inst: &SchedulingInstance, schedule: &Schedule) -> Result<SocTrace, ScheduleError> {
    inst.check_shape(schedule)?;
    let vehicles = inst
        .vehicles
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let tasks: Vec<&RouteTask> = schedule.routes_of(k).into_iter().map(|s| &inst.tasks[s]).collect();
            simulate_vehicle(&inst.horizon, &tasks, &schedule.actions[k], &inst.stations, v.soc_max_kwh)
        })
        .collect::<Result<_, _>>()?;
    Ok(SocTrace { vehicles })
}
