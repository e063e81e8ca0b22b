use serde::{Deserialize, Serialize};

use super::check::check_with_trace;
use super::{simulate_soc, Action, Schedule, ScheduleError, SchedulingInstance, SocTrace};
use crate::degradation::{degradation_cost, DegradationReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub feasible: bool,
    pub violations: usize,
    /// Charging cost minus discharge revenue.
    pub tariff: f64,
    /// Money; reported even when the objective ignores it.
    pub degradation: f64,
    pub per_vehicle: Vec<DegradationReport>,
    /// Tariff plus degradation when enabled; `+inf` when infeasible.
    pub objective: f64,
}

impl CostBreakdown {
    /// Mean subcycle depth over the whole fleet.
    pub fn mean_dod(&self) -> f64 {
        let depths: Vec<f64> = self
            .per_vehicle
            .iter()
            .flat_map(|r| r.cycles.depths.iter().copied())
            .collect();
        if depths.is_empty() {
            0.0
        } else {
            depths.iter().sum::<f64>() / depths.len() as f64
        }
    }
}

pub(crate) fn tariff_cost(schedule: &Schedule, inst: &SchedulingInstance) -> f64 {
    let mut total = 0.0;
    for row in &schedule.actions {
        for (i, a) in row.iter().enumerate() {
            match *a {
                Action::Charge(x) => total += inst.stations[x].tariff[i],
                Action::Discharge(x) => total -= inst.stations[x].tariff[i],
                Action::Idle => {}
            }
        }
    }
    total
}

pub(crate) fn degradation_reports(
    schedule: &Schedule,
    inst: &SchedulingInstance,
    trace: &SocTrace,
) -> Result<Vec<DegradationReport>, ScheduleError> {
    let h = &inst.horizon;
    let dt = h.interval_hours();
    (0..inst.vehicles.len())
        .map(|k| {
            let power: Vec<f64> = schedule.actions[k]
                .iter()
                .map(|a| a.station().map_or(0.0, |x| inst.stations[x].rate_kw))
                .collect();
            let mut busy = vec![false; h.intervals];
            for s in schedule.routes_of(k) {
                let t = &inst.tasks[s];
                busy[t.start..=t.end].iter_mut().for_each(|b| *b = true);
            }
            let driving = busy.iter().filter(|&&b| b).count() as f64 * dt;
            let available = (h.total_hours() - driving).max(0.0);
            degradation_cost(
                &trace.vehicles[k].soc,
                inst.vehicles[k].battery_kwh,
                &power,
                dt,
                available,
                &inst.degradation,
            )
            .map_err(|e| ScheduleError::Parameter(e.to_string()))
        })
        .collect()
}

pub(crate) fn cost_with_trace(
    schedule: &Schedule,
    inst: &SchedulingInstance,
    trace: &SocTrace,
) -> Result<CostBreakdown, ScheduleError> {
    let violations = check_with_trace(schedule, inst, trace).len();
    let tariff = tariff_cost(schedule, inst);
    let per_vehicle = if violations == 0 || inst.use_degradation {
        degradation_reports(schedule, inst, trace).unwrap_or_default()
    } else {
        Vec::new()
    };
    let degradation = per_vehicle.iter().map(|r| r.cost).sum::<f64>();
    let objective = if violations > 0 {
        f64::INFINITY
    } else if inst.use_degradation {
        tariff + degradation
    } else {
        tariff
    };
    Ok(CostBreakdown {
        feasible: violations == 0,
        violations,
        tariff,
        degradation,
        per_vehicle,
        objective,
    })
}

/// Tariff plus (optionally) degradation money of a schedule.
pub fn evaluate_cost(schedule: &Schedule, inst: &SchedulingInstance) -> Result<CostBreakdown, ScheduleError> {
    let trace = simulate_soc(inst, schedule)?;
    cost_with_trace(schedule, inst, &trace)
}

/// Objective value used by the optimiser; `+inf` for anything infeasible.
pub(crate) fn fitness(schedule: &Schedule, inst: &SchedulingInstance) -> f64 {
    match simulate_soc(inst, schedule) {
        Ok(trace) => {
            if !check_with_trace(schedule, inst, &trace).is_empty() {
                return f64::INFINITY;
            }
            let tariff = tariff_cost(schedule, inst);
            if !inst.use_degradation {
                return tariff;
            }
            match degradation_reports(schedule, inst, &trace) {
                Ok(r) => tariff + r.iter().map(|r| r.cost).sum::<f64>(),
                Err(_) => f64::INFINITY,
            }
        }
        Err(_) => f64::INFINITY,
    }
}
