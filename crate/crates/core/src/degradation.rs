//! Lithium-ion degradation cost of one day of operation.
//!
//! Cost is the battery price times the sum of three lifetime-loss ratios:
//! temperature during charging and idling, average state of charge, and
//! depth of discharge via energy throughput. Depth of discharge is a
//! fraction of capacity: at DOD = 0.8 the cycle-life fit gives about
//! 2.0e3 cycles, whereas reading it as a percentage (80) would give
//! about 1.7 cycles.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DegradationError {
    #[error("invalid degradation parameter: {0}")]
    Parameter(String),
}

/// How temperatures in °C are fed to the lifespan law `a * exp(b / T)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemperatureUnit {
    /// `T + 273.15`
    #[default]
    Kelvin,
    /// `T` as given
    Celsius,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DegradationParams {
    /// Battery replacement cost (money).
    pub battery_cost: f64,
    pub lifespan_a: f64,
    pub lifespan_b: f64,
    pub soc_slope: f64,
    pub soc_offset: f64,
    /// Projected battery life (years).
    pub projected_years: f64,
    /// Capacity fade at end of life.
    pub capacity_fade: f64,
    /// °C per kW.
    pub thermal_resistance: f64,
    /// °C
    pub ambient_temp: f64,
    pub hours_per_year: f64,
    pub cycle_life_scale: f64,
    pub cycle_life_exponent: f64,
    pub temperature_unit: TemperatureUnit,
}

impl Default for DegradationParams {
    fn default() -> Self {
        Self {
            battery_cost: 12_000.0,
            lifespan_a: 3.73e-4,
            lifespan_b: 636.0,
            soc_slope: 1.6e-5,
            soc_offset: 6.4e-6,
            projected_years: 15.0,
            capacity_fade: 0.80,
            thermal_resistance: 2.0,
            ambient_temp: 25.0,
            hours_per_year: 8760.0,
            cycle_life_scale: 145.71,
            cycle_life_exponent: 0.6844,
            temperature_unit: TemperatureUnit::Kelvin,
        }
    }
}

impl DegradationParams {
    pub fn validate(&self) -> Result<(), DegradationError> {
        let positive = [
            ("lifespan_a", self.lifespan_a),
            ("lifespan_b", self.lifespan_b),
            ("soc_slope", self.soc_slope),
            ("soc_offset", self.soc_offset),
            ("projected_years", self.projected_years),
            ("thermal_resistance", self.thermal_resistance),
            ("hours_per_year", self.hours_per_year),
            ("cycle_life_scale", self.cycle_life_scale),
            ("cycle_life_exponent", self.cycle_life_exponent),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(DegradationError::Parameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.battery_cost.is_finite() && self.battery_cost >= 0.0) {
            return Err(DegradationError::Parameter(format!(
                "battery_cost must be >= 0, got {}",
                self.battery_cost
            )));
        }
        if !(self.capacity_fade > 0.0 && self.capacity_fade <= 1.0) {
            return Err(DegradationError::Parameter(format!(
                "capacity_fade must be in (0, 1], got {}",
                self.capacity_fade
            )));
        }
        Ok(())
    }
}

/// Lifespan in years at temperature `temp_c` (°C, converted per the unit flag).
pub fn lifespan_years(temp_c: f64, params: &DegradationParams) -> Result<f64, DegradationError> {
    let t = match params.temperature_unit {
        TemperatureUnit::Kelvin => temp_c + 273.15,
        TemperatureUnit::Celsius => temp_c,
    };
    if !(t.is_finite() && t > 0.0) {
        return Err(DegradationError::Parameter(format!(
            "temperature {temp_c} °C is not usable in {:?} mode",
            params.temperature_unit
        )));
    }
    Ok(params.lifespan_a * (params.lifespan_b / t).exp())
}

/// Temperature term over a day split into equal slots.
///
/// `charge_power_kw` holds one entry per slot of `slot_hours`; every slot
/// with non-zero power counts as charging (or discharging) time. The
/// remaining `available_hours - t_ch` hours are aged at ambient temperature.
pub fn lifetime_loss_temperature(
    charge_power_kw: &[f64],
    slot_hours: f64,
    available_hours: f64,
    params: &DegradationParams,
) -> Result<f64, DegradationError> {
    if !(slot_hours >= 0.0) || !(available_hours >= 0.0) {
        return Err(DegradationError::Parameter(
            "durations must be non-negative".into(),
        ));
    }
    let nhy = params.hours_per_year;
    let mut charging_hours = 0.0;
    let mut loss = 0.0;
    for &p in charge_power_kw {
        if p != 0.0 {
            let temp = params.ambient_temp + params.thermal_resistance * p.abs();
            loss += slot_hours / (nhy * lifespan_years(temp, params)?);
            charging_hours += slot_hours;
        }
    }
    let idle = available_hours - charging_hours;
    if idle < -1e-9 {
        return Err(DegradationError::Parameter(format!(
            "charging time {charging_hours} h exceeds available time {available_hours} h"
        )));
    }
    let ambient = lifespan_years(params.ambient_temp, params)?;
    Ok(loss + idle.max(0.0) / (nhy * ambient))
}

/// Average-SOC term; `soc_avg` is a fraction of capacity.
pub fn lifetime_loss_soc(soc_avg: f64, params: &DegradationParams) -> f64 {
    (params.soc_slope * soc_avg - params.soc_offset)
        / (params.capacity_fade * params.projected_years * params.hours_per_year)
}

/// Cycles to end of life when every cycle has depth `dod` (fraction).
pub fn cycles_to_failure(dod: f64, params: &DegradationParams) -> Result<f64, DegradationError> {
    if !(dod > 0.0 && dod <= 1.0) {
        return Err(DegradationError::Parameter(format!(
            "depth of discharge must be in (0, 1], got {dod}"
        )));
    }
    Ok((dod / params.cycle_life_scale).powf(-1.0 / params.cycle_life_exponent))
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CycleDecomposition {
    /// Depth of each discharge subcycle, as a fraction of capacity.
    pub depths: Vec<f64>,
}

impl CycleDecomposition {
    pub fn count(&self) -> usize {
        self.depths.len()
    }

    /// Mean subcycle depth; zero when there are no subcycles.
    pub fn average(&self) -> f64 {
        if self.depths.is_empty() {
            0.0
        } else {
            self.depths.iter().sum::<f64>() / self.depths.len() as f64
        }
    }
}

/// Splits an SOC series (kWh) into maximal non-increasing runs; each run
/// with a positive drop is one subcycle of depth `drop / capacity`.
pub fn extract_subcycles(soc_kwh: &[f64], capacity_kwh: f64) -> CycleDecomposition {
    let mut depths = Vec::new();
    let mut peak = match soc_kwh.first() {
        Some(&s) => s,
        None => return CycleDecomposition { depths },
    };
    let mut trough = peak;
    for &s in &soc_kwh[1..] {
        if s > trough {
            if peak > trough {
                depths.push(((peak - trough) / capacity_kwh).min(1.0));
            }
            peak = s;
        }
        trough = s;
    }
    if peak > trough {
        depths.push(((peak - trough) / capacity_kwh).min(1.0));
    }
    CycleDecomposition { depths }
}

/// Throughput-based depth-of-discharge term.
pub fn lifetime_loss_dod(
    decomp: &CycleDecomposition,
    params: &DegradationParams,
) -> Result<f64, DegradationError> {
    if decomp.depths.is_empty() {
        return Ok(0.0);
    }
    let avg = decomp.average();
    let throughput: f64 = decomp.depths.iter().sum();
    Ok(throughput / (cycles_to_failure(avg, params)? * avg))
}

/// Trapezoidal time average of a uniformly sampled series.
pub fn time_average(series: &[f64]) -> f64 {
    match series.len() {
        0 => 0.0,
        1 => series[0],
        n => {
            let inner: f64 = series[1..n - 1].iter().sum();
            (0.5 * (series[0] + series[n - 1]) + inner) / (n - 1) as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DegradationReport {
    pub loss_temperature: f64,
    pub loss_soc: f64,
    pub loss_dod: f64,
    pub soc_avg: f64,
    pub cycles: CycleDecomposition,
    /// Money.
    pub cost: f64,
}

impl DegradationReport {
    pub fn total_loss(&self) -> f64 {
        self.loss_temperature + self.loss_soc + self.loss_dod
    }

    /// Cycles to end of life if this day's DOD pattern were repeated.
    pub fn implied_cycle_life(&self) -> Option<f64> {
        (self.loss_dod > 0.0).then(|| 1.0 / self.loss_dod)
    }
}

/// Degradation of one vehicle over one horizon.
///
/// `soc_kwh` has one more entry than `charge_power_kw` (interval
/// boundaries vs. intervals); `available_hours` is the time not spent
/// driving.
pub fn degradation_cost(
    soc_kwh: &[f64],
    capacity_kwh: f64,
    charge_power_kw: &[f64],
    slot_hours: f64,
    available_hours: f64,
    params: &DegradationParams,
) -> Result<DegradationReport, DegradationError> {
    params.validate()?;
    if !(capacity_kwh > 0.0) {
        return Err(DegradationError::Parameter(format!(
            "capacity must be positive, got {capacity_kwh}"
        )));
    }
    let loss_temperature =
        lifetime_loss_temperature(charge_power_kw, slot_hours, available_hours, params)?;
    let soc_avg = time_average(soc_kwh) / capacity_kwh;
    let loss_soc = lifetime_loss_soc(soc_avg, params);
    let cycles = extract_subcycles(soc_kwh, capacity_kwh);
    let loss_dod = lifetime_loss_dod(&cycles, params)?;
    let cost = params.battery_cost * (loss_temperature + loss_soc + loss_dod);
    Ok(DegradationReport {
        loss_temperature,
        loss_soc,
        loss_dod,
        soc_avg,
        cycles,
        cost,
    })
}
