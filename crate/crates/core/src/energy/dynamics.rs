//! Longitudinal vehicle dynamics: traction power and per-section energy.

use serde::{Deserialize, Serialize};

use super::{EnergyError, SpeedProfile};

pub const JOULES_PER_KWH: f64 = 3.6e6;

/// Vehicle and environment constants for the traction model.
///
/// Defaults are the measured test vehicle (1312 kg saloon) with sea-level
/// air density. Bogotá sits near 2600 m, where air density is closer to
/// 0.95 kg/m³; case-study configs may override `air_density`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VehicleParams {
    /// kg
    pub mass: f64,
    /// m²
    pub frontal_area: f64,
    pub drag_coeff: f64,
    pub rolling_coeff: f64,
    /// Power-train efficiency in (0, 1].
    pub powertrain_eff: f64,
    /// kg/m³
    pub air_density: f64,
    /// m/s²
    pub gravity: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            mass: 1312.0,
            frontal_area: 1.86,
            drag_coeff: 0.32,
            rolling_coeff: 0.0117,
            powertrain_eff: 0.9,
            air_density: 1.225,
            gravity: 9.81,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<(), EnergyError> {
        let fields = [
            ("mass", self.mass),
            ("frontal_area", self.frontal_area),
            ("drag_coeff", self.drag_coeff),
            ("rolling_coeff", self.rolling_coeff),
            ("powertrain_eff", self.powertrain_eff),
            ("air_density", self.air_density),
            ("gravity", self.gravity),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(EnergyError::Parameter(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        if self.powertrain_eff > 1.0 {
            return Err(EnergyError::Parameter(format!(
                "powertrain_eff must be <= 1, got {}",
                self.powertrain_eff
            )));
        }
        Ok(())
    }

    /// Aerodynamic plus rolling resistance force times speed, in watts at the wheel.
    fn resistive_power(&self, v: f64) -> f64 {
        0.5 * self.air_density * self.frontal_area * self.drag_coeff * v.powi(3)
            + self.mass * self.gravity * self.rolling_coeff * v
    }
}

/// Battery-side power draw (W) at speed `v`, acceleration `dv_dt` and
/// road grade angle `grade` (radians). Negative under braking or downhill.
pub fn instantaneous_power(
    params: &VehicleParams,
    v: f64,
    dv_dt: f64,
    grade: f64,
) -> Result<f64, EnergyError> {
    if !(v >= 0.0 && v.is_finite()) {
        return Err(EnergyError::Parameter(format!("speed must be >= 0, got {v}")));
    }
    if !(grade.abs() < std::f64::consts::FRAC_PI_2) {
        return Err(EnergyError::Parameter(format!(
            "grade angle {grade} rad outside (-pi/2, pi/2)"
        )));
    }
    let wheel = params.resistive_power(v)
        + params.mass * dv_dt * v
        + params.mass * params.gravity * grade.tan() * v;
    Ok(wheel / params.powertrain_eff)
}

/// Acceleration at each sample: central differences inside, one-sided at
/// the ends. Paired with trapezoidal weights, the inertial term then sums
/// to exactly `m (v_end² - v_start²) / 2`.
fn accelerations(v: &[f64], dt: f64) -> Vec<f64> {
    let n = v.len();
    let mut a = vec![0.0; n];
    a[0] = (v[1] - v[0]) / dt;
    a[n - 1] = (v[n - 1] - v[n - 2]) / dt;
    for i in 1..n - 1 {
        a[i] = (v[i + 1] - v[i - 1]) / (2.0 * dt);
    }
    a
}

/// Energy (kWh) to drive one road section.
///
/// Aerodynamic, rolling and inertial power are integrated over the profile
/// with the trapezoidal rule; the gravitational part is applied in closed
/// form as `- m g delta_z / eta`, where `delta_z = z(to) - z(from)`.
///
/// With `clamp_regen`, negative traction power is treated as zero before
/// integration (no recovered braking energy). The gravitational term is
/// applied unchanged in both modes.
pub fn edge_energy(
    params: &VehicleParams,
    profile: &SpeedProfile,
    delta_z: f64,
    clamp_regen: bool,
) -> Result<f64, EnergyError> {
    params.validate()?;
    if profile.len() < 2 {
        return Err(EnergyError::Parameter(
            "profile needs at least 2 samples".into(),
        ));
    }
    if !delta_z.is_finite() {
        return Err(EnergyError::Parameter(format!("delta_z {delta_z} not finite")));
    }
    let v = profile.speeds();
    let dt = profile.dt();
    let acc = accelerations(&v, dt);
    let mut power = Vec::with_capacity(v.len());
    for (&vi, &ai) in v.iter().zip(&acc) {
        let p = instantaneous_power(params, vi, ai, 0.0)?;
        power.push(if clamp_regen { p.max(0.0) } else { p });
    }
    let traction: f64 = power.windows(2).map(|w| 0.5 * (w[0] + w[1]) * dt).sum();
    let gravitational = params.mass * params.gravity * delta_z / params.powertrain_eff;
    Ok((traction - gravitational) / JOULES_PER_KWH)
}
