use serde::{Deserialize, Serialize};

use super::EnergyError;

const SPACING_TOL: f64 = 1e-9;

/// One GPS speed sample: seconds since the start of the section, ground speed in m/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedSample {
    pub t: f64,
    pub v: f64,
}

/// Uniformly sampled speed trace of a single road section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedProfile {
    samples: Vec<SpeedSample>,
    sample_rate: f64,
}

impl SpeedProfile {
    /// Builds a profile, inferring the sample rate from the first spacing.
    pub fn new(samples: Vec<SpeedSample>) -> Result<Self, EnergyError> {
        if samples.len() < 2 {
            return Err(EnergyError::Profile(format!(
                "need at least 2 samples, got {}",
                samples.len()
            )));
        }
        let dt = samples[1].t - samples[0].t;
        if !(dt > 0.0) {
            return Err(EnergyError::Profile(
                "time must be strictly increasing".into(),
            ));
        }
        Self::with_rate(samples, 1.0 / dt)
    }

    pub fn with_rate(samples: Vec<SpeedSample>, sample_rate: f64) -> Result<Self, EnergyError> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(EnergyError::Profile(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        if samples.len() < 2 {
            return Err(EnergyError::Profile(format!(
                "need at least 2 samples, got {}",
                samples.len()
            )));
        }
        let dt = 1.0 / sample_rate;
        for (i, s) in samples.iter().enumerate() {
            if !(s.t.is_finite() && s.t >= 0.0) {
                return Err(EnergyError::Profile(format!("sample {i}: bad time {}", s.t)));
            }
            if !(s.v.is_finite() && s.v >= 0.0) {
                return Err(EnergyError::Profile(format!("sample {i}: bad speed {}", s.v)));
            }
            if i > 0 {
                let step = s.t - samples[i - 1].t;
                if step <= 0.0 {
                    return Err(EnergyError::Profile(format!(
                        "sample {i}: time not strictly increasing"
                    )));
                }
                if (step - dt).abs() > SPACING_TOL {
                    return Err(EnergyError::Profile(format!(
                        "sample {i}: spacing {step} differs from 1/rate = {dt}"
                    )));
                }
            }
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    /// Profile starting at t = 0 with sample `i` at `i / sample_rate`.
    pub fn from_speeds(speeds: &[f64], sample_rate: f64) -> Result<Self, EnergyError> {
        let samples = speeds
            .iter()
            .enumerate()
            .map(|(i, &v)| SpeedSample {
                t: i as f64 / sample_rate,
                v,
            })
            .collect();
        Self::with_rate(samples, sample_rate)
    }

    pub fn samples(&self) -> &[SpeedSample] {
        &self.samples
    }

    pub fn speeds(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.v).collect()
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Elapsed time between the first and last sample.
    pub fn duration(&self) -> f64 {
        self.samples[self.samples.len() - 1].t - self.samples[0].t
    }

    /// Distance covered, by trapezoidal integration of speed.
    pub fn distance(&self) -> f64 {
        let dt = self.dt();
        self.samples
            .windows(2)
            .map(|w| 0.5 * (w[0].v + w[1].v) * dt)
            .sum()
    }

    /// Same timestamps, new speeds. Speeds below zero are clamped.
    pub(crate) fn with_speeds(&self, speeds: &[f64]) -> Self {
        debug_assert_eq!(speeds.len(), self.samples.len());
        let samples = self
            .samples
            .iter()
            .zip(speeds)
            .map(|(s, &v)| SpeedSample { t: s.t, v: v.max(0.0) })
            .collect();
        Self {
            samples,
            sample_rate: self.sample_rate,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_short_and_non_monotone() {
        assert!(SpeedProfile::from_speeds(&[1.0], 10.0).is_err());
        let bad = vec![
            SpeedSample { t: 0.0, v: 1.0 },
            SpeedSample { t: 0.1, v: 1.0 },
            SpeedSample { t: 0.1, v: 1.0 },
        ];
        assert!(SpeedProfile::new(bad).is_err());
    }

    #[test]
    fn rejects_uneven_spacing_and_negative_speed() {
        let uneven = vec![
            SpeedSample { t: 0.0, v: 1.0 },
            SpeedSample { t: 0.1, v: 1.0 },
            SpeedSample { t: 0.25, v: 1.0 },
        ];
        assert!(SpeedProfile::new(uneven).is_err());
        assert!(SpeedProfile::from_speeds(&[1.0, -0.5], 10.0).is_err());
    }

    #[test]
    fn hundred_hertz_timestamps_pass_spacing_check() {
        let p = SpeedProfile::from_speeds(&vec![3.0; 6000], 100.0).unwrap();
        assert_eq!(p.len(), 6000);
        assert!((p.duration() - 59.99).abs() < 1e-9);
        assert!((p.distance() - 3.0 * 59.99).abs() < 1e-9);
    }
}
