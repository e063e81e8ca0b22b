//! Speed-profile conditioning: Savitzky-Golay smoothing (default) and a
//! scalar Kalman filter kept as a comparison baseline.

use nalgebra::DMatrix;

use super::{EnergyError, SpeedProfile};

/// Least-squares convolution weights that evaluate a degree-`order` fit of
/// a `window`-point block at position `eval` (0-based inside the block).
fn fit_weights(window: usize, order: usize, eval: usize) -> Result<Vec<f64>, EnergyError> {
    let half = (window / 2) as f64;
    let scale = if half > 0.0 { half } else { 1.0 };
    let x = |j: usize| (j as f64 - half) / scale;
    let vander = DMatrix::from_fn(window, order + 1, |r, c| x(r).powi(c as i32));
    let gram = vander.transpose() * &vander;
    let inv = gram
        .try_inverse()
        .ok_or_else(|| EnergyError::Parameter("singular Savitzky-Golay design".into()))?;
    let proj = inv * vander.transpose();
    let x0 = x(eval);
    Ok((0..window)
        .map(|j| {
            (0..=order)
                .map(|k| x0.powi(k as i32) * proj[(k, j)])
                .sum::<f64>()
        })
        .collect())
}

/// Savitzky-Golay smoothing with a centred `window`-sample block and a
/// polynomial of degree `poly_order`.
///
/// Samples closer than half a window to either end are evaluated from the
/// fit over the first (or last) full window, so polynomial signals of
/// degree `<= poly_order` are reproduced everywhere. Negative smoothed
/// speeds are clamped to zero.
pub fn savitzky_golay(
    profile: &SpeedProfile,
    window: usize,
    poly_order: usize,
) -> Result<SpeedProfile, EnergyError> {
    let n = profile.len();
    if window % 2 == 0 {
        return Err(EnergyError::Parameter(format!("window {window} must be odd")));
    }
    if window <= poly_order {
        return Err(EnergyError::Parameter(format!(
            "window {window} must exceed polynomial order {poly_order}"
        )));
    }
    if window > n {
        return Err(EnergyError::Parameter(format!(
            "window {window} longer than profile ({n} samples)"
        )));
    }
    let half = window / 2;
    let v = profile.speeds();
    let centre = fit_weights(window, poly_order, half)?;
    let mut out = vec![0.0; n];
    for (i, slot) in out.iter_mut().enumerate().take(n - half).skip(half) {
        *slot = centre
            .iter()
            .zip(&v[i - half..=i + half])
            .map(|(w, x)| w * x)
            .sum();
    }
    for i in 0..half {
        let w = fit_weights(window, poly_order, i)?;
        out[i] = w.iter().zip(&v[..window]).map(|(w, x)| w * x).sum();
        let tail = n - window;
        let wt = fit_weights(window, poly_order, window - half + i)?;
        out[n - half + i] = wt.iter().zip(&v[tail..]).map(|(w, x)| w * x).sum();
    }
    Ok(profile.with_speeds(&out))
}

/// Scalar Kalman filter on speed with a constant-velocity process model.
///
/// Between samples the speed is held constant; acceleration enters as white
/// process noise of variance `process_var` ((m/s²)²), so the per-step state
/// variance grows by `process_var * dt²`. Measurements carry variance
/// `meas_var` ((m/s)²).
pub fn kalman_smooth(
    profile: &SpeedProfile,
    process_var: f64,
    meas_var: f64,
) -> Result<SpeedProfile, EnergyError> {
    if !(process_var > 0.0 && process_var.is_finite()) {
        return Err(EnergyError::Parameter(format!(
            "process variance must be positive, got {process_var}"
        )));
    }
    if !(meas_var > 0.0 && meas_var.is_finite()) {
        return Err(EnergyError::Parameter(format!(
            "measurement variance must be positive, got {meas_var}"
        )));
    }
    let dt = profile.dt();
    let q = process_var * dt * dt;
    let v = profile.speeds();
    let mut out = Vec::with_capacity(v.len());
    let mut x = v[0];
    let mut p = meas_var;
    out.push(x);
    for &z in &v[1..] {
        p += q;
        let gain = p / (p + meas_var);
        x += gain * (z - x);
        p *= 1.0 - gain;
        out.push(x);
    }
    Ok(profile.with_speeds(&out))
}

/// Root-mean-square difference between two equal-length series.
pub fn rms_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "rms_error: length mismatch");
    if a.is_empty() {
        return 0.0;
    }
    let ss: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (ss / a.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn profile(v: &[f64]) -> SpeedProfile {
        SpeedProfile::from_speeds(v, 10.0).unwrap()
    }

    #[test]
    fn constant_is_fixed_point() {
        let p = profile(&[10.0; 40]);
        for (w, o) in [(5, 2), (7, 3), (21, 3), (3, 0)] {
            let out = savitzky_golay(&p, w, o).unwrap();
            for s in out.samples() {
                assert!((s.v - 10.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn ramp_is_reproduced() {
        let v: Vec<f64> = (0..30).map(|i| i as f64 / 10.0).collect();
        let out = savitzky_golay(&profile(&v), 5, 2).unwrap();
        for (a, b) in out.speeds().iter().zip(&v) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn cubic_reproduced_including_edges() {
        let v: Vec<f64> = (0..50)
            .map(|i| {
                let t = i as f64 / 10.0;
                5.0 + 2.0 * t - 0.7 * t * t + 0.1 * t * t * t
            })
            .collect();
        let out = savitzky_golay(&profile(&v), 11, 3).unwrap();
        for (a, b) in out.speeds().iter().zip(&v) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn parameter_errors() {
        let p = profile(&[1.0; 10]);
        assert!(savitzky_golay(&p, 4, 2).is_err());
        assert!(savitzky_golay(&p, 3, 3).is_err());
        assert!(savitzky_golay(&p, 11, 2).is_err());
        assert!(kalman_smooth(&p, 0.0, 1.0).is_err());
        assert!(kalman_smooth(&p, 1.0, -1.0).is_err());
    }

    #[test]
    fn negative_fit_is_clamped() {
        let mut v = vec![0.0; 21];
        v[10] = 5.0;
        let out = savitzky_golay(&profile(&v), 9, 4).unwrap();
        assert!(out.speeds().iter().all(|&x| x >= 0.0));
    }

    fn noisy_sine(seed: u64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let clean: Vec<f64> = (0..1000)
            .map(|i| 10.0 + 3.0 * (i as f64 * 0.02).sin())
            .collect();
        let noisy = clean.iter().map(|c| c + noise.sample(&mut rng)).collect();
        (clean, noisy)
    }

    #[test]
    fn savitzky_golay_reduces_noise_on_sine() {
        let (clean, noisy) = noisy_sine(17);
        let out = savitzky_golay(&profile(&noisy), 21, 3).unwrap();
        let before = rms_error(&noisy, &clean);
        let after = rms_error(&out.speeds(), &clean);
        assert!(after < before, "{after} >= {before}");
    }

    #[test]
    fn kalman_tracks_noise_free_input() {
        let p = profile(&[7.5; 30]);
        let out = kalman_smooth(&p, 1.0, 1e-12).unwrap();
        for s in &out.samples()[10..] {
            assert!((s.v - 7.5).abs() < 1e-6);
        }
    }

    #[test]
    fn kalman_rejects_single_outlier() {
        let mut v = vec![5.0; 40];
        v[20] = 50.0;
        let out = kalman_smooth(&profile(&v), 1.0, 1.0).unwrap();
        let at = out.samples()[20].v;
        assert!((at - 5.0).abs() < (at - 50.0).abs(), "filtered {at}");
    }

    #[test]
    fn kalman_reduces_noise_on_sine() {
        let (clean, noisy) = noisy_sine(17);
        let out = kalman_smooth(&profile(&noisy), 4.0, 0.25).unwrap();
        assert!(rms_error(&out.speeds(), &clean) < rms_error(&noisy, &clean));
    }
}
