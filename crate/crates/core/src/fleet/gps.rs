//! GPS speed logs: CSV ingestion and a seeded synthetic generator.

use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::FleetError;
use crate::energy::{kalman_smooth, rms_error, savitzky_golay, SpeedProfile, SpeedSample};

/// Parses a `t_s,v_mps` log. Errors name the offending line.
pub fn read_gps<R: Read>(reader: R, source: &str) -> Result<SpeedProfile, FleetError> {
    let mut csv = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let bad = |line: u64, msg: String| FleetError::Parse {
        file: source.to_string(),
        line,
        message: msg,
    };
    let header = csv.headers().map_err(|e| bad(1, e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != ["t_s", "v_mps"] {
        return Err(bad(1, format!("expected header t_s,v_mps, got {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut samples: Vec<SpeedSample> = Vec::new();
    for rec in csv.records() {
        let rec = rec.map_err(|e| bad(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize, name: &str| -> Result<f64, FleetError> {
            let cell = rec.get(i).unwrap_or_default();
            cell.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(line, format!("{name}: not a number: {cell:?}")))
        };
        let t = field(0, "t_s")?;
        let v = field(1, "v_mps")?;
        if t < 0.0 {
            return Err(bad(line, format!("negative time {t}")));
        }
        if v < 0.0 {
            return Err(bad(line, format!("negative speed {v}")));
        }
        if let Some(prev) = samples.last() {
            if t <= prev.t {
                return Err(bad(line, format!("time {t} does not increase (previous {})", prev.t)));
            }
        }
        samples.push(SpeedSample { t, v });
    }
    SpeedProfile::new(samples).map_err(|e| FleetError::Stage {
        stage: "ingest".into(),
        message: format!("{source}: {e}"),
    })
}

pub fn ingest_gps(path: &Path) -> Result<SpeedProfile, FleetError> {
    let file = std::fs::File::open(path).map_err(|e| FleetError::Io(format!("{}: {e}", path.display())))?;
    read_gps(file, &path.display().to_string())
}

pub fn write_gps<W: Write>(profile: &SpeedProfile, writer: W) -> Result<(), FleetError> {
    let mut out = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| FleetError::Io(e.to_string());
    out.write_record(["t_s", "v_mps"]).map_err(io)?;
    for s in profile.samples() {
        out.write_record([s.t.to_string(), s.v.to_string()]).map_err(io)?;
    }
    out.flush().map_err(|e| FleetError::Io(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub duration_s: f64,
    pub target_mps: f64,
    #[serde(default)]
    pub noise_sd: f64,
    /// Linear ramp from the previous target over this many seconds.
    #[serde(default)]
    pub ramp_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub segments: Vec<Segment>,
    #[serde(default = "default_rate")]
    pub rate_hz: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_rate() -> f64 {
    100.0
}

/// Noisy log and the clean target it was drawn around.
pub fn synth_gps_with_truth(spec: &SynthSpec) -> Result<(SpeedProfile, SpeedProfile), FleetError> {
    let param = |m: String| FleetError::Stage {
        stage: "synth".into(),
        message: m,
    };
    if !(spec.rate_hz > 0.0) {
        return Err(param(format!("rate must be positive, got {}", spec.rate_hz)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut clean = Vec::new();
    let mut noisy = Vec::new();
    let mut prev = spec.segments.first().map_or(0.0, |s| s.target_mps);
    for seg in &spec.segments {
        if !(seg.duration_s >= 0.0 && seg.target_mps >= 0.0 && seg.noise_sd >= 0.0 && seg.ramp_s >= 0.0) {
            return Err(param(format!("invalid segment {seg:?}")));
        }
        let noise = Normal::new(0.0, seg.noise_sd).map_err(|e| param(e.to_string()))?;
        let count = (seg.duration_s * spec.rate_hz).round() as usize;
        for k in 0..count {
            let local = k as f64 / spec.rate_hz;
            let v = if seg.ramp_s > 0.0 && local < seg.ramp_s {
                prev + (seg.target_mps - prev) * local / seg.ramp_s
            } else {
                seg.target_mps
            };
            clean.push(v);
            let n = if seg.noise_sd > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            noisy.push((v + n).max(0.0));
        }
        prev = seg.target_mps;
    }
    let wrap = |v: &[f64]| SpeedProfile::from_speeds(v, spec.rate_hz).map_err(|e| param(e.to_string()));
    Ok((wrap(&noisy)?, wrap(&clean)?))
}

pub fn synth_gps(spec: &SynthSpec) -> Result<SpeedProfile, FleetError> {
    synth_gps_with_truth(spec).map(|(noisy, _)| noisy)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum FilterSpec {
    None,
    SavitzkyGolay { window: usize, poly_order: usize },
    Kalman { process_var: f64, meas_var: f64 },
}

impl Default for FilterSpec {
    fn default() -> Self {
        FilterSpec::SavitzkyGolay {
            window: 21,
            poly_order: 3,
        }
    }
}

pub fn apply_filter(profile: &SpeedProfile, spec: &FilterSpec) -> Result<SpeedProfile, FleetError> {
    let r = match *spec {
        FilterSpec::None => Ok(profile.clone()),
        FilterSpec::SavitzkyGolay { window, poly_order } => savitzky_golay(profile, window, poly_order),
        FilterSpec::Kalman {
            process_var,
            meas_var,
        } => kalman_smooth(profile, process_var, meas_var),
    };
    r.map_err(|e| FleetError::Stage {
        stage: "filter".into(),
        message: e.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterComparison {
    pub samples: usize,
    pub raw_rms: f64,
    pub savitzky_golay_rms: f64,
    pub kalman_rms: f64,
    pub savitzky_golay: FilterSpec,
    pub kalman: FilterSpec,
}

/// RMS deviation from the clean target before and after each filter.
pub fn compare_filters(
    noisy: &SpeedProfile,
    clean: &SpeedProfile,
    sg: FilterSpec,
    kalman: FilterSpec,
) -> Result<(FilterComparison, SpeedProfile, SpeedProfile), FleetError> {
    let truth = clean.speeds();
    let a = apply_filter(noisy, &sg)?;
    let b = apply_filter(noisy, &kalman)?;
    Ok((
        FilterComparison {
            samples: noisy.len(),
            raw_rms: rms_error(&noisy.speeds(), &truth),
            savitzky_golay_rms: rms_error(&a.speeds(), &truth),
            kalman_rms: rms_error(&b.speeds(), &truth),
            savitzky_golay: sg,
            kalman,
        },
        a,
        b,
    ))
}

/// Urban drive used by the filter demo: stop, pull away, cruise, slow down.
pub fn demo_drive(seed: u64, noise_sd: f64) -> SynthSpec {
    let seg = |duration_s, target_mps, ramp_s| Segment {
        duration_s,
        target_mps,
        noise_sd,
        ramp_s,
    };
    SynthSpec {
        segments: vec![
            seg(5.0, 0.0, 0.0),
            seg(15.0, 12.0, 10.0),
            seg(20.0, 12.0, 0.0),
            seg(10.0, 6.0, 6.0),
            seg(10.0, 0.0, 8.0),
        ],
        rate_hz: 100.0,
        seed,
    }
}
