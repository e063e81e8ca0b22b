//! Scenario files. Relative paths resolve against the config file's
//! directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::demand::DemandSpec;
use super::gps::{FilterSpec, SynthSpec};
use super::FleetError;
use crate::degradation::DegradationParams;
use crate::energy::VehicleParams;
use crate::schedule::{DeParams, Horizon};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub seed: u64,
    #[serde(default)]
    pub description: String,
    pub vehicle: VehicleSource,
    pub energy: EnergySource,
    pub routing: RoutingConfig,
    pub fleet: FleetSpec,
    pub horizon: Horizon,
    pub stations: Vec<StationSpec>,
    #[serde(default)]
    pub flags: Flags,
    #[serde(default)]
    pub degradation: DegradationParams,
    #[serde(default)]
    pub de: DeParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soc_end_tolerance_kwh: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VehicleSource {
    File(PathBuf),
    Inline(VehicleParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnergySource {
    /// Precomputed energy matrix plus distances driven at a fixed speed;
    /// skips the dynamics stage.
    Tables {
        energy_kwh: PathBuf,
        distance_km: PathBuf,
        speed_kmh: f64,
    },
    /// Road graph with per-edge speed profiles, condensed over `nodes`.
    RoadGraph {
        graph: PathBuf,
        nodes: Vec<String>,
        #[serde(default)]
        filter: FilterSpec,
        #[serde(default)]
        time_model: TimeModelSpec,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeModelSpec {
    #[default]
    ProfileDurations,
    AverageSpeed { kmh: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadGraphFile {
    pub vertices: Vec<crate::energy::RoadVertex>,
    pub edges: Vec<EdgeSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub from: String,
    pub to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    #[default]
    Exact,
    Heuristic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoutingConfig {
    pub depot: String,
    pub demand: PathBuf,
    pub capacity: u32,
    #[serde(default = "default_big_m")]
    pub big_m: f64,
    #[serde(default)]
    pub dwell_s: f64,
    #[serde(default)]
    pub solver: SolverKind,
    #[serde(default = "default_node_limit")]
    pub node_limit: u64,
    #[serde(default = "default_time_limit")]
    pub time_limit_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_routes: Option<usize>,
}

fn default_big_m() -> f64 {
    1.0e6
}

fn default_node_limit() -> u64 {
    50_000_000
}

fn default_time_limit() -> f64 {
    60.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FleetSpec {
    pub vehicles: usize,
    pub battery_kwh: f64,
    pub soc_min_kwh: f64,
    pub soc_max_kwh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TariffSpec {
    Series(Vec<f64>),
    TwoLevel {
        day: f64,
        night: f64,
        night_start_hour: f64,
        night_end_hour: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AvailabilitySpec {
    Constant(u32),
    Series(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationSpec {
    pub id: String,
    pub rate_kw: f64,
    pub efficiency: f64,
    pub tariff: TariffSpec,
    pub availability: AvailabilitySpec,
    /// Graph node of a remote station; its round trip from the depot sets
    /// the reroute energy unless `reroute_kwh` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
    #[serde(default)]
    pub reroute_intervals: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reroute_kwh: Option<f64>,
    #[serde(default)]
    pub allow_discharge: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Flags {
    pub use_degradation: bool,
    pub allow_discharge: bool,
    pub clamp_regen: bool,
}

impl TariffSpec {
    /// Per-interval price. Night membership is decided at the interval
    /// midpoint; the night span may wrap midnight.
    pub fn series(&self, horizon: &Horizon) -> Result<Vec<f64>, FleetError> {
        let n = horizon.intervals;
        match self {
            TariffSpec::Series(v) if v.len() == n => Ok(v.clone()),
            TariffSpec::Series(v) => Err(FleetError::Config(format!(
                "tariff has {} entries, horizon has {n} intervals",
                v.len()
            ))),
            TariffSpec::TwoLevel {
                day,
                night,
                night_start_hour,
                night_end_hour,
            } => Ok((0..n)
                .map(|i| {
                    let h = (horizon.start_hour + (i as f64 + 0.5) * horizon.interval_hours())
                        .rem_euclid(24.0);
                    let is_night = if night_start_hour <= night_end_hour {
                        h >= *night_start_hour && h < *night_end_hour
                    } else {
                        h >= *night_start_hour || h < *night_end_hour
                    };
                    if is_night {
                        *night
                    } else {
                        *day
                    }
                })
                .collect()),
        }
    }
}

impl AvailabilitySpec {
    pub fn series(&self, horizon: &Horizon) -> Result<Vec<u32>, FleetError> {
        let n = horizon.intervals;
        match self {
            AvailabilitySpec::Constant(c) => Ok(vec![*c; n]),
            AvailabilitySpec::Series(v) if v.len() == n => Ok(v.clone()),
            AvailabilitySpec::Series(v) => Err(FleetError::Config(format!(
                "availability has {} entries, horizon has {n} intervals",
                v.len()
            ))),
        }
    }
}

/// A parsed config and the directory its relative paths hang off.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub config: ScenarioConfig,
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn read(&self, p: &Path) -> Result<Vec<u8>, FleetError> {
        let full = self.resolve(p);
        std::fs::read(&full).map_err(|e| FleetError::Config(format!("{}: {e}", full.display())))
    }

    pub fn read_json<T: serde::de::DeserializeOwned>(&self, p: &Path) -> Result<T, FleetError> {
        let bytes = self.read(p)?;
        serde_json::from_slice(&bytes)
            .map_err(|e| FleetError::Config(format!("{}: {e}", self.resolve(p).display())))
    }

    pub fn vehicle(&self) -> Result<VehicleParams, FleetError> {
        match &self.config.vehicle {
            VehicleSource::Inline(v) => Ok(*v),
            VehicleSource::File(p) => self.read_json(p),
        }
    }

    pub fn demand(&self) -> Result<DemandSpec, FleetError> {
        self.read_json(&self.config.routing.demand)
    }

    /// Every file the config references, in a fixed order.
    pub fn referenced_files(&self) -> Result<Vec<PathBuf>, FleetError> {
        let c = &self.config;
        let mut out = Vec::new();
        if let VehicleSource::File(p) = &c.vehicle {
            out.push(p.clone());
        }
        match &c.energy {
            EnergySource::Tables {
                energy_kwh,
                distance_km,
                ..
            } => {
                out.push(energy_kwh.clone());
                out.push(distance_km.clone());
            }
            EnergySource::RoadGraph { graph, .. } => {
                out.push(graph.clone());
                let file: RoadGraphFile = self.read_json(graph)?;
                let graph_dir = graph.parent().map(Path::to_path_buf).unwrap_or_default();
                for e in file.edges {
                    if let Some(p) = e.profile_file {
                        out.push(if p.is_absolute() { p } else { graph_dir.join(p) });
                    }
                }
            }
        }
        out.push(c.routing.demand.clone());
        Ok(out)
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<LoadedConfig, FleetError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| FleetError::Config(format!("{}: {e}", path.display())))?;
        let config: ScenarioConfig = serde_json::from_str(&text)
            .map_err(|e| FleetError::Config(format!("{}: {e}", path.display())))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let loaded = LoadedConfig { config, base_dir };
        loaded.validate()?;
        Ok(loaded)
    }
}

impl LoadedConfig {
    /// Files exist and parse; numeric fields are in range.
    pub fn validate(&self) -> Result<(), FleetError> {
        let c = &self.config;
        for p in self.referenced_files()? {
            let full = self.resolve(&p);
            if !full.is_file() {
                return Err(FleetError::Config(format!("missing file {}", full.display())));
            }
        }
        self.vehicle()?
            .validate()
            .map_err(|e| FleetError::Config(e.to_string()))?;
        self.demand()?;
        c.horizon
            .validate()
            .map_err(|e| FleetError::Config(e.to_string()))?;
        if c.fleet.vehicles == 0 {
            return Err(FleetError::Config("fleet needs at least one vehicle".into()));
        }
        if c.stations.is_empty() {
            return Err(FleetError::Config("at least one station is required".into()));
        }
        for s in &c.stations {
            s.tariff.series(&c.horizon)?;
            s.availability.series(&c.horizon)?;
        }
        if !(c.routing.time_limit_s > 0.0) {
            return Err(FleetError::Config("routing.time_limit_s must be positive".into()));
        }
        Ok(())
    }
}
