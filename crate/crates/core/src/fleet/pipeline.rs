//! filter -> energy graph -> routes -> charge schedule -> degradation.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{EnergySource, LoadedConfig, RoadGraphFile, SolverKind, TimeModelSpec};
use super::gps::{apply_filter, ingest_gps, synth_gps};
use super::FleetError;
use crate::energy::{
    build_energy_graph, rms_error, EnergyGraph, NamedMatrix, RoadGraph, SpeedProfile, TimeModel,
};
use crate::evrp::{solve_exact, solve_insertion_heuristic, EvrpInstance, EvrpSolution, ExactLimits};
use crate::schedule::{
    de_optimize, DeParams, DeResult, RouteTask, SchedulingInstance, Station, Vehicle,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Energy,
    Routing,
    Schedule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSummary {
    pub from: String,
    pub to: String,
    pub samples: usize,
    pub duration_s: f64,
    pub distance_m: f64,
    /// RMS change the filter made to the raw speeds (m/s).
    pub filter_rms_mps: f64,
    pub energy_kwh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyStage {
    pub from_dynamics: bool,
    pub graph: EnergyGraph,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edges: Vec<EdgeSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingStage {
    pub instance: EvrpInstance,
    pub solution: EvrpSolution,
    /// Fares collected if every request is served; not optimised.
    pub revenue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleStage {
    pub instance: SchedulingInstance,
    pub de: DeParams,
    pub result: DeResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub seed: u64,
    /// SHA-256 over the effective config and every file it references.
    pub config_hash: String,
    pub energy: Option<EnergyStage>,
    pub routing: Option<RoutingStage>,
    pub schedule: Option<ScheduleStage>,
    /// Wall clock; never written to report files.
    #[serde(skip)]
    pub timings: Vec<StageTiming>,
}

impl RunReport {
    pub fn empty(scenario: impl Into<String>, seed: u64) -> Self {
        Self {
            scenario: scenario.into(),
            seed,
            config_hash: String::new(),
            energy: None,
            routing: None,
            schedule: None,
            timings: Vec::new(),
        }
    }
}

pub fn config_hash(cfg: &LoadedConfig) -> Result<String, FleetError> {
    let mut h = Sha256::new();
    let json = serde_json::to_vec(&cfg.config).map_err(|e| FleetError::Config(e.to_string()))?;
    h.update((json.len() as u64).to_le_bytes());
    h.update(&json);
    for p in cfg.referenced_files()? {
        let bytes = cfg.read(&p)?;
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    Ok(hex::encode(h.finalize()))
}

pub fn run_scenario(cfg: &LoadedConfig) -> Result<RunReport, FleetError> {
    run_until(cfg, Stage::Schedule)
}

/// Runs stages in order and stops after `last`.
pub fn run_until(cfg: &LoadedConfig, last: Stage) -> Result<RunReport, FleetError> {
    let c = &cfg.config;
    let mut report = RunReport::empty(c.name.clone(), c.seed);
    report.config_hash = config_hash(cfg)?;
    let mut clock = Instant::now();
    let mut lap = |report: &mut RunReport, stage: &str| {
        let d: Duration = clock.elapsed();
        report.timings.push(StageTiming {
            stage: stage.to_string(),
            seconds: d.as_secs_f64(),
        });
        log::info!("{}: {stage} took {:.3} s", c.name, d.as_secs_f64());
        clock = Instant::now();
    };

    let energy = energy_stage(cfg)?;
    lap(&mut report, "energy");
    let graph = energy.graph.clone();
    report.energy = Some(energy);
    if last == Stage::Energy {
        return Ok(report);
    }

    let routing = routing_stage(cfg, graph.clone())?;
    lap(&mut report, "routing");
    report.routing = Some(routing);
    if last == Stage::Routing {
        return Ok(report);
    }

    let routing = report.routing.as_ref().expect("routing stage ran");
    let instance = scheduling_instance(cfg, &graph, routing)?;
    let mut de = c.de.clone();
    de.seed = c.seed;
    let result = de_optimize(&instance, &de).map_err(|e| FleetError::stage("schedule", e))?;
    lap(&mut report, "schedule");
    report.schedule = Some(ScheduleStage {
        instance,
        de,
        result,
    });
    Ok(report)
}

fn edge_profile(cfg: &LoadedConfig, graph_dir: &std::path::Path, e: &super::config::EdgeSpec) -> Result<SpeedProfile, FleetError> {
    match (&e.profile_file, &e.synth) {
        (Some(p), None) => {
            let full = if p.is_absolute() { p.clone() } else { graph_dir.join(p) };
            ingest_gps(&full).map_err(|err| FleetError::stage("ingest", err))
        }
        (None, Some(spec)) => synth_gps(spec).map_err(|err| FleetError::stage("ingest", err)),
        _ => Err(FleetError::Config(format!(
            "edge {} -> {} needs exactly one of profile_file or synth ({})",
            e.from,
            e.to,
            cfg.base_dir.display()
        ))),
    }
}

pub fn energy_stage(cfg: &LoadedConfig) -> Result<EnergyStage, FleetError> {
    let st = |e| FleetError::stage("energy", e);
    match &cfg.config.energy {
        EnergySource::Tables {
            energy_kwh,
            distance_km,
            speed_kmh,
        } => {
            let e = NamedMatrix::from_path(&cfg.resolve(energy_kwh)).map_err(st)?;
            let d = NamedMatrix::from_path(&cfg.resolve(distance_km)).map_err(st)?;
            if e.names != d.names {
                return Err(FleetError::stage(
                    "energy",
                    "energy and distance tables list different nodes",
                ));
            }
            Ok(EnergyStage {
                from_dynamics: false,
                graph: EnergyGraph::from_tables(e, &d, *speed_kmh).map_err(st)?,
                edges: Vec::new(),
            })
        }
        EnergySource::RoadGraph {
            graph,
            nodes,
            filter,
            time_model,
        } => {
            let file: RoadGraphFile = cfg.read_json(graph)?;
            let graph_dir = cfg
                .resolve(graph)
                .parent()
                .map(std::path::Path::to_path_buf)
                .unwrap_or_default();
            let mut edges = Vec::with_capacity(file.edges.len());
            let mut deltas = Vec::with_capacity(file.edges.len());
            for e in &file.edges {
                let raw = edge_profile(cfg, &graph_dir, e)?;
                let smooth = apply_filter(&raw, filter).map_err(|err| FleetError::stage("filter", err))?;
                deltas.push(rms_error(&raw.speeds(), &smooth.speeds()));
                edges.push((e.from.clone(), e.to.clone(), smooth));
            }
            let road = RoadGraph::new(file.vertices, edges).map_err(st)?;
            let params = cfg.vehicle()?;
            let clamp = cfg.config.flags.clamp_regen;
            let weights = road.edge_energies(&params, clamp).map_err(st)?;
            let summaries = road
                .edges()
                .iter()
                .zip(weights)
                .zip(deltas)
                .map(|((e, w), d)| EdgeSummary {
                    from: road.vertices()[e.from].id.clone(),
                    to: road.vertices()[e.to].id.clone(),
                    samples: e.profile.len(),
                    duration_s: e.profile.duration(),
                    distance_m: e.profile.distance(),
                    filter_rms_mps: d,
                    energy_kwh: w,
                })
                .collect();
            let tm = match time_model {
                TimeModelSpec::ProfileDurations => TimeModel::ProfileDurations,
                TimeModelSpec::AverageSpeed { kmh } => TimeModel::AverageSpeed { mps: kmh / 3.6 },
            };
            let names: Vec<&str> = nodes.iter().map(String::as_str).collect();
            Ok(EnergyStage {
                from_dynamics: true,
                graph: build_energy_graph(&road, &params, &names, tm, clamp).map_err(st)?,
                edges: summaries,
            })
        }
    }
}

pub fn routing_stage(cfg: &LoadedConfig, graph: EnergyGraph) -> Result<RoutingStage, FleetError> {
    let c = &cfg.config;
    let r = &c.routing;
    let demand = cfg.demand()?;
    let instance = EvrpInstance {
        graph,
        depot_start: r.depot.clone(),
        depot_end: r.depot.clone(),
        requests: demand.requests(),
        capacity: r.capacity,
        battery_kwh: c.fleet.soc_max_kwh,
        e_min_kwh: c.fleet.soc_min_kwh,
        big_m: r.big_m,
        max_routes: r.max_routes,
        dwell_s: r.dwell_s,
        stations: Vec::new(),
        allow_station_stops: false,
    };
    let solution = match r.solver {
        SolverKind::Exact => solve_exact(
            &instance,
            ExactLimits {
                node_limit: r.node_limit,
                time_limit: Duration::from_secs_f64(r.time_limit_s),
            },
        ),
        SolverKind::Heuristic => solve_insertion_heuristic(&instance, c.seed),
    }
    .map_err(|e| FleetError::stage("routing", e))?;
    Ok(RoutingStage {
        instance,
        solution,
        revenue: demand.expected_revenue(),
    })
}

/// Routes become fixed tasks on the scheduling horizon. Route clocks run
/// from the demand's horizon start; they are shifted onto the schedule's.
pub fn scheduling_instance(
    cfg: &LoadedConfig,
    graph: &EnergyGraph,
    routing: &RoutingStage,
) -> Result<SchedulingInstance, FleetError> {
    let c = &cfg.config;
    let st = |e| FleetError::stage("schedule", e);
    let horizon = c.horizon;
    let demand = cfg.demand()?;
    let shift = (demand.horizon_start_hour - horizon.start_hour) * 3600.0;
    let tasks = routing
        .solution
        .routes
        .iter()
        .enumerate()
        .map(|(s, r)| {
            RouteTask::from_times(
                format!("route {}", s + 1),
                r.depart_s + shift,
                r.end_s + shift,
                r.energy_kwh,
                &horizon,
            )
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(st)?;
    let depot = graph
        .index_of(&c.routing.depot)
        .ok_or_else(|| FleetError::stage("schedule", format!("unknown depot {}", c.routing.depot)))?;
    let mut stations = Vec::with_capacity(c.stations.len());
    for s in &c.stations {
        let reroute_kwh = match (s.reroute_kwh, &s.location) {
            (Some(e), _) => e,
            (None, Some(loc)) => {
                let x = graph.index_of(loc).ok_or_else(|| {
                    FleetError::stage("schedule", format!("station {} at unknown node {loc}", s.id))
                })?;
                if s.reroute_intervals == 0 {
                    0.0
                } else {
                    graph.energy(depot, x) + graph.energy(x, depot)
                }
            }
            (None, None) => 0.0,
        };
        stations.push(Station {
            id: s.id.clone(),
            rate_kw: s.rate_kw,
            efficiency: s.efficiency,
            tariff: s.tariff.series(&horizon)?,
            availability: s.availability.series(&horizon)?,
            reroute_intervals: s.reroute_intervals,
            reroute_kwh,
            allow_discharge: s.allow_discharge,
        });
    }
    let vehicles = (0..c.fleet.vehicles)
        .map(|k| Vehicle {
            id: format!("EV{}", k + 1),
            battery_kwh: c.fleet.battery_kwh,
            soc_min_kwh: c.fleet.soc_min_kwh,
            soc_max_kwh: c.fleet.soc_max_kwh,
        })
        .collect();
    let inst = SchedulingInstance {
        horizon,
        vehicles,
        stations,
        tasks,
        allow_discharge: c.flags.allow_discharge,
        use_degradation: c.flags.use_degradation,
        degradation: c.degradation.clone(),
        soc_end_tolerance_kwh: c.soc_end_tolerance_kwh,
    };
    inst.validate().map_err(st)?;
    Ok(inst)
}
