//! Report files. Every CSV is written even when its stage did not run, so
//! the file set is fixed:
//!
//! | file | columns |
//! |------|---------|
//! | `solution.json` | the whole [`RunReport`] minus timings |
//! | `routes.csv` | route, depart_s, end_s, depart_clock, energy_kwh, path |
//! | `assignment.csv` | route, vehicle, start_interval, end_interval, energy_kwh |
//! | `soc_trace.csv` | vehicle, boundary, clock, soc_kwh |
//! | `actions.csv` | vehicle, interval, clock, action, station, route, tariff |
//! | `cost_breakdown.csv` | one row per vehicle plus a `fleet` row |
//! | `convergence.csv` | generation, best_objective |
//! | `energy_matrix.csv` | energy graph in the matrix CSV layout (when computed) |
//! | `summary.txt` | human-readable digest |

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::pipeline::RunReport;
use super::FleetError;
use crate::schedule::{check_schedule, simulate_soc, Action, SocTrace};

pub const ROUTES_HEADER: &str = "route,depart_s,end_s,depart_clock,energy_kwh,path";
pub const ASSIGNMENT_HEADER: &str = "route,vehicle,start_interval,end_interval,energy_kwh";
pub const SOC_HEADER: &str = "vehicle,boundary,clock,soc_kwh";
pub const ACTIONS_HEADER: &str = "vehicle,interval,clock,action,station,route,tariff";
pub const COST_HEADER: &str = "scope,tariff,degradation,objective,charged_kwh,discharged_kwh,route_kwh,reroute_kwh,loss_temperature,loss_soc,loss_dod,subcycles,mean_dod,implied_cycle_life";
pub const CONVERGENCE_HEADER: &str = "generation,best_objective";

fn io(path: &Path, e: std::io::Error) -> FleetError {
    FleetError::Io(format!("{}: {e}", path.display()))
}

fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn clock_of(seconds: f64, start_hour: f64) -> String {
    let total = (start_hour * 3600.0 + seconds).rem_euclid(86_400.0).round() as i64;
    format!("{:02}:{:02}:{:02}", total / 3600 % 24, total / 60 % 60, total % 60)
}

/// Rendered file contents, by file name, in write order.
pub fn render(report: &RunReport) -> Result<Vec<(String, String)>, FleetError> {
    let mut files = Vec::new();
    let json = serde_json::to_string_pretty(report).map_err(|e| FleetError::stage("report", e))?;
    files.push(("solution.json".to_string(), json + "\n"));

    let sched = report.schedule.as_ref();
    let start_hour = sched.map_or(7.0, |s| s.instance.horizon.start_hour);

    let mut routes = format!("{ROUTES_HEADER}\n");
    if let Some(r) = &report.routing {
        for (s, route) in r.solution.routes.iter().enumerate() {
            let path: Vec<&str> = route.visits.iter().map(|v| v.location.as_str()).collect();
            writeln!(
                routes,
                "{},{},{},{},{},{}",
                s + 1,
                route.depart_s,
                route.end_s,
                clock_of(route.depart_s, start_hour),
                route.energy_kwh,
                csv_cell(&path.join(" > "))
            )
            .expect("string write");
        }
    }
    files.push(("routes.csv".into(), routes));

    let trace: Option<SocTrace> = match sched {
        Some(s) => Some(
            simulate_soc(&s.instance, &s.result.best).map_err(|e| FleetError::stage("report", e))?,
        ),
        None => None,
    };

    let mut assignment = format!("{ASSIGNMENT_HEADER}\n");
    let mut soc = format!("{SOC_HEADER}\n");
    let mut actions = format!("{ACTIONS_HEADER}\n");
    let mut cost = format!("{COST_HEADER}\n");
    let mut convergence = format!("{CONVERGENCE_HEADER}\n");
    if let (Some(s), Some(trace)) = (sched, &trace) {
        let inst = &s.instance;
        let best = &s.result.best;
        let h = &inst.horizon;
        let owners = best.owners();
        for (t, task) in inst.tasks.iter().enumerate() {
            let v = owners[t].map_or(String::new(), |k| inst.vehicles[k].id.clone());
            writeln!(
                assignment,
                "{},{},{},{},{}",
                csv_cell(&task.id),
                csv_cell(&v),
                task.start,
                task.end,
                task.total_kwh()
            )
            .expect("string write");
        }
        for (k, vt) in trace.vehicles.iter().enumerate() {
            let id = csv_cell(&inst.vehicles[k].id);
            for (i, x) in vt.soc.iter().enumerate() {
                writeln!(soc, "{id},{i},{},{x}", h.clock(i)).expect("string write");
            }
            for (i, a) in best.actions[k].iter().enumerate() {
                let route = best
                    .routes_of(k)
                    .into_iter()
                    .find(|&t| inst.tasks[t].start <= i && i <= inst.tasks[t].end)
                    .map_or(String::new(), |t| csv_cell(&inst.tasks[t].id));
                let (kind, station, tariff) = match *a {
                    Action::Idle => ("idle", String::new(), String::new()),
                    Action::Charge(x) => (
                        "charge",
                        csv_cell(&inst.stations[x].id),
                        inst.stations[x].tariff[i].to_string(),
                    ),
                    Action::Discharge(x) => (
                        "discharge",
                        csv_cell(&inst.stations[x].id),
                        inst.stations[x].tariff[i].to_string(),
                    ),
                };
                writeln!(actions, "{id},{i},{},{kind},{station},{route},{tariff}", h.clock(i))
                    .expect("string write");
            }
        }
        let c = &s.result.cost;
        for (k, vt) in trace.vehicles.iter().enumerate() {
            let tariff: f64 = best.actions[k]
                .iter()
                .enumerate()
                .map(|(i, a)| match *a {
                    Action::Charge(x) => inst.stations[x].tariff[i],
                    Action::Discharge(x) => -inst.stations[x].tariff[i],
                    Action::Idle => 0.0,
                })
                .sum();
            let (deg, lt, ls, ld, n, dod, life) = match c.per_vehicle.get(k) {
                Some(r) => (
                    r.cost.to_string(),
                    r.loss_temperature.to_string(),
                    r.loss_soc.to_string(),
                    r.loss_dod.to_string(),
                    r.cycles.count().to_string(),
                    r.cycles.average().to_string(),
                    r.implied_cycle_life().map_or(String::new(), |x| x.to_string()),
                ),
                None => Default::default(),
            };
            writeln!(
                cost,
                "{},{tariff},{deg},,{},{},{},{},{lt},{ls},{ld},{n},{dod},{life}",
                csv_cell(&inst.vehicles[k].id),
                vt.charged_kwh,
                vt.discharged_kwh,
                vt.route_kwh,
                vt.reroute_kwh
            )
            .expect("string write");
        }
        let sum = |f: fn(&crate::schedule::VehicleTrace) -> f64| -> f64 { trace.vehicles.iter().map(f).sum() };
        let subcycles: usize = c.per_vehicle.iter().map(|r| r.cycles.count()).sum();
        let loss = |f: fn(&crate::degradation::DegradationReport) -> f64| -> f64 {
            c.per_vehicle.iter().map(f).sum()
        };
        let fleet_ld = loss(|r| r.loss_dod);
        let fleet_life = if fleet_ld > 0.0 && !c.per_vehicle.is_empty() {
            (c.per_vehicle.len() as f64 / fleet_ld).to_string()
        } else {
            String::new()
        };
        writeln!(
            cost,
            "fleet,{},{},{},{},{},{},{},{},{},{fleet_ld},{subcycles},{},{fleet_life}",
            c.tariff,
            c.degradation,
            c.objective,
            sum(|v| v.charged_kwh),
            sum(|v| v.discharged_kwh),
            sum(|v| v.route_kwh),
            sum(|v| v.reroute_kwh),
            loss(|r| r.loss_temperature),
            loss(|r| r.loss_soc),
            c.mean_dod()
        )
        .expect("string write");
        for (g, f) in s.result.convergence.iter().enumerate() {
            writeln!(convergence, "{g},{f}").expect("string write");
        }
    }
    files.push(("assignment.csv".into(), assignment));
    files.push(("soc_trace.csv".into(), soc));
    files.push(("actions.csv".into(), actions));
    files.push(("cost_breakdown.csv".into(), cost));
    files.push(("convergence.csv".into(), convergence));

    if let Some(e) = &report.energy {
        let mut buf = Vec::new();
        e.graph
            .energy_matrix()
            .write_csv(&mut buf)
            .map_err(|err| FleetError::stage("report", err))?;
        files.push((
            "energy_matrix.csv".into(),
            String::from_utf8(buf).expect("csv is utf-8"),
        ));
    }

    files.push(("summary.txt".into(), summary(report, trace.as_ref())?));
    Ok(files)
}

fn summary(report: &RunReport, trace: Option<&SocTrace>) -> Result<String, FleetError> {
    let mut out = String::new();
    let w = &mut out;
    writeln!(w, "scenario: {}", report.scenario).expect("string write");
    writeln!(w, "seed: {}", report.seed).expect("string write");
    writeln!(w, "config sha256: {}", report.config_hash).expect("string write");
    match &report.energy {
        Some(e) => writeln!(
            w,
            "energy: {} nodes, {}",
            e.graph.len(),
            if e.from_dynamics {
                format!("dynamics over {} road edges", e.edges.len())
            } else {
                "precomputed table".to_string()
            }
        ),
        None => writeln!(w, "energy: not run"),
    }
    .expect("string write");
    match &report.routing {
        Some(r) => {
            let s = &r.solution;
            writeln!(
                w,
                "routing: {} requests, {} routes, {:.4} kWh total, status {:?}, {} nodes",
                r.instance.requests.len(),
                s.routes.len(),
                s.total_energy_kwh,
                s.status,
                s.nodes_explored
            )
            .expect("string write");
            writeln!(w, "fares if all requests served: {:.2}", r.revenue).expect("string write");
        }
        None => writeln!(w, "routing: not run").expect("string write"),
    }
    match (&report.schedule, trace) {
        (Some(s), Some(trace)) => {
            let c = &s.result.cost;
            let violations = check_schedule(&s.result.best, &s.instance)
                .map_err(|e| FleetError::stage("report", e))?;
            writeln!(
                w,
                "schedule: {} vehicles, {} stations, {} intervals of {} s",
                s.instance.vehicles.len(),
                s.instance.stations.len(),
                s.instance.horizon.intervals,
                s.instance.horizon.interval_s
            )
            .expect("string write");
            writeln!(
                w,
                "de: population {}, {} bits, {} generations, {} evaluations, greedy start kept: {}",
                s.result.population,
                s.result.vector_len,
                s.de.generations,
                s.result.evaluations,
                s.result.greedy_won
            )
            .expect("string write");
            writeln!(
                w,
                "cost: objective {:.6}, tariff {:.6}, degradation {:.6} (in objective: {})",
                c.objective, c.tariff, c.degradation, s.instance.use_degradation
            )
            .expect("string write");
            writeln!(w, "mean subcycle DOD: {:.6}", c.mean_dod()).expect("string write");
            for (k, vt) in trace.vehicles.iter().enumerate() {
                let r = c.per_vehicle.get(k);
                writeln!(
                    w,
                    "  {}: charged {:.3} kWh, discharged {:.3} kWh, routes {:.3} kWh, reroutes {:.3} kWh, subcycles {}, cycle life {}",
                    s.instance.vehicles[k].id,
                    vt.charged_kwh,
                    vt.discharged_kwh,
                    vt.route_kwh,
                    vt.reroute_kwh,
                    r.map_or(0, |r| r.cycles.count()),
                    r.and_then(|r| r.implied_cycle_life())
                        .map_or("n/a".to_string(), |x| format!("{x:.0}"))
                )
                .expect("string write");
            }
            writeln!(w, "constraint violations: {}", violations.len()).expect("string write");
        }
        _ => writeln!(w, "schedule: not run").expect("string write"),
    }
    Ok(out)
}

pub fn emit_report(report: &RunReport, out_dir: &Path) -> Result<Vec<std::path::PathBuf>, FleetError> {
    fs::create_dir_all(out_dir).map_err(|e| io(out_dir, e))?;
    let mut written = Vec::new();
    for (name, body) in render(report)? {
        let path = out_dir.join(&name);
        fs::write(&path, body).map_err(|e| io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

/// Reads back a `solution.json`.
pub fn load_report(path: &Path) -> Result<RunReport, FleetError> {
    let text = fs::read_to_string(path).map_err(|e| io(path, e))?;
    serde_json::from_str(&text).map_err(|e| FleetError::stage("report", format!("{}: {e}", path.display())))
}
