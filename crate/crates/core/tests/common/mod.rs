//! Brute-force oracles and random instance generators shared by the
//! integration tests.
#![allow(dead_code)]

use evfleet::energy::{path_energy, RoadGraph, RoadVertex, SpeedProfile, VehicleParams};
use evfleet::evrp::{
    validate_route, EvrpInstance, EvrpSolution, Route, SolveStatus, Stop, TransportRequest,
};
use evfleet::energy::EnergyGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn data_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn repo_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// Random road graph whose negative edges come from elevation, so every
/// cycle has positive energy (elevation telescopes, traction is positive).
pub fn random_road_graph(seed: u64, n: usize, density: f64) -> RoadGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vertices: Vec<RoadVertex> = (0..n)
        .map(|i| RoadVertex {
            id: format!("v{i}"),
            z_m: rng.random_range(-40.0..40.0),
        })
        .collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random_bool(density) {
                let v = rng.random_range(4.0..20.0);
                let len = rng.random_range(5..60);
                let profile = SpeedProfile::from_speeds(&vec![v; len], 1.0).unwrap();
                edges.push((format!("v{i}"), format!("v{j}"), profile));
            }
        }
    }
    RoadGraph::new(vertices, edges).unwrap()
}

/// Minimum over every simple path, by exhaustive DFS.
pub fn oracle_min_path(
    graph: &RoadGraph,
    params: &VehicleParams,
    src: &str,
    dst: &str,
) -> Option<(Vec<String>, f64)> {
    fn walk(
        graph: &RoadGraph,
        params: &VehicleParams,
        dst: usize,
        path: &mut Vec<usize>,
        best: &mut Option<(Vec<String>, f64)>,
    ) {
        let here = *path.last().unwrap();
        if here == dst {
            let ids: Vec<String> = path
                .iter()
                .map(|&i| graph.vertices()[i].id.clone())
                .collect();
            let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
            let e = path_energy(graph, params, &refs, false).unwrap();
            if best.as_ref().is_none_or(|(_, b)| e < *b) {
                *best = Some((ids, e));
            }
            return;
        }
        for edge in graph.edges() {
            if edge.from == here && !path.contains(&edge.to) {
                path.push(edge.to);
                walk(graph, params, dst, path, best);
                path.pop();
            }
        }
    }
    let s = graph.vertex_index(src)?;
    let d = graph.vertex_index(dst)?;
    let mut best = None;
    walk(graph, params, d, &mut vec![s], &mut best);
    best
}

/// Small random routing instance with at most `max_requests` requests.
pub fn random_evrp(seed: u64, max_requests: usize) -> EvrpInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_loc = rng.random_range(3..6);
    let names: Vec<String> = (0..n_loc).map(|i| format!("L{i}")).collect();
    let mut energy = vec![vec![0.0; n_loc]; n_loc];
    let mut time = vec![vec![0.0; n_loc]; n_loc];
    for i in 0..n_loc {
        for j in 0..n_loc {
            if i != j {
                energy[i][j] = (rng.random_range(-0.3..1.5f64) * 1000.0).round() / 1000.0;
                time[i][j] = rng.random_range(60..1200) as f64;
            }
        }
    }
    let n_req = rng.random_range(1..=max_requests);
    let requests = (0..n_req)
        .map(|r| {
            let a = rng.random_range(0..4000) as f64;
            let b = a + rng.random_range(0..2500) as f64;
            let delivery_window = rng
                .random_bool(0.5)
                .then(|| [a, b + rng.random_range(300..3000) as f64]);
            TransportRequest {
                id: format!("r{r}"),
                pickup: names[rng.random_range(0..n_loc)].clone(),
                delivery: names[rng.random_range(0..n_loc)].clone(),
                q: rng.random_range(1..3),
                a,
                b,
                delivery_window,
            }
        })
        .collect();
    EvrpInstance {
        graph: EnergyGraph {
            names,
            energy_kwh: energy,
            time_s: time,
            paths: Vec::new(),
        },
        depot_start: "L0".into(),
        depot_end: "L0".into(),
        requests,
        capacity: rng.random_range(2..5),
        battery_kwh: rng.random_range(2.5..6.0),
        e_min_kwh: 0.5,
        big_m: 1e6,
        max_routes: rng.random_bool(0.3).then(|| rng.random_range(1..=n_req)),
        dwell_s: if rng.random_bool(0.3) { 120.0 } else { 0.0 },
        stations: Vec::new(),
        allow_station_stops: false,
    }
}

fn permutations(items: &mut Vec<Stop>, k: usize, out: &mut Vec<Vec<Stop>>) {
    if k == items.len() {
        out.push(items.clone());
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, out);
        items.swap(k, i);
    }
}

/// Cheapest valid route serving exactly `block`, over every stop order.
pub fn oracle_best_route(inst: &EvrpInstance, block: &[usize]) -> Option<Route> {
    let mut items: Vec<Stop> = block
        .iter()
        .flat_map(|&r| [Stop::Pickup { request: r }, Stop::Delivery { request: r }])
        .collect();
    let mut perms = Vec::new();
    permutations(&mut items, 0, &mut perms);
    let mut best: Option<(f64, Vec<Stop>, Route)> = None;
    for p in perms {
        let mut stops = vec![Stop::DepotStart];
        stops.extend(p);
        stops.push(Stop::DepotEnd);
        let c = validate_route(inst, &stops, inst.battery_kwh).unwrap();
        if !c.is_valid() {
            continue;
        }
        let e = c.route.energy_kwh;
        let better = match &best {
            None => true,
            Some((be, bs, _)) => e < *be || (e == *be && stops < *bs),
        };
        if better {
            best = Some((e, stops, c.route));
        }
    }
    best.map(|(_, _, r)| r)
}

fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = vec![Vec::<Vec<usize>>::new()];
    for item in 0..n {
        let mut next = Vec::new();
        for p in &out {
            for b in 0..p.len() {
                let mut q = p.clone();
                q[b].push(item);
                next.push(q);
            }
            let mut q = p.clone();
            q.push(vec![item]);
            next.push(q);
        }
        out = next;
    }
    out
}

/// Exhaustive optimum over every partition of the requests into routes.
pub fn oracle_evrp(inst: &EvrpInstance) -> Option<EvrpSolution> {
    let n = inst.requests.len();
    let max_routes = inst.max_routes.unwrap_or(n);
    let mut best: Option<EvrpSolution> = None;
    for part in set_partitions(n) {
        if part.len() > max_routes {
            continue;
        }
        let routes: Option<Vec<Route>> = part.iter().map(|b| oracle_best_route(inst, b)).collect();
        let Some(routes) = routes else { continue };
        let sol = EvrpSolution::from_routes(routes, SolveStatus::Optimal, 0);
        let key = |s: &EvrpSolution| s.routes.iter().map(Route::stops).collect::<Vec<_>>();
        let better = match &best {
            None => true,
            Some(b) => {
                sol.total_energy_kwh < b.total_energy_kwh
                    || (sol.total_energy_kwh == b.total_energy_kwh && key(&sol) < key(b))
            }
        };
        if better {
            best = Some(sol);
        }
    }
    best
}

use evfleet::degradation::{DegradationParams, TemperatureUnit};
use evfleet::schedule::{
    decode, evaluate_cost, Horizon, RouteTask, SchedulingInstance, Station, Vehicle,
};

pub fn degradation_celsius() -> DegradationParams {
    DegradationParams {
        temperature_unit: TemperatureUnit::Celsius,
        ..DegradationParams::default()
    }
}

fn station(id: &str, n: usize, rate_kw: f64, tariff: Vec<f64>, spots: u32) -> Station {
    assert_eq!(tariff.len(), n);
    Station {
        id: id.into(),
        rate_kw,
        efficiency: 0.9,
        tariff,
        availability: vec![spots; n],
        reroute_intervals: 0,
        reroute_kwh: 0.0,
        allow_discharge: false,
    }
}

fn ev(id: &str) -> Vehicle {
    Vehicle {
        id: id.into(),
        battery_kwh: 24.0,
        soc_min_kwh: 4.8,
        soc_max_kwh: 21.6,
    }
}

fn block_task(id: &str, start: usize, end: usize, n: usize, kwh: f64) -> RouteTask {
    let mut e = vec![0.0; n];
    let span = (end - start + 1) as f64;
    e[start..=end].iter_mut().for_each(|x| *x = kwh / span);
    RouteTask::new(id, start, end, e).unwrap()
}

/// Scheduling instances small enough (at most 20 bits) to enumerate.
pub fn desk_instances() -> Vec<(&'static str, SchedulingInstance)> {
    let base = |n: usize, vehicles: Vec<Vehicle>, stations: Vec<Station>, tasks: Vec<RouteTask>| {
        SchedulingInstance {
            horizon: Horizon::new(n, 1800.0, 7.0).unwrap(),
            vehicles,
            stations,
            tasks,
            allow_discharge: false,
            use_degradation: false,
            degradation: degradation_celsius(),
            soc_end_tolerance_kwh: None,
        }
    };
    let mut out = Vec::new();

    let n = 10;
    out.push((
        "one vehicle, stepped tariff",
        base(
            n,
            vec![ev("ev1")],
            vec![station("depot", n, 3.0, vec![0.9, 0.8, 0.8, 0.6, 0.7, 0.5, 0.4, 0.4, 0.3, 0.6], 1)],
            vec![block_task("a", 1, 2, n, 1.6), block_task("b", 5, 6, n, 1.2)],
        ),
    ));

    let n = 8;
    let mut two = base(
        n,
        vec![ev("ev1"), ev("ev2")],
        vec![station("depot", n, 3.0, vec![0.5, 0.5, 0.4, 0.4, 0.3, 0.3, 0.2, 0.2], 1)],
        vec![block_task("a", 0, 1, n, 1.5), block_task("b", 2, 3, n, 1.5)],
    );
    two.use_degradation = true;
    out.push(("two vehicles, degradation on", two));

    let n = 8;
    let mut v2b = base(
        n,
        vec![ev("ev1")],
        vec![station("depot", n, 3.0, vec![0.9, 0.9, 0.8, 0.8, 0.8, 0.2, 0.2, 0.2], 1)],
        vec![block_task("a", 1, 2, n, 1.3)],
    );
    v2b.stations[0].allow_discharge = true;
    v2b.allow_discharge = true;
    out.push(("discharge allowed", v2b));

    let n = 8;
    let mut remote = station("public", n, 6.0, vec![0.3; n], 1);
    remote.reroute_intervals = 1;
    remote.reroute_kwh = 0.8;
    out.push((
        "depot plus remote station",
        base(
            n,
            vec![ev("ev1")],
            vec![station("depot", n, 3.0, vec![1.0; n], 1), remote],
            vec![block_task("a", 2, 3, n, 3.5)],
        ),
    ));
    out
}

/// Minimum objective over every bit vector, with the first vector that
/// attains it.
pub fn exhaustive_optimum(inst: &SchedulingInstance) -> (f64, Vec<bool>) {
    let m = evfleet::schedule::Layout::of(inst).len();
    assert!(m <= 20, "{m} bits is too many to enumerate");
    let mut best = (f64::INFINITY, Vec::new());
    for code in 0u32..(1u32 << m) {
        let bits: Vec<bool> = (0..m).map(|b| code >> b & 1 == 1).collect();
        let d = decode(&bits, inst).unwrap();
        if !d.defects.is_empty() {
            continue;
        }
        let f = evaluate_cost(&d.schedule, inst).unwrap().objective;
        if f < best.0 {
            best = (f, bits);
        }
    }
    best
}
