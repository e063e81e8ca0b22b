use super::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn horizon(n: usize) -> Horizon {
    Horizon::new(n, 1800.0, 7.0).unwrap()
}

fn depot(n: usize) -> Station {
    Station {
        id: "depot".into(),
        rate_kw: 3.0,
        efficiency: 0.9,
        tariff: vec![0.5; n],
        availability: vec![2; n],
        reroute_intervals: 0,
        reroute_kwh: 0.0,
        allow_discharge: true,
    }
}

fn remote(n: usize) -> Station {
    Station {
        id: "remote".into(),
        rate_kw: 6.0,
        efficiency: 0.9,
        tariff: vec![0.2; n],
        availability: vec![1; n],
        reroute_intervals: 1,
        reroute_kwh: 1.0,
        allow_discharge: false,
    }
}

fn vehicle(id: &str) -> Vehicle {
    Vehicle {
        id: id.into(),
        battery_kwh: 24.0,
        soc_min_kwh: 4.8,
        soc_max_kwh: 21.6,
    }
}

fn task(id: &str, start: usize, end: usize, n: usize, kwh: f64) -> RouteTask {
    let mut e = vec![0.0; n];
    let span = (end - start + 1) as f64;
    e[start..=end].iter_mut().for_each(|x| *x = kwh / span);
    RouteTask::new(id, start, end, e).unwrap()
}

fn instance(n: usize, tasks: Vec<RouteTask>) -> SchedulingInstance {
    SchedulingInstance {
        horizon: horizon(n),
        vehicles: vec![vehicle("ev1"), vehicle("ev2")],
        stations: vec![depot(n), remote(n)],
        tasks,
        allow_discharge: false,
        use_degradation: false,
        degradation: Default::default(),
        soc_end_tolerance_kwh: None,
    }
}

#[test]
fn unavailability_is_a_closed_interval() {
    let t = task("s", 4, 6, 10, 1.0);
    assert_eq!(unavailability(&t, 5), 1);
    assert_eq!(unavailability(&t, 7), 0);
    assert_eq!(unavailability(&t, 4), 1);
    assert_eq!(unavailability(&t, 6), 1);
    let p = task("p", 4, 4, 10, 1.0);
    assert_eq!(unavailability(&p, 4), 1);
}

#[test]
fn horizon_clock_wraps_midnight() {
    let h = horizon(48);
    assert_eq!(h.clock(0), "07:00");
    assert_eq!(h.clock(1), "07:30");
    assert_eq!(h.clock(34), "00:00");
    assert_eq!(h.total_hours(), 24.0);
    assert!(Horizon::new(0, 1800.0, 0.0).is_err());
}

#[test]
fn task_energy_follows_time_overlap() {
    let h = horizon(48);
    let t = RouteTask::from_times("r", 1056.0, 2964.0, 1.657, &h).unwrap();
    assert_eq!((t.start, t.end), (0, 1));
    let first = 1.657 * (1800.0 - 1056.0) / (2964.0 - 1056.0);
    assert!((t.energy[0] - first).abs() < 1e-12);
    assert!((t.total_kwh() - 1.657).abs() < 1e-12);
    let edge = RouteTask::from_times("e", 0.0, 3600.0, 2.0, &h).unwrap();
    assert_eq!((edge.start, edge.end), (0, 1));
    let point = RouteTask::from_times("p", 900.0, 900.0, 0.3, &h).unwrap();
    assert_eq!((point.start, point.end, point.energy[0]), (0, 0, 0.3));
    assert!(RouteTask::from_times("x", 0.0, 1e9, 1.0, &h).is_err());
    assert!(RouteTask::new("bad", 2, 1, vec![0.0; 4]).is_err());
    assert!(RouteTask::new("bad", 0, 1, vec![0.0, 0.0, 1.0]).is_err());
}

#[test]
fn simulate_increments() {
    let h = horizon(4);
    let st = [depot(4)];
    let flat = simulate_vehicle(&h, &[], &[Action::Idle; 4], &st, 10.0).unwrap();
    assert!(flat.soc.iter().all(|&s| s == 10.0));
    let mut acts = [Action::Idle; 4];
    acts[2] = Action::Charge(0);
    let up = simulate_vehicle(&h, &[], &acts, &st, 10.0).unwrap();
    assert!((up.soc[3] - up.soc[2] - 1.35).abs() < 1e-12);
    acts[2] = Action::Discharge(0);
    let down = simulate_vehicle(&h, &[], &acts, &st, 10.0).unwrap();
    assert!((down.soc[2] - down.soc[3] - 1.5 / 0.9).abs() < 1e-12);
    let t = task("s", 1, 2, 4, 1.288);
    let used = simulate_vehicle(&h, &[&t], &[Action::Idle; 4], &st, 10.0).unwrap();
    assert!((used.soc[4] - (10.0 - 1.288)).abs() < 1e-12);
    acts[2] = Action::Charge(3);
    assert!(matches!(
        simulate_vehicle(&h, &[], &acts, &st, 10.0),
        Err(ScheduleError::UnknownStation(3))
    ));
}

#[test]
fn reroute_energy_lands_on_travel_intervals() {
    let h = horizon(6);
    let st = [depot(6), remote(6)];
    let mut acts = [Action::Idle; 6];
    acts[2] = Action::Charge(1);
    acts[3] = Action::Charge(1);
    let tr = simulate_vehicle(&h, &[], &acts, &st, 10.0).unwrap();
    let step: Vec<f64> = tr.soc.windows(2).map(|w| w[1] - w[0]).collect();
    assert!((step[1] + 0.5).abs() < 1e-12);
    assert!((step[4] + 0.5).abs() < 1e-12);
    assert!((tr.reroute_kwh - 1.0).abs() < 1e-12);
    assert!((tr.net_change() - (tr.soc[6] - tr.soc[0])).abs() < 1e-12);
}

#[test]
fn empty_schedule_is_feasible() {
    let inst = instance(4, vec![]);
    let s = Schedule::idle(2, 0, 4);
    assert!(check_schedule(&s, &inst).unwrap().is_empty());
}

#[test]
fn overlapping_routes_on_one_vehicle() {
    let n = 8;
    let inst = instance(n, vec![task("a", 2, 3, n, 1.0), task("b", 2, 3, n, 1.0)]);
    let s = Schedule::from_owners(&[0, 0], 2, n);
    let v = check_schedule(&s, &inst).unwrap();
    assert!(v.iter().any(|v| v.kind == ViolationKind::Overlap));
    let ok = Schedule::from_owners(&[0, 1], 2, n);
    assert!(!check_schedule(&ok, &inst)
        .unwrap()
        .iter()
        .any(|v| v.kind == ViolationKind::Overlap));
    let mut none = ok.clone();
    none.assign[1][1] = false;
    assert!(check_schedule(&none, &inst)
        .unwrap()
        .iter()
        .any(|v| v.kind == ViolationKind::Assignment));
}

#[test]
fn remote_trip_needs_idle_margins() {
    let n = 8;
    let inst = instance(n, vec![task("a", 2, 3, n, 1.0)]);
    let mut s = Schedule::from_owners(&[0], 2, n);
    // route ends at 3; remote charge at 4 needs interval 3 for the trip out
    s.actions[0][4] = Action::Charge(1);
    let v = check_schedule(&s, &inst).unwrap();
    assert!(v.iter().any(|v| v.kind == ViolationKind::Reroute && v.interval == Some(3)));
    s.actions[0][4] = Action::Idle;
    s.actions[0][5] = Action::Charge(1);
    let v = check_schedule(&s, &inst).unwrap();
    assert!(!v.iter().any(|v| v.kind == ViolationKind::Reroute));
    s.actions[0][5] = Action::Idle;
    s.actions[0][7] = Action::Charge(1);
    let v = check_schedule(&s, &inst).unwrap();
    assert!(v.iter().any(|v| v.kind == ViolationKind::Reroute));
    s.actions[0][7] = Action::Idle;
    s.actions[0][2] = Action::Charge(0);
    let v = check_schedule(&s, &inst).unwrap();
    assert!(v.iter().any(|v| v.kind == ViolationKind::Busy));
}

#[test]
fn availability_counts_every_vehicle() {
    let n = 6;
    let inst = instance(n, vec![]);
    let mut s = Schedule::idle(2, 0, n);
    s.actions[0][3] = Action::Charge(1);
    s.actions[1][3] = Action::Charge(1);
    let v = check_schedule(&s, &inst).unwrap();
    assert!(v.iter().any(|v| v.kind == ViolationKind::Availability && v.interval == Some(3)));
}

#[test]
fn soc_bounds_boundary_and_discharge_flags() {
    let n = 6;
    let mut inst = instance(n, vec![]);
    inst.soc_end_tolerance_kwh = Some(1.0);
    let mut s = Schedule::idle(2, 0, n);
    s.actions[0][1] = Action::Charge(0);
    let v = check_schedule(&s, &inst).unwrap();
    assert!(v.iter().any(|v| v.kind == ViolationKind::SocBounds));
    let mut d = Schedule::idle(2, 0, n);
    d.actions[0][1] = Action::Discharge(0);
    let kinds: Vec<_> = check_schedule(&d, &inst).unwrap().iter().map(|v| v.kind).collect();
    assert!(kinds.contains(&ViolationKind::Discharge));
    assert!(kinds.contains(&ViolationKind::Boundary));
    let mut on = inst.clone();
    on.allow_discharge = true;
    let kinds: Vec<_> = check_schedule(&d, &on).unwrap().iter().map(|v| v.kind).collect();
    assert!(!kinds.contains(&ViolationKind::Discharge));
    d.actions[0][3] = Action::Charge(0);
    d.actions[0][4] = Action::Charge(0);
    // -1.667 + 2.7 overshoots SOC_max
    assert!(!check_schedule(&d, &on).unwrap().is_empty());
}

#[test]
fn shortfall_within_one_quantum_is_accepted() {
    let n = 6;
    // 1.0 kWh used, remote quantum 2.7 is the largest: no charge needed
    let inst = instance(n, vec![task("a", 1, 1, n, 1.0)]);
    let s = Schedule::from_owners(&[0], 2, n);
    assert!(check_schedule(&s, &inst).unwrap().is_empty());
    let mut strict = inst.clone();
    strict.soc_end_tolerance_kwh = Some(0.5);
    assert!(check_schedule(&s, &strict)
        .unwrap()
        .iter()
        .any(|v| v.kind == ViolationKind::Boundary));
}

#[test]
fn cost_examples() {
    let n = 6;
    let inst = instance(n, vec![]);
    let idle = Schedule::idle(2, 0, n);
    let c = evaluate_cost(&idle, &inst).unwrap();
    assert_eq!(c.tariff, 0.0);
    assert_eq!(c.objective, 0.0);
    let r = &c.per_vehicle[0];
    assert_eq!(r.loss_dod, 0.0);
    assert!(r.loss_temperature > 0.0);

    let mut two = instance(n, vec![task("a", 0, 1, n, 2.7)]);
    two.stations[0].tariff = vec![0.5; n];
    let mut s = Schedule::from_owners(&[0], 2, n);
    s.actions[0][3] = Action::Charge(0);
    s.actions[0][4] = Action::Charge(0);
    let c = evaluate_cost(&s, &two).unwrap();
    assert!(c.feasible);
    assert_eq!(c.objective, 1.0);
    two.use_degradation = true;
    let d = evaluate_cost(&s, &two).unwrap();
    assert!(d.objective > 1.0);
    assert!((d.objective - 1.0 - d.degradation).abs() < 1e-12);
    s.actions[0][2] = Action::Charge(0);
    assert_eq!(evaluate_cost(&s, &two).unwrap().objective, f64::INFINITY);
}

#[test]
fn encoding_layout_and_round_trip() {
    let n = 3;
    let mut inst = instance(n, vec![task("a", 0, 0, n, 0.5), task("b", 2, 2, n, 0.5)]);
    inst.stations.truncate(1);
    assert_eq!(Layout::of(&inst).len(), 10);
    inst.allow_discharge = true;
    assert_eq!(Layout::of(&inst).len(), 2 * 3 * 2 + 4);
    let mut s = Schedule::from_owners(&[1, 0], 2, n);
    s.actions[0][1] = Action::Discharge(0);
    s.actions[1][2] = Action::Charge(0);
    let bits = encode(&s, &inst).unwrap();
    let lay = Layout::of(&inst);
    assert!(bits[lay.slot(0, 0, 1) + 1]);
    assert!(bits[lay.slot(1, 0, 2)]);
    assert!(bits[lay.assign_bit(0, 1)] && bits[lay.assign_bit(1, 0)]);
    let back = decode(&bits, &inst).unwrap();
    assert!(back.defects.is_empty());
    assert_eq!(back.schedule, s);
    let mut both = bits.clone();
    both[lay.slot(0, 0, 1)] = true;
    assert!(!decode(&both, &inst).unwrap().defects.is_empty());
    assert!(decode(&bits[1..], &inst).is_err());
    let zero_u: Vec<bool> = (0..lay.len()).map(|b| b >= lay.charging_len() && bits[b]).collect();
    let d = decode(&zero_u, &inst).unwrap();
    assert!(d.schedule.actions.iter().flatten().all(|a| *a == Action::Idle));
}

#[test]
fn mutation_examples() {
    let b = |s: &str| s.chars().map(|c| c == '1').collect::<Vec<_>>();
    assert_eq!(de_mutate(&b("0101"), &b("0011"), &b("0110")).unwrap(), b("0101"));
    assert_eq!(de_mutate(&b("1001"), &b("0110"), &b("0110")).unwrap(), b("1001"));
    assert_eq!(de_mutate(&b("1111"), &b("0011"), &b("0110")).unwrap(), b("1111"));
    assert_eq!(de_mutate(&b("0000"), &b("0011"), &b("0110")).unwrap(), b("0101"));
    assert!(de_mutate(&b("01"), &b("011"), &b("011")).is_err());
}

#[test]
fn crossover_edge_rates() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let t = vec![false; 16];
    let d = vec![true; 16];
    for _ in 0..200 {
        assert_eq!(de_crossover(&t, &d, 0.0, &mut rng).unwrap(), t);
        assert_eq!(de_crossover(&t, &t, 0.7, &mut rng).unwrap(), t);
    }
    assert_eq!(de_crossover(&t, &d, 1.0, &mut rng).unwrap(), d);
    assert!(de_crossover(&t, &d, 1.5, &mut rng).is_err());
    assert!(de_crossover(&t, &d[1..], 0.3, &mut rng).is_err());
    // the copied run is contiguous modulo the length
    for _ in 0..200 {
        let u = de_crossover(&t, &d, 0.6, &mut rng).unwrap();
        let ones = u.iter().filter(|&&b| b).count();
        let starts = (0..16).filter(|&i| u[i] && !u[(i + 15) % 16]).count();
        assert!(ones == 0 || ones == 16 || starts == 1);
    }
}

fn one_action_instance() -> SchedulingInstance {
    let n = 6;
    let mut st = depot(n);
    st.allow_discharge = false;
    st.tariff = vec![1.0, 1.0, 0.9, 0.8, 0.2, 0.7];
    SchedulingInstance {
        horizon: horizon(n),
        vehicles: vec![Vehicle {
            id: "ev".into(),
            battery_kwh: 24.0,
            soc_min_kwh: 0.0,
            soc_max_kwh: 10.0,
        }],
        stations: vec![st],
        tasks: vec![task("r", 1, 1, n, 1.35)],
        allow_discharge: false,
        use_degradation: false,
        degradation: Default::default(),
        soc_end_tolerance_kwh: Some(0.0),
    }
}

#[test]
fn de_places_the_single_action_at_the_cheapest_interval() {
    let inst = one_action_instance();
    for seed in 0..20 {
        let params = DeParams {
            generations: 30,
            seed,
            inject_greedy: false,
            ..DeParams::default()
        };
        let r = de_optimize(&inst, &params).unwrap();
        assert_eq!(r.best.actions[0][4], Action::Charge(0), "seed {seed}");
        assert_eq!(r.cost.objective, 0.2);
        assert!(r.convergence.windows(2).all(|w| w[1] <= w[0]));
        assert!(check_schedule(&r.best, &inst).unwrap().is_empty());
    }
}

#[test]
fn de_is_deterministic_per_seed() {
    let n = 12;
    let inst = instance(n, vec![task("a", 1, 2, n, 1.5), task("b", 3, 4, n, 1.5), task("c", 6, 7, n, 2.0)]);
    let params = DeParams {
        generations: 20,
        population: Some(60),
        seed: 11,
        ..DeParams::default()
    };
    let a = de_optimize(&inst, &params).unwrap();
    let b = de_optimize(&inst, &params).unwrap();
    assert_eq!(a, b);
    assert!(check_schedule(&a.best, &inst).unwrap().is_empty());
}

#[test]
fn greedy_and_random_builders_are_feasible() {
    let n = 16;
    let inst = instance(n, vec![task("a", 1, 2, n, 3.0), task("b", 2, 3, n, 3.0), task("c", 6, 8, n, 4.0)]);
    let g = greedy_schedule(&inst).unwrap();
    assert!(check_schedule(&g, &inst).unwrap().is_empty());
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let found = (0..50).filter_map(|_| random_feasible_schedule(&inst, &mut rng)).count();
    assert!(found > 0);
}

#[test]
fn initialisation_failure_is_reported() {
    let n = 4;
    // one vehicle cannot drive two simultaneous routes
    let mut inst = instance(n, vec![task("a", 1, 2, n, 1.0), task("b", 1, 2, n, 1.0)]);
    inst.vehicles.truncate(1);
    let r = de_optimize(&inst, &DeParams { generations: 2, ..DeParams::default() });
    assert!(matches!(r, Err(ScheduleError::Initialization(_))));
}
