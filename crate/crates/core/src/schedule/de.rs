//! Binary differential evolution over the schedule encoding.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::check::{check_with_trace, ViolationKind};
use super::cost::{cost_with_trace, fitness};
use super::encoding::{decode, encode, Layout};
use super::{simulate_soc, Action, CostBreakdown, Schedule, ScheduleError, SchedulingInstance};

/// `x1 OR (x2 XOR x3)`, elementwise.
pub fn de_mutate(x1: &[bool], x2: &[bool], x3: &[bool]) -> Result<Vec<bool>, ScheduleError> {
    if x1.len() != x2.len() || x1.len() != x3.len() {
        return Err(ScheduleError::Parameter(format!(
            "mutation needs equal lengths, got {}, {}, {}",
            x1.len(),
            x2.len(),
            x3.len()
        )));
    }
    Ok(x1
        .iter()
        .zip(x2)
        .zip(x3)
        .map(|((&a, &b), &c)| a | (b ^ c))
        .collect())
}

/// Run length of the crossover loop: `L` starts at 1 and grows while a
/// draw from (0, 1] is at most `cr` and `L <= m_v`.
pub fn draw_run_length<R: Rng + ?Sized>(cr: f64, m_v: usize, rng: &mut R) -> usize {
    let mut l = 0;
    loop {
        l += 1;
        let u = 1.0 - rng.random::<f64>();
        if !(u <= cr && l <= m_v) {
            return l;
        }
    }
}

/// Copies donor positions `n_v+1 ..= n_v+L-1` (1-based, wrapping) into a
/// copy of the target, with `n_v` uniform in `[1, m_v]`.
pub fn de_crossover<R: Rng + ?Sized>(
    target: &[bool],
    donor: &[bool],
    cr: f64,
    rng: &mut R,
) -> Result<Vec<bool>, ScheduleError> {
    if !(0.0..=1.0).contains(&cr) {
        return Err(ScheduleError::Parameter(format!(
            "crossover rate must lie in [0, 1], got {cr}"
        )));
    }
    if target.len() != donor.len() {
        return Err(ScheduleError::Parameter(format!(
            "crossover needs equal lengths, got {} and {}",
            target.len(),
            donor.len()
        )));
    }
    let m = target.len();
    let mut trial = target.to_vec();
    if m == 0 {
        return Ok(trial);
    }
    let n_v = rng.random_range(1..=m);
    let l = draw_run_length(cr, m, rng);
    for j in n_v + 1..n_v + l {
        let idx = (j - 1) % m;
        trial[idx] = donor[idx];
    }
    Ok(trial)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeParams {
    /// Defaults to ten times the vector length.
    pub population: Option<usize>,
    pub crossover_rate: f64,
    pub generations: usize,
    pub seed: u64,
    /// Random construction attempts per population slot.
    pub init_attempts: usize,
    pub inject_greedy: bool,
}

impl Default for DeParams {
    fn default() -> Self {
        Self {
            population: None,
            crossover_rate: 0.3,
            generations: 100,
            seed: 0,
            init_attempts: 20,
            inject_greedy: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeResult {
    pub best: Schedule,
    pub best_bits: Vec<bool>,
    pub cost: CostBreakdown,
    /// Best population cost after initialisation and after each generation.
    pub convergence: Vec<f64>,
    /// The injected greedy individual survived unchanged as the answer.
    pub greedy_won: bool,
    pub population: usize,
    pub vector_len: usize,
    /// Distinct random individuals that passed every constraint.
    pub feasible_initial: usize,
    pub evaluations: u64,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent stream per (seed, generation, individual); keeps parallel
/// and serial runs identical.
fn stream(seed: u64, generation: u64, individual: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix(splitmix(splitmix(seed) ^ generation) ^ individual))
}

fn busy_mask(inst: &SchedulingInstance, schedule: &Schedule, k: usize) -> Vec<bool> {
    let mut busy = vec![false; inst.horizon.intervals];
    for s in schedule.routes_of(k) {
        let t = &inst.tasks[s];
        busy[t.start..=t.end].iter_mut().for_each(|b| *b = true);
    }
    busy
}

/// Violations other than the final-SOC condition.
fn open_violations(inst: &SchedulingInstance, schedule: &Schedule) -> Option<usize> {
    let trace = simulate_soc(inst, schedule).ok()?;
    Some(
        check_with_trace(schedule, inst, &trace)
            .iter()
            .filter(|v| v.kind != ViolationKind::Boundary)
            .count(),
    )
}

fn final_shortfall(inst: &SchedulingInstance, schedule: &Schedule, k: usize) -> Option<f64> {
    let trace = simulate_soc(inst, schedule).ok()?;
    Some(inst.vehicles[k].soc_max_kwh - trace.vehicles[k].soc[inst.horizon.intervals])
}

fn is_feasible(inst: &SchedulingInstance, schedule: &Schedule) -> bool {
    simulate_soc(inst, schedule)
        .map(|t| check_with_trace(schedule, inst, &t).is_empty())
        .unwrap_or(false)
}

fn random_owners<R: Rng>(inst: &SchedulingInstance, rng: &mut R) -> Option<Vec<usize>> {
    let k = inst.vehicles.len();
    let mut owners = vec![usize::MAX; inst.tasks.len()];
    let mut order: Vec<usize> = (0..inst.tasks.len()).collect();
    for i in (1..order.len()).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    for s in order {
        let free: Vec<usize> = (0..k)
            .filter(|&v| {
                owners
                    .iter()
                    .enumerate()
                    .all(|(o, &w)| w != v || !inst.tasks[o].overlaps(&inst.tasks[s]))
            })
            .collect();
        owners[s] = *free.choose(rng)?;
    }
    Some(owners)
}

/// Random assignment, then random actions on idle intervals until every
/// vehicle's final SOC lands in the boundary band. `None` when the draw
/// fails the full constraint check.
pub fn random_feasible_schedule<R: Rng>(inst: &SchedulingInstance, rng: &mut R) -> Option<Schedule> {
    let n = inst.horizon.intervals;
    let owners = random_owners(inst, rng)?;
    let mut sched = Schedule::from_owners(&owners, inst.vehicles.len(), n);
    let tol = inst.soc_end_tolerance();
    let n_st = inst.stations.len();
    if n_st == 0 {
        return is_feasible(inst, &sched).then_some(sched);
    }
    let mut base = open_violations(inst, &sched)?;
    for k in 0..inst.vehicles.len() {
        let busy = busy_mask(inst, &sched, k);
        let mut tries = 0;
        while final_shortfall(inst, &sched, k)? > tol + 1e-9 || rng.random_bool(0.02) {
            tries += 1;
            if tries > 8 * n {
                break;
            }
            let i = rng.random_range(0..n);
            if busy[i] || sched.actions[k][i] != Action::Idle {
                continue;
            }
            let x = rng.random_range(0..n_st);
            let action = if inst.discharge_allowed(x) && rng.random_bool(0.25) {
                Action::Discharge(x)
            } else {
                Action::Charge(x)
            };
            sched.actions[k][i] = action;
            let over = final_shortfall(inst, &sched, k)? < -1e-9;
            match open_violations(inst, &sched) {
                Some(v) if v <= base && !over => base = v,
                _ => sched.actions[k][i] = Action::Idle,
            }
        }
    }
    is_feasible(inst, &sched).then_some(sched)
}

/// First-fit assignment in start order, then cheapest-first top-up at
/// stations that need no reroute, then profitable V2B pairs where
/// discharge is allowed.
pub fn greedy_schedule(inst: &SchedulingInstance) -> Option<Schedule> {
    let n = inst.horizon.intervals;
    let k_n = inst.vehicles.len();
    let mut order: Vec<usize> = (0..inst.tasks.len()).collect();
    order.sort_by_key(|&s| (inst.tasks[s].start, inst.tasks[s].end, s));
    let mut owners = vec![usize::MAX; inst.tasks.len()];
    for s in order {
        let k = (0..k_n).find(|&v| {
            owners
                .iter()
                .enumerate()
                .all(|(o, &w)| w != v || !inst.tasks[o].overlaps(&inst.tasks[s]))
        })?;
        owners[s] = k;
    }
    let mut sched = Schedule::from_owners(&owners, k_n, n);
    let tol = inst.soc_end_tolerance();
    let mut base = open_violations(inst, &sched)?;
    let mut slots: Vec<(usize, usize)> = (0..inst.stations.len())
        .filter(|&x| !inst.stations[x].is_remote())
        .flat_map(|x| (0..n).map(move |i| (x, i)))
        .collect();
    slots.sort_by(|a, b| {
        inst.stations[a.0].tariff[a.1]
            .total_cmp(&inst.stations[b.0].tariff[b.1])
            .then(a.1.cmp(&b.1))
            .then(a.0.cmp(&b.0))
    });
    for k in 0..k_n {
        let busy = busy_mask(inst, &sched, k);
        for &(x, i) in &slots {
            if final_shortfall(inst, &sched, k)? <= tol + 1e-9 {
                break;
            }
            if busy[i] || sched.actions[k][i] != Action::Idle {
                continue;
            }
            sched.actions[k][i] = Action::Charge(x);
            let over = final_shortfall(inst, &sched, k)? < -1e-9;
            match open_violations(inst, &sched) {
                Some(v) if v <= base && !over => base = v,
                _ => sched.actions[k][i] = Action::Idle,
            }
        }
    }
    if !is_feasible(inst, &sched) {
        return None;
    }
    Some(add_v2b(inst, sched, &slots))
}

/// Steepest descent over "discharge one interval, top back up at the
/// cheapest free charging slots" moves; stops when no move lowers the
/// objective.
fn add_v2b(inst: &SchedulingInstance, mut sched: Schedule, charge_slots: &[(usize, usize)]) -> Schedule {
    let n = inst.horizon.intervals;
    let tol = inst.soc_end_tolerance();
    let sell: Vec<(usize, usize)> = (0..inst.stations.len())
        .filter(|&x| inst.discharge_allowed(x) && !inst.stations[x].is_remote())
        .flat_map(|x| (0..n).map(move |i| (x, i)))
        .collect();
    if sell.is_empty() {
        return sched;
    }
    let mut best = fitness(&sched, inst);
    loop {
        let mut found: Option<(f64, Schedule)> = None;
        for k in 0..inst.vehicles.len() {
            let busy = busy_mask(inst, &sched, k);
            for &(x, i) in &sell {
                if busy[i] || sched.actions[k][i] != Action::Idle {
                    continue;
                }
                let mut trial = sched.clone();
                trial.actions[k][i] = Action::Discharge(x);
                for &(y, j) in charge_slots {
                    match final_shortfall(inst, &trial, k) {
                        Some(short) if short > tol + 1e-9 => {}
                        _ => break,
                    }
                    if busy[j] || trial.actions[k][j] != Action::Idle {
                        continue;
                    }
                    trial.actions[k][j] = Action::Charge(y);
                    if final_shortfall(inst, &trial, k).is_none_or(|s| s < -1e-9) {
                        trial.actions[k][j] = Action::Idle;
                    }
                }
                let f = fitness(&trial, inst);
                if f < found.as_ref().map_or(best, |b| b.0) {
                    found = Some((f, trial));
                }
            }
        }
        match found {
            Some((f, trial)) => {
                best = f;
                sched = trial;
            }
            None => return sched,
        }
    }
}

fn bits_fitness(bits: &[bool], inst: &SchedulingInstance) -> f64 {
    match decode(bits, inst) {
        Ok(d) if d.defects.is_empty() => fitness(&d.schedule, inst),
        _ => f64::INFINITY,
    }
}

fn three_distinct<R: Rng>(np: usize, exclude: usize, rng: &mut R) -> (usize, usize, usize) {
    let mut pick = |taken: &[usize]| loop {
        let r = rng.random_range(0..np);
        if r != exclude && !taken.contains(&r) {
            return r;
        }
    };
    let r1 = pick(&[]);
    let r2 = pick(&[r1]);
    let r3 = pick(&[r1, r2]);
    (r1, r2, r3)
}

/// Minimises tariff (plus degradation when enabled) over feasible schedules.
pub fn de_optimize(inst: &SchedulingInstance, params: &DeParams) -> Result<DeResult, ScheduleError> {
    inst.validate()?;
    let cr = params.crossover_rate;
    if !(0.0..=1.0).contains(&cr) {
        return Err(ScheduleError::Parameter(format!(
            "crossover rate must lie in [0, 1], got {cr}"
        )));
    }
    let lay = Layout::of(inst);
    let m_v = lay.len();
    let np = params.population.unwrap_or(10 * m_v).max(4);

    let attempts = params.init_attempts.max(1);
    let drawn: Vec<Option<Vec<bool>>> = (0..np)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(params.seed, u64::MAX, i as u64);
            (0..attempts).find_map(|_| {
                random_feasible_schedule(inst, &mut rng).and_then(|s| encode(&s, inst).ok())
            })
        })
        .collect();
    let mut feasible: Vec<Vec<bool>> = drawn.into_iter().flatten().collect();
    let mut distinct = feasible.clone();
    distinct.sort();
    distinct.dedup();
    let feasible_initial = distinct.len();

    let greedy = if params.inject_greedy {
        greedy_schedule(inst).and_then(|s| encode(&s, inst).ok())
    } else {
        None
    };
    if let Some(g) = &greedy {
        feasible.insert(0, g.clone());
    }
    if feasible.is_empty() {
        return Err(ScheduleError::Initialization(format!(
            "{np} slots x {attempts} attempts produced no feasible individual \
             and no greedy schedule exists ({} vehicles, {} routes, {} stations)",
            inst.vehicles.len(),
            inst.tasks.len(),
            inst.stations.len()
        )));
    }
    let mut pop: Vec<Vec<bool>> = (0..np).map(|i| feasible[i % feasible.len()].clone()).collect();
    let mut from_greedy: Vec<bool> = (0..np)
        .map(|i| greedy.is_some() && i % feasible.len() == 0)
        .collect();
    let mut cost: Vec<f64> = pop.par_iter().map(|b| bits_fitness(b, inst)).collect();
    let mut evaluations = np as u64;
    let best_of = |cost: &[f64]| cost.iter().copied().fold(f64::INFINITY, f64::min);
    let mut convergence = vec![best_of(&cost)];

    for g in 1..=params.generations {
        let trials: Vec<(Vec<bool>, f64)> = (0..np)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream(params.seed, g as u64, i as u64);
                let (r1, r2, r3) = three_distinct(np, i, &mut rng);
                let v = de_mutate(&pop[r1], &pop[r2], &pop[r3]).expect("equal lengths");
                let u = de_crossover(&pop[i], &v, cr, &mut rng).expect("valid rate");
                let f = if u == pop[i] { cost[i] } else { bits_fitness(&u, inst) };
                (u, f)
            })
            .collect();
        evaluations += np as u64;
        for (i, (u, f)) in trials.into_iter().enumerate() {
            if f <= cost[i] {
                if u != pop[i] {
                    from_greedy[i] = false;
                }
                pop[i] = u;
                cost[i] = f;
            }
        }
        convergence.push(best_of(&cost));
    }

    let best_idx = (0..np)
        .min_by(|&a, &b| cost[a].total_cmp(&cost[b]).then(a.cmp(&b)))
        .expect("non-empty population");
    if !cost[best_idx].is_finite() {
        return Err(ScheduleError::Initialization(
            "population holds no feasible individual".into(),
        ));
    }
    let best_bits = pop[best_idx].clone();
    let best = decode(&best_bits, inst)?.schedule;
    let trace = simulate_soc(inst, &best)?;
    let cost_breakdown = cost_with_trace(&best, inst, &trace)?;
    let greedy_won = from_greedy[best_idx];
    if greedy_won {
        log::info!("greedy seed individual is the final answer");
    }
    Ok(DeResult {
        best,
        best_bits,
        cost: cost_breakdown,
        convergence,
        greedy_won,
        population: np,
        vector_len: m_v,
        feasible_initial,
        evaluations,
    })
}
