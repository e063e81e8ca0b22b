//! Cheapest feasible insertion with a seeded request order.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::validate::check;
use super::{EvrpError, EvrpInstance, EvrpSolution, Prepared, SolveStatus, Stop};

fn full(interior: &[Stop]) -> Vec<Stop> {
    let mut s = Vec::with_capacity(interior.len() + 2);
    s.push(Stop::DepotStart);
    s.extend_from_slice(interior);
    s.push(Stop::DepotEnd);
    s
}

pub fn solve_insertion_heuristic(inst: &EvrpInstance, seed: u64) -> Result<EvrpSolution, EvrpError> {
    let prep = Prepared::new(inst)?;
    let b = inst.battery_kwh;
    let mut order: Vec<usize> = (0..inst.requests.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    // interior stops and current energy of each open route
    let mut routes: Vec<(Vec<Stop>, f64)> = Vec::new();
    let mut evaluated = 0u64;
    for r in order {
        let (p, d) = (Stop::Pickup { request: r }, Stop::Delivery { request: r });
        let mut best: Option<(f64, usize, Vec<Stop>, f64)> = None;
        for (k, (interior, energy)) in routes.iter().enumerate() {
            for i in 0..=interior.len() {
                for j in i..=interior.len() {
                    let mut cand = interior.clone();
                    cand.insert(j, d);
                    cand.insert(i, p);
                    evaluated += 1;
                    let c = check(&prep, &full(&cand), b)?;
                    if c.is_valid() {
                        let delta = c.route.energy_kwh - energy;
                        if best.as_ref().is_none_or(|(bd, ..)| delta < *bd) {
                            best = Some((delta, k, cand, c.route.energy_kwh));
                        }
                    }
                }
            }
        }
        if routes.len() < prep.max_routes() {
            evaluated += 1;
            let c = check(&prep, &full(&[p, d]), b)?;
            let e = c.route.energy_kwh;
            if c.is_valid() && best.as_ref().is_none_or(|(bd, ..)| e < *bd) {
                best = Some((e, routes.len(), vec![p, d], e));
            }
        }
        let Some((_, k, interior, energy)) = best else {
            return Err(EvrpError::Infeasible {
                request: r,
                id: inst.requests[r].id.clone(),
            });
        };
        if k == routes.len() {
            routes.push((interior, energy));
        } else {
            routes[k] = (interior, energy);
        }
    }
    let routes = routes
        .into_iter()
        .map(|(interior, _)| check(&prep, &full(&interior), b).map(|c| c.route))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EvrpSolution::from_routes(routes, SolveStatus::Heuristic, evaluated))
}
