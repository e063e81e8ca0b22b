//! Exact solver: enumerate every feasible route, keep the cheapest per
//! request set, then branch-and-bound over set partitions.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use super::validate::check;
use super::{EvrpError, EvrpInstance, EvrpSolution, Prepared, SolveStatus, Stop};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactLimits {
    /// Search nodes across route enumeration and set partitioning.
    pub node_limit: u64,
    pub time_limit: Duration,
}

impl Default for ExactLimits {
    fn default() -> Self {
        Self {
            node_limit: 50_000_000,
            time_limit: Duration::from_secs(60),
        }
    }
}

struct Budget {
    limits: ExactLimits,
    start: Instant,
    nodes: u64,
    exhausted: bool,
}

impl Budget {
    fn tick(&mut self) -> bool {
        if self.exhausted {
            return false;
        }
        self.nodes += 1;
        if self.nodes > self.limits.node_limit
            || (self.nodes % 4096 == 0 && self.start.elapsed() > self.limits.time_limit)
        {
            self.exhausted = true;
        }
        !self.exhausted
    }
}

#[derive(Clone)]
struct Candidate {
    mask: u64,
    energy: f64,
    stops: Vec<Stop>,
}

struct Enumerator<'p, 'a> {
    prep: &'p Prepared<'a>,
    budget: &'p mut Budget,
    best: HashMap<u64, Candidate>,
    stops: Vec<Stop>,
}

#[derive(Clone, Copy)]
struct Label {
    loc: usize,
    w: f64,
    y: i64,
    e: f64,
    energy: f64,
    picked: u64,
    onboard: u64,
    stations: u64,
    at_depot: bool,
}

impl Enumerator<'_, '_> {
    fn offer(&mut self, mask: u64, energy: f64) {
        let mut stops = self.stops.clone();
        stops.push(Stop::DepotEnd);
        let better = match self.best.get(&mask) {
            None => true,
            Some(c) => energy < c.energy || (energy == c.energy && stops < c.stops),
        };
        if better {
            self.best.insert(mask, Candidate { mask, energy, stops });
        }
    }

    // Mirrors the propagation in `check`; any divergence is caught by the
    // re-validation of the selected routes.
    fn extend(&mut self, lab: Label, next: Stop) -> Option<Label> {
        let inst = self.prep.inst;
        let loc = self.prep.location(next)?;
        if lab.at_depot && !self.prep.is_depot(loc) {
            return None;
        }
        let prev = *self.stops.last()?;
        let (a, b) = self.prep.window(next);
        let w = a.max(lab.w + self.prep.dwell(prev) + inst.graph.time(lab.loc, loc));
        if w > b {
            return None;
        }
        let c = inst.graph.energy(lab.loc, loc);
        let mut e = lab.e - c;
        if e < inst.e_min_kwh {
            return None;
        }
        let y = lab.y + self.prep.demand(next);
        if y > inst.capacity as i64 {
            return None;
        }
        let mut out = Label {
            loc,
            w,
            y,
            e,
            energy: lab.energy + c,
            at_depot: lab.at_depot || self.prep.is_depot(loc),
            ..lab
        };
        match next {
            Stop::Pickup { request } => {
                out.picked |= 1 << request;
                out.onboard |= 1 << request;
            }
            Stop::Delivery { request } => out.onboard &= !(1 << request),
            Stop::Station { station } => {
                e = inst.battery_kwh.min(e + inst.stations[station].charge_kwh);
                out.e = e;
                out.stations |= 1 << station;
            }
            _ => {}
        }
        Some(out)
    }

    fn dfs(&mut self, lab: Label) {
        if !self.budget.tick() {
            return;
        }
        let n_req = self.prep.inst.requests.len();
        if lab.onboard == 0 && lab.picked != 0 {
            if let Some(end) = self.extend(lab, Stop::DepotEnd) {
                self.offer(lab.picked, end.energy);
            }
        }
        let mut next = Vec::new();
        for r in 0..n_req {
            if lab.picked >> r & 1 == 0 {
                next.push(Stop::Pickup { request: r });
            } else if lab.onboard >> r & 1 == 1 {
                next.push(Stop::Delivery { request: r });
            }
        }
        if self.prep.inst.allow_station_stops {
            for s in 0..self.prep.station.len() {
                if lab.stations >> s & 1 == 0 {
                    next.push(Stop::Station { station: s });
                }
            }
        }
        for stop in next {
            if let Some(child) = self.extend(lab, stop) {
                self.stops.push(stop);
                self.dfs(child);
                self.stops.pop();
            }
        }
    }
}

struct Partitioner<'c> {
    cands: &'c [Candidate],
    by_request: Vec<Vec<usize>>,
    share: Vec<f64>,
    full: u64,
    max_routes: usize,
    chosen: Vec<usize>,
    best: Option<(f64, Vec<Vec<Stop>>, Vec<usize>)>,
}

impl Partitioner<'_> {
    fn leaf(&mut self) {
        let mut picks: Vec<&Candidate> = self.chosen.iter().map(|&i| &self.cands[i]).collect();
        picks.sort_by(|a, b| a.stops.cmp(&b.stops));
        let total = super::canonical_total(picks.iter().map(|c| c.energy));
        let key: Vec<Vec<Stop>> = picks.iter().map(|c| c.stops.clone()).collect();
        let better = match &self.best {
            None => true,
            Some((bt, bk, _)) => total < *bt || (total == *bt && key < *bk),
        };
        if better {
            self.best = Some((total, key, self.chosen.clone()));
        }
    }

    fn search(&mut self, budget: &mut Budget, covered: u64, partial: f64) {
        if !budget.tick() {
            return;
        }
        if covered == self.full {
            self.leaf();
            return;
        }
        if self.chosen.len() >= self.max_routes {
            return;
        }
        let uncovered = self.full & !covered;
        let bound = partial
            + (0..64)
                .filter(|r| uncovered >> r & 1 == 1)
                .map(|r| self.share[r])
                .sum::<f64>();
        if let Some((best, _, _)) = &self.best {
            if bound > best + 1e-9 * (1.0 + best.abs()) {
                return;
            }
        }
        let r = uncovered.trailing_zeros() as usize;
        for k in 0..self.by_request[r].len() {
            let idx = self.by_request[r][k];
            let cand = &self.cands[idx];
            if cand.mask & covered != 0 {
                continue;
            }
            let (mask, energy) = (cand.mask, cand.energy);
            self.chosen.push(idx);
            self.search(budget, covered | mask, partial + energy);
            self.chosen.pop();
            if budget.exhausted {
                return;
            }
        }
    }
}

/// Minimum-total-energy route set covering every request exactly once.
///
/// Returns `SolveStatus::Optimal` when the search completed, otherwise
/// the best incumbent with `SolveStatus::LimitsExhausted`.
pub fn solve_exact(inst: &EvrpInstance, limits: ExactLimits) -> Result<EvrpSolution, EvrpError> {
    let prep = Prepared::new(inst)?;
    let n_req = inst.requests.len();
    if n_req > 63 {
        return Err(EvrpError::Instance(format!(
            "exact solver handles at most 63 requests, got {n_req}"
        )));
    }
    if inst.stations.len() > 64 {
        return Err(EvrpError::Instance("too many route stations".into()));
    }
    let mut budget = Budget {
        limits,
        start: Instant::now(),
        nodes: 0,
        exhausted: false,
    };
    if n_req == 0 {
        return Ok(EvrpSolution::from_routes(Vec::new(), SolveStatus::Optimal, 0));
    }

    let mut en = Enumerator {
        prep: &prep,
        budget: &mut budget,
        best: HashMap::new(),
        stops: vec![Stop::DepotStart],
    };
    let (a0, _) = prep.window(Stop::DepotStart);
    en.dfs(Label {
        loc: prep.d1,
        w: a0,
        y: 0,
        e: inst.battery_kwh,
        energy: 0.0,
        picked: 0,
        onboard: 0,
        stations: 0,
        at_depot: false,
    });
    let mut cands: Vec<Candidate> = en.best.into_values().collect();
    cands.sort_by(|a, b| a.stops.cmp(&b.stops));
    log::debug!("{} request sets have a feasible route", cands.len());

    let mut by_request = vec![Vec::new(); n_req];
    let mut share = vec![f64::INFINITY; 64];
    for (i, c) in cands.iter().enumerate() {
        let size = c.mask.count_ones() as f64;
        for (r, list) in by_request.iter_mut().enumerate() {
            if c.mask >> r & 1 == 1 {
                list.push(i);
                share[r] = share[r].min(c.energy / size);
            }
        }
    }
    if !budget.exhausted {
        if let Some(r) = (0..n_req).find(|&r| by_request[r].is_empty()) {
            return Err(EvrpError::Infeasible {
                request: r,
                id: inst.requests[r].id.clone(),
            });
        }
    }
    for list in &mut by_request {
        list.sort_by(|&a, &b| {
            cands[a]
                .energy
                .total_cmp(&cands[b].energy)
                .then_with(|| cands[a].stops.cmp(&cands[b].stops))
        });
    }

    let mut part = Partitioner {
        cands: &cands,
        by_request,
        share,
        full: (1u64 << n_req) - 1,
        max_routes: prep.max_routes(),
        chosen: Vec::new(),
        best: None,
    };
    part.search(&mut budget, 0, 0.0);
    let status = if budget.exhausted {
        SolveStatus::LimitsExhausted
    } else {
        SolveStatus::Optimal
    };
    let Some((_, _, chosen)) = part.best else {
        if budget.exhausted {
            return Err(EvrpError::NoIncumbent);
        }
        return Err(EvrpError::Instance(format!(
            "no partition into at most {} routes is feasible",
            prep.max_routes()
        )));
    };
    let mut routes = Vec::with_capacity(chosen.len());
    for idx in chosen {
        let checked = check(&prep, &cands[idx].stops, inst.battery_kwh)?;
        debug_assert!(checked.is_valid(), "{:?}", checked.violations);
        routes.push(checked.route);
    }
    Ok(EvrpSolution::from_routes(routes, status, budget.nodes))
}
