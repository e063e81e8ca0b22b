//! Bit-vector layout: the charging part first, vehicle-major, then station,
//! then interval; each slot is one bit (charge) or two bits (charge,
//! discharge) when the station may discharge. The assignment part follows,
//! route-major: `a[s=0][k=0], a[0][1], ..`.

use super::{Action, Schedule, ScheduleError, SchedulingInstance};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub vehicles: usize,
    pub stations: usize,
    pub intervals: usize,
    pub routes: usize,
    /// Bits per (station, interval) slot.
    pub slot_bits: Vec<usize>,
}

impl Layout {
    pub fn of(inst: &SchedulingInstance) -> Self {
        Self {
            vehicles: inst.vehicles.len(),
            stations: inst.stations.len(),
            intervals: inst.horizon.intervals,
            routes: inst.tasks.len(),
            slot_bits: (0..inst.stations.len())
                .map(|x| if inst.discharge_allowed(x) { 2 } else { 1 })
                .collect(),
        }
    }

    fn vehicle_bits(&self) -> usize {
        self.slot_bits.iter().sum::<usize>() * self.intervals
    }

    pub fn charging_len(&self) -> usize {
        self.vehicles * self.vehicle_bits()
    }

    pub fn len(&self) -> usize {
        self.charging_len() + self.routes * self.vehicles
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// First bit of the slot of vehicle `k`, station `x`, interval `i`.
    pub fn slot(&self, k: usize, x: usize, i: usize) -> usize {
        let before: usize = self.slot_bits[..x].iter().sum::<usize>() * self.intervals;
        k * self.vehicle_bits() + before + i * self.slot_bits[x]
    }

    pub fn assign_bit(&self, s: usize, k: usize) -> usize {
        self.charging_len() + s * self.vehicles + k
    }
}

/// Decoded schedule plus the structural defects that make it infeasible.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub schedule: Schedule,
    pub defects: Vec<String>,
}

pub fn encode(schedule: &Schedule, inst: &SchedulingInstance) -> Result<Vec<bool>, ScheduleError> {
    inst.check_shape(schedule)?;
    let lay = Layout::of(inst);
    let mut bits = vec![false; lay.len()];
    for (k, row) in schedule.actions.iter().enumerate() {
        for (i, a) in row.iter().enumerate() {
            match *a {
                Action::Idle => {}
                Action::Charge(x) => {
                    if x >= lay.stations {
                        return Err(ScheduleError::UnknownStation(x));
                    }
                    bits[lay.slot(k, x, i)] = true;
                }
                Action::Discharge(x) => {
                    if x >= lay.stations {
                        return Err(ScheduleError::UnknownStation(x));
                    }
                    if lay.slot_bits[x] != 2 {
                        return Err(ScheduleError::Shape(format!(
                            "discharge at station {x} has no encoding"
                        )));
                    }
                    bits[lay.slot(k, x, i) + 1] = true;
                }
            }
        }
    }
    for (k, row) in schedule.assign.iter().enumerate() {
        for (s, &a) in row.iter().enumerate() {
            bits[lay.assign_bit(s, k)] = a;
        }
    }
    Ok(bits)
}

pub fn decode(bits: &[bool], inst: &SchedulingInstance) -> Result<Decoded, ScheduleError> {
    let lay = Layout::of(inst);
    if bits.len() != lay.len() {
        return Err(ScheduleError::Shape(format!(
            "vector has {} bits, layout needs {}",
            bits.len(),
            lay.len()
        )));
    }
    let mut schedule = Schedule::idle(lay.vehicles, lay.routes, lay.intervals);
    let mut defects = Vec::new();
    for k in 0..lay.vehicles {
        for i in 0..lay.intervals {
            let mut found: Vec<Action> = Vec::new();
            for x in 0..lay.stations {
                let b = lay.slot(k, x, i);
                let charge = bits[b];
                let discharge = lay.slot_bits[x] == 2 && bits[b + 1];
                match (charge, discharge) {
                    (true, true) => defects.push(format!(
                        "vehicle {k} interval {i}: charge and discharge at station {x}"
                    )),
                    (true, false) => found.push(Action::Charge(x)),
                    (false, true) => found.push(Action::Discharge(x)),
                    (false, false) => {}
                }
            }
            if found.len() > 1 {
                defects.push(format!("vehicle {k} interval {i}: {} actions", found.len()));
            }
            if let Some(&a) = found.first() {
                schedule.actions[k][i] = a;
            }
        }
    }
    for s in 0..lay.routes {
        for k in 0..lay.vehicles {
            schedule.assign[k][s] = bits[lay.assign_bit(s, k)];
        }
    }
    Ok(Decoded { schedule, defects })
}
