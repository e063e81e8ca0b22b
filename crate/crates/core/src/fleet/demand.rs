//! Hourly demand templates expanded into transport requests.

use serde::{Deserialize, Serialize};

use crate::evrp::TransportRequest;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandStream {
    pub pickup: String,
    pub delivery: String,
    pub q: u32,
}

/// Every stream produces one request per hour in `first_hour..=last_hour`.
/// The pickup window closes on the hour and opens `pickup_window_min`
/// earlier; delivery is due within `ride_limit_min` of the window end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandSpec {
    pub horizon_start_hour: f64,
    pub first_hour: u32,
    pub last_hour: u32,
    pub pickup_window_min: f64,
    pub ride_limit_min: f64,
    /// Recorded in reports only; the objective has no revenue term.
    #[serde(default)]
    pub fare_per_passenger: f64,
    pub streams: Vec<DemandStream>,
}

impl DemandSpec {
    pub fn blocks(&self) -> u32 {
        (self.last_hour + 1).saturating_sub(self.first_hour)
    }

    pub fn requests(&self) -> Vec<TransportRequest> {
        let mut out = Vec::new();
        for h in self.first_hour..=self.last_hour {
            let close = (h as f64 - self.horizon_start_hour) * 3600.0;
            let open = close - self.pickup_window_min * 60.0;
            for s in &self.streams {
                out.push(TransportRequest {
                    id: format!("{h:02}:00 {}", s.pickup),
                    pickup: s.pickup.clone(),
                    delivery: s.delivery.clone(),
                    q: s.q,
                    a: open,
                    b: close,
                    delivery_window: Some([open, close + self.ride_limit_min * 60.0]),
                });
            }
        }
        out
    }

    /// Which hourly block a request index belongs to.
    pub fn block_of(&self, request: usize) -> u32 {
        self.first_hour + (request / self.streams.len().max(1)) as u32
    }

    pub fn expected_revenue(&self) -> f64 {
        let pax: u32 = self.streams.iter().map(|s| s.q).sum();
        self.fare_per_passenger * (pax * self.blocks()) as f64
    }
}
