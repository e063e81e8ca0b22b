//! Road graph, minimum-energy paths, and the condensed energy graph used
//! by the router.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{edge_energy, EnergyError, NamedMatrix, SpeedProfile, VehicleParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadVertex {
    pub id: String,
    pub z_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoadEdge {
    pub from: usize,
    pub to: usize,
    pub profile: SpeedProfile,
}

/// Directed road network: key points with elevation, and one
/// representative speed profile per road section.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadGraph {
    vertices: Vec<RoadVertex>,
    edges: Vec<RoadEdge>,
    index: HashMap<String, usize>,
    edge_index: HashMap<(usize, usize), usize>,
}

impl RoadGraph {
    /// Edges are given as `(from id, to id, profile)`.
    pub fn new(
        vertices: Vec<RoadVertex>,
        edges: Vec<(String, String, SpeedProfile)>,
    ) -> Result<Self, EnergyError> {
        let mut index = HashMap::with_capacity(vertices.len());
        for (i, v) in vertices.iter().enumerate() {
            if !v.z_m.is_finite() {
                return Err(EnergyError::Graph(format!("vertex {}: elevation not finite", v.id)));
            }
            if index.insert(v.id.clone(), i).is_some() {
                return Err(EnergyError::Graph(format!("duplicate vertex {}", v.id)));
            }
        }
        let mut edge_index = HashMap::with_capacity(edges.len());
        let mut out = Vec::with_capacity(edges.len());
        for (from, to, profile) in edges {
            let f = *index
                .get(&from)
                .ok_or_else(|| EnergyError::Graph(format!("edge from unknown vertex {from}")))?;
            let t = *index
                .get(&to)
                .ok_or_else(|| EnergyError::Graph(format!("edge to unknown vertex {to}")))?;
            if edge_index.insert((f, t), out.len()).is_some() {
                return Err(EnergyError::Graph(format!("duplicate edge {from} -> {to}")));
            }
            out.push(RoadEdge {
                from: f,
                to: t,
                profile,
            });
        }
        Ok(Self {
            vertices,
            edges: out,
            index,
            edge_index,
        })
    }

    pub fn vertices(&self) -> &[RoadVertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[RoadEdge] {
        &self.edges
    }

    pub fn vertex_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    fn require(&self, id: &str) -> Result<usize, EnergyError> {
        self.vertex_index(id)
            .ok_or_else(|| EnergyError::Path(format!("unknown vertex {id}")))
    }

    pub fn edge(&self, from: usize, to: usize) -> Option<&RoadEdge> {
        self.edge_index.get(&(from, to)).map(|&e| &self.edges[e])
    }

    /// Energy of one edge, elevation change taken from its endpoints.
    pub fn edge_energy(
        &self,
        params: &VehicleParams,
        edge: &RoadEdge,
        clamp_regen: bool,
    ) -> Result<f64, EnergyError> {
        let dz = self.vertices[edge.to].z_m - self.vertices[edge.from].z_m;
        edge_energy(params, &edge.profile, dz, clamp_regen)
    }

    /// Energy of every edge, in edge order.
    pub fn edge_energies(
        &self,
        params: &VehicleParams,
        clamp_regen: bool,
    ) -> Result<Vec<f64>, EnergyError> {
        self.edges
            .iter()
            .map(|e| self.edge_energy(params, e, clamp_regen))
            .collect()
    }
}

/// Energy of a vertex sequence: sum of its edge energies.
pub fn path_energy(
    graph: &RoadGraph,
    params: &VehicleParams,
    path: &[&str],
    clamp_regen: bool,
) -> Result<f64, EnergyError> {
    let mut total = 0.0;
    for pair in path.windows(2) {
        let (a, b) = (graph.require(pair[0])?, graph.require(pair[1])?);
        let edge = graph
            .edge(a, b)
            .ok_or_else(|| EnergyError::Path(format!("no edge {} -> {}", pair[0], pair[1])))?;
        total += graph.edge_energy(params, edge, clamp_regen)?;
    }
    if path.len() == 1 {
        graph.require(path[0])?;
    }
    Ok(total)
}

struct ShortestPaths {
    dist: Vec<f64>,
    pred_edge: Vec<Option<usize>>,
}

/// Bellman-Ford from `src` over precomputed edge weights. Tolerates
/// negative weights; a negative cycle reachable from `src` is an error.
fn bellman_ford(
    graph: &RoadGraph,
    weights: &[f64],
    src: usize,
) -> Result<ShortestPaths, EnergyError> {
    let n = graph.vertices.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred_edge = vec![None; n];
    dist[src] = 0.0;
    for _ in 1..n.max(2) {
        let mut changed = false;
        for (e, edge) in graph.edges.iter().enumerate() {
            let cand = dist[edge.from] + weights[e];
            if dist[edge.from].is_finite() && cand < dist[edge.to] {
                dist[edge.to] = cand;
                pred_edge[edge.to] = Some(e);
                changed = true;
            }
        }
        if !changed {
            return Ok(ShortestPaths { dist, pred_edge });
        }
    }
    for (e, edge) in graph.edges.iter().enumerate() {
        if dist[edge.from].is_finite() && dist[edge.from] + weights[e] < dist[edge.to] {
            return Err(EnergyError::NegativeCycle(graph.vertices[src].id.clone()));
        }
    }
    Ok(ShortestPaths { dist, pred_edge })
}

fn trace_path(graph: &RoadGraph, sp: &ShortestPaths, src: usize, dst: usize) -> Vec<usize> {
    let mut path = vec![dst];
    let mut at = dst;
    while at != src {
        let e = sp.pred_edge[at].expect("reachable vertex has a predecessor");
        at = graph.edges[e].from;
        path.push(at);
    }
    path.reverse();
    path
}

/// Minimum-energy path from `src` to `dst`, as vertex ids with its energy.
/// `src == dst` yields the single-vertex path with zero energy.
pub fn min_energy_path(
    graph: &RoadGraph,
    params: &VehicleParams,
    src: &str,
    dst: &str,
    clamp_regen: bool,
) -> Result<(Vec<String>, f64), EnergyError> {
    let s = graph.require(src)?;
    let d = graph.require(dst)?;
    if s == d {
        return Ok((vec![src.to_owned()], 0.0));
    }
    let weights = graph.edge_energies(params, clamp_regen)?;
    let sp = bellman_ford(graph, &weights, s)?;
    if !sp.dist[d].is_finite() {
        return Err(EnergyError::NoPath {
            from: src.into(),
            to: dst.into(),
        });
    }
    let ids = trace_path(graph, &sp, s, d)
        .into_iter()
        .map(|v| graph.vertices[v].id.clone())
        .collect();
    Ok((ids, sp.dist[d]))
}

/// How the condensed graph gets its travel times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeModel {
    /// Sum of the durations of the profiles along the chosen path.
    ProfileDurations,
    /// Path distance (integrated from the profiles) over a fixed speed.
    AverageSpeed { mps: f64 },
}

/// Complete directed graph over the router's nodes: energy `c[i][j]`
/// (kWh, may be negative) and travel time `t[i][j]` (s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyGraph {
    pub names: Vec<String>,
    pub energy_kwh: Vec<Vec<f64>>,
    pub time_s: Vec<Vec<f64>>,
    /// Underlying road path per pair; empty when built from tables.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub paths: Vec<Vec<Vec<String>>>,
}

impl EnergyGraph {
    pub fn from_matrices(energy: NamedMatrix, time: NamedMatrix) -> Result<Self, EnergyError> {
        if energy.names != time.names {
            return Err(EnergyError::Matrix(
                "energy and time matrices list different nodes".into(),
            ));
        }
        if let Some(row) = time.values.iter().flatten().find(|t| **t < 0.0) {
            return Err(EnergyError::Matrix(format!("negative travel time {row}")));
        }
        Ok(Self {
            names: energy.names,
            energy_kwh: energy.values,
            time_s: time.values,
            paths: Vec::new(),
        })
    }

    /// Energy table plus a distance table (km) driven at a uniform speed.
    pub fn from_tables(
        energy: NamedMatrix,
        distance_km: &NamedMatrix,
        speed_kmh: f64,
    ) -> Result<Self, EnergyError> {
        if !(speed_kmh > 0.0) {
            return Err(EnergyError::Parameter(format!(
                "average speed must be positive, got {speed_kmh}"
            )));
        }
        let time = NamedMatrix::new(
            distance_km.names.clone(),
            distance_km
                .values
                .iter()
                .map(|row| row.iter().map(|km| km / speed_kmh * 3600.0).collect())
                .collect(),
        )?;
        Self::from_matrices(energy, time)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn energy(&self, i: usize, j: usize) -> f64 {
        self.energy_kwh[i][j]
    }

    pub fn time(&self, i: usize, j: usize) -> f64 {
        self.time_s[i][j]
    }

    pub fn energy_matrix(&self) -> NamedMatrix {
        NamedMatrix {
            names: self.names.clone(),
            values: self.energy_kwh.clone(),
        }
    }

    pub fn time_matrix(&self) -> NamedMatrix {
        NamedMatrix {
            names: self.names.clone(),
            values: self.time_s.clone(),
        }
    }
}

/// All-pairs minimum-energy paths among `node_set`.
pub fn build_energy_graph(
    graph: &RoadGraph,
    params: &VehicleParams,
    node_set: &[&str],
    time_model: TimeModel,
    clamp_regen: bool,
) -> Result<EnergyGraph, EnergyError> {
    let idx: Vec<usize> = node_set
        .iter()
        .map(|id| graph.require(id))
        .collect::<Result<_, _>>()?;
    if let TimeModel::AverageSpeed { mps } = time_model {
        if !(mps > 0.0) {
            return Err(EnergyError::Parameter(format!(
                "average speed must be positive, got {mps}"
            )));
        }
    }
    let weights = graph.edge_energies(params, clamp_regen)?;
    let n = idx.len();
    let mut energy = vec![vec![0.0; n]; n];
    let mut time = vec![vec![0.0; n]; n];
    let mut paths = vec![vec![Vec::new(); n]; n];
    for (i, &s) in idx.iter().enumerate() {
        let sp = bellman_ford(graph, &weights, s)?;
        for (j, &d) in idx.iter().enumerate() {
            if s == d {
                paths[i][j] = vec![node_set[i].to_owned()];
                continue;
            }
            if !sp.dist[d].is_finite() {
                return Err(EnergyError::NoPath {
                    from: node_set[i].into(),
                    to: node_set[j].into(),
                });
            }
            let vs = trace_path(graph, &sp, s, d);
            let mut t = 0.0;
            for pair in vs.windows(2) {
                let edge = graph.edge(pair[0], pair[1]).expect("path edge exists");
                t += match time_model {
                    TimeModel::ProfileDurations => edge.profile.duration(),
                    TimeModel::AverageSpeed { mps } => edge.profile.distance() / mps,
                };
            }
            energy[i][j] = sp.dist[d];
            time[i][j] = t;
            paths[i][j] = vs.iter().map(|&v| graph.vertices[v].id.clone()).collect();
        }
    }
    Ok(EnergyGraph {
        names: node_set.iter().map(|s| (*s).to_owned()).collect(),
        energy_kwh: energy,
        time_s: time,
        paths,
    })
}
