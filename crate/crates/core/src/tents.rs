//! Advancing-front tent pitching.
//!
//! The front is a per-vertex time `tau`. Pitching a tent at a vertex raises
//! its time by the vertex's potential advance while keeping every edge slope
//! below `C_T / c_e`. A slab is complete once every vertex reaches `t_slab`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mapping::TentMap;
use crate::mesh::{SpatialMesh, VertexPatch};

#[derive(Debug, Error, PartialEq)]
pub enum PitchError {
    #[error("ready set is empty")]
    EmptyReadySet,
    #[error("front stalled: {remaining} vertices below the slab top, none ready (lowest time {min_tau})")]
    StalledFront { remaining: usize, min_tau: f64 },
    #[error("invalid pitching parameters: {0}")]
    InvalidParams(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PitchParams {
    /// Fraction of the flat-front pole height a vertex must be able to
    /// advance before it becomes ready.
    pub gamma: f64,
    /// Shape constant relating edge slopes to element gradients.
    pub c_tau: f64,
    pub t_slab: f64,
    /// Wavespeed bound per mesh edge.
    pub edge_speeds: Vec<f64>,
}

impl PitchParams {
    /// Uniform wavespeed, `gamma = 1/2` and `C_T = sin(theta_min)`.
    pub fn uniform(mesh: &SpatialMesh, speed: f64, t_slab: f64) -> Self {
        Self {
            gamma: 0.5,
            c_tau: default_c_tau(mesh),
            t_slab,
            edge_speeds: vec![speed; mesh.num_edges()],
        }
    }

    pub fn validate(&self, num_edges: usize) -> Result<(), PitchError> {
        let bad = |m: String| Err(PitchError::InvalidParams(m));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad(format!("gamma must lie in (0, 1), got {}", self.gamma));
        }
        if !(self.c_tau > 0.0 && self.c_tau.is_finite()) {
            return bad(format!("C_T must be positive, got {}", self.c_tau));
        }
        if !(self.t_slab > 0.0 && self.t_slab.is_finite()) {
            return bad(format!("slab height must be positive, got {}", self.t_slab));
        }
        if self.edge_speeds.len() != num_edges {
            return bad(format!(
                "{} edge speeds for {} edges",
                self.edge_speeds.len(),
                num_edges
            ));
        }
        if let Some(c) = self.edge_speeds.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
            return bad(format!("edge speeds must be positive, got {c}"));
        }
        Ok(())
    }
}

/// `sin(theta_min)`: for a linear function on a triangle whose smallest
/// angle is `theta_min`, edge slopes bounded by `s` imply a gradient bounded
/// by `s / sin(theta_min)`.
pub fn default_c_tau(mesh: &SpatialMesh) -> f64 {
    mesh.quality().min_angle.sin()
}

/// Per-vertex front data over an arbitrary edge graph.
#[derive(Clone, Debug)]
pub struct AdvancingFront {
    tau: Vec<f64>,
    ktilde: Vec<f64>,
    ref_height: Vec<f64>,
    /// `(neighbor, |e| C_T / c_e)` per vertex.
    adjacency: Vec<Vec<(usize, f64)>>,
    ready: BTreeSet<(u64, usize)>,
    gamma: f64,
    t_slab: f64,
}

/// One pitch: the center vertex and its time before and after.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pitch {
    pub vertex: usize,
    pub tau_bot: f64,
    pub tau_top: f64,
}

impl AdvancingFront {
    pub fn new(mesh: &SpatialMesh, params: &PitchParams) -> Result<Self, PitchError> {
        params.validate(mesh.num_edges())?;
        let edges: Vec<(usize, usize, f64)> = (0..mesh.num_edges())
            .map(|i| {
                let [a, b] = mesh.edge(i);
                (a, b, mesh.edge_length(i))
            })
            .collect();
        Self::from_graph(mesh.num_vertices(), &edges, params)
    }

    /// Front over a graph given as `(a, b, length)` edges; `params.edge_speeds`
    /// is indexed like `edges`.
    pub fn from_graph(
        num_vertices: usize,
        edges: &[(usize, usize, f64)],
        params: &PitchParams,
    ) -> Result<Self, PitchError> {
        params.validate(edges.len())?;
        let mut adjacency = vec![Vec::new(); num_vertices];
        for (&(a, b, len), &c) in edges.iter().zip(&params.edge_speeds) {
            let limit = len * params.c_tau / c;
            adjacency[a].push((b, limit));
            adjacency[b].push((a, limit));
        }
        let ref_height: Vec<f64> = adjacency
            .iter()
            .map(|nb| nb.iter().map(|&(_, s)| s).fold(f64::INFINITY, f64::min))
            .collect();
        let mut front = Self {
            tau: vec![0.0; num_vertices],
            ktilde: vec![0.0; num_vertices],
            ref_height,
            adjacency,
            ready: BTreeSet::new(),
            gamma: params.gamma,
            t_slab: params.t_slab,
        };
        for v in 0..num_vertices {
            front.refresh(v);
        }
        Ok(front)
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn ktilde(&self) -> &[f64] {
        &self.ktilde
    }

    pub fn ref_heights(&self) -> &[f64] {
        &self.ref_height
    }

    pub fn ready_set(&self) -> Vec<usize> {
        self.ready.iter().map(|&(_, v)| v).collect()
    }

    pub fn is_complete(&self) -> bool {
        self.tau.iter().all(|&t| t >= self.t_slab)
    }

    fn is_ready(&self, v: usize) -> bool {
        let (tau, k) = (self.tau[v], self.ktilde[v]);
        // Vertices that can reach the slab top are ready even if the
        // remaining gap is below gamma * r; otherwise the front could stall
        // just below t_slab.
        tau < self.t_slab && k > 0.0 && (k >= self.gamma * self.ref_height[v] || tau + k >= self.t_slab)
    }

    fn refresh(&mut self, v: usize) {
        self.ready.remove(&(self.tau[v].to_bits(), v));
        let mut k = self.t_slab - self.tau[v];
        for &(w, limit) in &self.adjacency[v] {
            k = k.min(self.tau[w] - self.tau[v] + limit);
        }
        self.ktilde[v] = k.max(0.0);
        if self.is_ready(v) {
            self.ready.insert((self.tau[v].to_bits(), v));
        }
    }

    /// Raises the ready vertex with the smallest time (ties: smallest index).
    pub fn pitch(&mut self) -> Result<Pitch, PitchError> {
        let &(_, v) = self.ready.iter().next().ok_or_else(|| {
            if self.is_complete() {
                PitchError::EmptyReadySet
            } else {
                self.stall()
            }
        })?;
        self.pitch_at(v)
    }

    /// Raises vertex `v`, which must be in the ready set.
    pub fn pitch_at(&mut self, v: usize) -> Result<Pitch, PitchError> {
        if !self.ready.contains(&(self.tau[v].to_bits(), v)) {
            return Err(PitchError::EmptyReadySet);
        }
        let tau_bot = self.tau[v];
        let mut tau_top = tau_bot + self.ktilde[v];
        if (self.t_slab - tau_top).abs() <= 1e-12 * self.t_slab {
            tau_top = self.t_slab;
        }
        self.ready.remove(&(tau_bot.to_bits(), v));
        self.tau[v] = tau_top;
        self.refresh(v);
        let nbrs: Vec<usize> = self.adjacency[v].iter().map(|&(w, _)| w).collect();
        for w in nbrs {
            self.refresh(w);
        }
        Ok(Pitch {
            vertex: v,
            tau_bot,
            tau_top,
        })
    }

    fn stall(&self) -> PitchError {
        let below: Vec<f64> = self.tau.iter().cloned().filter(|&t| t < self.t_slab).collect();
        PitchError::StalledFront {
            remaining: below.len(),
            min_tau: below.iter().cloned().fold(f64::INFINITY, f64::min),
        }
    }

    /// Largest `|tau(a) - tau(b)| / limit(a, b)` over all edges; at most 1
    /// on a valid front.
    pub fn max_slope_ratio(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (a, nb) in self.adjacency.iter().enumerate() {
            for &(b, limit) in nb {
                worst = worst.max((self.tau[a] - self.tau[b]).abs() / limit);
            }
        }
        worst
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Tent {
    pub id: usize,
    pub center: usize,
    pub pole_height: f64,
    pub layer: usize,
    /// Patch vertices, center first.
    pub vertices: Vec<usize>,
    pub tau_bot: Vec<f64>,
    pub tau_top: Vec<f64>,
    /// Patch elements, ascending.
    pub elements: Vec<usize>,
    #[serde(skip)]
    pub patch: VertexPatch,
}

impl Tent {
    /// `(tau_bot, tau_top)` at a global vertex of the patch.
    pub fn times_at(&self, vertex: usize) -> Option<(f64, f64)> {
        self.patch
            .local_vertex(vertex)
            .map(|k| (self.tau_bot[k], self.tau_top[k]))
    }
}

/// Tents meshing `Omega_0 x (0, t_slab)`, in pitch order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TentSlab {
    pub t_slab: f64,
    pub tents: Vec<Tent>,
    /// Tent ids per layer, in pitch order.
    pub layers: Vec<Vec<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SlabStats {
    pub tents: usize,
    pub layers: usize,
    pub min_pole: f64,
    pub max_pole: f64,
}

impl TentSlab {
    pub fn stats(&self) -> SlabStats {
        let poles = self.tents.iter().map(|t| t.pole_height);
        SlabStats {
            tents: self.tents.len(),
            layers: self.layers.len(),
            min_pole: poles.clone().fold(f64::INFINITY, f64::min),
            max_pole: poles.fold(0.0, f64::max),
        }
    }
}

/// Pitches tents until every vertex reaches `params.t_slab`.
///
/// A tent's layer is one more than the latest layer among earlier tents
/// whose patches overlap it, so every layer only depends on earlier layers
/// and patches within a layer are disjoint.
pub fn pitch_slab(mesh: &SpatialMesh, params: &PitchParams) -> Result<TentSlab, PitchError> {
    let mut front = AdvancingFront::new(mesh, params)?;
    let mut tents = Vec::new();
    let mut layers: Vec<Vec<usize>> = Vec::new();
    // layer of the most recent tent centered at each vertex
    let mut last_layer: Vec<Option<usize>> = vec![None; mesh.num_vertices()];
    while !front.is_complete() {
        let pitch = front.pitch()?;
        let v = pitch.vertex;
        let patch = mesh.vertex_patch(v).expect("valid vertex");
        let layer = std::iter::once(v)
            .chain(mesh.neighbors(v))
            .filter_map(|w| last_layer[w])
            .max()
            .map_or(0, |l| l + 1);
        last_layer[v] = Some(layer);
        let tau_top: Vec<f64> = patch.vertices.iter().map(|&w| front.tau()[w]).collect();
        let mut tau_bot = tau_top.clone();
        tau_bot[0] = pitch.tau_bot;
        let id = tents.len();
        if layers.len() <= layer {
            layers.resize(layer + 1, Vec::new());
        }
        layers[layer].push(id);
        tents.push(Tent {
            id,
            center: v,
            pole_height: pitch.tau_top - pitch.tau_bot,
            layer,
            vertices: patch.vertices.clone(),
            tau_bot,
            tau_top,
            elements: patch.elements.clone(),
            patch,
        });
    }
    Ok(TentSlab {
        t_slab: params.t_slab,
        tents,
        layers,
    })
}

/// Whether `speed * |grad_x phi| < 1 - margin` on every element of the tent
/// at the bottom and top fronts. `element_speeds` is indexed like the map's
/// elements.
pub fn causality_check(map: &TentMap, element_speeds: &[f64], margin: f64) -> bool {
    (0..map.num_elements()).all(|k| {
        let c = element_speeds[k];
        [0.0, 1.0].iter().all(|&t| {
            let g = map.grad_phi(k, t);
            c * (g[0] * g[0] + g[1] * g[1]).sqrt() < 1.0 - margin
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_params(t_slab: f64) -> PitchParams {
        PitchParams {
            gamma: 0.5,
            c_tau: 0.5,
            t_slab,
            edge_speeds: vec![1.0, 1.0],
        }
    }

    #[test]
    fn path_graph_hand_execution() {
        // A - B - C with unit edges, C_T / c = 0.5
        let edges = [(0, 1, 1.0), (1, 2, 1.0)];
        let mut f = AdvancingFront::from_graph(3, &edges, &path_params(2.0)).unwrap();
        assert_eq!(f.ktilde(), &[0.5, 0.5, 0.5]);
        let p = f.pitch_at(1).unwrap();
        assert_eq!((p.tau_bot, p.tau_top), (0.0, 0.5));
        // step 4: min(t_slab - 0, 0.5 - 0 + 0.5) = 1.0 for A and C;
        // B: min(2 - 0.5, 0 - 0.5 + 0.5) = 0
        assert_eq!(f.ktilde(), &[1.0, 0.0, 1.0]);
        assert_eq!(f.ready_set(), vec![0, 2]);
    }

    #[test]
    fn init_front_clamps_to_slab() {
        let m = SpatialMesh::structured_square(1).unwrap();
        let mut p = PitchParams::uniform(&m, 1.0, 10.0);
        p.c_tau = 0.5;
        let f = AdvancingFront::new(&m, &p).unwrap();
        let center = m.vertices().iter().position(|&q| q == [0.5, 0.5]).unwrap();
        assert!((f.ref_heights()[center] - 0.25).abs() < 1e-15);
        assert_eq!(f.ktilde()[center], 0.25);
        assert_eq!(f.ready_set().len(), 9);
        p.t_slab = 0.1;
        let f = AdvancingFront::new(&m, &p).unwrap();
        assert!(f.ktilde().iter().all(|&k| k == 0.1));
    }

    #[test]
    fn params_are_validated() {
        let m = SpatialMesh::structured_square(0).unwrap();
        let mut p = PitchParams::uniform(&m, 1.0, 0.1);
        p.gamma = 1.0;
        assert!(matches!(AdvancingFront::new(&m, &p), Err(PitchError::InvalidParams(_))));
        let mut p = PitchParams::uniform(&m, 1.0, 0.1);
        p.edge_speeds[0] = 0.0;
        assert!(AdvancingFront::new(&m, &p).is_err());
    }

    #[test]
    fn completed_front_reports_empty_ready_set() {
        let edges = [(0, 1, 1.0), (1, 2, 1.0)];
        let mut f = AdvancingFront::from_graph(3, &edges, &path_params(0.25)).unwrap();
        while !f.is_complete() {
            f.pitch().unwrap();
        }
        assert_eq!(f.pitch(), Err(PitchError::EmptyReadySet));
    }

    #[test]
    fn pitching_keeps_slopes_bounded_and_monotone() {
        let m = SpatialMesh::step_channel(0.3, 0.08).unwrap();
        let speeds: Vec<f64> = (0..m.num_edges()).map(|i| 1.0 + (i % 7) as f64 * 0.3).collect();
        let mut p = PitchParams::uniform(&m, 1.0, 0.3);
        p.edge_speeds = speeds;
        let mut f = AdvancingFront::new(&m, &p).unwrap();
        let mut prev = f.tau().to_vec();
        while !f.is_complete() {
            f.pitch().unwrap();
            assert!(f.max_slope_ratio() <= 1.0 + 1e-12);
            assert!(f.tau().iter().zip(&prev).all(|(a, b)| a >= b));
            prev = f.tau().to_vec();
        }
    }

    #[test]
    fn slab_tents_satisfy_invariants() {
        let m = SpatialMesh::structured_square(2).unwrap();
        let p = PitchParams::uniform(&m, 1.0, 0.2);
        let slab = pitch_slab(&m, &p).unwrap();
        for t in &slab.tents {
            assert!(t.pole_height > 0.0);
            assert_eq!(t.tau_top[0] - t.tau_bot[0], t.pole_height);
            assert_eq!(&t.tau_top[1..], &t.tau_bot[1..]);
        }
        let again = pitch_slab(&m, &p).unwrap();
        assert_eq!(slab, again);
        let s = slab.stats();
        assert_eq!(s.tents, slab.tents.len());
        assert!(s.min_pole <= s.max_pole);
    }
}
