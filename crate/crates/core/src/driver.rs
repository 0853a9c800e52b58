//! Slab-by-slab orchestration: pitch tents, advance them layer by layer,
//! and keep the solution on the advancing front.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dg::{BoundaryData, DgSpace, PatchDg};
use crate::error::{Error, Result, SolveError};
use crate::laws::{ConservationLaw, Euler, EulerState, Wave};
use crate::mapping::TentMap;
use crate::mesh::SpatialMesh;
use crate::mixedfem::{apply_updates, wave_exact_standing, Dof, MixedSpace, WaveSolver, WaveState};
use crate::stepping::{explicit_tent_advance, radau_iia, ExplicitParams, TentReport};
use crate::tents::{default_c_tau, pitch_slab, PitchParams, TentSlab};

/// Bound on the characteristic speed used to pitch tents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SpeedBound {
    Constant { speed: f64 },
    /// `safety * max` wavespeed of the front state on the elements next to
    /// each edge, at least `floor`.
    State { safety: f64, floor: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PitchConfig {
    pub gamma: f64,
    /// `None` selects `sin(theta_min)` of the mesh.
    pub c_tau: Option<f64>,
    pub t_slab: f64,
    pub speed: SpeedBound,
}

impl Default for PitchConfig {
    fn default() -> Self {
        Self {
            gamma: 0.5,
            c_tau: None,
            t_slab: 0.1,
            speed: SpeedBound::Constant { speed: 1.0 },
        }
    }
}

impl PitchConfig {
    fn params(&self, mesh: &SpatialMesh, t_slab: f64, edge_speeds: Vec<f64>) -> PitchParams {
        PitchParams {
            gamma: self.gamma,
            c_tau: self.c_tau.unwrap_or_else(|| default_c_tau(mesh)),
            t_slab,
            edge_speeds,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    /// Tents one at a time in pitch order; the reference behaviour.
    #[default]
    Serial,
    /// Tents of a layer concurrently; results are written in tent order.
    Parallel,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunOptions {
    pub execution: Execution,
    /// Check that the dof write sets of tents in a layer are disjoint.
    pub audit: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub slabs: usize,
    pub tents: usize,
    pub layers: usize,
    /// Largest `nu_i` seen.
    pub max_nu: f64,
    /// Per element, the largest limited viscosity during the last slab.
    pub element_nu: Vec<f64>,
    pub viscous_substeps: usize,
    pub explicit_steps: usize,
    /// Smallest `1 - c |grad phi|` over all tents, `c` the pitch bound.
    pub min_causality_margin: f64,
    /// Overlapping writes found by the audit (always zero for valid slabs).
    pub audit_conflicts: usize,
}

/// Solution on the front after a number of slabs.
#[derive(Clone, Debug, PartialEq)]
pub struct FrontState<S> {
    pub time: f64,
    pub slab: usize,
    pub state: S,
    pub diagnostics: Diagnostics,
}

/// Slab heights covering `(0, t_max)`: full slabs then a remainder.
pub fn slab_heights(t_slab: f64, t_max: f64) -> Vec<f64> {
    let n = (t_max / t_slab * (1.0 + 1e-12)).floor() as usize;
    let mut out = vec![t_slab; n];
    let rest = t_max - n as f64 * t_slab;
    if rest > 1e-12 * t_max.max(t_slab) {
        out.push(rest);
    }
    out
}

fn causality_margin(mesh: &SpatialMesh, slab: &TentSlab, edge_speeds: &[f64]) -> f64 {
    let mut margin = f64::INFINITY;
    for tent in &slab.tents {
        let map = TentMap::new(mesh, tent);
        for k in 0..map.num_elements() {
            let c = mesh
                .element_edges(map.element(k))
                .iter()
                .map(|&e| edge_speeds[e])
                .fold(f64::INFINITY, f64::min);
            for g in [map.grad_bot(k), map.grad_top(k)] {
                margin = margin.min(1.0 - c * (g[0] * g[0] + g[1] * g[1]).sqrt());
            }
        }
    }
    margin
}

fn audit_layer<T: Clone + Eq + std::hash::Hash>(writes: &[Vec<T>]) -> usize {
    let mut seen = HashSet::new();
    let mut conflicts = 0;
    for set in writes {
        for w in set {
            if !seen.insert(w.clone()) {
                conflicts += 1;
            }
        }
    }
    conflicts
}

fn run_layer<T: Send>(ids: &[usize], exec: Execution, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    match exec {
        Execution::Serial => ids.iter().map(|&t| f(t)).collect(),
        Execution::Parallel => ids.par_iter().map(|&t| f(t)).collect(),
    }
}

/// Explicit DG problem: space, law and boundary data.
pub struct ExplicitProblem<'a, const L: usize> {
    pub space: &'a DgSpace,
    pub law: &'a dyn ConservationLaw<L>,
    pub bc: &'a BoundaryData<L>,
    pub params: &'a ExplicitParams,
    pub pitch: &'a PitchConfig,
}

impl<const L: usize> ExplicitProblem<'_, L> {
    /// Largest wavespeed per element of a flat-front state, sampled at the
    /// volume points.
    pub fn element_speeds(&self, state: &[[f64; L]], time: f64) -> Result<Vec<f64>> {
        let sp = self.space;
        (0..sp.mesh.num_elements())
            .map(|e| {
                let mut c: f64 = 0.0;
                for &bary in sp.volume_bary() {
                    let x = sp.point(e, bary);
                    let u = self.law.mapped_inverse(x, time, &sp.eval(state, e, bary), [0.0, 0.0])?;
                    c = c.max(self.law.max_wavespeed(x, time, &u)?);
                }
                Ok(c)
            })
            .collect()
    }

    fn edge_speeds(&self, state: &[[f64; L]], time: f64) -> Result<Vec<f64>> {
        let mesh = &self.space.mesh;
        match self.pitch.speed {
            SpeedBound::Constant { speed } => Ok(vec![speed; mesh.num_edges()]),
            SpeedBound::State { safety, floor } => {
                let ce = self.element_speeds(state, time)?;
                Ok((0..mesh.num_edges())
                    .map(|i| {
                        let (a, b) = mesh.edge_elements(i);
                        let c = b.map_or(ce[a], |b| ce[a].max(ce[b]));
                        (safety * c).max(floor)
                    })
                    .collect())
            }
        }
    }
}

/// Advances `u0` (coefficients of `g(u)` on the flat front at `t = 0`) to
/// `t_max`. `observer` sees the front after every slab.
pub fn run_explicit<const L: usize>(
    prob: &ExplicitProblem<'_, L>,
    u0: Vec<[f64; L]>,
    t_max: f64,
    opts: &RunOptions,
    mut observer: impl FnMut(&FrontState<Vec<[f64; L]>>),
) -> Result<FrontState<Vec<[f64; L]>>> {
    let mesh = &prob.space.mesh;
    let mut front = FrontState {
        time: 0.0,
        slab: 0,
        state: u0,
        diagnostics: Diagnostics {
            element_nu: vec![0.0; mesh.num_elements()],
            min_causality_margin: f64::INFINITY,
            ..Diagnostics::default()
        },
    };
    for (si, &height) in slab_heights(prob.pitch.t_slab, t_max).iter().enumerate() {
        let speeds = prob.edge_speeds(&front.state, front.time)?;
        let slab = pitch_slab(mesh, &prob.pitch.params(mesh, height, speeds.clone()))?;
        let d = &mut front.diagnostics;
        d.min_causality_margin = d.min_causality_margin.min(causality_margin(mesh, &slab, &speeds));
        d.element_nu.iter_mut().for_each(|v| *v = 0.0);
        let t0 = front.time;
        for (li, layer) in slab.layers.iter().enumerate() {
            let state = &front.state;
            let results = run_layer(layer, opts.execution, |t| {
                let tent = &slab.tents[t];
                let map = TentMap::new(mesh, tent);
                let patch = PatchDg::new(prob.space, prob.law, prob.bc, &map, t0);
                let local = patch.gather(state);
                explicit_tent_advance(&patch, &local, prob.params, t).map(|(u, r)| (u, r, map))
            });
            let mut writes = Vec::new();
            for res in results {
                let (u, report, map) = res.map_err(|source| Error::Solve {
                    slab: si,
                    layer: li,
                    source,
                })?;
                let patch = PatchDg::new(prob.space, prob.law, prob.bc, &map, t0);
                patch.scatter(&u, &mut front.state);
                record(&mut front.diagnostics, &map, &report);
                if opts.audit {
                    writes.push(map.elements().to_vec());
                }
            }
            front.diagnostics.audit_conflicts += audit_layer(&writes);
        }
        front.time = t0 + height;
        front.slab += 1;
        let d = &mut front.diagnostics;
        d.slabs += 1;
        d.tents += slab.tents.len();
        d.layers += slab.layers.len();
        observer(&front);
    }
    Ok(front)
}

fn record(d: &mut Diagnostics, map: &TentMap, r: &TentReport) {
    d.max_nu = d.max_nu.max(r.nu_max);
    d.viscous_substeps += r.viscous_substeps;
    d.explicit_steps += r.steps;
    for (k, &nu) in r.element_nu.iter().enumerate() {
        let e = map.element(k);
        d.element_nu[e] = d.element_nu[e].max(nu);
    }
}

/// Advances a wave state to `t_max` with the pitch speed of `pitch`
/// (which must be constant). Slabs of equal height share one pitch.
pub fn run_wave(
    solver: &WaveSolver,
    init: WaveState,
    pitch: &PitchConfig,
    t_max: f64,
    opts: &RunOptions,
    mut observer: impl FnMut(&FrontState<WaveState>),
) -> Result<FrontState<WaveState>> {
    let mesh = &solver.space.scalar.mesh;
    let SpeedBound::Constant { speed } = pitch.speed else {
        return Err(SolveError::Config("the wave solver needs a constant pitch speed".into()).into());
    };
    let speeds = vec![speed; mesh.num_edges()];
    let mut front = FrontState {
        time: 0.0,
        slab: 0,
        state: init,
        diagnostics: Diagnostics {
            min_causality_margin: f64::INFINITY,
            ..Diagnostics::default()
        },
    };
    let mut cached: Option<(f64, TentSlab)> = None;
    for (si, &height) in slab_heights(pitch.t_slab, t_max).iter().enumerate() {
        if cached.as_ref().is_none_or(|(h, _)| *h != height) {
            let slab = pitch_slab(mesh, &pitch.params(mesh, height, speeds.clone()))?;
            let d = &mut front.diagnostics;
            d.min_causality_margin = d.min_causality_margin.min(causality_margin(mesh, &slab, &speeds));
            cached = Some((height, slab));
        }
        let slab = &cached.as_ref().expect("slab pitched above").1;
        for (li, layer) in slab.layers.iter().enumerate() {
            let state = &front.state;
            let results = run_layer(layer, opts.execution, |t| solver.advance(&slab.tents[t], state));
            let mut writes: Vec<Vec<Dof>> = Vec::new();
            for res in results {
                let updates = res.map_err(|source| Error::Solve {
                    slab: si,
                    layer: li,
                    source,
                })?;
                apply_updates(&mut front.state, &updates);
                if opts.audit {
                    writes.push(updates.iter().map(|u| u.0).collect());
                }
            }
            front.diagnostics.audit_conflicts += audit_layer(&writes);
        }
        front.time += height;
        front.slab += 1;
        let d = &mut front.diagnostics;
        d.slabs += 1;
        d.tents += slab.tents.len();
        d.layers += slab.layers.len();
        observer(&front);
    }
    Ok(front)
}

/// `e^2 = ||q(t) - q_h||^2 + ||mu(t) - mu_h||^2` against the standing wave.
pub fn error_norm_wave(space: &MixedSpace, front: &WaveState, t: f64) -> f64 {
    space.error_norm(front, |x| wave_exact_standing(x, t))
}

/// Standing-wave run on the level-`l` unit square: slab `2^-l / 8`, pitch
/// speed 2, unit material. Returns the error norm at `t_max`.
pub fn standing_wave_error(level: u32, p: usize, stages: usize, t_max: f64, opts: &RunOptions) -> Result<f64> {
    let mesh = SpatialMesh::structured_square(level)?;
    let space = MixedSpace::new(&mesh, p);
    let init = space.interpolate(|x| wave_exact_standing(x, 0.0).0, |x| wave_exact_standing(x, 0.0).1);
    let solver = WaveSolver::new(space, Wave::unit(), radau_iia(stages)?);
    let pitch = PitchConfig {
        t_slab: 0.5f64.powi(level as i32) / 8.0,
        speed: SpeedBound::Constant { speed: 2.0 },
        ..PitchConfig::default()
    };
    let front = run_wave(&solver, init, &pitch, t_max, opts, |_| {})?;
    Ok(error_norm_wave(&solver.space, &front.state, front.time))
}

/// Least-squares slope of `log e` against `log h`.
pub fn regression_slope(h: &[f64], e: &[f64]) -> f64 {
    let n = h.len() as f64;
    let (x, y): (Vec<f64>, Vec<f64>) = h.iter().zip(e).map(|(h, e)| (h.ln(), e.ln())).unzip();
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub p: usize,
    pub h: f64,
    pub e: f64,
    pub slope: f64,
}

/// Fills in the per-`p` regression slope of a table of `(p, h, e)`.
pub fn with_slopes(mut rows: Vec<RateRow>) -> Vec<RateRow> {
    let ps: Vec<usize> = rows.iter().map(|r| r.p).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    for p in ps {
        let (h, e): (Vec<f64>, Vec<f64>) = rows.iter().filter(|r| r.p == p).map(|r| (r.h, r.e)).unzip();
        let slope = if h.len() >= 2 { regression_slope(&h, &e) } else { f64::NAN };
        rows.iter_mut().filter(|r| r.p == p).for_each(|r| r.slope = slope);
    }
    rows
}

/// Standing-wave convergence table, `h = 2^-l`, `s = p` stages unless
/// `stages` is given.
pub fn convergence_study(ps: &[usize], levels: &[u32], stages: Option<usize>, t_max: f64, opts: &RunOptions) -> Result<Vec<RateRow>> {
    let mut rows = Vec::new();
    for &p in ps {
        for &l in levels {
            let e = standing_wave_error(l, p, stages.unwrap_or(p), t_max, opts)?;
            rows.push(RateRow {
                p,
                h: 0.5f64.powi(l as i32),
                e,
                slope: f64::NAN,
            });
        }
    }
    Ok(with_slopes(rows))
}

/// Forward-facing step wind tunnel at Mach 3.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindTunnel {
    pub h_target: f64,
    pub h_corner: f64,
    pub p: usize,
    pub t_end: f64,
    /// Snapshot times; each is taken at the first slab end at or after it.
    pub snapshots: Vec<f64>,
    pub pitch: PitchConfig,
    pub explicit: ExplicitParams,
}

impl Default for WindTunnel {
    fn default() -> Self {
        Self {
            h_target: 0.105,
            h_corner: 0.05,
            p: 2,
            t_end: 0.5,
            snapshots: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            pitch: PitchConfig {
                t_slab: 0.02,
                speed: SpeedBound::State { safety: 1.5, floor: 0.5 },
                ..PitchConfig::default()
            },
            // the impulsive start against the step face needs more than the
            // default 2 (p+1)^2 outer steps per tent
            explicit: ExplicitParams {
                safety: 3.0,
                ..ExplicitParams::default()
            },
        }
    }
}

/// Mach 3 inflow: `rho = 1.4`, `v = (3, 0)`, `P = 1`.
pub fn wind_tunnel_state() -> [f64; 4] {
    EulerState::from_primitive(1.4, [3.0, 0.0], 1.0).to_array()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TunnelSnapshot {
    pub time: f64,
    /// Cell means of the conserved state.
    pub cell_means: Vec<[f64; 4]>,
    /// Per element, the largest limited viscosity during the last slab.
    pub viscosity: Vec<f64>,
    /// Smallest density and pressure over volume points and vertices.
    pub min_density: f64,
    pub min_pressure: f64,
    pub max_density: f64,
}

/// Smallest and largest density, smallest pressure of a flat-front Euler
/// state over volume points and vertices (`(min rho, max rho, min P)`).
pub fn euler_bounds(space: &DgSpace, state: &[[f64; 4]]) -> (f64, f64, f64) {
    let mut pts: Vec<[f64; 3]> = space.volume_bary().to_vec();
    pts.extend([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
    let (mut rmin, mut rmax, mut pmin) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY);
    for e in 0..space.mesh.num_elements() {
        for &b in &pts {
            let s = EulerState::from_array(&space.eval(state, e, b));
            rmin = rmin.min(s.rho);
            rmax = rmax.max(s.rho);
            pmin = pmin.min(s.pressure());
        }
    }
    (rmin, rmax, pmin)
}

#[allow(clippy::type_complexity)]
/// Runs the wind tunnel and returns the mesh, the final front and the
/// snapshots (the first at `t = 0`).
pub fn wind_tunnel_demo(cfg: &WindTunnel, opts: &RunOptions) -> Result<(DgSpace, FrontState<Vec<[f64; 4]>>, Vec<TunnelSnapshot>)> {
    let mesh = SpatialMesh::step_channel(cfg.h_target, cfg.h_corner)?;
    let space = DgSpace::new(&mesh, cfg.p);
    let inflow = wind_tunnel_state();
    let u0 = space.project(|_| inflow);
    let bc = BoundaryData::constant_inflow(inflow);
    let law = Euler;
    let prob = ExplicitProblem {
        space: &space,
        law: &law,
        bc: &bc,
        params: &cfg.explicit,
        pitch: &cfg.pitch,
    };
    let snap = |time: f64, state: &[[f64; 4]], viscosity: Vec<f64>| {
        let (min_density, max_density, min_pressure) = euler_bounds(&space, state);
        TunnelSnapshot {
            time,
            cell_means: (0..mesh.num_elements()).map(|e| space.cell_mean(state, e)).collect(),
            viscosity,
            min_density,
            min_pressure,
            max_density,
        }
    };
    let mut snapshots = vec![snap(0.0, &u0, vec![0.0; mesh.num_elements()])];
    let mut pending: Vec<f64> = cfg.snapshots.iter().copied().filter(|&t| t > 0.0 && t <= cfg.t_end).collect();
    pending.sort_by(f64::total_cmp);
    pending.reverse();
    let front = run_explicit(&prob, u0, cfg.t_end, opts, |f| {
        let due = pending.last().is_some_and(|&t| f.time >= t - 1e-12) || (f.time >= cfg.t_end - 1e-12);
        if due {
            while pending.last().is_some_and(|&t| f.time >= t - 1e-12) {
                pending.pop();
            }
            snapshots.push(snap(f.time, &f.state, f.diagnostics.element_nu.clone()));
        }
    })?;
    Ok((space, front, snapshots))
}
