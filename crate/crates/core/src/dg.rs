//! Discontinuous Galerkin discretization of the mapped conservation law on
//! vertex patches, with entropy-viscosity stabilization.
//!
//! Each element carries `P_p` per component in an orthonormal basis
//! (`psi = phi_ref / sqrt(det J)`), so the mass matrix is the identity.
//! The stored unknown is the mapped variable `U = G(u)` relative to the
//! current front on each element; on flat fronts it is `g(u)`.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{dim_p, RefBasis};
use crate::laws::{ConservationLaw, LawError};
use crate::mapping::TentMap;
use crate::mesh::{BoundaryTag, Point, SpatialMesh};
use crate::quadrature::{LineRule, TriangleRule};

/// Reference coordinates of the triangle vertices.
const REF_VERTS: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

/// Local edge `k` (opposite vertex `k`) as increasing local vertex pair.
pub const LOCAL_EDGES: [[usize; 2]; 3] = [[1, 2], [0, 2], [0, 1]];

#[derive(Clone, Debug)]
pub struct ElementGeometry {
    /// `det J = 2 |T|`.
    pub det: f64,
    /// `J^{-T}`.
    pub jinv_t: [[f64; 2]; 2],
    /// `1 / sqrt(det J)`.
    pub scale: f64,
    pub diameter: f64,
    /// Outward unit normal per local edge.
    pub normals: [[f64; 2]; 3],
    pub lengths: [f64; 3],
    /// Whether the local parametrization of edge `k` runs against the
    /// global one (global low vertex to global high vertex).
    pub flipped: [bool; 3],
}

impl ElementGeometry {
    pub fn new(mesh: &SpatialMesh, e: usize) -> Self {
        let el = mesh.element(e);
        let p = mesh.element_points(e);
        let j = [[p[1][0] - p[0][0], p[2][0] - p[0][0]], [p[1][1] - p[0][1], p[2][1] - p[0][1]]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        // J^{-1} = [[j11, -j01], [-j10, j00]] / det, transposed
        let jinv_t = [[j[1][1] / det, -j[1][0] / det], [-j[0][1] / det, j[0][0] / det]];
        let mut normals = [[0.0; 2]; 3];
        let mut lengths = [0.0; 3];
        let mut flipped = [false; 3];
        for k in 0..3 {
            let [a, b] = LOCAL_EDGES[k];
            let t = [p[b][0] - p[a][0], p[b][1] - p[a][1]];
            let len = (t[0] * t[0] + t[1] * t[1]).sqrt();
            let mut n = [t[1] / len, -t[0] / len];
            let to_opposite = [p[k][0] - p[a][0], p[k][1] - p[a][1]];
            if n[0] * to_opposite[0] + n[1] * to_opposite[1] > 0.0 {
                n = [-n[0], -n[1]];
            }
            normals[k] = n;
            lengths[k] = len;
            flipped[k] = el[a] > el[b];
        }
        Self {
            det,
            jinv_t,
            scale: 1.0 / det.sqrt(),
            diameter: mesh.element_diameter(e),
            normals,
            lengths,
            flipped,
        }
    }

    /// Physical gradient of a basis function from its reference gradient.
    #[inline]
    pub fn grad(&self, g: [f64; 2]) -> [f64; 2] {
        [
            self.scale * (self.jinv_t[0][0] * g[0] + self.jinv_t[0][1] * g[1]),
            self.scale * (self.jinv_t[1][0] * g[0] + self.jinv_t[1][1] * g[1]),
        ]
    }
}

/// Reference tables on one local edge for one orientation.
#[derive(Clone, Debug)]
struct EdgeTable {
    bary: Vec<[f64; 3]>,
    phi: Vec<Vec<f64>>,
    dphi: Vec<Vec<[f64; 2]>>,
}

/// Broken `P_p` space over a whole mesh, with quadrature tables.
#[derive(Clone, Debug)]
pub struct DgSpace {
    pub mesh: SpatialMesh,
    pub p: usize,
    pub basis: RefBasis,
    pub geometry: Vec<ElementGeometry>,
    vol_bary: Vec<[f64; 3]>,
    vol_weights: Vec<f64>,
    vol_phi: Vec<Vec<f64>>,
    vol_dphi: Vec<Vec<[f64; 2]>>,
    edge_weights: Vec<f64>,
    /// `[local edge][flipped as usize]`.
    edge_tables: Vec<[EdgeTable; 2]>,
}

impl DgSpace {
    pub fn new(mesh: &SpatialMesh, p: usize) -> Self {
        let basis = RefBasis::new(p);
        let vol = TriangleRule::exact_to(2 * p + 2);
        let vol_bary: Vec<[f64; 3]> = vol.points.iter().map(|x| [1.0 - x[0] - x[1], x[0], x[1]]).collect();
        let vol_phi = vol.points.iter().map(|&x| basis.eval(x)).collect();
        let vol_dphi = vol.points.iter().map(|&x| basis.eval_grad(x)).collect();
        let line = LineRule::gauss_legendre(p + 2);
        let edge_tables = (0..3)
            .map(|k| {
                let table = |flip: bool| {
                    let [a, b] = LOCAL_EDGES[k];
                    let mut t = EdgeTable {
                        bary: Vec::new(),
                        phi: Vec::new(),
                        dphi: Vec::new(),
                    };
                    for &s in &line.points {
                        let s = if flip { 1.0 - s } else { s };
                        let xi = [
                            REF_VERTS[a][0] + s * (REF_VERTS[b][0] - REF_VERTS[a][0]),
                            REF_VERTS[a][1] + s * (REF_VERTS[b][1] - REF_VERTS[a][1]),
                        ];
                        t.bary.push([1.0 - xi[0] - xi[1], xi[0], xi[1]]);
                        t.phi.push(basis.eval(xi));
                        t.dphi.push(basis.eval_grad(xi));
                    }
                    t
                };
                [table(false), table(true)]
            })
            .collect();
        let geometry = (0..mesh.num_elements()).map(|e| ElementGeometry::new(mesh, e)).collect();
        Self {
            mesh: mesh.clone(),
            p,
            basis,
            geometry,
            vol_bary,
            vol_weights: vol.weights,
            vol_phi,
            vol_dphi,
            edge_weights: line.weights,
            edge_tables,
        }
    }

    /// Basis functions per element.
    pub fn nb(&self) -> usize {
        dim_p(self.p)
    }

    pub fn num_dofs(&self) -> usize {
        self.mesh.num_elements() * self.nb()
    }

    pub fn volume_points(&self) -> usize {
        self.vol_weights.len()
    }

    /// Reference barycentric coordinates of the volume quadrature points.
    pub fn volume_bary(&self) -> &[[f64; 3]] {
        &self.vol_bary
    }

    /// Reference weights of the volume rule (summing to 1/2).
    pub fn volume_weights(&self) -> &[f64] {
        &self.vol_weights
    }

    /// Reference basis values at the volume points, `[q][n]`.
    pub fn volume_basis(&self) -> &[Vec<f64>] {
        &self.vol_phi
    }

    pub fn point(&self, e: usize, bary: [f64; 3]) -> Point {
        let p = self.mesh.element_points(e);
        [
            bary[0] * p[0][0] + bary[1] * p[1][0] + bary[2] * p[2][0],
            bary[0] * p[0][1] + bary[1] * p[1][1] + bary[2] * p[2][1],
        ]
    }

    /// Elementwise `L^2` projection of `u0` (or of any vector function).
    pub fn project<const L: usize>(&self, u0: impl Fn(Point) -> [f64; L]) -> Vec<[f64; L]> {
        let nb = self.nb();
        let mut out = vec![[0.0; L]; self.num_dofs()];
        for e in 0..self.mesh.num_elements() {
            let g = &self.geometry[e];
            for (q, &bary) in self.vol_bary.iter().enumerate() {
                let v = u0(self.point(e, bary));
                let w = self.vol_weights[q] * g.det * g.scale;
                for n in 0..nb {
                    for l in 0..L {
                        out[e * nb + n][l] += w * self.vol_phi[q][n] * v[l];
                    }
                }
            }
        }
        out
    }

    /// Value of the field on element `e` at reference barycentric point.
    pub fn eval<const L: usize>(&self, state: &[[f64; L]], e: usize, bary: [f64; 3]) -> [f64; L] {
        let nb = self.nb();
        let phi = self.basis.eval([bary[1], bary[2]]);
        let s = self.geometry[e].scale;
        let mut v = [0.0; L];
        for n in 0..nb {
            for l in 0..L {
                v[l] += s * phi[n] * state[e * nb + n][l];
            }
        }
        v
    }

    /// Element mean of each component.
    pub fn cell_mean<const L: usize>(&self, state: &[[f64; L]], e: usize) -> [f64; L] {
        // only the constant basis function has nonzero mean
        let nb = self.nb();
        let g = &self.geometry[e];
        let c = self.basis.eval([1.0 / 3.0, 1.0 / 3.0])[0] * g.scale;
        let area = 0.5 * g.det;
        let mut m = [0.0; L];
        for l in 0..L {
            m[l] = state[e * nb][l] * c * area / area;
        }
        m
    }

    /// `L^2(Omega_0)` error against `exact`, using a rule of the given degree.
    pub fn l2_error<const L: usize>(&self, state: &[[f64; L]], exact: impl Fn(Point) -> [f64; L], degree: usize) -> f64 {
        let rule = TriangleRule::exact_to(degree);
        let nb = self.nb();
        let phis: Vec<Vec<f64>> = rule.points.iter().map(|&x| self.basis.eval(x)).collect();
        let mut sum = 0.0;
        for e in 0..self.mesh.num_elements() {
            let g = &self.geometry[e];
            for (q, x) in rule.points.iter().enumerate() {
                let bary = [1.0 - x[0] - x[1], x[0], x[1]];
                let ex = exact(self.point(e, bary));
                for l in 0..L {
                    let mut v = 0.0;
                    for n in 0..nb {
                        v += g.scale * phis[q][n] * state[e * nb + n][l];
                    }
                    sum += rule.weights[q] * g.det * (v - ex[l]).powi(2);
                }
            }
        }
        sum.sqrt()
    }

    /// Integral of each component over the domain.
    pub fn integral<const L: usize>(&self, state: &[[f64; L]]) -> [f64; L] {
        let mut out = [0.0; L];
        for e in 0..self.mesh.num_elements() {
            let m = self.cell_mean(state, e);
            let area = 0.5 * self.geometry[e].det;
            for l in 0..L {
                out[l] += m[l] * area;
            }
        }
        out
    }
}

/// Exterior state as a function of `(x, t)`.
pub type InflowFn<const L: usize> = Arc<dyn Fn(Point, f64) -> [f64; L] + Send + Sync>;

/// Exterior data for boundary facets.
#[derive(Clone)]
pub struct BoundaryData<const L: usize> {
    /// Prescribed exterior state on inflow facets, as a function of
    /// `(x, t)`.
    pub inflow: Option<InflowFn<L>>,
}

impl<const L: usize> Default for BoundaryData<L> {
    fn default() -> Self {
        Self { inflow: None }
    }
}

impl<const L: usize> std::fmt::Debug for BoundaryData<L> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BoundaryData")
            .field("inflow", &self.inflow.as_ref().map(|_| ".."))
            .finish()
    }
}

impl<const L: usize> BoundaryData<L> {
    pub fn constant_inflow(u: [f64; L]) -> Self {
        Self {
            inflow: Some(Arc::new(move |_, _| u)),
        }
    }
}

/// Exterior state seen across a boundary facet.
pub fn ghost_state<const L: usize>(
    law: &dyn ConservationLaw<L>,
    bc: &BoundaryData<L>,
    tag: BoundaryTag,
    inner: &[f64; L],
    n: [f64; 2],
    x: Point,
    t: f64,
) -> [f64; L] {
    match tag {
        BoundaryTag::Inflow => bc.inflow.as_ref().map_or(*inner, |f| f(x, t)),
        BoundaryTag::Outflow | BoundaryTag::Generic => *inner,
        BoundaryTag::Reflect => law.reflect(inner, n),
    }
}

/// Rusanov (local Lax–Friedrichs) flux
/// `Q = (f(u-) + f(u+)) n / 2 - s (g(u+) - g(u-)) / 2` with `s` the larger
/// normal wavespeed of the two states.
pub fn flux_rusanov<const L: usize>(
    law: &dyn ConservationLaw<L>,
    x: Point,
    t: f64,
    um: &[f64; L],
    up: &[f64; L],
    n: [f64; 2],
) -> Result<[f64; L], LawError> {
    let (fm, fp) = (law.flux(x, t, um)?, law.flux(x, t, up)?);
    let s = law.normal_wavespeed(x, t, um, n)?.max(law.normal_wavespeed(x, t, up, n)?);
    let (gm, gp) = (law.temporal(x, t, um), law.temporal(x, t, up));
    let mut q = [0.0; L];
    for l in 0..L {
        q[l] = 0.5 * ((fm[l][0] + fp[l][0]) * n[0] + (fm[l][1] + fp[l][1]) * n[1]) - 0.5 * s * (gp[l] - gm[l]);
    }
    Ok(q)
}

/// A law evaluation failure located on a mesh element.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementFailure {
    pub element: usize,
    pub source: LawError,
}

type DgResult<T> = Result<T, ElementFailure>;

fn at(element: usize) -> impl Fn(LawError) -> ElementFailure {
    move |source| ElementFailure { element, source }
}

/// Treatment of `Omega_0` boundary facets in the interior-penalty form.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyBoundary {
    /// No boundary terms (homogeneous Neumann for the viscous term).
    #[default]
    Natural,
    /// Exterior value taken as zero.
    Zero,
}

/// How the entropy residual is normalized in the viscosity coefficient.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResidualScaling {
    /// `nu_e = c_X^2 |R_h|_inf`.
    #[default]
    Plain,
    /// `nu_e = c_X^2 |R_h|_inf / |mean entropy|`.
    MeanEntropy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ViscosityParams {
    pub enabled: bool,
    pub kappa1: f64,
    /// `None` selects `1 / (4 p)`.
    pub kappa2: Option<f64>,
    pub penalty_alpha: f64,
    pub scaling: ResidualScaling,
    pub boundary: PenaltyBoundary,
}

impl Default for ViscosityParams {
    fn default() -> Self {
        Self {
            enabled: true,
            kappa1: 0.5,
            kappa2: None,
            penalty_alpha: 2.0,
            scaling: ResidualScaling::Plain,
            boundary: PenaltyBoundary::Natural,
        }
    }
}

impl ViscosityParams {
    pub fn kappa2_for(&self, p: usize) -> f64 {
        self.kappa2.unwrap_or(1.0 / (4.0 * p.max(1) as f64))
    }
}

#[derive(Clone, Debug)]
struct Facet {
    left: usize,
    left_edge: usize,
    right: Option<(usize, usize)>,
    tag: Option<BoundaryTag>,
}

/// Per-element outcome of the viscosity computation.
#[derive(Clone, Debug, PartialEq)]
pub struct Viscosity {
    pub nu: f64,
    pub nu_entropy: Vec<f64>,
    pub nu_limit: Vec<f64>,
    /// `max |min(r_h, 0)|` per element.
    pub residual_max: Vec<f64>,
}

/// DG operators on one tent (or any element set with a map).
pub struct PatchDg<'a, const L: usize> {
    pub space: &'a DgSpace,
    pub law: &'a dyn ConservationLaw<L>,
    pub bc: &'a BoundaryData<L>,
    pub map: &'a TentMap,
    /// Physical time of the slab bottom; `phi` is measured from it.
    pub t0: f64,
    facets: Vec<Facet>,
}

impl<'a, const L: usize> PatchDg<'a, L> {
    pub fn new(space: &'a DgSpace, law: &'a dyn ConservationLaw<L>, bc: &'a BoundaryData<L>, map: &'a TentMap, t0: f64) -> Self {
        let mesh = &space.mesh;
        let local: HashMap<usize, usize> = map.elements().iter().enumerate().map(|(k, &e)| (e, k)).collect();
        let mut facets = Vec::new();
        for (k, &e) in map.elements().iter().enumerate() {
            let d = map.delta_vertices(k);
            for (j, &edge) in mesh.element_edges(e).iter().enumerate() {
                let [a, b] = LOCAL_EDGES[j];
                if d[a] == 0.0 && d[b] == 0.0 {
                    continue; // delta vanishes on the whole facet
                }
                match mesh.edge_elements(edge) {
                    (l, Some(r)) => {
                        let other = if l == e { r } else { l };
                        let &ko = local
                            .get(&other)
                            .expect("facet with nonzero delta must be interior to the element set");
                        if ko < k {
                            continue; // visited from the other side
                        }
                        let jo = mesh.element_edges(other).iter().position(|&x| x == edge).unwrap();
                        facets.push(Facet {
                            left: k,
                            left_edge: j,
                            right: Some((ko, jo)),
                            tag: None,
                        });
                    }
                    (_, None) => facets.push(Facet {
                        left: k,
                        left_edge: j,
                        right: None,
                        tag: mesh.edge_tag(edge),
                    }),
                }
            }
        }
        Self {
            space,
            law,
            bc,
            map,
            t0,
            facets,
        }
    }

    pub fn num_elements(&self) -> usize {
        self.map.num_elements()
    }

    pub fn num_local_dofs(&self) -> usize {
        self.num_elements() * self.space.nb()
    }

    /// Copies the patch coefficients out of a global state.
    pub fn gather(&self, global: &[[f64; L]]) -> Vec<[f64; L]> {
        let nb = self.space.nb();
        let mut out = Vec::with_capacity(self.num_local_dofs());
        for &e in self.map.elements() {
            out.extend_from_slice(&global[e * nb..(e + 1) * nb]);
        }
        out
    }

    /// Writes patch coefficients back into a global state.
    pub fn scatter(&self, local: &[[f64; L]], global: &mut [[f64; L]]) {
        let nb = self.space.nb();
        for (k, &e) in self.map.elements().iter().enumerate() {
            global[e * nb..(e + 1) * nb].copy_from_slice(&local[k * nb..(k + 1) * nb]);
        }
    }

    #[inline]
    fn combine(&self, local: &[[f64; L]], k: usize, phi: &[f64]) -> [f64; L] {
        let nb = self.space.nb();
        let s = self.space.geometry[self.map.element(k)].scale;
        let mut v = [0.0; L];
        for n in 0..nb {
            let c = s * phi[n];
            let u = &local[k * nb + n];
            for l in 0..L {
                v[l] += c * u[l];
            }
        }
        v
    }

    /// Physical state at volume point `q` of local element `k`.
    fn state_at_volume(&self, local: &[[f64; L]], k: usize, q: usize, t_hat: f64) -> DgResult<([f64; L], Point, f64)> {
        let e = self.map.element(k);
        let bary = self.space.vol_bary[q];
        let big = self.combine(local, k, &self.space.vol_phi[q]);
        let x = self.map.point(k, bary);
        let t = self.t0 + self.map.phi(k, bary, t_hat);
        let u = self
            .law
            .mapped_inverse(x, t, &big, self.map.grad_phi(k, t_hat))
            .map_err(at(e))?;
        Ok((u, x, t))
    }

    /// Physical states at point `q` on both sides of a facet, plus geometry.
    fn facet_states(&self, local: &[[f64; L]], f: &Facet, q: usize, t_hat: f64) -> DgResult<FacetPoint<L>> {
        let (k, j) = (f.left, f.left_edge);
        let e = self.map.element(k);
        let g = &self.space.geometry[e];
        let tab = &self.space.edge_tables[j][g.flipped[j] as usize];
        let bary = tab.bary[q];
        let x = self.map.point(k, bary);
        let t = self.t0 + self.map.phi(k, bary, t_hat);
        let delta = self.map.delta(k, bary);
        let n = g.normals[j];
        let big = self.combine(local, k, &tab.phi[q]);
        let um = self.law.mapped_inverse(x, t, &big, self.map.grad_phi(k, t_hat)).map_err(at(e))?;
        let up = match f.right {
            Some((ko, jo)) => {
                let eo = self.map.element(ko);
                let go = &self.space.geometry[eo];
                let tabo = &self.space.edge_tables[jo][go.flipped[jo] as usize];
                let bigo = self.combine(local, ko, &tabo.phi[q]);
                self.law
                    .mapped_inverse(x, t, &bigo, self.map.grad_phi(ko, t_hat))
                    .map_err(at(eo))?
            }
            None => ghost_state(self.law, self.bc, f.tag.unwrap_or(BoundaryTag::Generic), &um, n, x, t),
        };
        Ok(FacetPoint {
            x,
            t,
            delta,
            n,
            weight: self.space.edge_weights[q] * g.lengths[j],
            um,
            up,
        })
    }

    fn right_table(&self, f: &Facet) -> Option<(usize, &EdgeTable)> {
        f.right.map(|(ko, jo)| {
            let go = &self.space.geometry[self.map.element(ko)];
            (ko, &self.space.edge_tables[jo][go.flipped[jo] as usize])
        })
    }

    fn left_table(&self, f: &Facet) -> &EdgeTable {
        let g = &self.space.geometry[self.map.element(f.left)];
        &self.space.edge_tables[f.left_edge][g.flipped[f.left_edge] as usize]
    }

    /// `[R^1]_n = (delta f(u), grad psi_n) - <delta Q_f, psi_n> - (delta b, psi_n)`,
    /// which equals `dU/dt_hat` since the mass matrix is the identity.
    pub fn rhs(&self, local: &[[f64; L]], t_hat: f64) -> DgResult<Vec<[f64; L]>> {
        let sp = self.space;
        let nb = sp.nb();
        let mut r = vec![[0.0; L]; local.len()];
        for k in 0..self.num_elements() {
            let e = self.map.element(k);
            let g = &sp.geometry[e];
            for q in 0..sp.volume_points() {
                let (u, x, t) = self.state_at_volume(local, k, q, t_hat)?;
                let f = self.law.flux(x, t, &u).map_err(at(e))?;
                let b = self.law.source(x, t, &u);
                let w = sp.vol_weights[q] * g.det * self.map.delta(k, sp.vol_bary[q]);
                for n in 0..nb {
                    let gr = g.grad(sp.vol_dphi[q][n]);
                    let phi = g.scale * sp.vol_phi[q][n];
                    for l in 0..L {
                        r[k * nb + n][l] += w * (f[l][0] * gr[0] + f[l][1] * gr[1] - b[l] * phi);
                    }
                }
            }
        }
        for f in &self.facets {
            for q in 0..sp.edge_weights.len() {
                let fp = self.facet_states(local, f, q, t_hat)?;
                let flux = flux_rusanov(self.law, fp.x, fp.t, &fp.um, &fp.up, fp.n)
                    .map_err(at(self.map.element(f.left)))?;
                let w = fp.weight * fp.delta;
                let sl = sp.geometry[self.map.element(f.left)].scale;
                let tl = self.left_table(f);
                for n in 0..nb {
                    for l in 0..L {
                        r[f.left * nb + n][l] -= w * flux[l] * sl * tl.phi[q][n];
                    }
                }
                if let Some((ko, tr)) = self.right_table(f) {
                    let sr = sp.geometry[self.map.element(ko)].scale;
                    for n in 0..nb {
                        for l in 0..L {
                            r[ko * nb + n][l] += w * flux[l] * sr * tr.phi[q][n];
                        }
                    }
                }
            }
        }
        Ok(r)
    }

    /// Entropy residual `r_h` per element as local coefficients, with
    /// `dU/dt_hat` taken from `dudt` (usually the output of [`Self::rhs`]).
    ///
    /// `(delta r_h, V) = (d_t E_hat(G^{-1} U), V) - (F_hat, grad V) + <delta Q_F, V>`,
    /// where the time derivative includes the explicit dependence of the
    /// mapped entropy on `t_hat` through `grad phi`.
    pub fn entropy_residual(&self, local: &[[f64; L]], dudt: &[[f64; L]], t_hat: f64) -> DgResult<Vec<f64>> {
        let sp = self.space;
        let nb = sp.nb();
        let mut rhs = vec![0.0; local.len()];
        for k in 0..self.num_elements() {
            let e = self.map.element(k);
            let g = &sp.geometry[e];
            let grad_delta = self.map.delta_gradient(k);
            for q in 0..sp.volume_points() {
                let (u, x, t) = self.state_at_volume(local, k, q, t_hat)?;
                let ev = self.law.entropy_variables(&u).map_err(at(e))?;
                let (_, ef) = self.law.entropy(x, &u).map_err(at(e))?;
                let f = self.law.flux(x, t, &u).map_err(at(e))?;
                let dudt_q = self.combine(dudt, k, &sp.vol_phi[q]);
                let mut de = 0.0;
                for l in 0..L {
                    de += ev[l] * (dudt_q[l] + f[l][0] * grad_delta[0] + f[l][1] * grad_delta[1]);
                }
                de -= ef[0] * grad_delta[0] + ef[1] * grad_delta[1];
                let delta = self.map.delta(k, sp.vol_bary[q]);
                let w = sp.vol_weights[q] * g.det;
                for n in 0..nb {
                    let gr = g.grad(sp.vol_dphi[q][n]);
                    let phi = g.scale * sp.vol_phi[q][n];
                    rhs[k * nb + n] += w * (de * phi - delta * (ef[0] * gr[0] + ef[1] * gr[1]));
                }
            }
        }
        for f in &self.facets {
            for q in 0..sp.edge_weights.len() {
                let fp = self.facet_states(local, f, q, t_hat)?;
                let w = fp.weight * fp.delta;
                let el = self.map.element(f.left);
                let upwind = |own: &[f64; L], other: &[f64; L], n: [f64; 2]| -> Result<f64, LawError> {
                    let v = self.law.entropy_velocity(fp.x, own);
                    let side = if v[0] * n[0] + v[1] * n[1] >= 0.0 { own } else { other };
                    let (_, ef) = self.law.entropy(fp.x, side)?;
                    Ok(ef[0] * n[0] + ef[1] * n[1])
                };
                let ql = upwind(&fp.um, &fp.up, fp.n).map_err(at(el))?;
                let sl = sp.geometry[el].scale;
                let tl = self.left_table(f);
                for n in 0..nb {
                    rhs[f.left * nb + n] += w * ql * sl * tl.phi[q][n];
                }
                if let Some((ko, tr)) = self.right_table(f) {
                    let er = self.map.element(ko);
                    let qr = upwind(&fp.up, &fp.um, [-fp.n[0], -fp.n[1]]).map_err(at(er))?;
                    let sr = sp.geometry[er].scale;
                    for n in 0..nb {
                        rhs[ko * nb + n] += w * qr * sr * tr.phi[q][n];
                    }
                }
            }
        }
        // solve the delta-weighted mass system per element
        let mut out = vec![0.0; local.len()];
        for k in 0..self.num_elements() {
            let m = self.weighted_mass(k);
            let chol = m.cholesky().ok_or(ElementFailure {
                element: self.map.element(k),
                source: LawError::NonPhysicalState("singular delta-weighted mass block".into()),
            })?;
            let x = chol.solve(&DVector::from_column_slice(&rhs[k * nb..(k + 1) * nb]));
            out[k * nb..(k + 1) * nb].copy_from_slice(x.as_slice());
        }
        Ok(out)
    }

    /// `int_T delta psi_i psi_j`.
    fn weighted_mass(&self, k: usize) -> DMatrix<f64> {
        let sp = self.space;
        let nb = sp.nb();
        let g = &sp.geometry[self.map.element(k)];
        let mut m = DMatrix::zeros(nb, nb);
        for q in 0..sp.volume_points() {
            let w = sp.vol_weights[q] * g.det * g.scale * g.scale * self.map.delta(k, sp.vol_bary[q]);
            for i in 0..nb {
                for j in 0..nb {
                    m[(i, j)] += w * sp.vol_phi[q][i] * sp.vol_phi[q][j];
                }
            }
        }
        m
    }

    /// Sample points for `L^inf` norms: volume quadrature points and vertices.
    fn sample_values(&self, coeffs: &[f64], k: usize) -> Vec<f64> {
        let sp = self.space;
        let nb = sp.nb();
        let s = sp.geometry[self.map.element(k)].scale;
        let mut out: Vec<f64> = (0..sp.volume_points())
            .map(|q| (0..nb).map(|n| s * sp.vol_phi[q][n] * coeffs[k * nb + n]).sum())
            .collect();
        for v in REF_VERTS {
            let phi = sp.basis.eval(v);
            out.push((0..nb).map(|n| s * phi[n] * coeffs[k * nb + n]).sum());
        }
        out
    }

    /// Entropy-viscosity coefficient from a residual `r_h` (as returned by
    /// [`Self::entropy_residual`]) and the current state.
    pub fn viscosity(&self, local: &[[f64; L]], residual: &[f64], t_hat: f64, params: &ViscosityParams) -> DgResult<Viscosity> {
        let sp = self.space;
        let p = sp.p.max(1) as f64;
        let kappa2 = params.kappa2_for(sp.p);
        let nk = self.num_elements();
        let (mut nu_entropy, mut nu_limit, mut residual_max) = (vec![0.0; nk], vec![0.0; nk], vec![0.0; nk]);
        let mut nu: f64 = 0.0;
        for k in 0..nk {
            let e = self.map.element(k);
            let g = &sp.geometry[e];
            let rmax = self
                .sample_values(residual, k)
                .iter()
                .map(|&r| r.min(0.0).abs())
                .fold(0.0, f64::max);
            let gp = self.map.grad_phi(k, t_hat);
            let (mut speed, mut mean_entropy, mut area) = (0.0f64, 0.0, 0.0);
            for q in 0..sp.volume_points() {
                let (u, x, t) = self.state_at_volume(local, k, q, t_hat)?;
                speed = speed.max(self.law.viscosity_scale(x, t, &u).map_err(at(e))?);
                if params.scaling == ResidualScaling::MeanEntropy {
                    let (en, ef) = self.law.entropy(x, &u).map_err(at(e))?;
                    let w = sp.vol_weights[q] * g.det;
                    mean_entropy += w * (en - ef[0] * gp[0] - ef[1] * gp[1]);
                    area += w;
                }
            }
            let cx = params.kappa1 * g.diameter / p;
            let limit = kappa2 * g.diameter * speed;
            let ent = match params.scaling {
                ResidualScaling::Plain => cx * cx * rmax,
                ResidualScaling::MeanEntropy => {
                    let mean = (mean_entropy / area).abs();
                    if mean < 1e-14 {
                        limit
                    } else {
                        cx * cx * rmax / mean
                    }
                }
            };
            residual_max[k] = rmax;
            nu_entropy[k] = ent;
            nu_limit[k] = limit;
            nu = nu.max(ent.min(limit));
        }
        Ok(Viscosity {
            nu,
            nu_entropy,
            nu_limit,
            residual_max,
        })
    }

    /// Matrix of the interior-penalty form
    /// `a(w, v) = (delta grad w, grad v) - <delta {grad w} n, [v]> - <[w], delta {grad v} n>
    ///          + (alpha / h) <delta [w], [v]>`
    /// on scalar local coefficients. The facet length scale is
    /// `h = d / (p + 1)^2` with `d` the mean diameter of the adjacent
    /// elements, so a fixed `alpha` stays coercive as `p` grows.
    pub fn penalty_matrix(&self, alpha: f64, boundary: PenaltyBoundary) -> DMatrix<f64> {
        let sp = self.space;
        let nb = sp.nb();
        let n_local = self.num_local_dofs();
        let pscale = ((sp.p + 1) * (sp.p + 1)) as f64;
        let mut a = DMatrix::zeros(n_local, n_local);
        for k in 0..self.num_elements() {
            let g = &sp.geometry[self.map.element(k)];
            for q in 0..sp.volume_points() {
                let w = sp.vol_weights[q] * g.det * self.map.delta(k, sp.vol_bary[q]);
                let grads: Vec<[f64; 2]> = (0..nb).map(|n| g.grad(sp.vol_dphi[q][n])).collect();
                for i in 0..nb {
                    for j in 0..nb {
                        a[(k * nb + i, k * nb + j)] += w * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
                    }
                }
            }
        }
        for f in &self.facets {
            let gl = &sp.geometry[self.map.element(f.left)];
            let tl = self.left_table(f);
            let n = gl.normals[f.left_edge];
            let right = self.right_table(f);
            if right.is_none() && boundary == PenaltyBoundary::Natural {
                continue;
            }
            for q in 0..sp.edge_weights.len() {
                let delta = self.map.delta(f.left, tl.bary[q]);
                let wq = sp.edge_weights[q] * gl.lengths[f.left_edge] * delta;
                // (dof index, jump value, normal derivative average) per side
                let mut entries: Vec<(usize, f64, f64)> = Vec::with_capacity(2 * nb);
                let (avg, h) = if right.is_some() { (0.5, 0.0) } else { (0.5, gl.diameter) };
                for i in 0..nb {
                    let gr = gl.grad(tl.dphi[q][i]);
                    entries.push((f.left * nb + i, gl.scale * tl.phi[q][i], avg * (gr[0] * n[0] + gr[1] * n[1])));
                }
                let h = if let Some((ko, tr)) = right {
                    let gr_geom = &sp.geometry[self.map.element(ko)];
                    for i in 0..nb {
                        let gr = gr_geom.grad(tr.dphi[q][i]);
                        entries.push((ko * nb + i, -gr_geom.scale * tr.phi[q][i], avg * (gr[0] * n[0] + gr[1] * n[1])));
                    }
                    0.5 * (gl.diameter + gr_geom.diameter)
                } else {
                    h
                };
                // exterior-zero boundary: one visit, hence halved terms
                let pen = pscale * if right.is_some() { alpha / h } else { alpha / (2.0 * h) };
                for &(i, ji, di) in &entries {
                    for &(j, jj, dj) in &entries {
                        a[(i, j)] += wq * (-dj * ji - jj * di + pen * jj * ji);
                    }
                }
            }
        }
        a
    }

    /// Elementwise `L^2` projection of the physical state `G^{-1}(U)`.
    pub fn project_physical(&self, local: &[[f64; L]], t_hat: f64) -> DgResult<Vec<[f64; L]>> {
        let sp = self.space;
        let nb = sp.nb();
        let mut out = vec![[0.0; L]; local.len()];
        for k in 0..self.num_elements() {
            let g = &sp.geometry[self.map.element(k)];
            for q in 0..sp.volume_points() {
                let (u, _, _) = self.state_at_volume(local, k, q, t_hat)?;
                let w = sp.vol_weights[q] * g.det * g.scale;
                for n in 0..nb {
                    for l in 0..L {
                        out[k * nb + n][l] += w * sp.vol_phi[q][n] * u[l];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Minimum element diameter in the patch.
    pub fn min_diameter(&self) -> f64 {
        self.map
            .elements()
            .iter()
            .map(|&e| self.space.geometry[e].diameter)
            .fold(f64::INFINITY, f64::min)
    }

    /// Integral of each component of the local state.
    pub fn integral(&self, local: &[[f64; L]]) -> [f64; L] {
        let sp = self.space;
        let nb = sp.nb();
        let c = sp.basis.eval([1.0 / 3.0, 1.0 / 3.0])[0];
        let mut out = [0.0; L];
        for k in 0..self.num_elements() {
            let g = &sp.geometry[self.map.element(k)];
            for l in 0..L {
                out[l] += local[k * nb][l] * c * g.scale * 0.5 * g.det;
            }
        }
        out
    }

    /// Net flux `int_{boundary} delta Q_f . n` leaving the element set through
    /// `Omega_0` boundary facets at `t_hat`.
    pub fn boundary_outflux(&self, local: &[[f64; L]], t_hat: f64) -> DgResult<[f64; L]> {
        let mut out = [0.0; L];
        for f in self.facets.iter().filter(|f| f.right.is_none()) {
            for q in 0..self.space.edge_weights.len() {
                let fp = self.facet_states(local, f, q, t_hat)?;
                let flux = flux_rusanov(self.law, fp.x, fp.t, &fp.um, &fp.up, fp.n)
                    .map_err(at(self.map.element(f.left)))?;
                for l in 0..L {
                    out[l] += fp.weight * fp.delta * flux[l];
                }
            }
        }
        Ok(out)
    }
}

struct FacetPoint<const L: usize> {
    x: Point,
    t: f64,
    delta: f64,
    n: [f64; 2],
    weight: f64,
    um: [f64; L],
    up: [f64; L],
}
