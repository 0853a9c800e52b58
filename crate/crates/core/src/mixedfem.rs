//! `BDM_p x P_p` mixed discretization of the mapped wave system on vertex
//! patches, solved tent by tent with Radau IIA stages.
//!
//! Per element the edge basis is the minimum-norm dual of the normal
//! moments on its edges (oriented by the global edge normal) and the
//! bubbles span the null space of the moment matrix. A patch space shares
//! edge coefficients between patch elements, so its functions have
//! continuous normal trace. The front keeps element-local coefficients:
//! neighbouring tents leave normal jumps on the front, and each tent starts
//! from the `H(0)`-weighted projection of the front data onto its patch
//! space, which never increases the energy.

use std::collections::HashMap;
use std::f64::consts::{PI, SQRT_2};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, DVector};

use crate::basis::monomial_exponents;
use crate::dg::{DgSpace, LOCAL_EDGES};
use crate::error::SolveError;
use crate::laws::wave::inv2;
use crate::laws::Wave;
use crate::mapping::TentMap;
use crate::mesh::{Point, SpatialMesh};
use crate::quadrature::{shifted_legendre, LineRule, TriangleRule};
use crate::stepping::{ButcherTableau, StageSystem};
use crate::tents::Tent;

/// Flux basis on one element over monomials in `(x - center) / diameter`.
#[derive(Clone, Debug)]
struct FluxElement {
    center: Point,
    inv_d: f64,
    /// Row `i`: coefficients of local function `i` over `(m_j, 0)` then `(0, m_j)`.
    coeffs: DMatrix<f64>,
}

fn monomials(exps: &[(u32, u32)], xi: [f64; 2]) -> (Vec<f64>, Vec<[f64; 2]>) {
    let pw = |x: f64, n: u32| if n == 0 { 1.0 } else { x.powi(n as i32) };
    let vals = exps.iter().map(|&(a, b)| pw(xi[0], a) * pw(xi[1], b)).collect();
    let grads = exps
        .iter()
        .map(|&(a, b)| {
            let dx = if a > 0 { a as f64 * pw(xi[0], a - 1) * pw(xi[1], b) } else { 0.0 };
            let dy = if b > 0 { b as f64 * pw(xi[0], a) * pw(xi[1], b - 1) } else { 0.0 };
            [dx, dy]
        })
        .collect();
    (vals, grads)
}

impl FluxElement {
    /// `(r_1, r_2, div r)` of every local function at `x`.
    fn eval(&self, exps: &[(u32, u32)], x: Point) -> Vec<[f64; 3]> {
        let xi = [(x[0] - self.center[0]) * self.inv_d, (x[1] - self.center[1]) * self.inv_d];
        let (m, g) = monomials(exps, xi);
        let nm = m.len();
        (0..self.coeffs.nrows())
            .map(|i| {
                let mut out = [0.0; 3];
                for j in 0..nm {
                    let (cx, cy) = (self.coeffs[(i, j)], self.coeffs[(i, nm + j)]);
                    out[0] += cx * m[j];
                    out[1] += cy * m[j];
                    out[2] += (cx * g[j][0] + cy * g[j][1]) * self.inv_d;
                }
                out
            })
            .collect()
    }
}

/// Unit normal of a global edge: the low-to-high tangent turned clockwise.
fn edge_normal(mesh: &SpatialMesh, edge: usize) -> [f64; 2] {
    let [a, b] = mesh.edge(edge);
    let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
    let t = [pb[0] - pa[0], pb[1] - pa[1]];
    let len = (t[0] * t[0] + t[1] * t[1]).sqrt();
    [t[1] / len, -t[0] / len]
}

#[derive(Clone, Debug)]
pub struct MixedSpace {
    /// Broken `P_p` for the scalar, also holding mesh, geometry and rules.
    pub scalar: DgSpace,
    pub p: usize,
    exps: Vec<(u32, u32)>,
    elements: Vec<FluxElement>,
    edge_normals: Vec<[f64; 2]>,
    edge_rule: LineRule,
    /// `[e][q * nloc + i]`: `(r_1, r_2, div r)` at the volume points.
    flux_tab: Vec<Vec<[f64; 3]>>,
}

/// Element-local coefficients of `(q, mu)` on the front: `flux[e * nloc + i]`
/// for the `nloc` flux functions of element `e`, `scalar[e * nb + n]`.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveState {
    pub flux: Vec<f64>,
    pub scalar: Vec<f64>,
}

impl MixedSpace {
    pub fn new(mesh: &SpatialMesh, p: usize) -> Self {
        assert!(p >= 1, "BDM_p needs p >= 1");
        let scalar = DgSpace::new(mesh, p);
        let exps = monomial_exponents(p);
        let edge_rule = LineRule::gauss_legendre(p + 2);
        let edge_normals = (0..mesh.num_edges()).map(|i| edge_normal(mesh, i)).collect();
        let mut space = Self {
            scalar,
            p,
            exps,
            elements: Vec::new(),
            edge_normals,
            edge_rule,
            flux_tab: Vec::new(),
        };
        // Congruent elements (up to translation) share one basis so that
        // propagators of congruent tents agree to the last bit.
        let mut by_shape: HashMap<Vec<i64>, DMatrix<f64>> = HashMap::new();
        space.elements = (0..mesh.num_elements())
            .map(|e| {
                let center = mesh.element_centroid(e);
                let inv_d = 1.0 / mesh.element_diameter(e);
                let coeffs = by_shape
                    .entry(space.shape_key(e, center, inv_d))
                    .or_insert_with(|| space.element_coeffs(e, center, inv_d))
                    .clone();
                FluxElement { center, inv_d, coeffs }
            })
            .collect();
        space.flux_tab = (0..mesh.num_elements())
            .map(|e| {
                let mut tab = Vec::new();
                for &bary in space.scalar.volume_bary() {
                    tab.extend(space.elements[e].eval(&space.exps, space.scalar.point(e, bary)));
                }
                tab
            })
            .collect();
        space
    }

    fn mesh(&self) -> &SpatialMesh {
        &self.scalar.mesh
    }

    /// Normal moments `int_0^1 (r . n_edge) L_k(s) ds` of all vector
    /// monomials of element `e`, rows ordered by local edge then `k`.
    fn moment_matrix(&self, e: usize, center: Point, inv_d: f64) -> DMatrix<f64> {
        let mesh = self.mesh();
        let nm = self.exps.len();
        let np = self.p + 1;
        let mut d = DMatrix::zeros(3 * np, 2 * nm);
        for (j, &edge) in mesh.element_edges(e).iter().enumerate() {
            let [a, b] = mesh.edge(edge);
            let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
            let n = self.edge_normals[edge];
            for (&s, &w) in self.edge_rule.points.iter().zip(&self.edge_rule.weights) {
                let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
                let xi = [(x[0] - center[0]) * inv_d, (x[1] - center[1]) * inv_d];
                let (m, _) = monomials(&self.exps, xi);
                for k in 0..np {
                    let lk = shifted_legendre(k, s);
                    for (c, mc) in m.iter().enumerate() {
                        d[(j * np + k, c)] += w * lk * mc * n[0];
                        d[(j * np + k, nm + c)] += w * lk * mc * n[1];
                    }
                }
            }
        }
        d
    }

    /// Scaled edge endpoints (in global edge orientation) of element `e`.
    fn shape_key(&self, e: usize, center: Point, inv_d: f64) -> Vec<i64> {
        let mesh = self.mesh();
        let quant = |v: f64| (v * (1u64 << 36) as f64).round() as i64;
        let mut key = Vec::with_capacity(12);
        for &edge in &mesh.element_edges(e) {
            for v in mesh.edge(edge) {
                let x = mesh.vertex(v);
                key.push(quant((x[0] - center[0]) * inv_d));
                key.push(quant((x[1] - center[1]) * inv_d));
            }
        }
        key
    }

    fn element_coeffs(&self, e: usize, center: Point, inv_d: f64) -> DMatrix<f64> {
        let d = self.moment_matrix(e, center, inv_d);
        let n = d.ncols();
        let ne = d.nrows();
        let nbub = n - ne;
        let ddt = &d * d.transpose();
        let edge = d.transpose() * ddt.try_inverse().expect("BDM edge moments are unisolvent");
        let mut coeffs = DMatrix::zeros(n, n);
        coeffs.view_mut((0, 0), (ne, n)).copy_from(&edge.transpose());
        if nbub > 0 {
            let eig = (d.transpose() * &d).symmetric_eigen();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
            for (b, &col) in order.iter().take(nbub).enumerate() {
                coeffs.row_mut(ne + b).copy_from(&eig.eigenvectors.column(col).transpose());
            }
        }
        coeffs
    }

    /// Flux functions per element.
    pub fn local_flux_dofs(&self) -> usize {
        (self.p + 1) * (self.p + 2)
    }

    fn bubbles(&self) -> usize {
        self.p * self.p - 1
    }

    /// Length of `WaveState::flux`.
    pub fn num_flux_dofs(&self) -> usize {
        self.mesh().num_elements() * self.local_flux_dofs()
    }

    /// Dimension of the conforming flux space (edge moments and bubbles).
    pub fn num_conforming_flux_dofs(&self) -> usize {
        self.mesh().num_edges() * (self.p + 1) + self.mesh().num_elements() * self.bubbles()
    }

    pub fn num_scalar_dofs(&self) -> usize {
        self.scalar.num_dofs()
    }

    /// Conforming flux dof of local function `i` on element `e`.
    pub fn conforming_dof(&self, e: usize, i: usize) -> usize {
        let np = self.p + 1;
        if i < 3 * np {
            self.mesh().element_edges(e)[i / np] * np + i % np
        } else {
            self.mesh().num_edges() * np + e * self.bubbles() + (i - 3 * np)
        }
    }

    /// Element-local flux coefficients of a conforming coefficient vector.
    pub fn broken_flux(&self, conforming: &[f64]) -> Vec<f64> {
        let nloc = self.local_flux_dofs();
        (0..self.num_flux_dofs())
            .map(|j| conforming[self.conforming_dof(j / nloc, j % nloc)])
            .collect()
    }

    pub fn zero_state(&self) -> WaveState {
        WaveState {
            flux: vec![0.0; self.num_flux_dofs()],
            scalar: vec![0.0; self.num_scalar_dofs()],
        }
    }

    /// `q_h(x)` on element `e`.
    pub fn eval_flux(&self, state: &WaveState, e: usize, x: Point) -> [f64; 2] {
        let vals = self.elements[e].eval(&self.exps, x);
        let off = e * self.local_flux_dofs();
        let mut q = [0.0; 2];
        for (i, v) in vals.iter().enumerate() {
            let c = state.flux[off + i];
            q[0] += c * v[0];
            q[1] += c * v[1];
        }
        q
    }

    /// `div q_h` on element `e`.
    pub fn eval_div(&self, state: &WaveState, e: usize, x: Point) -> f64 {
        let vals = self.elements[e].eval(&self.exps, x);
        let off = e * self.local_flux_dofs();
        vals.iter().enumerate().map(|(i, v)| state.flux[off + i] * v[2]).sum()
    }

    /// `mu_h(x)` on element `e` at reference barycentric point.
    pub fn eval_scalar(&self, state: &WaveState, e: usize, bary: [f64; 3]) -> f64 {
        let v: Vec<[f64; 1]> = state.scalar.iter().map(|&x| [x]).collect();
        self.scalar.eval(&v, e, bary)[0]
    }

    /// Canonical interpolant: edge moments of `q . n`, bubble part by local
    /// `L^2` projection, and `L^2` projection of `mu`. Edge dofs on the
    /// domain boundary are set to zero (wall constraint `q . n = 0`).
    pub fn interpolate(&self, q: impl Fn(Point) -> [f64; 2], mu: impl Fn(Point) -> f64) -> WaveState {
        let mesh = self.mesh();
        let np = self.p + 1;
        let mut conf = vec![0.0; self.num_conforming_flux_dofs()];
        for edge in 0..mesh.num_edges() {
            if mesh.is_boundary_edge(edge) {
                continue;
            }
            let [a, b] = mesh.edge(edge);
            let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
            let n = self.edge_normals[edge];
            for (&s, &w) in self.edge_rule.points.iter().zip(&self.edge_rule.weights) {
                let qv = q([pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])]);
                let qn = qv[0] * n[0] + qv[1] * n[1];
                for k in 0..np {
                    conf[edge * np + k] += w * qn * shifted_legendre(k, s);
                }
            }
        }
        let nb = self.bubbles();
        if nb > 0 {
            let rule = TriangleRule::exact_to(2 * self.p + 2);
            for e in 0..mesh.num_elements() {
                let det = self.scalar.geometry[e].det;
                let mut gram = DMatrix::zeros(nb, nb);
                let mut rhs = DVector::zeros(nb);
                for (x, w) in rule.points.iter().zip(&rule.weights) {
                    let bary = [1.0 - x[0] - x[1], x[0], x[1]];
                    let pt = self.scalar.point(e, bary);
                    let vals = self.elements[e].eval(&self.exps, pt);
                    let mut res = q(pt);
                    for (i, v) in vals.iter().enumerate().take(3 * np) {
                        let c = conf[self.conforming_dof(e, i)];
                        res[0] -= c * v[0];
                        res[1] -= c * v[1];
                    }
                    let wq = w * det;
                    for i in 0..nb {
                        let vi = vals[3 * np + i];
                        rhs[i] += wq * (vi[0] * res[0] + vi[1] * res[1]);
                        for j in 0..nb {
                            let vj = vals[3 * np + j];
                            gram[(i, j)] += wq * (vi[0] * vj[0] + vi[1] * vj[1]);
                        }
                    }
                }
                let c = gram.cholesky().expect("bubble Gram matrix is SPD").solve(&rhs);
                for i in 0..nb {
                    conf[self.conforming_dof(e, 3 * np + i)] = c[i];
                }
            }
        }
        WaveState {
            flux: self.broken_flux(&conf),
            scalar: self.scalar.project(|x| [mu(x)]).into_iter().map(|v| v[0]).collect(),
        }
    }

    /// `(||q - q_h||^2 + ||mu - mu_h||^2)^{1/2}` over the domain, with a rule
    /// exact to degree `2p + 4`.
    pub fn error_norm(&self, state: &WaveState, exact: impl Fn(Point) -> ([f64; 2], f64)) -> f64 {
        let mesh = self.mesh();
        let rule = TriangleRule::exact_to(2 * self.p + 4);
        let mut sum = 0.0;
        for e in 0..mesh.num_elements() {
            let det = self.scalar.geometry[e].det;
            for (x, w) in rule.points.iter().zip(&rule.weights) {
                let bary = [1.0 - x[0] - x[1], x[0], x[1]];
                let pt = self.scalar.point(e, bary);
                let (q, mu) = exact(pt);
                let qh = self.eval_flux(state, e, pt);
                let muh = self.eval_scalar(state, e, bary);
                sum += w * det * ((q[0] - qh[0]).powi(2) + (q[1] - qh[1]).powi(2) + (mu - muh).powi(2));
            }
        }
        sum.sqrt()
    }
}

/// Standing wave solving the unit wave system on the unit square with
/// `q . n = 0` on the boundary.
pub fn wave_exact_standing(x: Point, t: f64) -> ([f64; 2], f64) {
    let w = PI * SQRT_2;
    let (s1, c1) = (PI * x[0]).sin_cos();
    let (s2, c2) = (PI * x[1]).sin_cos();
    let (st, ct) = (w * t).sin_cos();
    ([-s1 * c2 * st / SQRT_2, -c1 * s2 * st / SQRT_2], c1 * c2 * ct)
}

/// An entry of `WaveState`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Dof {
    Flux(usize),
    Scalar(usize),
}

/// Patch space of one tent: conforming flux functions on the patch (edges
/// on the domain boundary removed, so `q . n = 0` there) and broken scalars.
#[derive(Clone, Debug)]
pub struct PatchMixed<'a> {
    pub space: &'a MixedSpace,
    pub map: &'a TentMap,
    /// Number of patch unknowns.
    n: usize,
    /// Per patch element: patch unknown of each local flux then scalar
    /// function (`None` for edges on the domain boundary).
    elem_dofs: Vec<Vec<Option<usize>>>,
}

/// Matrices of `(H(t_hat) u)' = S u` on a patch, `H` affine in `t_hat`, and
/// `load` with `H(0) u(0) = load x` for element-local front data `x`.
#[derive(Clone, Debug)]
pub struct WaveMatrices {
    pub h0: DMatrix<f64>,
    pub h1: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub load: DMatrix<f64>,
}

impl WaveMatrices {
    pub fn h(&self, t_hat: f64) -> DMatrix<f64> {
        &self.h0 * (1.0 - t_hat) + &self.h1 * t_hat
    }
}

impl<'a> PatchMixed<'a> {
    pub fn new(space: &'a MixedSpace, map: &'a TentMap) -> Self {
        let mesh = space.mesh();
        let np = space.p + 1;
        let nloc = space.local_flux_dofs();
        let nb = space.scalar.nb();
        let mut index: HashMap<usize, usize> = HashMap::new();
        let mut n = 0;
        let mut elem_dofs = Vec::with_capacity(map.num_elements());
        for k in 0..map.num_elements() {
            let e = map.element(k);
            let mut ids = Vec::with_capacity(nloc + nb);
            for i in 0..nloc {
                let on_wall = i < 3 * np && mesh.is_boundary_edge(mesh.element_edges(e)[i / np]);
                ids.push((!on_wall).then(|| {
                    *index.entry(space.conforming_dof(e, i)).or_insert_with(|| {
                        n += 1;
                        n - 1
                    })
                }));
            }
            for _ in 0..nb {
                ids.push(Some(n));
                n += 1;
            }
            elem_dofs.push(ids);
        }
        Self { space, map, n, elem_dofs }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Length of the element-local front data of the patch.
    pub fn broken_len(&self) -> usize {
        self.map.num_elements() * (self.space.local_flux_dofs() + self.space.scalar.nb())
    }

    /// Element matrices `(H(0), H(1), S)` over all local functions of patch
    /// element `k`, flux functions first.
    fn element_matrices(&self, k: usize, law: &Wave) -> [DMatrix<f64>; 3] {
        let sp = self.space;
        let nloc = sp.local_flux_dofs();
        let nb = sp.scalar.nb();
        let nl = nloc + nb;
        let e = self.map.element(k);
        let g = &sp.scalar.geometry[e];
        let gd = self.map.delta_gradient(k);
        let phis = sp.scalar.volume_basis();
        let mut h = [DMatrix::zeros(nl, nl), DMatrix::zeros(nl, nl)];
        let mut s = DMatrix::zeros(nl, nl);
        for (q, &bary) in sp.scalar.volume_bary().iter().enumerate() {
            let x = sp.scalar.point(e, bary);
            let ai = inv2(law.alpha.at(x));
            let beta = law.damping.at(x);
            let delta = self.map.delta(k, bary);
            let w = sp.scalar.volume_weights()[q] * g.det;
            let r = &sp.flux_tab[e][q * nloc..(q + 1) * nloc];
            let eta: Vec<f64> = phis[q].iter().map(|v| g.scale * v).collect();
            for (hm, gp) in h.iter_mut().zip([self.map.grad_bot(k), self.map.grad_top(k)]) {
                for l in 0..nloc {
                    let rl = r[l];
                    for m in 0..nloc {
                        let rm = r[m];
                        let air = [ai[0][0] * rm[0] + ai[0][1] * rm[1], ai[1][0] * rm[0] + ai[1][1] * rm[1]];
                        hm[(l, m)] += w * (rl[0] * air[0] + rl[1] * air[1]);
                    }
                    let rg = rl[0] * gp[0] + rl[1] * gp[1];
                    for m in 0..nb {
                        let v = w * rg * eta[m];
                        hm[(l, nloc + m)] += v;
                        hm[(nloc + m, l)] += v;
                    }
                }
                for l in 0..nb {
                    for m in 0..nb {
                        hm[(nloc + l, nloc + m)] += w * eta[l] * eta[m];
                    }
                }
            }
            for l in 0..nloc {
                let rl = r[l];
                let ddiv = gd[0] * rl[0] + gd[1] * rl[1] + delta * rl[2];
                for m in 0..nb {
                    s[(l, nloc + m)] -= w * delta * eta[m] * rl[2];
                    s[(nloc + m, l)] += w * ddiv * eta[m];
                }
            }
            if beta != 0.0 {
                for l in 0..nb {
                    for m in 0..nb {
                        s[(nloc + l, nloc + m)] -= w * delta * beta * eta[l] * eta[m];
                    }
                }
            }
        }
        let [h0, h1] = h;
        [h0, h1, s]
    }

    /// `H(0)`, `H(1)`, `S` on the patch space and the load of the front data.
    pub fn assemble(&self, law: &Wave) -> WaveMatrices {
        let n = self.len();
        let nl = self.space.local_flux_dofs() + self.space.scalar.nb();
        let mut h0 = DMatrix::zeros(n, n);
        let mut h1 = DMatrix::zeros(n, n);
        let mut s = DMatrix::zeros(n, n);
        let mut load = DMatrix::zeros(n, self.broken_len());
        for (k, ids) in self.elem_dofs.iter().enumerate() {
            let [e0, e1, es] = self.element_matrices(k, law);
            for (l, il) in ids.iter().enumerate() {
                let Some(il) = *il else { continue };
                for (m, im) in ids.iter().enumerate() {
                    load[(il, k * nl + m)] += e0[(l, m)];
                    if let Some(im) = *im {
                        h0[(il, im)] += e0[(l, m)];
                        h1[(il, im)] += e1[(l, m)];
                        s[(il, im)] += es[(l, m)];
                    }
                }
            }
        }
        WaveMatrices { h0, h1, s, load }
    }

    /// Element-local front data of the patch elements.
    pub fn gather(&self, state: &WaveState) -> DVector<f64> {
        let nloc = self.space.local_flux_dofs();
        let nb = self.space.scalar.nb();
        let mut x = DVector::zeros(self.broken_len());
        for k in 0..self.map.num_elements() {
            let e = self.map.element(k);
            let off = k * (nloc + nb);
            for i in 0..nloc {
                x[off + i] = state.flux[e * nloc + i];
            }
            for i in 0..nb {
                x[off + nloc + i] = state.scalar[e * nb + i];
            }
        }
        x
    }

    /// Front entries written by a patch solution `u`: every local
    /// coefficient of every patch element.
    pub fn scatter(&self, u: &DVector<f64>) -> Vec<(Dof, f64)> {
        let nloc = self.space.local_flux_dofs();
        let nb = self.space.scalar.nb();
        let mut out = Vec::with_capacity(self.map.num_elements() * (nloc + nb));
        for (k, ids) in self.elem_dofs.iter().enumerate() {
            let e = self.map.element(k);
            for (i, id) in ids.iter().enumerate() {
                let v = id.map_or(0.0, |j| u[j]);
                out.push(if i < nloc {
                    (Dof::Flux(e * nloc + i), v)
                } else {
                    (Dof::Scalar(e * nb + i - nloc), v)
                });
            }
        }
        out
    }

    /// Shape signature: two tents with equal signatures (and the same
    /// constant material) have identical propagators.
    fn signature(&self) -> Vec<i64> {
        let mesh = self.space.mesh();
        let quant = |v: f64| (v * (1u64 << 40) as f64).round() as i64;
        let origin = self.map.element_points(0)[0];
        let t0 = self.map.phi(0, [1.0, 0.0, 0.0], 0.0);
        let mut key = Vec::new();
        for k in 0..self.map.num_elements() {
            let e = self.map.element(k);
            let pts = self.map.element_points(k);
            let dv = self.map.delta_vertices(k);
            for (v, pt) in pts.iter().enumerate() {
                let mut bary = [0.0; 3];
                bary[v] = 1.0;
                key.push(quant(pt[0] - origin[0]));
                key.push(quant(pt[1] - origin[1]));
                key.push(quant(dv[v]));
                key.push(quant(self.map.phi(k, bary, 0.0) - t0));
            }
            let el = mesh.element(e);
            for j in 0..3 {
                let [a, b] = LOCAL_EDGES[j];
                key.push(i64::from(el[a] > el[b]));
            }
            key.extend(self.elem_dofs[k].iter().map(|i| i.map_or(-1, |i| i as i64)));
        }
        key
    }
}

/// Advances the wave system tent by tent, caching propagators of
/// congruent tents when the material is constant.
pub struct WaveSolver {
    pub space: MixedSpace,
    pub law: Wave,
    pub tableau: ButcherTableau,
    cache: Mutex<HashMap<Vec<i64>, Arc<DMatrix<f64>>>>,
    caching: bool,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl WaveSolver {
    pub fn new(space: MixedSpace, law: Wave, tableau: ButcherTableau) -> Self {
        Self {
            space,
            law,
            tableau,
            cache: Mutex::new(HashMap::new()),
            caching: true,
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
        }
    }

    /// Turns the propagator cache on or off (on by default).
    pub fn with_cache(mut self, on: bool) -> Self {
        self.caching = on;
        self
    }

    /// `(hits, misses)` of the propagator cache.
    pub fn cache_stats(&self) -> (usize, usize) {
        (self.hits.load(Ordering::Relaxed), self.misses.load(Ordering::Relaxed))
    }

    fn propagator(&self, patch: &PatchMixed<'_>, tent: usize) -> Result<Arc<DMatrix<f64>>, SolveError> {
        let cacheable = self.caching && self.law.alpha.is_constant() && self.law.damping.is_constant();
        let key = cacheable.then(|| patch.signature());
        if let Some(k) = &key {
            if let Some(p) = self.cache.lock().expect("cache lock").get(k) {
                self.hits.fetch_add(1, Ordering::Relaxed);
                return Ok(p.clone());
            }
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let m = patch.assemble(&self.law);
        let sys = StageSystem {
            h0: &m.h0,
            h1: &m.h1,
            s: &m.s,
            load: &m.load,
        };
        let p = Arc::new(sys.propagator(&self.tableau, tent)?);
        if let Some(k) = key {
            self.cache.lock().expect("cache lock").insert(k, p.clone());
        }
        Ok(p)
    }

    /// New front entries of the tent's patch elements.
    pub fn advance(&self, tent: &Tent, state: &WaveState) -> Result<Vec<(Dof, f64)>, SolveError> {
        let map = TentMap::new(self.space.mesh(), tent);
        let patch = PatchMixed::new(&self.space, &map);
        let prop = self.propagator(&patch, tent.id)?;
        let u = prop.as_ref() * patch.gather(state);
        if u.iter().any(|v| !v.is_finite()) {
            return Err(SolveError::NonFiniteState { tent: tent.id, substep: 0 });
        }
        Ok(patch.scatter(&u))
    }
}

/// Writes tent results into the front.
pub fn apply_updates(state: &mut WaveState, updates: &[(Dof, f64)]) {
    for &(dof, v) in updates {
        match dof {
            Dof::Flux(g) => state.flux[g] = v,
            Dof::Scalar(g) => state.scalar[g] = v,
        }
    }
}
