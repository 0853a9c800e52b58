//! Shared helpers and independent oracles for the integration tests.
#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use tentkit::basis::RefBasis;
use tentkit::mapping::{PolynomialLaw, TentMap};
use tentkit::mesh::{Point, SpatialMesh};
use tentkit::poly::Poly;
use tentkit::quadrature::{LineRule, TriangleRule};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// A patch of a random vertex of an irregular mesh with random bottom
/// times and a random pole, i.e. an arbitrary admissible tent shape.
pub fn random_tent_map(rng: &mut StdRng) -> TentMap {
    let base = SpatialMesh::structured_square(2).unwrap();
    // jiggle interior vertices so the element shapes vary
    let verts: Vec<Point> = base
        .vertices()
        .iter()
        .map(|&[x, y]| {
            let interior = x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0;
            if interior {
                [x + rng.random_range(-0.06..0.06), y + rng.random_range(-0.06..0.06)]
            } else {
                [x, y]
            }
        })
        .collect();
    let mesh = SpatialMesh::new(verts, base.elements().to_vec(), &[]).unwrap();
    let v = rng.random_range(0..mesh.num_vertices());
    let patch = mesh.vertex_patch(v).unwrap();
    let bot: Vec<f64> = patch.vertices.iter().map(|_| rng.random_range(0.0..0.3)).collect();
    let pole = rng.random_range(0.05..0.4);
    let local = |w: usize| patch.local_vertex(w).unwrap();
    TentMap::from_vertex_times(
        &mesh,
        &patch.elements,
        |w| bot[local(w)],
        |w| bot[local(w)] + if w == v { pole } else { 0.0 },
    )
}

/// Random polynomial of total degree at most 3 in `(x1, x2, t)`.
pub fn random_cubic(rng: &mut StdRng) -> Poly {
    let mut p = Poly::zero();
    for a in 0..=3u32 {
        for b in 0..=3 - a {
            for c in 0..=3 - a - b {
                p = &p + &Poly::monomial(rng.random_range(-1.0..1.0), [a, b, c]);
            }
        }
    }
    p
}

pub struct PolyTransport(pub [f64; 2]);

impl PolynomialLaw for PolyTransport {
    fn temporal(&self, u: &[Poly]) -> Vec<Poly> {
        u.to_vec()
    }
    fn flux(&self, u: &[Poly]) -> Vec<[Poly; 2]> {
        vec![[u[0].scaled(self.0[0]), u[0].scaled(self.0[1])]]
    }
}

pub struct PolyBurgers;

impl PolynomialLaw for PolyBurgers {
    fn temporal(&self, u: &[Poly]) -> Vec<Poly> {
        u.to_vec()
    }
    fn flux(&self, u: &[Poly]) -> Vec<[Poly; 2]> {
        let f = (&u[0] * &u[0]).scaled(0.5);
        vec![[f.clone(), f]]
    }
}

/// First-order wave system with unit coefficient and damping `beta`.
pub struct PolyWave(pub f64);

impl PolynomialLaw for PolyWave {
    fn temporal(&self, u: &[Poly]) -> Vec<Poly> {
        u.to_vec()
    }
    fn flux(&self, u: &[Poly]) -> Vec<[Poly; 2]> {
        let z = Poly::zero();
        vec![
            [-&u[2], z.clone()],
            [z, -&u[2]],
            [-&u[0], -&u[1]],
        ]
    }
    fn source(&self, u: &[Poly]) -> Vec<Poly> {
        vec![Poly::zero(), Poly::zero(), u[2].scaled(self.0)]
    }
}

/// Standard (unmapped) DG discretization of `u_t + div(beta u) = 0` with
/// the Rusanov flux and mirrored boundary states, assembled directly from
/// physical coordinates. Coefficients are stored element-major over the
/// orthonormal basis.
pub struct MolTransport {
    pub mesh: SpatialMesh,
    pub basis: RefBasis,
    pub beta: [f64; 2],
    vol: TriangleRule,
    line: LineRule,
}

struct Affine {
    origin: Point,
    jac: [[f64; 2]; 2],
    inv: [[f64; 2]; 2],
    det: f64,
}

impl Affine {
    fn new(p: [Point; 3]) -> Self {
        let jac = [[p[1][0] - p[0][0], p[2][0] - p[0][0]], [p[1][1] - p[0][1], p[2][1] - p[0][1]]];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let inv = [[jac[1][1] / det, -jac[0][1] / det], [-jac[1][0] / det, jac[0][0] / det]];
        Self { origin: p[0], jac, inv, det }
    }
    fn to_physical(&self, xi: [f64; 2]) -> Point {
        [
            self.origin[0] + self.jac[0][0] * xi[0] + self.jac[0][1] * xi[1],
            self.origin[1] + self.jac[1][0] * xi[0] + self.jac[1][1] * xi[1],
        ]
    }
    fn to_reference(&self, x: Point) -> [f64; 2] {
        let d = [x[0] - self.origin[0], x[1] - self.origin[1]];
        [self.inv[0][0] * d[0] + self.inv[0][1] * d[1], self.inv[1][0] * d[0] + self.inv[1][1] * d[1]]
    }
}

impl MolTransport {
    pub fn new(mesh: &SpatialMesh, p: usize, beta: [f64; 2]) -> Self {
        Self {
            mesh: mesh.clone(),
            basis: RefBasis::new(p),
            beta,
            vol: TriangleRule::exact_to(2 * p + 2),
            line: LineRule::gauss_legendre(p + 2),
        }
    }

    fn values(&self, u: &[[f64; 1]], e: usize, x: Point) -> (Vec<f64>, f64) {
        let a = Affine::new(self.mesh.element_points(e));
        let s = 1.0 / a.det.sqrt();
        let phi: Vec<f64> = self.basis.eval(a.to_reference(x)).iter().map(|v| s * v).collect();
        let nb = phi.len();
        let val = (0..nb).map(|n| phi[n] * u[e * nb + n][0]).sum();
        (phi, val)
    }

    pub fn rhs(&self, u: &[[f64; 1]]) -> Vec<[f64; 1]> {
        let nb = self.basis.len();
        let b = self.beta;
        let mut r = vec![[0.0]; u.len()];
        for e in 0..self.mesh.num_elements() {
            let a = Affine::new(self.mesh.element_points(e));
            let s = 1.0 / a.det.sqrt();
            for (xi, w) in self.vol.points.iter().zip(&self.vol.weights) {
                let (_, val) = self.values(u, e, a.to_physical(*xi));
                for (n, g) in self.basis.eval_grad(*xi).iter().enumerate() {
                    // physical gradient = J^{-T} reference gradient
                    let gx = s * (a.inv[0][0] * g[0] + a.inv[1][0] * g[1]);
                    let gy = s * (a.inv[0][1] * g[0] + a.inv[1][1] * g[1]);
                    r[e * nb + n][0] += w * a.det * val * (b[0] * gx + b[1] * gy);
                }
            }
        }
        for i in 0..self.mesh.num_edges() {
            let [va, vb] = self.mesh.edge(i);
            let (pa, pb) = (self.mesh.vertex(va), self.mesh.vertex(vb));
            let (left, right) = self.mesh.edge_elements(i);
            let len = self.mesh.edge_length(i);
            let c = self.mesh.element_centroid(left);
            let mut n = [(pb[1] - pa[1]) / len, -(pb[0] - pa[0]) / len];
            if n[0] * (pa[0] - c[0]) + n[1] * (pa[1] - c[1]) < 0.0 {
                n = [-n[0], -n[1]];
            }
            let bn = b[0] * n[0] + b[1] * n[1];
            for (t, w) in self.line.points.iter().zip(&self.line.weights) {
                let x = [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])];
                let (phi_l, ul) = self.values(u, left, x);
                let ur = right.map_or(ul, |e| self.values(u, e, x).1);
                let q = 0.5 * bn * (ul + ur) - 0.5 * bn.abs() * (ur - ul);
                for k in 0..nb {
                    r[left * nb + k][0] -= w * len * q * phi_l[k];
                }
                if let Some(e) = right {
                    let (phi_r, _) = self.values(u, e, x);
                    for k in 0..nb {
                        r[e * nb + k][0] += w * len * q * phi_r[k];
                    }
                }
            }
        }
        r
    }

    /// Two-stage SSP Runge-Kutta over `steps` steps of size `dt`.
    pub fn ssp2(&self, u0: &[[f64; 1]], dt: f64, steps: usize) -> Vec<[f64; 1]> {
        let mut u = u0.to_vec();
        for _ in 0..steps {
            let r = self.rhs(&u);
            let u1: Vec<[f64; 1]> = u.iter().zip(&r).map(|(a, b)| [a[0] + dt * b[0]]).collect();
            let r1 = self.rhs(&u1);
            u = u
                .iter()
                .zip(u1.iter().zip(&r1))
                .map(|(a, (b, c))| [0.5 * a[0] + 0.5 * (b[0] + dt * c[0])])
                .collect();
        }
        u
    }
}

/// Smooth bump supported in the disc of radius `r` about `c`.
pub fn bump(x: Point, c: Point, r: f64) -> f64 {
    let d2 = ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)) / (r * r);
    if d2 < 1.0 {
        (1.0 - d2).powi(4)
    } else {
        0.0
    }
}

pub fn max_abs_diff<const L: usize>(a: &[[f64; L]], b: &[[f64; L]]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| (0..L).map(move |l| (x[l] - y[l]).abs()))
        .fold(0.0, f64::max)
}

/// Measured tent-slab invariants.
#[derive(Debug)]
pub struct SlabReport {
    /// Largest `c |grad tau|` over tent elements, bottom and top, with `c`
    /// the smallest speed on the element's edges. Edge speeds bound the
    /// speeds of the adjacent elements, so this is the element's bound.
    pub max_gradient_ratio: f64,
    /// `|sum of tent volumes - area t_slab| / (area t_slab)`.
    pub volume_error: f64,
    /// Whether all tents in each layer have pairwise disjoint element sets.
    pub layers_disjoint: bool,
}

pub fn slab_report(mesh: &SpatialMesh, slab: &tentkit::tents::TentSlab, speeds: &[f64]) -> SlabReport {
    let mut max_ratio: f64 = 0.0;
    let mut volume = 0.0;
    for tent in &slab.tents {
        let map = TentMap::new(mesh, tent);
        for k in 0..map.num_elements() {
            let e = map.element(k);
            let c = mesh.element_edges(e).iter().map(|&i| speeds[i]).fold(f64::INFINITY, f64::min);
            for g in [map.grad_bot(k), map.grad_top(k)] {
                max_ratio = max_ratio.max(c * (g[0] * g[0] + g[1] * g[1]).sqrt());
            }
            // delta is linear, so its mean is the vertex average
            let d: f64 = map.delta_vertices(k).iter().sum();
            volume += d / 3.0 * mesh.element_area(e);
        }
    }
    let exact = mesh.total_area() * slab.t_slab;
    let mut disjoint = true;
    for layer in &slab.layers {
        let mut seen = std::collections::HashSet::new();
        for &t in layer {
            for &e in &slab.tents[t].elements {
                disjoint &= seen.insert(e);
            }
        }
    }
    SlabReport {
        max_gradient_ratio: max_ratio,
        volume_error: (volume - exact).abs() / exact,
        layers_disjoint: disjoint,
    }
}
