//! The map `Phi(x, t_hat) = (x, phi(x, t_hat))` from the cylinder
//! `patch x (0, 1)` onto a tent, with
//! `phi = (1 - t_hat) tau_bot + t_hat tau_top`.
//!
//! On each patch element `tau_bot` and `tau_top` are linear, so
//! `grad_x phi` is elementwise constant in space and affine in `t_hat`,
//! and `det DPhi = delta = tau_top - tau_bot`.

use crate::mesh::{Point, SpatialMesh};
use crate::poly::Poly;
use crate::quadrature::{LineRule, TriangleRule};
use crate::tents::Tent;

#[derive(Clone, Debug, PartialEq)]
pub struct TentMap {
    elements: Vec<usize>,
    points: Vec<[Point; 3]>,
    tau_bot: Vec<[f64; 3]>,
    tau_top: Vec<[f64; 3]>,
    grad_bot: Vec<[f64; 2]>,
    grad_top: Vec<[f64; 2]>,
}

impl TentMap {
    pub fn new(mesh: &SpatialMesh, tent: &Tent) -> Self {
        let bot = |v: usize| tent.times_at(v).expect("patch vertex").0;
        let top = |v: usize| tent.times_at(v).expect("patch vertex").1;
        Self::from_vertex_times(mesh, &tent.elements, bot, top)
    }

    /// Map over an arbitrary element set with given vertex times.
    pub fn from_vertex_times(
        mesh: &SpatialMesh,
        elements: &[usize],
        tau_bot: impl Fn(usize) -> f64,
        tau_top: impl Fn(usize) -> f64,
    ) -> Self {
        let mut map = Self {
            elements: elements.to_vec(),
            points: Vec::with_capacity(elements.len()),
            tau_bot: Vec::with_capacity(elements.len()),
            tau_top: Vec::with_capacity(elements.len()),
            grad_bot: Vec::with_capacity(elements.len()),
            grad_top: Vec::with_capacity(elements.len()),
        };
        for &e in elements {
            let el = mesh.element(e);
            let b = el.map(&tau_bot);
            let t = el.map(&tau_top);
            map.points.push(mesh.element_points(e));
            map.grad_bot.push(mesh.p1_gradient(e, b));
            map.grad_top.push(mesh.p1_gradient(e, t));
            map.tau_bot.push(b);
            map.tau_top.push(t);
        }
        map
    }

    /// Flat slab `tau_bot = t0`, `tau_top = t0 + k` over the given elements.
    pub fn flat(mesh: &SpatialMesh, elements: &[usize], t0: f64, k: f64) -> Self {
        Self::from_vertex_times(mesh, elements, |_| t0, |_| t0 + k)
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[usize] {
        &self.elements
    }

    /// Global index of local element `k`.
    pub fn element(&self, k: usize) -> usize {
        self.elements[k]
    }

    pub fn grad_bot(&self, k: usize) -> [f64; 2] {
        self.grad_bot[k]
    }

    pub fn grad_top(&self, k: usize) -> [f64; 2] {
        self.grad_top[k]
    }

    /// `grad_x phi` on local element `k` at `t_hat`.
    pub fn grad_phi(&self, k: usize, t_hat: f64) -> [f64; 2] {
        let (b, t) = (self.grad_bot[k], self.grad_top[k]);
        [
            (1.0 - t_hat) * b[0] + t_hat * t[0],
            (1.0 - t_hat) * b[1] + t_hat * t[1],
        ]
    }

    /// `delta` at the vertices of local element `k` (element vertex order).
    pub fn delta_vertices(&self, k: usize) -> [f64; 3] {
        let (b, t) = (self.tau_bot[k], self.tau_top[k]);
        [t[0] - b[0], t[1] - b[1], t[2] - b[2]]
    }

    pub fn delta(&self, k: usize, bary: [f64; 3]) -> f64 {
        let d = self.delta_vertices(k);
        d[0] * bary[0] + d[1] * bary[1] + d[2] * bary[2]
    }

    pub fn delta_gradient(&self, k: usize) -> [f64; 2] {
        let (b, t) = (self.grad_bot[k], self.grad_top[k]);
        [t[0] - b[0], t[1] - b[1]]
    }

    /// `max delta` over the patch.
    pub fn delta_max(&self) -> f64 {
        (0..self.num_elements())
            .flat_map(|k| self.delta_vertices(k))
            .fold(0.0, f64::max)
    }

    pub fn phi(&self, k: usize, bary: [f64; 3], t_hat: f64) -> f64 {
        let (b, t) = (self.tau_bot[k], self.tau_top[k]);
        (0..3)
            .map(|i| bary[i] * ((1.0 - t_hat) * b[i] + t_hat * t[i]))
            .sum()
    }

    pub fn element_points(&self, k: usize) -> [Point; 3] {
        self.points[k]
    }

    pub fn point(&self, k: usize, bary: [f64; 3]) -> Point {
        let p = self.points[k];
        [
            bary[0] * p[0][0] + bary[1] * p[1][0] + bary[2] * p[2][0],
            bary[0] * p[0][1] + bary[1] * p[1][1] + bary[2] * p[2][1],
        ]
    }

    /// `phi` on local element `k` as a polynomial in `(x1, x2, t_hat)`.
    pub fn phi_poly(&self, k: usize) -> Poly {
        let x0 = self.points[k][0];
        let affine = |tau0: f64, g: [f64; 2]| {
            Poly::affine_in_space(tau0 - g[0] * x0[0] - g[1] * x0[1], g[0], g[1])
        };
        let bot = affine(self.tau_bot[k][0], self.grad_bot[k]);
        let top = affine(self.tau_top[k][0], self.grad_top[k]);
        let t = Poly::var(2);
        &bot + &(&t * &(&top - &bot))
    }
}

/// Spacetime sample points `(local element, x, t_hat)` used by the
/// polynomial identity checks.
fn sample_points(map: &TentMap, degree: usize) -> Vec<(usize, [f64; 3])> {
    let tri = TriangleRule::exact_to(degree);
    let line = LineRule::exact_to(degree);
    let mut out = Vec::new();
    for k in 0..map.num_elements() {
        for p in &tri.points {
            let x = map.point(k, [1.0 - p[0] - p[1], p[0], p[1]]);
            for &t in &line.points {
                out.push((k, [x[0], x[1], t]));
            }
        }
    }
    out
}

/// Largest pointwise violation of `div F_hat = delta (div F) o Phi` for a
/// spacetime vector field `F = (F_x1, F_x2, F_t)`, where
/// `F_hat = delta DPhi^{-1} (F o Phi) = (delta F_x, F_t - grad phi . F_x) o Phi`.
pub fn piola_identity_check(field: &[Poly; 3], map: &TentMap) -> f64 {
    let mut worst: f64 = 0.0;
    let polys: Vec<(Poly, Poly)> = (0..map.num_elements())
        .map(|k| {
            let phi = map.phi_poly(k);
            let sub = [Poly::var(0), Poly::var(1), phi.clone()];
            let delta = phi.deriv(2);
            let (g1, g2) = (phi.deriv(0), phi.deriv(1));
            let f: Vec<Poly> = field.iter().map(|c| c.compose(&sub)).collect();
            let mapped = [
                &delta * &f[0],
                &delta * &f[1],
                &(&f[2] - &(&g1 * &f[0])) - &(&g2 * &f[1]),
            ];
            let div_hat = &(&mapped[0].deriv(0) + &mapped[1].deriv(1)) + &mapped[2].deriv(2);
            let div = &(&field[0].deriv(0) + &field[1].deriv(1)) + &field[2].deriv(2);
            (div_hat, &delta * &div.compose(&sub))
        })
        .collect();
    for (k, p) in sample_points(map, 6) {
        let (lhs, rhs) = &polys[k];
        worst = worst.max((lhs.eval(p) - rhs.eval(p)).abs());
    }
    worst
}

/// A conservation law whose temporal, flux and source functions are
/// polynomials of the state, so compositions stay polynomial.
pub trait PolynomialLaw {
    fn temporal(&self, u: &[Poly]) -> Vec<Poly>;
    fn flux(&self, u: &[Poly]) -> Vec<[Poly; 2]>;
    fn source(&self, u: &[Poly]) -> Vec<Poly> {
        vec![Poly::zero(); u.len()]
    }
}

/// Largest violation of the mapped conservation law
/// `d_t (g(u_hat) - f(u_hat) grad phi) + div (delta f(u_hat)) + delta b(u_hat)
///  = delta (d_t g(u) + div f(u) + b(u)) o Phi`
/// for a polynomial field `u(x1, x2, t)`, with `u_hat = u o Phi`.
pub fn mapped_consistency_check(law: &dyn PolynomialLaw, u: &[Poly], map: &TentMap) -> f64 {
    let mut worst: f64 = 0.0;
    let residuals: Vec<(Vec<Poly>, Vec<Poly>)> = (0..map.num_elements())
        .map(|k| {
            let phi = map.phi_poly(k);
            let sub = [Poly::var(0), Poly::var(1), phi.clone()];
            let delta = phi.deriv(2);
            let (g1, g2) = (phi.deriv(0), phi.deriv(1));
            let u_hat: Vec<Poly> = u.iter().map(|c| c.compose(&sub)).collect();

            let (g, f, b) = (law.temporal(&u_hat), law.flux(&u_hat), law.source(&u_hat));
            let mapped: Vec<Poly> = (0..u.len())
                .map(|l| {
                    let big_g = &(&g[l] - &(&f[l][0] * &g1)) - &(&f[l][1] * &g2);
                    let div = &(&delta * &f[l][0]).deriv(0) + &(&delta * &f[l][1]).deriv(1);
                    &(&big_g.deriv(2) + &div) + &(&delta * &b[l])
                })
                .collect();

            let (g, f, b) = (law.temporal(u), law.flux(u), law.source(u));
            let physical: Vec<Poly> = (0..u.len())
                .map(|l| {
                    let r = &(&(&g[l].deriv(2) + &f[l][0].deriv(0)) + &f[l][1].deriv(1)) + &b[l];
                    &delta * &r.compose(&sub)
                })
                .collect();
            (mapped, physical)
        })
        .collect();
    for (k, p) in sample_points(map, 4) {
        let (lhs, rhs) = &residuals[k];
        for (a, b) in lhs.iter().zip(rhs) {
            worst = worst.max((a.eval(p) - b.eval(p)).abs());
        }
    }
    worst
}
