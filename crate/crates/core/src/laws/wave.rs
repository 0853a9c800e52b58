use std::fmt;
use std::sync::Arc;

use super::{ConservationLaw, Flux, LawError};
use crate::mesh::Point;

pub type Mat2 = [[f64; 2]; 2];

#[derive(Clone)]
pub enum MatrixField {
    Constant(Mat2),
    Field(Arc<dyn Fn(Point) -> Mat2 + Send + Sync>),
}

#[derive(Clone)]
pub enum ScalarField {
    Constant(f64),
    Field(Arc<dyn Fn(Point) -> f64 + Send + Sync>),
}

impl fmt::Debug for MatrixField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixField::Constant(m) => write!(f, "Constant({m:?})"),
            MatrixField::Field(_) => f.write_str("Field(..)"),
        }
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarField::Constant(c) => write!(f, "Constant({c})"),
            ScalarField::Field(_) => f.write_str("Field(..)"),
        }
    }
}

impl MatrixField {
    pub fn at(&self, x: Point) -> Mat2 {
        match self {
            MatrixField::Constant(m) => *m,
            MatrixField::Field(f) => f(x),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, MatrixField::Constant(_))
    }
}

impl ScalarField {
    pub fn at(&self, x: Point) -> f64 {
        match self {
            ScalarField::Constant(c) => *c,
            ScalarField::Field(f) => f(x),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, ScalarField::Constant(_))
    }
}

pub(crate) fn inv2(m: Mat2) -> Mat2 {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]]
}

fn max_eig_sym2(m: Mat2) -> f64 {
    let mean = 0.5 * (m[0][0] + m[1][1]);
    let half = 0.5 * (m[0][0] - m[1][1]);
    mean + (half * half + m[0][1] * m[0][1]).sqrt()
}

/// Acoustic wave equation `d_tt p + beta d_t p - div(alpha grad p) = 0` as
/// the first-order system in `u = (q, mu) = (alpha grad p, d_t p)`:
/// `alpha^{-1} d_t q - grad mu = 0`, `d_t mu - div q + beta mu = 0`.
#[derive(Clone, Debug)]
pub struct Wave {
    pub alpha: MatrixField,
    pub damping: ScalarField,
}

impl Wave {
    /// `alpha = I`, no damping.
    pub fn unit() -> Self {
        Self {
            alpha: MatrixField::Constant([[1.0, 0.0], [0.0, 1.0]]),
            damping: ScalarField::Constant(0.0),
        }
    }

    pub fn new(alpha: MatrixField, damping: ScalarField) -> Self {
        Self { alpha, damping }
    }
}

/// `H = [[alpha^{-1}, grad_phi], [grad_phi^T, 1]]`, so that `G(u) = H u`.
pub fn wave_h(alpha: Mat2, grad_phi: [f64; 2]) -> [[f64; 3]; 3] {
    let ai = inv2(alpha);
    [
        [ai[0][0], ai[0][1], grad_phi[0]],
        [ai[1][0], ai[1][1], grad_phi[1]],
        [grad_phi[0], grad_phi[1], 1.0],
    ]
}

impl ConservationLaw<3> for Wave {
    fn name(&self) -> &'static str {
        "wave"
    }

    fn temporal(&self, x: Point, _t: f64, u: &[f64; 3]) -> [f64; 3] {
        let ai = inv2(self.alpha.at(x));
        [
            ai[0][0] * u[0] + ai[0][1] * u[1],
            ai[1][0] * u[0] + ai[1][1] * u[1],
            u[2],
        ]
    }

    fn flux(&self, _x: Point, _t: f64, u: &[f64; 3]) -> Result<Flux<3>, LawError> {
        Ok([[-u[2], 0.0], [0.0, -u[2]], [-u[0], -u[1]]])
    }

    fn source(&self, x: Point, _t: f64, u: &[f64; 3]) -> [f64; 3] {
        [0.0, 0.0, self.damping.at(x) * u[2]]
    }

    fn max_wavespeed(&self, x: Point, _t: f64, _u: &[f64; 3]) -> Result<f64, LawError> {
        Ok(max_eig_sym2(self.alpha.at(x)).sqrt())
    }

    fn normal_wavespeed(&self, x: Point, _t: f64, _u: &[f64; 3], n: [f64; 2]) -> Result<f64, LawError> {
        let a = self.alpha.at(x);
        Ok((n[0] * (a[0][0] * n[0] + a[0][1] * n[1]) + n[1] * (a[1][0] * n[0] + a[1][1] * n[1])).sqrt())
    }

    fn temporal_jacobian(&self, x: Point, _t: f64, _u: &[f64; 3]) -> [[f64; 3]; 3] {
        wave_h(self.alpha.at(x), [0.0, 0.0])
    }

    fn mapped_inverse(&self, x: Point, _t: f64, big_u: &[f64; 3], gp: [f64; 2]) -> Result<[f64; 3], LawError> {
        let a = self.alpha.at(x);
        let ag = [a[0][0] * gp[0] + a[0][1] * gp[1], a[1][0] * gp[0] + a[1][1] * gp[1]];
        // Schur complement of the alpha^{-1} block
        let s = 1.0 - (gp[0] * ag[0] + gp[1] * ag[1]);
        if s <= 1e-12 {
            return Err(LawError::CausalityViolation(format!(
                "1 - grad phi . alpha grad phi = {s:e}"
            )));
        }
        let mu = (big_u[2] - (ag[0] * big_u[0] + ag[1] * big_u[1])) / s;
        let r = [big_u[0] - mu * gp[0], big_u[1] - mu * gp[1]];
        Ok([
            a[0][0] * r[0] + a[0][1] * r[1],
            a[1][0] * r[0] + a[1][1] * r[1],
            mu,
        ])
    }
}
