use std::fmt;
use std::sync::Arc;

use super::{norm2, ConservationLaw, Flux, LawError};
use crate::mesh::Point;

/// Advecting velocity of the transport law. Must be divergence free; this
/// is not checked.
#[derive(Clone)]
pub enum Velocity {
    Constant([f64; 2]),
    Field(Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>),
}

impl fmt::Debug for Velocity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Velocity::Constant(b) => write!(f, "Constant({b:?})"),
            Velocity::Field(_) => f.write_str("Field(..)"),
        }
    }
}

impl Velocity {
    pub fn at(&self, x: Point) -> [f64; 2] {
        match self {
            Velocity::Constant(b) => *b,
            Velocity::Field(f) => f(x),
        }
    }
}

/// Scalar transport `d_t u + div(beta u) = 0`.
#[derive(Clone, Debug)]
pub struct Transport {
    pub velocity: Velocity,
}

impl Transport {
    pub fn constant(beta: [f64; 2]) -> Self {
        Self {
            velocity: Velocity::Constant(beta),
        }
    }

    pub fn field(beta: impl Fn(Point) -> [f64; 2] + Send + Sync + 'static) -> Self {
        Self {
            velocity: Velocity::Field(Arc::new(beta)),
        }
    }
}

impl ConservationLaw<1> for Transport {
    fn name(&self) -> &'static str {
        "transport"
    }

    fn temporal(&self, _x: Point, _t: f64, u: &[f64; 1]) -> [f64; 1] {
        *u
    }

    fn flux(&self, x: Point, _t: f64, u: &[f64; 1]) -> Result<Flux<1>, LawError> {
        let b = self.velocity.at(x);
        Ok([[b[0] * u[0], b[1] * u[0]]])
    }

    fn max_wavespeed(&self, x: Point, _t: f64, _u: &[f64; 1]) -> Result<f64, LawError> {
        Ok(norm2(self.velocity.at(x)))
    }

    fn normal_wavespeed(&self, x: Point, _t: f64, _u: &[f64; 1], n: [f64; 2]) -> Result<f64, LawError> {
        let b = self.velocity.at(x);
        Ok((b[0] * n[0] + b[1] * n[1]).abs())
    }

    fn temporal_jacobian(&self, _x: Point, _t: f64, _u: &[f64; 1]) -> [[f64; 1]; 1] {
        [[1.0]]
    }

    fn mapped_inverse(&self, x: Point, _t: f64, big_u: &[f64; 1], gp: [f64; 2]) -> Result<[f64; 1], LawError> {
        let b = self.velocity.at(x);
        let s = 1.0 - (b[0] * gp[0] + b[1] * gp[1]);
        if s.abs() < 1e-12 {
            return Err(LawError::CausalityViolation(format!("1 - beta . grad phi = {s:e}")));
        }
        Ok([big_u[0] / s])
    }

    fn entropy(&self, x: Point, u: &[f64; 1]) -> Result<(f64, [f64; 2]), LawError> {
        let b = self.velocity.at(x);
        let e = 0.5 * u[0] * u[0];
        Ok((e, [b[0] * e, b[1] * e]))
    }

    fn entropy_variables(&self, u: &[f64; 1]) -> Result<[f64; 1], LawError> {
        Ok(*u)
    }

    fn entropy_velocity(&self, x: Point, _u: &[f64; 1]) -> [f64; 2] {
        self.velocity.at(x)
    }
}
