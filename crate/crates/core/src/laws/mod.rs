//! Hyperbolic systems `d_t g(u) + div f(u) + b(u) = 0` with `L` components
//! in two space dimensions.

use thiserror::Error;

use crate::mesh::Point;

mod burgers;
mod euler;
mod transport;
pub mod wave;

pub use burgers::{burgers_ginv, Burgers};
pub use euler::{Euler, EulerState, D_GAS, GAMMA_GAS};
pub use transport::{Transport, Velocity};
pub use wave::{wave_h, MatrixField, ScalarField, Wave};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LawError {
    #[error("causality violated: {0}")]
    CausalityViolation(String),
    #[error("non-physical state: {0}")]
    NonPhysicalState(String),
    #[error("law has no entropy pair")]
    NoEntropyPair,
}

pub type Flux<const L: usize> = [[f64; 2]; L];

pub trait ConservationLaw<const L: usize>: Send + Sync {
    fn name(&self) -> &'static str;

    /// `g(x, t, u)`.
    fn temporal(&self, x: Point, t: f64, u: &[f64; L]) -> [f64; L];

    /// `f(x, t, u)`; row `l` holds the spatial flux of component `l`.
    fn flux(&self, x: Point, t: f64, u: &[f64; L]) -> Result<Flux<L>, LawError>;

    /// `b(x, t, u)`.
    fn source(&self, _x: Point, _t: f64, _u: &[f64; L]) -> [f64; L] {
        [0.0; L]
    }

    /// Bound on the characteristic speeds at `u`.
    fn max_wavespeed(&self, x: Point, t: f64, u: &[f64; L]) -> Result<f64, LawError>;

    /// Largest wavespeed in the unit direction `n`, used by the Rusanov flux.
    fn normal_wavespeed(&self, x: Point, t: f64, u: &[f64; L], _n: [f64; 2]) -> Result<f64, LawError> {
        self.max_wavespeed(x, t, u)
    }

    /// `D_u g`.
    fn temporal_jacobian(&self, x: Point, t: f64, u: &[f64; L]) -> [[f64; L]; L];

    /// Solves `G(u) = g(u) - f(u) grad_phi = big_u` for `u`.
    fn mapped_inverse(&self, x: Point, t: f64, big_u: &[f64; L], grad_phi: [f64; 2]) -> Result<[f64; L], LawError>;

    fn check_state(&self, _u: &[f64; L]) -> Result<(), LawError> {
        Ok(())
    }

    /// `(E(u), F(u))`.
    fn entropy(&self, _x: Point, _u: &[f64; L]) -> Result<(f64, [f64; 2]), LawError> {
        Err(LawError::NoEntropyPair)
    }

    /// `D_u E(u)`. For laws with `g(u) = u` this is also the derivative of
    /// the mapped entropy with respect to the mapped variable.
    fn entropy_variables(&self, _u: &[f64; L]) -> Result<[f64; L], LawError> {
        Err(LawError::NoEntropyPair)
    }

    /// Velocity whose normal sign selects the upwind side of the entropy flux.
    fn entropy_velocity(&self, _x: Point, _u: &[f64; L]) -> [f64; 2] {
        [0.0; 2]
    }

    /// Speed scale used by the viscosity limiter.
    fn viscosity_scale(&self, x: Point, t: f64, u: &[f64; L]) -> Result<f64, LawError> {
        self.max_wavespeed(x, t, u)
    }

    /// Exterior state mirrored across a solid wall with unit normal `n`.
    fn reflect(&self, u: &[f64; L], _n: [f64; 2]) -> [f64; L] {
        *u
    }

    /// `G(u) = g(u) - f(u) grad_phi`.
    fn mapped_temporal(&self, x: Point, t: f64, u: &[f64; L], grad_phi: [f64; 2]) -> Result<[f64; L], LawError> {
        let g = self.temporal(x, t, u);
        let f = self.flux(x, t, u)?;
        let mut out = g;
        for l in 0..L {
            out[l] -= f[l][0] * grad_phi[0] + f[l][1] * grad_phi[1];
        }
        Ok(out)
    }
}

/// Data of the law after mapping to the cylinder, at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct MappedData<const L: usize> {
    pub g: [f64; L],
    pub f: Flux<L>,
    pub b: [f64; L],
    /// `g - f grad_phi`.
    pub big_g: [f64; L],
}

/// Evaluates the law at the spacetime point `(x, phi)` with frozen
/// coefficients.
pub fn mapped_data<const L: usize>(
    law: &dyn ConservationLaw<L>,
    x: Point,
    phi: f64,
    grad_phi: [f64; 2],
    w: &[f64; L],
) -> Result<MappedData<L>, LawError> {
    let g = law.temporal(x, phi, w);
    let f = law.flux(x, phi, w)?;
    let b = law.source(x, phi, w);
    let mut big_g = g;
    for l in 0..L {
        big_g[l] -= f[l][0] * grad_phi[0] + f[l][1] * grad_phi[1];
    }
    Ok(MappedData { g, f, b, big_g })
}

/// `(E - F grad_phi, delta F)`.
pub fn mapped_entropy_pair<const L: usize>(
    law: &dyn ConservationLaw<L>,
    x: Point,
    grad_phi: [f64; 2],
    delta: f64,
    w: &[f64; L],
) -> Result<(f64, [f64; 2]), LawError> {
    let (e, f) = law.entropy(x, w)?;
    Ok((e - f[0] * grad_phi[0] - f[1] * grad_phi[1], [delta * f[0], delta * f[1]]))
}

pub(crate) fn norm2(v: [f64; 2]) -> f64 {
    (v[0] * v[0] + v[1] * v[1]).sqrt()
}
