use super::{ConservationLaw, Flux, LawError};
use crate::mesh::Point;

/// Two-dimensional Burgers equation `d_t u + div(u^2/2 (1, 1)) = 0`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Burgers;

/// Inverse of `U = u - d u^2 / 2` with `d = d_1 phi + d_2 phi`, taking the
/// root that tends to `U` as `d -> 0`.
pub fn burgers_ginv(big_u: f64, d: f64) -> Result<f64, LawError> {
    let disc = 1.0 - 2.0 * d * big_u;
    if disc < 0.0 {
        return Err(LawError::CausalityViolation(format!(
            "1 - 2 d U = {disc:e} < 0 (d = {d}, U = {big_u})"
        )));
    }
    let u = 2.0 * big_u / (1.0 + disc.sqrt());
    if (u * d).abs() >= 1.0 {
        return Err(LawError::CausalityViolation(format!("|u d| = {} >= 1", (u * d).abs())));
    }
    Ok(u)
}

impl ConservationLaw<1> for Burgers {
    fn name(&self) -> &'static str {
        "burgers"
    }

    fn temporal(&self, _x: Point, _t: f64, u: &[f64; 1]) -> [f64; 1] {
        *u
    }

    fn flux(&self, _x: Point, _t: f64, u: &[f64; 1]) -> Result<Flux<1>, LawError> {
        let f = 0.5 * u[0] * u[0];
        Ok([[f, f]])
    }

    fn max_wavespeed(&self, _x: Point, _t: f64, u: &[f64; 1]) -> Result<f64, LawError> {
        Ok(u[0].abs() * std::f64::consts::SQRT_2)
    }

    fn normal_wavespeed(&self, _x: Point, _t: f64, u: &[f64; 1], n: [f64; 2]) -> Result<f64, LawError> {
        Ok((u[0] * (n[0] + n[1])).abs())
    }

    fn temporal_jacobian(&self, _x: Point, _t: f64, _u: &[f64; 1]) -> [[f64; 1]; 1] {
        [[1.0]]
    }

    fn mapped_inverse(&self, _x: Point, _t: f64, big_u: &[f64; 1], gp: [f64; 2]) -> Result<[f64; 1], LawError> {
        Ok([burgers_ginv(big_u[0], gp[0] + gp[1])?])
    }

    fn entropy(&self, _x: Point, u: &[f64; 1]) -> Result<(f64, [f64; 2]), LawError> {
        let f = u[0].powi(3) / 3.0;
        Ok((0.5 * u[0] * u[0], [f, f]))
    }

    fn entropy_variables(&self, u: &[f64; 1]) -> Result<[f64; 1], LawError> {
        Ok(*u)
    }

    fn entropy_velocity(&self, _x: Point, u: &[f64; 1]) -> [f64; 2] {
        [u[0], u[0]]
    }
}
