use super::{norm2, ConservationLaw, Flux, LawError};
use crate::mesh::Point;

/// Degrees of freedom of the gas particles.
pub const D_GAS: f64 = 5.0;
/// `(d + 2) / d`.
pub const GAMMA_GAS: f64 = (D_GAS + 2.0) / D_GAS;

/// Conserved Euler state. Pressure and temperature follow
/// `P = rho T / 2` and `T = (4/d) (E/rho - |m|^2 / (2 rho^2))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EulerState {
    pub rho: f64,
    pub m: [f64; 2],
    pub e: f64,
}

impl EulerState {
    pub fn from_array(u: &[f64; 4]) -> Self {
        Self {
            rho: u[0],
            m: [u[1], u[2]],
            e: u[3],
        }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.rho, self.m[0], self.m[1], self.e]
    }

    /// State with density `rho`, velocity `v` and pressure `p`.
    pub fn from_primitive(rho: f64, v: [f64; 2], p: f64) -> Self {
        Self {
            rho,
            m: [rho * v[0], rho * v[1]],
            e: 0.5 * D_GAS * p + 0.5 * rho * (v[0] * v[0] + v[1] * v[1]),
        }
    }

    pub fn temperature(&self) -> f64 {
        let m2 = self.m[0] * self.m[0] + self.m[1] * self.m[1];
        4.0 / D_GAS * (self.e / self.rho - 0.5 * m2 / (self.rho * self.rho))
    }

    pub fn pressure(&self) -> f64 {
        0.5 * self.rho * self.temperature()
    }

    pub fn velocity(&self) -> [f64; 2] {
        [self.m[0] / self.rho, self.m[1] / self.rho]
    }

    pub fn check(&self) -> Result<(), LawError> {
        let t = self.temperature();
        if !(self.rho > 0.0 && t > 0.0 && self.rho.is_finite() && t.is_finite()) {
            return Err(LawError::NonPhysicalState(format!(
                "rho = {}, T = {t} (m = {:?}, E = {})",
                self.rho, self.m, self.e
            )));
        }
        Ok(())
    }
}

/// Compressible Euler equations of an ideal gas, `u = (rho, m, E)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Euler;

impl ConservationLaw<4> for Euler {
    fn name(&self) -> &'static str {
        "euler"
    }

    fn temporal(&self, _x: Point, _t: f64, u: &[f64; 4]) -> [f64; 4] {
        *u
    }

    fn flux(&self, _x: Point, _t: f64, u: &[f64; 4]) -> Result<Flux<4>, LawError> {
        let s = EulerState::from_array(u);
        s.check()?;
        let p = s.pressure();
        let v = s.velocity();
        Ok([
            s.m,
            [p + s.m[0] * v[0], s.m[0] * v[1]],
            [s.m[1] * v[0], p + s.m[1] * v[1]],
            [(s.e + p) * v[0], (s.e + p) * v[1]],
        ])
    }

    fn max_wavespeed(&self, _x: Point, _t: f64, u: &[f64; 4]) -> Result<f64, LawError> {
        let s = EulerState::from_array(u);
        s.check()?;
        Ok(norm2(s.m) / s.rho + (GAMMA_GAS * s.temperature()).sqrt())
    }

    fn normal_wavespeed(&self, _x: Point, _t: f64, u: &[f64; 4], n: [f64; 2]) -> Result<f64, LawError> {
        let s = EulerState::from_array(u);
        s.check()?;
        Ok((s.m[0] * n[0] + s.m[1] * n[1]).abs() / s.rho + (GAMMA_GAS * s.temperature()).sqrt())
    }

    fn temporal_jacobian(&self, _x: Point, _t: f64, _u: &[f64; 4]) -> [[f64; 4]; 4] {
        let mut id = [[0.0; 4]; 4];
        for (i, row) in id.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        id
    }

    fn mapped_inverse(&self, _x: Point, _t: f64, big_u: &[f64; 4], gp: [f64; 2]) -> Result<[f64; 4], LawError> {
        let (r, mm, f) = (big_u[0], [big_u[1], big_u[2]], big_u[3]);
        if gp == [0.0, 0.0] {
            let s = EulerState::from_array(big_u);
            s.check()?;
            return Ok(*big_u);
        }
        if !(r > 0.0) {
            return Err(LawError::NonPhysicalState(format!("mapped density {r} <= 0")));
        }
        let d = D_GAS;
        let g2 = gp[0] * gp[0] + gp[1] * gp[1];
        let a1 = r - (mm[0] * gp[0] + mm[1] * gp[1]);
        let a2 = 2.0 * f * r - (mm[0] * mm[0] + mm[1] * mm[1]);
        let radicand = a1 * a1 - 4.0 * (d + 1.0) / (d * d) * g2 * a2;
        if !(a1 > 0.0) || !(radicand >= 0.0) {
            return Err(LawError::CausalityViolation(format!(
                "a1 = {a1:e}, radicand = {radicand:e}"
            )));
        }
        let a3 = a2 / (a1 + radicand.sqrt());
        let rho = r * r / (a1 - 2.0 / d * g2 * a3);
        let m = [
            rho / r * (mm[0] + 2.0 / d * a3 * gp[0]),
            rho / r * (mm[1] + 2.0 / d * a3 * gp[1]),
        ];
        let e = rho / r * (f + 2.0 * a3 / (d * rho) * (gp[0] * m[0] + gp[1] * m[1]));
        let s = EulerState { rho, m, e };
        s.check()?;
        Ok(s.to_array())
    }

    fn check_state(&self, u: &[f64; 4]) -> Result<(), LawError> {
        EulerState::from_array(u).check()
    }

    fn entropy(&self, _x: Point, u: &[f64; 4]) -> Result<(f64, [f64; 2]), LawError> {
        let s = EulerState::from_array(u);
        s.check()?;
        let e = s.rho * (s.rho.ln() - 0.5 * D_GAS * s.temperature().ln());
        Ok((e, [s.m[0] * e / s.rho, s.m[1] * e / s.rho]))
    }

    fn entropy_variables(&self, u: &[f64; 4]) -> Result<[f64; 4], LawError> {
        let s = EulerState::from_array(u);
        s.check()?;
        let (rho, t) = (s.rho, s.temperature());
        let m2 = s.m[0] * s.m[0] + s.m[1] * s.m[1];
        let c = 4.0 / D_GAS;
        let dt_drho = c * (-s.e / (rho * rho) + m2 / (rho * rho * rho));
        let dt_dm = [-c * s.m[0] / (rho * rho), -c * s.m[1] / (rho * rho)];
        let dt_de = c / rho;
        let k = -0.5 * D_GAS * rho / t;
        Ok([
            rho.ln() + 1.0 - 0.5 * D_GAS * t.ln() + k * dt_drho,
            k * dt_dm[0],
            k * dt_dm[1],
            k * dt_de,
        ])
    }

    fn entropy_velocity(&self, _x: Point, u: &[f64; 4]) -> [f64; 2] {
        [u[1] / u[0], u[2] / u[0]]
    }

    fn viscosity_scale(&self, x: Point, t: f64, u: &[f64; 4]) -> Result<f64, LawError> {
        Ok(u[0] * self.max_wavespeed(x, t, u)?)
    }

    fn reflect(&self, u: &[f64; 4], n: [f64; 2]) -> [f64; 4] {
        let mn = u[1] * n[0] + u[2] * n[1];
        [u[0], u[1] - 2.0 * mn * n[0], u[2] - 2.0 * mn * n[1], u[3]]
    }
}
