//! Time integration inside a tent, on the cylinder `t_hat in (0, 1)`.
//!
//! Implicit path: Radau IIA stages for `(H(t_hat) u)' = S u` with a
//! coupled dense solve. Explicit path: SSP Runge–Kutta on the DG right-hand
//! side, followed by explicit Euler viscosity substeps.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dg::{ElementFailure, PatchDg, ViscosityParams};
use crate::error::SolveError;

#[derive(Clone, Debug, PartialEq)]
pub struct ButcherTableau {
    pub s: usize,
    pub a: Vec<Vec<f64>>,
    pub c: Vec<f64>,
}

/// Monomial coefficients (ascending) of the Legendre polynomial `P_n`.
fn legendre_coeffs(n: usize) -> Vec<f64> {
    let mut prev = vec![1.0];
    if n == 0 {
        return prev;
    }
    let mut cur = vec![0.0, 1.0];
    for k in 1..n {
        // (k+1) P_{k+1} = (2k+1) x P_k - k P_{k-1}
        let mut next = vec![0.0; k + 2];
        for (i, &c) in cur.iter().enumerate() {
            next[i + 1] += (2 * k + 1) as f64 * c;
        }
        for (i, &c) in prev.iter().enumerate() {
            next[i] -= k as f64 * c;
        }
        for c in &mut next {
            *c /= (k + 1) as f64;
        }
        prev = cur;
        cur = next;
    }
    cur
}

fn horner(coeffs: &[f64], x: f64) -> (f64, f64) {
    let (mut v, mut d) = (0.0, 0.0);
    for &c in coeffs.iter().rev() {
        d = d * x + v;
        v = v * x + c;
    }
    (v, d)
}

/// Radau IIA collocation tableau with `s` stages (`1 <= s <= 5`).
///
/// The abscissae are the roots of `P_s(2c - 1) - P_{s-1}(2c - 1)`, so
/// `c_s = 1`; the weights follow from the collocation conditions
/// `sum_m a_lm c_m^{k-1} = c_l^k / k`.
pub fn radau_iia(s: usize) -> Result<ButcherTableau, SolveError> {
    if !(1..=5).contains(&s) {
        return Err(SolveError::Config(format!("Radau IIA supports 1..=5 stages, got {s}")));
    }
    let (ps, pm) = (legendre_coeffs(s), legendre_coeffs(s - 1));
    let poly: Vec<f64> = (0..=s).map(|i| ps[i] - pm.get(i).copied().unwrap_or(0.0)).collect();
    // roots in x = 2c - 1 via the companion matrix, polished by Newton
    let lead = poly[s];
    let comp = DMatrix::from_fn(s, s, |i, j| {
        if i == 0 {
            -poly[s - 1 - j] / lead
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let mut roots: Vec<f64> = comp.complex_eigenvalues().iter().map(|z| z.re).collect();
    for r in &mut roots {
        for _ in 0..50 {
            let (v, d) = horner(&poly, *r);
            if d == 0.0 {
                break;
            }
            let step = v / d;
            *r -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    let mut c: Vec<f64> = roots.iter().map(|x| 0.5 * (x + 1.0)).collect();
    c[s - 1] = 1.0;
    let v = DMatrix::from_fn(s, s, |m, k| c[m].powi(k as i32));
    let rhs = DMatrix::from_fn(s, s, |l, k| c[l].powi(k as i32 + 1) / (k + 1) as f64);
    // A V = R  =>  V^T A^T = R^T
    let at = v
        .transpose()
        .lu()
        .solve(&rhs.transpose())
        .ok_or_else(|| SolveError::Config("Radau Vandermonde system is singular".into()))?;
    let a = (0..s).map(|l| (0..s).map(|m| at[(m, l)]).collect()).collect();
    Ok(ButcherTableau { s, a, c })
}

/// Linear map from initial data to `u(1)` for `(H(t) u)' = S u` with
/// `H(t) = H0 + t (H1 - H0)`. The initial state enters only through
/// `H(0) u(0) = load x`, so `x` may live in a larger (e.g. broken) space.
pub struct StageSystem<'a> {
    pub h0: &'a DMatrix<f64>,
    pub h1: &'a DMatrix<f64>,
    pub s: &'a DMatrix<f64>,
    pub load: &'a DMatrix<f64>,
}

impl StageSystem<'_> {
    /// Propagator `x -> u(1)` for one Radau step over `(0, 1)`.
    pub fn propagator(&self, tab: &ButcherTableau, tent: usize) -> Result<DMatrix<f64>, SolveError> {
        let n = self.h0.nrows();
        let m = self.load.ncols();
        let st = tab.s;
        let mut big = DMatrix::zeros(st * n, st * n);
        let mut rhs = DMatrix::zeros(st * n, m);
        for l in 0..st {
            let hl = self.h0 * (1.0 - tab.c[l]) + self.h1 * tab.c[l];
            big.view_mut((l * n, l * n), (n, n)).copy_from(&hl);
            for k in 0..st {
                let mut blk = big.view_mut((l * n, k * n), (n, n));
                blk -= self.s * tab.a[l][k];
            }
            rhs.view_mut((l * n, 0), (n, m)).copy_from(self.load);
        }
        let sol = big.lu().solve(&rhs).ok_or(SolveError::SingularStageMatrix { tent })?;
        let out = sol.rows((st - 1) * n, n).into_owned();
        if out.iter().any(|x| !x.is_finite()) {
            return Err(SolveError::SingularStageMatrix { tent });
        }
        Ok(out)
    }
}

/// One Radau IIA step of `(H(t) u)' = S u` over `t in (0, 1)` with no
/// constrained unknowns.
pub fn implicit_tent_advance(
    h: impl Fn(f64) -> DMatrix<f64>,
    s: &DMatrix<f64>,
    u0: &DVector<f64>,
    tab: &ButcherTableau,
    tent: usize,
) -> Result<DVector<f64>, SolveError> {
    let nf = u0.len();
    let h0 = h(0.0);
    let st = tab.s;
    let mut big = DMatrix::zeros(st * nf, st * nf);
    let mut rhs = DVector::zeros(st * nf);
    let y0 = &h0 * u0;
    for l in 0..st {
        big.view_mut((l * nf, l * nf), (nf, nf)).copy_from(&h(tab.c[l]));
        for m in 0..st {
            let mut blk = big.view_mut((l * nf, m * nf), (nf, nf));
            blk -= s * tab.a[l][m];
        }
        rhs.rows_mut(l * nf, nf).copy_from(&y0);
    }
    let sol = big.lu().solve(&rhs).ok_or(SolveError::SingularStageMatrix { tent })?;
    let out = sol.rows((st - 1) * nf, nf).into_owned();
    if out.iter().any(|x| !x.is_finite()) {
        return Err(SolveError::SingularStageMatrix { tent });
    }
    Ok(out)
}

/// `m = max(1, ceil(safety (p + 1)^2))` explicit steps per tent.
pub fn substep_count(p: usize, safety: f64) -> usize {
    ((safety * ((p + 1) * (p + 1)) as f64).ceil() as usize).max(1)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExplicitScheme {
    /// Forward Euler, exactly as in the printed tent algorithm.
    Euler,
    /// Two-stage strong-stability-preserving RK (Heun form).
    #[default]
    Ssp2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExplicitParams {
    /// Outer steps per tent; `None` selects [`substep_count`] with `safety`.
    pub substeps: Option<usize>,
    pub safety: f64,
    pub scheme: ExplicitScheme,
    pub viscosity: ViscosityParams,
    /// Multiplies the viscosity step `dt h^2 / (delta_max nu p^4)`.
    pub viscosity_step_scale: f64,
}

impl Default for ExplicitParams {
    fn default() -> Self {
        Self {
            substeps: None,
            safety: 2.0,
            scheme: ExplicitScheme::Ssp2,
            viscosity: ViscosityParams::default(),
            viscosity_step_scale: 1.0,
        }
    }
}

impl ExplicitParams {
    pub fn steps_for(&self, p: usize) -> usize {
        self.substeps.unwrap_or_else(|| substep_count(p, self.safety)).max(1)
    }
}

/// What happened inside one explicit tent advance.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TentReport {
    pub steps: usize,
    /// Largest `nu_i` over the outer steps.
    pub nu_max: f64,
    /// Viscosity substeps summed over the outer steps.
    pub viscous_substeps: usize,
    /// Per patch element, the largest `min(nu_e, nu_*)` over the steps.
    pub element_nu: Vec<f64>,
}

/// Explicit Euler on `U' = -nu A U` is stable for `dt nu rho(A) < 2`.
const VISCOUS_STABILITY: f64 = 1.9;

/// Viscosity step `dt_v = scale dt h^2 / (delta_max nu p^4)`, with `p`
/// replaced by `max(p, 1)`.
pub fn viscosity_step(dt: f64, h: f64, delta_max: f64, nu: f64, p: usize, scale: f64) -> f64 {
    let p4 = (p.max(1) as f64).powi(4);
    scale * dt * h * h / (delta_max * nu * p4)
}

fn law_error(tent: usize) -> impl Fn(ElementFailure) -> SolveError {
    move |f| SolveError::Law {
        tent,
        element: f.element,
        source: f.source,
    }
}

fn axpy<const L: usize>(y: &mut [[f64; L]], a: f64, x: &[[f64; L]]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        for l in 0..L {
            yi[l] += a * xi[l];
        }
    }
}

/// Advances the patch state from `t_hat = 0` to `1` in `params.steps_for(p)`
/// outer steps: an explicit RK step of `U' = R^1(U)`, then entropy residual
/// and viscosity from the step's initial state, then explicit Euler
/// substeps of `U' = -nu A P(G^{-1} U)` covering the step.
pub fn explicit_tent_advance<const L: usize>(
    patch: &PatchDg<'_, L>,
    u0: &[[f64; L]],
    params: &ExplicitParams,
    tent: usize,
) -> Result<(Vec<[f64; L]>, TentReport), SolveError> {
    let p = patch.space.p;
    let m = params.steps_for(p);
    let dt = 1.0 / m as f64;
    let err = law_error(tent);
    let visc = &params.viscosity;
    let penalty = if visc.enabled {
        let a = patch.penalty_matrix(visc.penalty_alpha, visc.boundary);
        // Gershgorin bound on the spectral radius
        let radius = a.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
        Some((a, radius))
    } else {
        None
    };
    let h = patch.min_diameter();
    let delta_max = patch.map.delta_max();
    let mut report = TentReport {
        steps: m,
        element_nu: vec![0.0; patch.num_elements()],
        ..TentReport::default()
    };
    let mut u = u0.to_vec();
    for j in 0..m {
        let t = j as f64 * dt;
        let r1 = patch.rhs(&u, t).map_err(&err)?;
        let mut next = u.clone();
        axpy(&mut next, dt, &r1);
        if params.scheme == ExplicitScheme::Ssp2 {
            let r2 = patch.rhs(&next, t + dt).map_err(&err)?;
            for i in 0..next.len() {
                for l in 0..L {
                    next[i][l] = 0.5 * u[i][l] + 0.5 * (next[i][l] + dt * r2[i][l]);
                }
            }
        }
        if let Some((a, radius)) = &penalty {
            let res = patch.entropy_residual(&u, &r1, t).map_err(&err)?;
            let v = patch.viscosity(&u, &res, t, visc).map_err(&err)?;
            report.nu_max = report.nu_max.max(v.nu);
            for (k, slot) in report.element_nu.iter_mut().enumerate() {
                *slot = slot.max(v.nu_entropy[k].min(v.nu_limit[k]));
            }
            if v.nu > 0.0 {
                let dtv = viscosity_step(dt, h, delta_max, v.nu, p, params.viscosity_step_scale)
                    .min(VISCOUS_STABILITY / (v.nu * radius));
                let n = (dt / dtv).ceil().max(1.0) as usize;
                let sub = dt / n as f64;
                report.viscous_substeps += n;
                for _ in 0..n {
                    let w = patch.project_physical(&next, t + dt).map_err(&err)?;
                    for l in 0..L {
                        let wl = DVector::from_iterator(w.len(), w.iter().map(|x| x[l]));
                        let aw = a * wl;
                        for i in 0..next.len() {
                            next[i][l] -= sub * v.nu * aw[i];
                        }
                    }
                }
            }
        }
        if next.iter().any(|x| x.iter().any(|v| !v.is_finite())) {
            return Err(SolveError::NonFiniteState { tent, substep: j });
        }
        u = next;
    }
    Ok((u, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_stage_tableau() {
        let t = radau_iia(2).unwrap();
        let want_a = [[5.0 / 12.0, -1.0 / 12.0], [0.75, 0.25]];
        assert!((t.c[0] - 1.0 / 3.0).abs() < 1e-14 && t.c[1] == 1.0);
        for l in 0..2 {
            for m in 0..2 {
                assert!((t.a[l][m] - want_a[l][m]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn one_stage_is_implicit_euler() {
        let t = radau_iia(1).unwrap();
        assert_eq!(t.c, vec![1.0]);
        assert!((t.a[0][0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn order_conditions_hold() {
        for s in 1..=5 {
            let t = radau_iia(s).unwrap();
            assert_eq!(t.c[s - 1], 1.0);
            for l in 0..s {
                let row: f64 = t.a[l].iter().sum();
                assert!((row - t.c[l]).abs() < 1e-13);
                for k in 1..=s {
                    let lhs: f64 = (0..s).map(|m| t.a[l][m] * t.c[m].powi(k as i32 - 1)).sum();
                    assert!((lhs - t.c[l].powi(k as i32) / k as f64).abs() < 1e-12, "s={s} l={l} k={k}");
                }
            }
        }
        assert!(radau_iia(0).is_err() && radau_iia(6).is_err());
    }

    #[test]
    fn substep_formula() {
        assert_eq!(substep_count(0, 2.0), 2);
        assert_eq!(substep_count(2, 2.0), 18);
        assert_eq!(substep_count(4, 0.01), 1);
    }

    #[test]
    fn zero_operator_keeps_state() {
        let tab = radau_iia(3).unwrap();
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let u0 = DVector::from_vec(vec![0.3, -1.2]);
        let u = implicit_tent_advance(|_| h.clone(), &DMatrix::zeros(2, 2), &u0, &tab, 0).unwrap();
        assert!((u - u0).amax() < 1e-14);
    }

    #[test]
    fn propagator_matches_direct_advance() {
        let tab = radau_iia(2).unwrap();
        let h0 = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let h1 = DMatrix::from_row_slice(2, 2, &[1.5, 0.1, 0.1, 1.2]);
        let s = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, -0.2]);
        let u0 = DVector::from_vec(vec![0.4, 0.9]);
        let direct = implicit_tent_advance(|t| &h0 * (1.0 - t) + &h1 * t, &s, &u0, &tab, 0).unwrap();
        let sys = StageSystem {
            h0: &h0,
            h1: &h1,
            s: &s,
            load: &h0,
        };
        let p = sys.propagator(&tab, 0).unwrap();
        assert!((p * &u0 - direct).amax() < 1e-14);
    }

    #[test]
    fn singular_stage_matrix_is_reported() {
        let tab = radau_iia(1).unwrap();
        let z = DMatrix::zeros(1, 1);
        let r = implicit_tent_advance(|_| z.clone(), &z, &DVector::from_vec(vec![1.0]), &tab, 7);
        assert!(matches!(r, Err(SolveError::SingularStageMatrix { tent: 7 })));
    }
}
