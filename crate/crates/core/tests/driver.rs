mod common;

use common::{bump, max_abs_diff};
use tentkit::dg::{BoundaryData, DgSpace};
use tentkit::driver::{
    error_norm_wave, regression_slope, run_explicit, run_wave, slab_heights, standing_wave_error, wind_tunnel_demo,
    wind_tunnel_state, Execution, ExplicitProblem, PitchConfig, RunOptions, SpeedBound, WindTunnel,
};
use tentkit::laws::{Burgers, ConservationLaw, Euler, Transport, Wave};
use tentkit::mesh::{Point, SpatialMesh};
use tentkit::mixedfem::{wave_exact_standing, MixedSpace, WaveSolver};
use tentkit::stepping::{radau_iia, ExplicitParams};

const CENTER: Point = [0.5, 0.5];

fn burgers_pitch(t_slab: f64) -> PitchConfig {
    PitchConfig {
        t_slab,
        speed: SpeedBound::State { safety: 1.5, floor: 0.1 },
        ..PitchConfig::default()
    }
}

fn run_burgers(
    space: &DgSpace,
    u0: Vec<[f64; 1]>,
    t_slab: f64,
    t_max: f64,
    opts: &RunOptions,
    observer: impl FnMut(&tentkit::driver::FrontState<Vec<[f64; 1]>>),
) -> tentkit::driver::FrontState<Vec<[f64; 1]>> {
    let bc = BoundaryData::default();
    let params = ExplicitParams::default();
    let pitch = burgers_pitch(t_slab);
    let prob = ExplicitProblem {
        space,
        law: &Burgers,
        bc: &bc,
        params: &params,
        pitch: &pitch,
    };
    run_explicit(&prob, u0, t_max, opts, observer).unwrap()
}

#[test]
fn burgers_bump_conserves_mass_across_slabs() {
    let mesh = SpatialMesh::structured_square(3).unwrap();
    let space = DgSpace::new(&mesh, 2);
    let u0 = space.project(|x| [bump(x, CENTER, 0.25)]);
    let m0 = space.integral(&u0)[0];
    let mut drifts = Vec::new();
    let front = run_burgers(&space, u0, 0.05, 0.2, &RunOptions::default(), |f| {
        drifts.push((space.integral(&f.state)[0] - m0).abs());
    });
    assert_eq!(front.slab, 4);
    assert_eq!(drifts.len(), 4);
    assert!(drifts.iter().all(|&d| d <= 1e-8), "{drifts:?}");
    assert!(front.diagnostics.min_causality_margin >= 0.0);
}

#[test]
fn serial_and_parallel_runs_agree() {
    let mesh = SpatialMesh::structured_square(3).unwrap();
    let space = DgSpace::new(&mesh, 2);
    let u0 = space.project(|x| [bump(x, CENTER, 0.3)]);
    let serial = run_burgers(&space, u0.clone(), 0.05, 0.1, &RunOptions::default(), |_| {});
    let opts = RunOptions {
        execution: Execution::Parallel,
        audit: true,
    };
    let parallel = run_burgers(&space, u0, 0.05, 0.1, &opts, |_| {});
    assert!(max_abs_diff(&serial.state, &parallel.state) <= 1e-13);
    assert_eq!(parallel.diagnostics.audit_conflicts, 0);
}

#[test]
fn zero_data_stays_zero() {
    let mesh = SpatialMesh::structured_square(2).unwrap();
    let space = DgSpace::new(&mesh, 2);
    let law = Transport::constant([0.0, 0.0]);
    let bc = BoundaryData::default();
    let params = ExplicitParams::default();
    let pitch = PitchConfig::default();
    let prob = ExplicitProblem {
        space: &space,
        law: &law,
        bc: &bc,
        params: &params,
        pitch: &pitch,
    };
    let f = run_explicit(&prob, vec![[0.0]; space.num_dofs()], 0.25, &RunOptions::default(), |_| {}).unwrap();
    assert!((f.time - 0.25).abs() < 1e-15);
    assert!(f.state.iter().all(|u| u[0].abs() <= 1e-13));
}

#[test]
fn partial_final_slab() {
    let h = slab_heights(0.1, 0.25);
    assert_eq!(h.len(), 3);
    assert!((h.iter().sum::<f64>() - 0.25).abs() < 1e-15);
    assert_eq!(slab_heights(0.5, 0.5), vec![0.5]);
}

#[test]
fn synthetic_rates_are_recovered() {
    let h: Vec<f64> = (2..6).map(|l| 0.5f64.powi(l)).collect();
    for p in 1..=4 {
        let e: Vec<f64> = h.iter().map(|h| 0.7 * h.powi(p)).collect();
        assert!((regression_slope(&h, &e) - p as f64).abs() < 1e-12);
    }
}

#[test]
fn wave_error_norm_of_a_zero_front() {
    // integral of cos^2(pi x) cos^2(pi y) over the unit square is 1/4
    let mesh = SpatialMesh::structured_square(3).unwrap();
    let space = MixedSpace::new(&mesh, 2);
    let e = error_norm_wave(&space, &space.zero_state(), 0.0);
    assert!((e - 0.5).abs() < 1e-8, "{e}");
}

#[test]
fn wave_energy_does_not_grow_and_audit_is_clean() {
    let mesh = SpatialMesh::structured_square(2).unwrap();
    let space = MixedSpace::new(&mesh, 2);
    let init = space.interpolate(|x| wave_exact_standing(x, 0.0).0, |x| wave_exact_standing(x, 0.0).1);
    let zero = |_: Point| ([0.0, 0.0], 0.0);
    let mut energy = vec![space.error_norm(&init, zero)];
    let solver = WaveSolver::new(space.clone(), Wave::unit(), radau_iia(2).unwrap());
    let pitch = PitchConfig {
        t_slab: 1.0 / 32.0,
        speed: SpeedBound::Constant { speed: 2.0 },
        ..PitchConfig::default()
    };
    let opts = RunOptions {
        execution: Execution::Parallel,
        audit: true,
    };
    let front = run_wave(&solver, init, &pitch, 0.25, &opts, |f| energy.push(space.error_norm(&f.state, zero))).unwrap();
    assert_eq!(front.diagnostics.audit_conflicts, 0);
    for w in energy.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-12), "{energy:?}");
    }
    // the standing wave stays close to its energy on a coarse mesh
    assert!(energy.last().unwrap() > &(0.9 * energy[0]));
}

#[test]
fn cached_and_uncached_wave_solvers_agree() {
    let mesh = SpatialMesh::structured_square(2).unwrap();
    let space = MixedSpace::new(&mesh, 2);
    let init = space.interpolate(|x| wave_exact_standing(x, 0.0).0, |x| wave_exact_standing(x, 0.0).1);
    let pitch = PitchConfig {
        t_slab: 1.0 / 32.0,
        speed: SpeedBound::Constant { speed: 2.0 },
        ..PitchConfig::default()
    };
    let run = |cache: bool| {
        let solver = WaveSolver::new(space.clone(), Wave::unit(), radau_iia(2).unwrap()).with_cache(cache);
        run_wave(&solver, init.clone(), &pitch, 0.125, &RunOptions::default(), |_| {}).unwrap().state
    };
    let (a, b) = (run(true), run(false));
    let diff = a.flux.iter().zip(&b.flux).chain(a.scalar.iter().zip(&b.scalar)).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(diff < 1e-10, "{diff}");
}

#[test]
fn standing_wave_converges_at_p2() {
    let opts = RunOptions {
        execution: Execution::Parallel,
        audit: false,
    };
    let e: Vec<f64> = (2..=3).map(|l| standing_wave_error(l, 2, 2, 0.25, &opts).unwrap()).collect();
    let rate = (e[0] / e[1]).log2();
    assert!(rate > 1.7, "{e:?} rate {rate}");
}

/// Barycentric coordinates of `x` in element `e`, if it lies inside.
fn locate(mesh: &SpatialMesh, x: Point) -> (usize, [f64; 3]) {
    for e in 0..mesh.num_elements() {
        let [a, b, c] = mesh.element_points(e);
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let l1 = ((x[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (x[1] - a[1])) / det;
        let l2 = ((b[0] - a[0]) * (x[1] - a[1]) - (x[0] - a[0]) * (b[1] - a[1])) / det;
        let l0 = 1.0 - l1 - l2;
        if l0 >= -1e-12 && l1 >= -1e-12 && l2 >= -1e-12 {
            return (e, [l0, l1, l2]);
        }
    }
    panic!("{x:?} outside the mesh");
}

#[test]
fn smooth_burgers_converges_against_a_fine_reference() {
    // pre-shock: the steepest slope of the data is below 2, so t = 0.1 is smooth
    let (t_max, t_slab) = (0.1, 0.025);
    let init = |x: Point| [0.5 * bump(x, CENTER, 0.35)];
    let opts = RunOptions {
        execution: Execution::Parallel,
        audit: false,
    };
    let fine_mesh = SpatialMesh::structured_square(5).unwrap();
    let fine = DgSpace::new(&fine_mesh, 3);
    let reference = run_burgers(&fine, fine.project(init), t_slab, t_max, &opts, |_| {}).state;
    for p in 1..=2 {
        let mut h = Vec::new();
        let mut e = Vec::new();
        for l in 2..=4 {
            let mesh = SpatialMesh::structured_square(l).unwrap();
            let space = DgSpace::new(&mesh, p);
            let u = run_burgers(&space, space.project(init), t_slab, t_max, &opts, |_| {}).state;
            let err = space.l2_error(
                &u,
                |x| {
                    let (k, bary) = locate(&fine_mesh, x);
                    fine.eval(&reference, k, bary)
                },
                2 * p + 2,
            );
            h.push(0.5f64.powi(l as i32));
            e.push(err);
        }
        let slope = regression_slope(&h, &e);
        assert!(slope >= p as f64, "p={p}: slope {slope}, errors {e:?}");
    }
}

#[test]
fn wind_tunnel_at_time_zero_returns_the_initial_state() {
    let cfg = WindTunnel {
        t_end: 0.0,
        ..WindTunnel::default()
    };
    let (space, front, snaps) = wind_tunnel_demo(&cfg, &RunOptions::default()).unwrap();
    assert_eq!(snaps.len(), 1);
    assert_eq!(front.slab, 0);
    let inflow = wind_tunnel_state();
    for e in 0..space.mesh.num_elements() {
        let m = space.cell_mean(&front.state, e);
        assert!((0..4).all(|l| (m[l] - inflow[l]).abs() < 1e-12));
    }
    assert!((snaps[0].min_density - 1.4).abs() < 1e-12 && (snaps[0].min_pressure - 1.0).abs() < 1e-12);
    assert!(Euler.max_wavespeed([0.0, 0.0], 0.0, &inflow).unwrap() > 4.0);
}
