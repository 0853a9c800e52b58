use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use tentkit::laws::Wave;
use tentkit::mapping::TentMap;
use tentkit::mesh::SpatialMesh;
use tentkit::mixedfem::{wave_exact_standing, MixedSpace, PatchMixed};
use tentkit::tents::{pitch_slab, PitchParams, Tent};

fn tents(level: u32, speed: f64, t_slab: f64) -> (SpatialMesh, Vec<Tent>) {
    let mesh = SpatialMesh::structured_square(level).unwrap();
    let slab = pitch_slab(&mesh, &PitchParams::uniform(&mesh, speed, t_slab)).unwrap();
    (mesh, slab.tents)
}

fn scaled_map(mesh: &SpatialMesh, tent: &Tent, s: f64) -> TentMap {
    let bot = |v: usize| tent.times_at(v).unwrap().0;
    let top = |v: usize| tent.times_at(v).unwrap().1;
    TentMap::from_vertex_times(mesh, &tent.elements, bot, |v| bot(v) + s * (top(v) - bot(v)))
}

#[test]
fn h_is_affine_in_the_cylinder_time() {
    // the tent cut at half height has H(1) equal to the full tent's H(1/2)
    let (mesh, tents) = tents(2, 1.0, 0.2);
    for p in 1..=3 {
        let space = MixedSpace::new(&mesh, p);
        for tent in tents.iter().step_by(5) {
            let full = TentMap::new(&mesh, tent);
            let half = scaled_map(&mesh, tent, 0.5);
            let a = PatchMixed::new(&space, &full).assemble(&Wave::unit());
            let b = PatchMixed::new(&space, &half).assemble(&Wave::unit());
            assert!((&b.h1 - a.h(0.5)).amax() < 1e-13);
            assert!((&b.h0 - &a.h0).amax() < 1e-13);
        }
    }
}

#[test]
fn h_is_positive_definite_on_causal_tents() {
    let (mesh, tents) = tents(2, 1.0, 0.3);
    let space = MixedSpace::new(&mesh, 2);
    for tent in &tents {
        let map = TentMap::new(&mesh, tent);
        let m = PatchMixed::new(&space, &map).assemble(&Wave::unit());
        for t in [0.0, 0.5, 1.0] {
            let h = m.h(t);
            assert!((&h - h.transpose()).amax() < 1e-13);
            assert!(h.symmetric_eigenvalues().min() > 0.0, "tent {} t={t}", tent.id);
        }
    }
}

#[test]
fn zero_height_tent_has_no_operator() {
    let (mesh, tents) = tents(2, 1.0, 0.2);
    let space = MixedSpace::new(&mesh, 2);
    let map = scaled_map(&mesh, &tents[7], 0.0);
    let m = PatchMixed::new(&space, &map).assemble(&Wave::unit());
    assert_eq!(m.s.amax(), 0.0);
}

#[test]
fn flat_operator_scales_with_the_slab_height() {
    let mesh = SpatialMesh::structured_square(2).unwrap();
    let space = MixedSpace::new(&mesh, 2);
    let patch_elems = mesh.vertex_patch(7).unwrap().elements;
    let unit = TentMap::flat(&mesh, &patch_elems, 0.0, 1.0);
    let short = TentMap::flat(&mesh, &patch_elems, 0.4, 0.3);
    let a = PatchMixed::new(&space, &unit).assemble(&Wave::unit());
    let b = PatchMixed::new(&space, &short).assemble(&Wave::unit());
    assert!((&b.s - &a.s * 0.3).amax() < 1e-13);
    assert!((&b.h0 - &a.h0).amax() < 1e-13 && (&b.h1 - &b.h0).amax() < 1e-13);
    // skew pairing of flux and scalar blocks
    assert!((&a.s + a.s.transpose()).amax() < 1e-12 * a.s.amax());
}

#[test]
fn standing_wave_formula() {
    for x in [[0.1, 0.2], [0.7, 0.4]] {
        let (q, mu) = wave_exact_standing(x, 0.0);
        assert_eq!(q, [0.0, 0.0]);
        let pi = std::f64::consts::PI;
        assert!((mu - (pi * x[0]).cos() * (pi * x[1]).cos()).abs() < 1e-15);
    }
    for t in [0.0, 0.3, 0.9] {
        assert!(wave_exact_standing([0.5, 0.5], t).1.abs() < 1e-15);
    }
    // q_t = grad mu and mu_t = div q, by central differences
    let h = 1e-5;
    let (x, t) = ([0.31, 0.62], 0.43);
    let at = |x: [f64; 2], t: f64| wave_exact_standing(x, t);
    let qt = [(at(x, t + h).0[0] - at(x, t - h).0[0]) / (2.0 * h), (at(x, t + h).0[1] - at(x, t - h).0[1]) / (2.0 * h)];
    let grad_mu = [
        (at([x[0] + h, x[1]], t).1 - at([x[0] - h, x[1]], t).1) / (2.0 * h),
        (at([x[0], x[1] + h], t).1 - at([x[0], x[1] - h], t).1) / (2.0 * h),
    ];
    let mut_ = (at(x, t + h).1 - at(x, t - h).1) / (2.0 * h);
    let div_q = (at([x[0] + h, x[1]], t).0[0] - at([x[0] - h, x[1]], t).0[0]) / (2.0 * h)
        + (at([x[0], x[1] + h], t).0[1] - at([x[0], x[1] - h], t).0[1]) / (2.0 * h);
    assert!((qt[0] - grad_mu[0]).abs() < 1e-8 && (qt[1] - grad_mu[1]).abs() < 1e-8);
    assert!((mut_ - div_q).abs() < 1e-8);
}

#[test]
fn interpolation_of_the_exact_state_converges() {
    let mut errs = Vec::new();
    for l in 1..=3 {
        let mesh = SpatialMesh::structured_square(l).unwrap();
        let space = MixedSpace::new(&mesh, 2);
        let st = space.interpolate(|x| wave_exact_standing(x, 0.3).0, |x| wave_exact_standing(x, 0.3).1);
        errs.push(space.error_norm(&st, |x| wave_exact_standing(x, 0.3)));
    }
    assert!(errs[2] < errs[1] / 4.0 && errs[1] < errs[0] / 4.0, "{errs:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Energy balance of the patch system: `u.S u = u.(H(1) - H(0)) u / 2`.
    #[test]
    fn patch_energy_balance(seed in 0u64..1000, which in 0usize..1000) {
        let (mesh, tents) = tents(2, 1.0, 0.3);
        let space = MixedSpace::new(&mesh, 1 + (seed as usize % 3));
        let tent = &tents[which % tents.len()];
        let map = TentMap::new(&mesh, tent);
        let patch = PatchMixed::new(&space, &map);
        let m = patch.assemble(&Wave::unit());
        let mut r = rand::rngs::StdRng::seed_from_u64(seed);
        let u = DVector::from_fn(patch.len(), |_, _| r.random_range(-1.0..1.0));
        let form = u.dot(&(&m.s * &u));
        let want = 0.5 * u.dot(&((&m.h1 - &m.h0) * &u));
        prop_assert!((form - want).abs() <= 1e-12 * m.s.amax() * u.norm_squared());
    }
}
