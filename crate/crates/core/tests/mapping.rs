mod common;

use common::{random_cubic, random_tent_map, rng, PolyBurgers, PolyTransport, PolyWave};
use proptest::prelude::*;
use rand::Rng;
use tentkit::mapping::{mapped_consistency_check, piola_identity_check, TentMap};
use tentkit::poly::Poly;

#[test]
fn piola_identity_on_random_tents_and_cubic_fields() {
    let mut r = rng(7);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let map = random_tent_map(&mut r);
        let field = [random_cubic(&mut r), random_cubic(&mut r), random_cubic(&mut r)];
        worst = worst.max(piola_identity_check(&field, &map));
    }
    assert!(worst <= 1e-10, "{worst:e}");
}

#[test]
fn linear_field_has_unit_divergence() {
    let mut r = rng(8);
    for _ in 0..10 {
        let map = random_tent_map(&mut r);
        let field = [Poly::var(0), Poly::zero(), Poly::zero()];
        assert!(piola_identity_check(&field, &map) <= 1e-12);
    }
}

/// Central-difference divergence of the mapped field at an interior point
/// of each element, against `delta div F` evaluated on the tent.
#[test]
fn piola_identity_by_finite_differences() {
    let mut r = rng(9);
    for _ in 0..20 {
        let map = random_tent_map(&mut r);
        let field = [random_cubic(&mut r), random_cubic(&mut r), random_cubic(&mut r)];
        let div = &(&field[0].deriv(0) + &field[1].deriv(1)) + &field[2].deriv(2);
        for k in 0..map.num_elements() {
            let x0 = map.point(k, [1.0 / 3.0; 3]);
            let phi0 = |t: f64| map.phi(k, [1.0 / 3.0; 3], t);
            // phi is affine in x on the element
            let phi = |x: [f64; 2], t: f64| {
                let g = map.grad_phi(k, t);
                phi0(t) + g[0] * (x[0] - x0[0]) + g[1] * (x[1] - x0[1])
            };
            let mapped = |x: [f64; 2], t: f64| {
                let delta = phi0(1.0) - phi0(0.0) + {
                    let (gb, gt) = (map.grad_bot(k), map.grad_top(k));
                    (gt[0] - gb[0]) * (x[0] - x0[0]) + (gt[1] - gb[1]) * (x[1] - x0[1])
                };
                let p = [x[0], x[1], phi(x, t)];
                let f: Vec<f64> = field.iter().map(|c| c.eval(p)).collect();
                let g = map.grad_phi(k, t);
                [delta * f[0], delta * f[1], f[2] - g[0] * f[0] - g[1] * f[1], delta]
            };
            let h = 1e-5;
            let t = r.random_range(0.2..0.8);
            let fd = (mapped([x0[0] + h, x0[1]], t)[0] - mapped([x0[0] - h, x0[1]], t)[0]) / (2.0 * h)
                + (mapped([x0[0], x0[1] + h], t)[1] - mapped([x0[0], x0[1] - h], t)[1]) / (2.0 * h)
                + (mapped(x0, t + h)[2] - mapped(x0, t - h)[2]) / (2.0 * h);
            let delta = mapped(x0, t)[3];
            let exact = delta * div.eval([x0[0], x0[1], phi(x0, t)]);
            assert!((fd - exact).abs() < 1e-6 * (1.0 + exact.abs()), "{fd} vs {exact}");
        }
    }
}

#[test]
fn mapped_transport_is_consistent() {
    let mut r = rng(10);
    for _ in 0..20 {
        let map = random_tent_map(&mut r);
        let beta = [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)];
        let u = [random_cubic(&mut r)];
        assert!(mapped_consistency_check(&PolyTransport(beta), &u, &map) <= 1e-10);
    }
}

fn random_quadratic(r: &mut rand::rngs::StdRng) -> Poly {
    let mut p = Poly::zero();
    for a in 0..=2u32 {
        for b in 0..=2 - a {
            for c in 0..=2 - a - b {
                p = &p + &Poly::monomial(r.random_range(-1.0..1.0), [a, b, c]);
            }
        }
    }
    p
}

#[test]
fn mapped_burgers_is_consistent() {
    let mut r = rng(11);
    for _ in 0..20 {
        let map = random_tent_map(&mut r);
        let u = [random_quadratic(&mut r)];
        assert!(mapped_consistency_check(&PolyBurgers, &u, &map) <= 1e-10);
    }
}

#[test]
fn mapped_wave_is_consistent() {
    let mut r = rng(12);
    for _ in 0..20 {
        let map = random_tent_map(&mut r);
        let u = [random_cubic(&mut r), random_cubic(&mut r), random_cubic(&mut r)];
        assert!(mapped_consistency_check(&PolyWave(0.7), &u, &map) <= 1e-10);
    }
}

proptest! {
    #[test]
    fn delta_is_nonnegative_and_phi_interpolates(seed in 0u64..1000, t in 0.0..1.0f64) {
        let mut r = rng(seed);
        let map: TentMap = random_tent_map(&mut r);
        for k in 0..map.num_elements() {
            let b = [0.2, 0.5, 0.3];
            prop_assert!(map.delta(k, b) >= 0.0);
            let lin = (1.0 - t) * map.phi(k, b, 0.0) + t * map.phi(k, b, 1.0);
            prop_assert!((map.phi(k, b, t) - lin).abs() < 1e-14);
        }
    }
}
