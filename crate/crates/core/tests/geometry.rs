use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vpl_core::geometry::*;

fn normalized(m: usize, coeffs: Vec<f64>) -> PolarPatch<f64> {
    normalize_area(&PolarPatch::new(m, coeffs, 2048).unwrap()).unwrap()
}

/// Area by counting cells of a uniform Cartesian grid.
fn grid_area(patch: &PolarPatch<f64>, n: usize) -> f64 {
    let l = patch.r_max() * 1.01;
    let h = 2.0 * l / n as f64;
    let mut count = 0usize;
    for i in 0..n {
        for j in 0..n {
            let x = [-l + (i as f64 + 0.5) * h, -l + (j as f64 + 0.5) * h];
            if patch.contains(x) {
                count += 1;
            }
        }
    }
    count as f64 * h * h
}

#[test]
fn area_examples() {
    assert!((area(&PolarPatch::<f64>::disk(1)) - PI).abs() < 1e-14);
    let eps: f64 = 0.3;
    let p = PolarPatch::new(1, vec![eps], 256).unwrap();
    assert!((area(&p) - PI * (1.0 + eps).powi(2)).abs() < 1e-13);
    let p = PolarPatch::single_mode(3, 0.1).unwrap();
    assert!((area(&p) - PI * 1.005).abs() < 1e-13);
    assert!((grid_area(&p, 1500) - PI * 1.005).abs() < 5e-3);
}

#[test]
fn rejects_patch_not_enclosing_origin() {
    assert!(PolarPatch::new(2, vec![0.0, -1.2], 256).is_err());
}

#[test]
fn normalize_examples() {
    let d = normalize_area(&PolarPatch::<f64>::disk(4)).unwrap();
    assert!(d.coeffs().iter().all(|c| c.abs() < 1e-15));
    let big = PolarPatch::new(1, vec![1.0f64], 256).unwrap();
    let n = normalize_area(&big).unwrap();
    assert!(n.coeffs()[0].abs() < 1e-14);
    let p = normalized(3, vec![0.0, 0.1]);
    assert!((area(&p) - PI).abs() < 1e-13);
    assert!(f_accumulated(&p, 2.0 * PI).abs() < 1e-13);
}

#[test]
fn second_moment_against_radial_quadrature() {
    let p = normalized(3, vec![0.0, 0.1]);
    // ∫∫ r³ dr dθ = ∫ (1+u)⁴/4 dθ, midpoint rule on a fine θ grid
    let n = 20000;
    let direct: f64 = (0..n)
        .map(|j| {
            let t = (j as f64 + 0.5) * 2.0 * PI / n as f64;
            p.radius(t).powi(4) / 4.0
        })
        .sum::<f64>()
        * 2.0
        * PI
        / n as f64;
    let excess = second_moment_excess(&p).unwrap();
    assert!(excess > 0.0);
    assert!((excess - (direct - PI / 2.0)).abs() < 1e-10);
}

#[test]
fn second_moment_of_sampled_ellipse() {
    let e = EllipsePatch::new(2.0, 0.5).unwrap();
    let p = e.to_polar(e.modes_for(1e-15), 4096).unwrap();
    let expect = PI / 4.0 * 4.25 - PI / 2.0;
    assert!((second_moment_excess(&p).unwrap() - expect).abs() < 1e-10);
    assert!((expect - 1.76715).abs() < 1e-5);
}

#[test]
fn second_moment_requires_unit_area() {
    let p = PolarPatch::single_mode(3, 0.1).unwrap();
    assert!(matches!(second_moment_excess(&p), Err(vpl_core::Error::AreaNotNormalized { .. })));
}

#[test]
fn f_accumulated_periodicity() {
    let d = PolarPatch::<f64>::disk(3);
    assert_eq!(f_accumulated(&d, 1.3), 0.0);
    for m in [2, 3, 5] {
        let p = normalized(m, vec![0.0, 0.15, -0.03]);
        let period = 2.0 * PI / m as f64;
        assert!(f_accumulated(&p, period).abs() < 1e-13);
        for t in [0.1, 0.4, 1.0] {
            assert!((f_accumulated(&p, t + period) - f_accumulated(&p, t)).abs() < 1e-13);
        }
    }
}

#[test]
fn asymmetry_origin_small_amplitude() {
    assert_eq!(asymmetry_origin(&PolarPatch::<f64>::disk(2)).unwrap(), 0.0);
    let eps = 1e-3;
    let p = normalized(4, vec![0.0, eps]);
    let a = asymmetry_origin(&p).unwrap();
    assert!((a - 4.0 * eps / PI).abs() < 10.0 * eps * eps);
}

#[test]
fn asymmetry_origin_matches_monte_carlo() {
    let p = normalized(4, vec![0.0, 0.2]);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let l = p.r_max();
    let n = 2_000_000;
    let mut hits = 0usize;
    for _ in 0..n {
        let x = [rng.gen_range(-l..l), rng.gen_range(-l..l)];
        let in_d = p.contains(x);
        let in_b = x[0] * x[0] + x[1] * x[1] < 1.0;
        if in_d != in_b {
            hits += 1;
        }
    }
    let mc = hits as f64 / n as f64 * 4.0 * l * l / PI;
    assert!((asymmetry_origin(&p).unwrap() - mc).abs() < 1e-3);
}

#[test]
fn fraenkel_examples() {
    let d = fraenkel_asymmetry(&PolarPatch::<f64>::disk(1)).unwrap();
    assert!(d.value.abs() < 1e-12);
    let p = normalized(4, vec![0.0, 0.2]);
    let r = fraenkel_asymmetry(&p).unwrap();
    let origin = asymmetry_origin(&p).unwrap();
    assert!((r.value - origin).abs() < 1e-6);
    assert!(r.center[0].hypot(r.center[1]) < 1e-4);
    // Probing nearby centres never beats the origin.
    for (dx, dy) in [(0.02, 0.0), (0.0, 0.02), (-0.015, 0.01)] {
        let probe = 1.0 - overlap_with_unit_disk(&p, [dx, dy]) / PI;
        assert!(probe * 2.0 >= r.value - 1e-9, "{probe}");
    }
}

#[test]
fn eta_inverse_examples() {
    let p = PolarPatch::single_mode(3, 0.1).unwrap();
    let t = eta_inverse(&p, 1.0).unwrap();
    assert!((t - PI / 6.0).abs() < 1e-12);
    assert!((p.radius(t) - 1.0).abs() < 1e-12);
    assert!(eta_inverse(&p, 1.0999999).unwrap() < 1e-3);
    assert!((eta_inverse(&p, 0.9000001).unwrap() - PI / 3.0).abs() < 1e-3);
    assert!(eta_inverse(&p, 1.2).is_err());
    let wavy = PolarPatch::new(3, vec![0.0, 0.05, 0.0, 0.04], 2048).unwrap();
    assert!(eta_inverse(&wavy, 1.0).is_err());
}

#[test]
fn mass_center_examples() {
    let c = mass_center(&PolarPatch::<f64>::disk(1));
    assert!(c[0].abs() < 1e-15 && c[1].abs() < 1e-15);
    let c = mass_center(&PolarPatch::single_mode(3, 0.1f64).unwrap());
    assert!(c[0].hypot(c[1]) < 1e-12);
    let p = PolarPatch::single_mode(1, 0.1).unwrap();
    let c = mass_center(&p);
    let n = 20000;
    let first: f64 = (0..n)
        .map(|j| {
            let t = (j as f64 + 0.5) * 2.0 * PI / n as f64;
            p.radius(t).powi(3) / 3.0 * t.cos()
        })
        .sum::<f64>()
        * 2.0
        * PI
        / n as f64;
    assert!((c[0] - first / area(&p)).abs() < 1e-12);
    assert!(c[0] > 0.03);
}

#[test]
fn ellipse_closed_forms() {
    let e = EllipsePatch::new(2.0f64, 0.5).unwrap();
    assert!((e.omega_exact() - 0.16).abs() < 1e-15);
    assert!((e.area() - PI).abs() < 1e-15);
    assert!((e.torsion_integral() - PI / 8.5).abs() < 1e-15);
    assert!(EllipsePatch::new(1.0, 2.0).is_err());
    let c = EllipsePatch::new(1.0f64, 1.0).unwrap();
    assert!((c.omega_exact() - 0.25).abs() < 1e-15);
}

#[test]
fn state_lambda() {
    let s = RotatingState::new(PolarPatch::<f64>::disk(3), 0.3);
    assert!((s.lambda - 0.2).abs() < 1e-15);
    let back: RotatingState<f64> =
        serde_json::from_str(r#"{"patch":{"m":3,"coeffs":[0.0],"grid_size":64},"omega":0.1,"lambda":0.9}"#).unwrap();
    assert!((back.lambda - 0.4).abs() < 1e-15);
}

#[test]
fn patch_json_schema() {
    let p: PolarPatch<f64> = serde_json::from_str(r#"{"m":3,"coeffs":[0.0,0.1],"grid_size":512}"#).unwrap();
    assert_eq!(p.m(), 3);
    assert!(serde_json::from_str::<PolarPatch<f64>>(r#"{"m":3,"coeffs":[0.0],"grid_size":512,"x":1}"#).is_err());
    assert!(serde_json::from_str::<PolarPatch<f64>>(r#"{"m":2,"coeffs":[-1.5],"grid_size":512}"#).is_err());
}

#[test]
fn generic_f32_path() {
    let p = normalize_area(&PolarPatch::<f32>::single_mode(3, 0.1).unwrap()).unwrap();
    assert!((area(&p) - std::f32::consts::PI).abs() < 1e-5);
    assert!(second_moment_excess(&p).unwrap() > 0.0);
}

fn patch_strategy() -> impl Strategy<Value = PolarPatch<f64>> {
    (1usize..6, prop::collection::vec(-0.08f64..0.08, 1..5), -0.3f64..0.3).prop_map(|(m, mut c, a0)| {
        c.insert(0, a0);
        PolarPatch::new(m, c, 1024).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn normalization_gives_area_pi(p in patch_strategy()) {
        let n = normalize_area(&p).unwrap();
        prop_assert!((area(&n) - PI).abs() < 1e-12 * PI);
        prop_assert!(f_accumulated(&n, 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn second_moment_excess_nonnegative(p in patch_strategy()) {
        let n = normalize_area(&p).unwrap();
        let e = second_moment_excess(&n).unwrap();
        prop_assert!(e >= -1e-14);
        if n.coeffs().iter().skip(1).any(|c| c.abs() > 1e-3) {
            prop_assert!(e > 0.0);
        }
    }

    #[test]
    fn dilation_invariance(p in patch_strategy(), s in 0.5f64..2.5) {
        let a = normalize_area(&p).unwrap();
        let b = normalize_area(&p.dilate(s).unwrap()).unwrap();
        prop_assert!((asymmetry_origin(&a).unwrap() - asymmetry_origin(&b).unwrap()).abs() < 1e-12);
        prop_assert!((second_moment_excess(&a).unwrap() - second_moment_excess(&b).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn eta_inverse_inverts_radius(m in 2usize..8, eps in 0.01f64..0.2, frac in 0.02f64..0.98) {
        let p = PolarPatch::single_mode(m, eps).unwrap();
        let theta = frac * PI / m as f64;
        let back = eta_inverse(&p, p.radius(theta)).unwrap();
        prop_assert!((back - theta).abs() < 1e-12 / eps.min(1.0).max(frac.min(1.0 - frac)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn fraenkel_below_origin_value(m in 1usize..5, eps in 0.02f64..0.25) {
        let p = normalize_area(&PolarPatch::single_mode(m, eps).unwrap()).unwrap();
        let r = fraenkel_asymmetry(&p).unwrap();
        prop_assert!(r.value <= asymmetry_origin(&p).unwrap() + 1e-12);
        prop_assert!(r.value >= 0.0 && r.value <= 2.0);
    }
}
