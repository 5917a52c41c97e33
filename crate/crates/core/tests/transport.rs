use std::f64::consts::PI;

use proptest::prelude::*;
use vpl_core::geometry::*;
use vpl_core::potential::QuadratureConfig;
use vpl_core::quad::GaussLegendre;
use vpl_core::transport::*;

fn wavy(m: usize, eps: f64) -> PolarPatch<f64> {
    normalize_area(&PolarPatch::single_mode(m, eps).unwrap()).unwrap()
}

fn params(p: &PolarPatch<f64>, a: f64) -> TransportParams<f64> {
    TransportParams::new(p, a).unwrap()
}

/// `∫_D g(T(x)) dx` by Gauss–Legendre in `r` (split at `1 − a`) and the
/// midpoint rule in θ.
fn pushforward_integral(p: &PolarPatch<f64>, a: f64, g: impl Fn([f64; 2]) -> f64) -> f64 {
    let prm = params(p, a);
    let gl = GaussLegendre::<f64>::new(24);
    let n = 1024;
    let mut total = 0.0;
    for j in 0..n {
        let t = (j as f64 + 0.5) * 2.0 * PI / n as f64;
        let rad = p.radius(t);
        let f = |r: f64| {
            let (tr, tt) = transport_map(p, &prm, r, t).unwrap();
            g([tr * tt.cos(), tr * tt.sin()]) * r
        };
        total += gl.integrate(0.0, 1.0 - a, f) + gl.integrate(1.0 - a, rad, f);
    }
    total * 2.0 * PI / n as f64
}

#[test]
fn identity_map_for_disk() {
    let d = PolarPatch::<f64>::disk(4);
    let prm = params(&d, 0.5);
    for (r, t) in [(0.2, 0.3), (0.7, 1.1), (0.999, 4.0)] {
        let (tr, tt) = transport_map(&d, &prm, r, t).unwrap();
        assert!((tr - r).abs() < 1e-15 && (tt - t).abs() < 1e-15);
    }
    let g = TransportGrid::default();
    assert!(transport_cost(&d, &prm, &g).unwrap().abs() < 1e-15);
    assert!(pushforward_check(&d, &prm, &g).unwrap() < 1e-15);
    assert!(loeper_lhs(&d, &LoeperConfig::default()).unwrap().value.abs() < 1e-15);
}

#[test]
fn continuity_at_shell_edges() {
    let p = wavy(4, 0.1);
    let prm = params(&p, 0.4);
    for t in [0.0, 0.3, 1.0, 2.5] {
        let (tr, _) = transport_map(&p, &prm, 0.6, t).unwrap();
        assert!((tr - 0.6).abs() < 1e-12);
        let (tr, _) = transport_map(&p, &prm, 0.6 + 1e-12, t).unwrap();
        assert!((tr - 0.6).abs() < 1e-11);
        let (tr, _) = transport_map(&p, &prm, p.radius(t), t).unwrap();
        assert!((tr - 1.0).abs() < 1e-14);
    }
}

#[test]
fn rejects_bad_inputs() {
    let p = wavy(4, 0.1);
    assert!(TransportParams::new(&p, 0.15).is_err());
    assert!(TransportParams::new(&p, 1.0).is_err());
    let prm = params(&p, 0.4);
    assert!(transport_map(&p, &prm, 1.5, 0.0).is_err());
    assert!(transport_map(&PolarPatch::single_mode(4, 0.1).unwrap(), &prm, 0.5, 0.0).is_err());
}

#[test]
fn jacobian_relation() {
    let p = wavy(4, 0.1);
    let prm = params(&p, 0.4);
    let grid = TransportGrid { radial: 128, angular: 128 };
    assert!(pushforward_check(&p, &prm, &grid).unwrap() < 1e-10);
    for (s, t) in [(0.2, 0.1), (0.5, 0.7), (0.9, 2.0)] {
        let r = 0.6 + s * (p.radius(t) - 0.6);
        let j = jacobian_fd(&p, &prm, r, t, 1e-5);
        let (tr, _) = transport_map(&p, &prm, r, t).unwrap();
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        assert!(j[1][0].abs() < 1e-9);
        assert!((tr * det.abs() - r).abs() < 1e-6);
    }
}

#[test]
fn image_measure_is_the_disk() {
    let p = wavy(4, 0.1);
    let area = pushforward_integral(&p, 0.4, |_| 1.0);
    assert!((area - PI).abs() < 1e-6);
    let moment = pushforward_integral(&p, 0.4, |y| y[0] * y[0] + 2.0 * y[0] * y[1] + y[1].powi(4));
    assert!((moment - 3.0 * PI / 8.0).abs() < 1e-6);
}

#[test]
fn cost_against_cartesian_midpoint_rule() {
    let p = wavy(4, 0.1);
    let prm = params(&p, 0.4);
    let cost = transport_cost(&p, &prm, &TransportGrid::default()).unwrap();
    assert!(cost > 0.0);
    let n = 1200;
    let l = p.r_max();
    let h = 2.0 * l / n as f64;
    let mut direct = 0.0;
    for i in 0..n {
        for k in 0..n {
            let x = [-l + (i as f64 + 0.5) * h, -l + (k as f64 + 0.5) * h];
            if p.contains(x) {
                let (r, t) = (x[0].hypot(x[1]), x[1].atan2(x[0]));
                let (tr, tt) = transport_map(&p, &prm, r, t).unwrap();
                direct += (tr * tt.cos() - x[0]).powi(2) + (tr * tt.sin() - x[1]).powi(2);
            }
        }
    }
    direct *= h * h;
    assert!((cost - direct).abs() < 2e-3 * cost, "{cost} {direct}");
}

#[test]
fn cost_bound_ratio_is_stable_across_a() {
    let p = wavy(4, 0.1);
    let grid = TransportGrid::default();
    let ratios: Vec<f64> = admissible_sweep(&p, 6)
        .into_iter()
        .map(|a| transport_cost(&p, &params(&p, a), &grid).unwrap() / cost_bound_rhs(&p, a))
        .collect();
    assert!(ratios.iter().all(|r| r.is_finite() && *r > 0.0));
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    assert!(hi < 2.0, "{ratios:?}");
}

#[test]
fn loeper_holds_across_sweep() {
    let p = wavy(4, 0.1);
    let h2 = loeper_lhs(&p, &LoeperConfig::default()).unwrap();
    assert!(h2.value > 0.0);
    let mut values = admissible_sweep(&p, 5);
    values.push(TransportParams::default_for(&p).unwrap().a);
    for a in values {
        let r = transport_report(&p, &params(&p, a), &TransportGrid::default(), &h2).unwrap();
        assert!(r.loeper_holds, "{r:?}");
        assert!(r.cost >= 0.0 && r.bound_rhs >= 0.0 && r.jacobian_residual >= 0.0);
    }
}

#[test]
fn energy_forms_agree() {
    let p = wavy(4, 0.1);
    let h2 = loeper_lhs(&p, &LoeperConfig::default()).unwrap();
    let other = loeper_energy_form(&p, 16, &QuadratureConfig::default()).unwrap();
    assert!((h2.value - other).abs() < 1e-8 * h2.value.max(1e-6), "{} {other}", h2.value);
}

#[test]
fn discrete_ot_sandwich_small_grid() {
    let p = wavy(4, 0.1);
    let ot = discrete_ot_lower_bound(&p, &OtConfig { cells: 32, ..OtConfig::default() }).unwrap();
    assert!(ot.certified_lower_bound >= 0.0);
    assert!(ot.certified_lower_bound <= ot.discrete_lower_bound + 1e-15);
    let cost = transport_cost(&p, &TransportParams::default_for(&p).unwrap(), &TransportGrid::default()).unwrap();
    assert!(cost >= ot.certified_lower_bound);
}

#[test]
fn jensen_inequality() {
    for m in [2, 4, 8] {
        let (sup, rhs) = jensen_check(&wavy(m, 0.15));
        assert!(sup <= rhs);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn map_is_bijective_on_grid(m in 2usize..7, eps in 0.02f64..0.2, s in 0.05f64..0.95) {
        let p = wavy(m, eps);
        let (lo, hi) = admissible_range(&p);
        prop_assume!(lo < hi);
        let prm = params(&p, lo + s * (hi - lo));
        let grid = TransportGrid { radial: 32, angular: 64 };
        let ok = map_is_monotone(&p, &prm, &grid).unwrap();
        prop_assert!(ok);
    }

    #[test]
    fn angular_map_is_equivariant(m in 2usize..7, eps in 0.02f64..0.2, t in 0.0f64..6.0) {
        let p = wavy(m, eps);
        let prm = TransportParams::default_for(&p).unwrap();
        let period = 2.0 * PI / m as f64;
        let r = 1.0 - prm.a * 0.5;
        let (_, a) = transport_map(&p, &prm, r, t).unwrap();
        let (_, b) = transport_map(&p, &prm, r, t + period).unwrap();
        prop_assert!((b - a - period).abs() < 1e-12);
    }

    #[test]
    fn radial_displacement_controlled_by_u(m in 2usize..6, eps in 0.02f64..0.15, s in 0.1f64..0.9) {
        let p = wavy(m, eps);
        let (lo, hi) = admissible_range(&p);
        let c = radial_displacement_constant(&p, &params(&p, lo + s * (hi - lo)), &TransportGrid { radial: 32, angular: 64 }).unwrap();
        // stays bounded independently of a and r
        prop_assert!(c <= 1.0 + 1e-12, "{}", c);
    }

    #[test]
    fn jensen_property(m in 1usize..10, eps in 0.01f64..0.3) {
        let (sup, rhs) = jensen_check(&wavy(m, eps));
        prop_assert!(sup <= rhs);
    }
}
