use proptest::prelude::*;
use vpl_core::bounds::*;
use vpl_core::geometry::*;
use vpl_core::vstates::{continue_branch, Branch, SolverConfig};

fn branch(m: usize, cap: f64, cfg: SolverConfig) -> Branch<f64> {
    let cap = cap * (1.0 + 1e-6);
    let cfg = SolverConfig { amplitude_cap: cap, continuation_step: Some(cap / 5.0), max_steps: 20, validate: false, ..cfg };
    continue_branch(m, &cfg).unwrap()
}

/// Composite Simpson on `x = s³`, which removes the `x^{1/3}` cusp at 0.
fn arctan_brute(m: usize, a: f64, b: f64) -> f64 {
    let f = |s: f64| {
        if s <= 0.0 || s >= 1.0 {
            return 0.0;
        }
        let x = s * s * s;
        let d = (a * x / (1.0 - x)).atan() - (a * x / (1.0 - b * x)).atan();
        x.powf(-1.0 - 2.0 / m as f64) * d * 3.0 * s * s
    };
    let n = 200_000;
    let h = 1.0 / n as f64;
    let mut sum = f(0.0) + f(1.0);
    for i in 1..n {
        sum += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    // near s = 1 the integrand tends to π/2 · 3, not 0
    let end = 3.0 * (std::f64::consts::FRAC_PI_2 - (a / (1.0 - b)).atan());
    (sum - f(1.0) + end) * h / 3.0
}

#[test]
fn outmost_ellipses_closed_form() {
    let r = outmost_scan_ellipses(&[2.0f64, 3.0, 5.0]).unwrap();
    let want = [0.8, 0.9, 25.0 / 26.0];
    for (row, w) in r.rows.iter().zip(want) {
        assert!((row.ratio - w).abs() < 1e-12);
        assert!((row.ratio - row.param.powi(2) / (row.param.powi(2) + 1.0)).abs() < 1e-12);
    }
    assert!((r.empirical_constant - 0.8).abs() < 1e-12);
    let big = outmost_scan_ellipses(&[1e4f64]).unwrap();
    assert!(1.0 - big.empirical_constant < 1e-7);
}

#[test]
fn outmost_skips_disks() {
    let r = outmost_scan_ellipses(&[1.0f64, 2.0]).unwrap();
    assert_eq!(r.rows.len(), 1);
    assert_eq!(r.notes.len(), 1);
    assert!(outmost_scan_ellipses(&[1.0f64]).is_err());

    let e = EllipsePatch::unit_area(2.0f64).unwrap();
    let states = vec![
        RotatingState::new(PolarPatch::disk(2), 0.25),
        RotatingState::new(e.to_polar(e.modes_for(1e-15), 4096).unwrap(), e.omega_exact()),
    ];
    let r = outmost_scan(&states).unwrap();
    assert_eq!(r.rows.len(), 1);
    assert!(r.notes[0].contains("disk"));
    assert!((r.empirical_constant - 0.8).abs() < 1e-9);
}

#[test]
fn omega_gap_and_linfty_on_branches() {
    let b3 = branch(3, 0.1, SolverConfig::default());
    let b6 = branch(6, 0.05, SolverConfig::default());
    let b2 = branch(2, 0.05, SolverConfig::default());
    let gap = omega_gap_scan(&[b2.clone(), b3.clone(), b6.clone()]).unwrap();
    assert!(gap.notes.iter().any(|n| n.contains("m = 2")));
    assert!(gap.rows.iter().all(|r| r.m >= 3));
    for r in gap.rows.iter().filter(|r| r.param == 0.0) {
        assert!((r.ratio - 0.5).abs() < 1e-6);
    }
    assert!(gap.empirical_constant >= 0.5 && gap.empirical_constant.is_finite());

    let [sup, rmax, lambda] = linfty_scan(&[b3, b6]).unwrap();
    for (s, r) in sup.rows.iter().zip(&rmax.rows) {
        assert!(r.lhs <= s.lhs + 1e-15);
        if s.param == 0.0 {
            assert_eq!(s.ratio, 0.0);
            assert_eq!(r.ratio, 0.0);
        }
    }
    assert!(lambda.empirical_constant > 0.0 && lambda.rows.iter().all(|r| r.omega.unwrap() < 0.5));
}

#[test]
fn constants_shrink_with_cap() {
    let m = 6;
    let wide = [branch(m, 0.3 / m as f64, SolverConfig::default())];
    let narrow = [branch(m, 0.15 / m as f64, SolverConfig::default())];
    let g = |b: &[Branch<f64>]| omega_gap_scan(b).unwrap().empirical_constant;
    let l = |b: &[Branch<f64>]| linfty_scan(b).unwrap()[0].empirical_constant;
    assert!(g(&narrow) <= g(&wide) + 1e-9);
    assert!(l(&narrow) <= l(&wide) + 1e-12);
}

#[test]
fn constants_stable_under_refinement() {
    let m = 6;
    let coarse = SolverConfig::default();
    let fine = SolverConfig {
        modes: 2 * coarse.modes,
        boundary_nodes: 2 * coarse.boundary_nodes,
        grid_size: 2 * coarse.grid_size,
        ..coarse.clone()
    };
    let a = [branch(m, 0.05, coarse)];
    let b = [branch(m, 0.05, fine)];
    let pairs = [
        (omega_gap_scan(&a).unwrap().empirical_constant, omega_gap_scan(&b).unwrap().empirical_constant),
        (linfty_scan(&a).unwrap()[0].empirical_constant, linfty_scan(&b).unwrap()[0].empirical_constant),
    ];
    for (x, y) in pairs {
        assert!(agree_to_sig_figs(x, y, 3), "{x} {y}");
    }
}

#[test]
fn arctan_integral_examples() {
    for m in [3, 5, 9] {
        assert!(appendix_arctan_integral(m, 0.5f64, 1.0).abs() < 1e-15);
    }
    let v = appendix_arctan_integral(3, 0.5f64, 0.5);
    let brute = arctan_brute(3, 0.5, 0.5);
    assert!((v - brute).abs() < 1e-9, "{v} {brute}");
    assert!((v - 0.461_231_078_86).abs() < 1e-10);
    assert!(v / 0.5 < 1.0);
}

#[test]
fn log_integral_small_a() {
    for m in [3, 9] {
        let r4 = appendix_log_integral(m, 1e-4f64) / 1e-2;
        let r2 = appendix_log_integral(m, 1e-2f64) / 0.1;
        assert!(r4.is_finite() && r2.is_finite());
        assert!(r4 > 0.0 && r4 < 3.0 * r2 && r2 < 3.0 * r4, "{r4} {r2}");
    }
}

#[test]
fn appendix_probe_is_bounded() {
    let [arctan, log] = appendix_inequality_probe::<f64>().unwrap();
    assert_eq!(arctan.rows.len(), 36);
    assert_eq!(log.rows.len(), 20);
    assert!(arctan.empirical_constant.is_finite() && log.empirical_constant.is_finite());
    assert!(arctan.notes[0].contains("refinement"));
    let again = appendix_inequality_probe::<f64>().unwrap();
    assert_eq!(again[0].empirical_constant, arctan.empirical_constant);
}

#[test]
fn sig_fig_helper() {
    assert!(agree_to_sig_figs(1.234e-3, 1.2344e-3, 3));
    assert!(!agree_to_sig_figs(1.23, 1.25, 3));
    assert!(agree_to_sig_figs(0.0, 0.0, 3));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn outmost_ratio_formula(a in 1.01f64..50.0) {
        let r = outmost_scan_ellipses(&[a]).unwrap();
        prop_assert!((r.empirical_constant - a * a / (a * a + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn arctan_integral_nonnegative_and_monotone_in_b(m in 3usize..12, a in 0.05f64..1.0, b in 0.0f64..0.95) {
        let v = appendix_arctan_integral(m, a, b);
        let w = appendix_arctan_integral(m, a, (b + 0.05).min(1.0));
        prop_assert!(v >= 0.0 && w <= v + 1e-12);
    }
}
