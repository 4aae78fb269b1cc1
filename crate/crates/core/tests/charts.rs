use std::f64::consts::TAU;

use approx::assert_relative_eq;
use proptest::prelude::*;
use toroflow::charts::presets;
use toroflow::diffgeo::{angle_diff, Coords, MetricAtPoint};
use toroflow::sampling::{angle_grid, shell_in_domain, shell_interior};
use toroflow::{ChartFamily, DomainSpec, FSpec};

fn shell(chart: &ChartFamily) -> DomainSpec {
    match chart.kind() {
        toroflow::ChartKind::GeneralCC1 => DomainSpec::new(0.85, 0.95).unwrap(),
        _ => DomainSpec::new(0.9, 0.99).unwrap(),
    }
}

/// Charts whose image satisfies the radius bound, so the inverse is global.
fn injective() -> Vec<ChartFamily> {
    vec![
        ChartFamily::axisymmetric(1.0, 1.0).unwrap(),
        presets::sin2(0.1),
        presets::sin2(0.3),
        presets::figure1('f').unwrap(),
    ]
}

fn coords_close(a: Coords, b: Coords, tol: f64) -> bool {
    (a.psi - b.psi).abs() < tol && angle_diff(a.theta, b.theta).abs() < tol && angle_diff(a.zeta, b.zeta).abs() < tol
}

#[test]
fn inverse_round_trip_ten_thousand_points() {
    for chart in injective() {
        let grid = shell_in_domain(&chart, &shell(&chart), 10_000, 3, 1e-6).unwrap();
        let mut worst = 0.0f64;
        for c in &grid {
            let p = chart.forward(*c).unwrap();
            let back = chart.inverse(&p).unwrap();
            let q = chart.forward(back).unwrap();
            worst = worst.max((p - q).norm());
            assert!(coords_close(*c, back, 1e-9), "{}: {c:?} -> {back:?}", chart.short_name());
        }
        assert!(worst < 1e-12, "{} forward-inverse residual {worst:e}", chart.short_name());
    }
}

#[test]
fn folded_charts_round_trip_on_own_sheet() {
    for chart in [presets::sin2(0.8), presets::figure1('c').unwrap(), presets::figure1('d').unwrap()] {
        let grid = shell_interior(&chart, &shell(&chart), 2_000, 4, 0.15).unwrap();
        for c in &grid {
            let p = chart.forward(*c).unwrap();
            let guess = Coords::new(c.psi - 1e-3, c.theta + 1e-3, c.zeta - 1e-3);
            let back = chart.inverse_near(&p, guess).unwrap();
            assert!(coords_close(*c, back, 1e-9), "{}: {c:?} -> {back:?}", chart.short_name());
            // the global inverse may land on another sheet but reproduces the point
            if let Ok(g) = chart.inverse(&p) {
                assert!((chart.forward(g).unwrap() - p).norm() < 1e-11);
            }
        }
    }
}

#[test]
fn psi_cartesian_matches_inverse() {
    for eps in [0.1, 0.3] {
        let chart = presets::sin2(eps);
        for c in shell_in_domain(&chart, &DomainSpec::new(0.9, 0.99).unwrap(), 2_000, 8, 1e-6).unwrap() {
            let p = chart.forward(c).unwrap();
            let a = chart.psi_cartesian(&p).unwrap();
            let b = chart.inverse(&p).unwrap().psi;
            assert!((a - b).abs() < 1e-11, "eps={eps}: {a} vs {b}");
            assert!((a - c.psi).abs() < 1e-11);
        }
    }
}

#[test]
fn jacobian_positive_on_validated_shells() {
    for chart in presets::builtin() {
        let d = shell(&chart);
        if d.validate_for(&chart).is_err() {
            continue;
        }
        for i in 0..5 {
            let psi = d.psi_min + (d.psi_max - d.psi_min) * i as f64 / 4.0;
            for c in angle_grid(psi, 48, 48) {
                if chart.in_domain_coords(c) {
                    assert!(chart.jacobian_closed_form(c) > 0.0);
                }
            }
        }
    }
    // the axisymmetric and mildly perturbed shells validate outright
    assert!(shell(&presets::sin2(0.3)).validate_for(&presets::sin2(0.3)).is_ok());
    assert!(DomainSpec::new(0.9, 0.99).unwrap().validate_for(&presets::figure1('f').unwrap()).is_err());
}

#[test]
fn sin2_perturbation_bounds() {
    let chart = presets::sin2(0.5);
    for k in 0..10_000 {
        let (dx, dy) = chart.delta_xy(TAU * k as f64 / 10_000.0);
        assert!(dx.abs() <= 2.0 / 3.0 + 1e-15);
        assert!(dy.abs() <= 1.0 / 3.0 + 1e-15);
    }
}

fn any_chart() -> impl Strategy<Value = ChartFamily> {
    (0usize..6).prop_map(|k| presets::builtin().swap_remove(k))
}

fn shell_coords() -> impl Strategy<Value = Coords> {
    (0.86f64..0.95, 0.0f64..TAU, 0.0f64..TAU).prop_map(|(p, t, z)| Coords::new(p, t, z))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn second_derivatives_and_metric_are_symmetric(chart in any_chart(), c in shell_coords()) {
        let jet = chart.jet_eval(c).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                prop_assert_eq!(jet.d2[i][j], jet.d2[j][i]);
            }
        }
        let m = MetricAtPoint::from_jet(&jet);
        prop_assert_eq!(m.g, m.g.transpose());
        let det_g = m.g.determinant();
        let det_j = jet.det();
        prop_assert!((det_g - det_j * det_j).abs() <= 1e-12 * (1.0 + det_g.abs()));
    }

    #[test]
    fn metric_derivatives_match_differences(chart in any_chart(), c in shell_coords()) {
        let m = chart.metric_at(c).unwrap();
        let h = 1e-4;
        for k in 0..3 {
            let shift = |s: f64| {
                let mut y = c.to_array();
                y[k] += s;
                chart.metric_at(Coords::from_array(y)).unwrap().g
            };
            let fd = (shift(-2.0 * h) - 8.0 * shift(-h) + 8.0 * shift(h) - shift(2.0 * h)) / (12.0 * h);
            for i in 0..3 {
                for j in 0..3 {
                    let scale = 1.0 + m.dg[i][j][k].abs();
                    prop_assert!((fd[(i, j)] - m.dg[i][j][k]).abs() < 1e-7 * scale,
                        "dg[{}][{}][{}] = {} vs {}", i, j, k, m.dg[i][j][k], fd[(i, j)]);
                }
            }
        }
    }

    #[test]
    fn forward_map_is_periodic(chart in any_chart(), c in shell_coords(), m in -3i32..3, n in -3i32..3) {
        let shifted = Coords::new(c.psi, c.theta + TAU * m as f64, c.zeta + TAU * n as f64);
        let a = chart.forward(c).unwrap();
        let b = chart.forward(shifted).unwrap();
        prop_assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn jacobian_closed_form_matches_jets(chart in any_chart(), c in shell_coords()) {
        let closed = chart.jacobian_closed_form(c);
        let det = chart.jet_eval(c).unwrap().det();
        prop_assert!((closed - det).abs() <= 1e-12 * (1.0 + det.abs()));
    }

    #[test]
    fn inverse_recovers_coordinates(eps in 0.0f64..0.4, c in shell_coords()) {
        let chart = ChartFamily::f_perturbed(1.0, 1.0, eps, FSpec::Sin2).unwrap();
        prop_assume!(chart.in_domain_coords(c));
        let p = chart.forward(c).unwrap();
        let back = chart.inverse(&p).unwrap();
        prop_assert!(coords_close(c, back, 1e-9), "{:?} -> {:?}", c, back);
    }

    #[test]
    fn radius_bound_matches_closed_form(eps in 0.01f64..1.0) {
        let chart = presets::sin2(eps);
        assert_relative_eq!(chart.n_prime_bound(), eps * (1.0 + 2f64.sqrt()), max_relative = 1e-14);
        prop_assert_eq!(chart.check_n_prime().is_ok(), 1.0 > eps * (1.0 + 2f64.sqrt()));
    }
}

#[test]
fn embedding_identity_on_grid() {
    for chart in presets::builtin() {
        for c in angle_grid(0.92, 16, 16) {
            let r = toroflow::verify::embedding_identity_residual(&chart, c).unwrap();
            assert!(r < 1e-12, "{}: {r:e}", chart.short_name());
        }
    }
}
