mod common;

use common::lane_emden_first_zero;
use proptest::prelude::*;
use starlab_core::profile::{
    center_c2, probe_isentropic, profile_mass_moments, solve_isentropic_profile,
    solve_thermo_profile, GridSpec,
};

#[test]
fn lane_emden_oracle_matches_frozen_value() {
    let xi1 = lane_emden_first_zero(3.0);
    assert!((xi1 - 6.896_848_619).abs() < 1e-7, "{xi1}");
}

#[test]
fn isentropic_radius_at_zero_delta() {
    let p = solve_isentropic_profile(0.0, &GridSpec::default()).unwrap();
    let oracle = 2.0 * 6.896_848_619;
    assert!((p.r0 - 13.7937).abs() < 2e-3);
    assert!((p.r0 - oracle).abs() < 1e-7, "R0 = {}", p.r0);
    assert!(p.boundary_slope < 0.0 && p.boundary_slope.is_finite());
}

#[test]
fn boundary_slope_is_stable_under_refinement() {
    let a = solve_isentropic_profile(
        0.0,
        &GridSpec {
            max_step: 0.5,
            ..GridSpec::default()
        },
    )
    .unwrap();
    let b = solve_isentropic_profile(
        0.0,
        &GridSpec {
            max_step: 0.25,
            intervals: 400,
            ..GridSpec::default()
        },
    )
    .unwrap();
    let rel = ((a.boundary_slope - b.boundary_slope) / b.boundary_slope).abs();
    assert!(rel < 1e-3, "{rel}");
    // the slope at delta = 0 is the scaled Lane-Emden value 2 xi1^2 |theta'(xi1)| / (8 ...)
    assert!(
        (b.boundary_slope - (-0.021_214_878_8)).abs() < 1e-8,
        "{}",
        b.boundary_slope
    );
}

#[test]
fn residual_by_independent_stencil() {
    let delta = 0.1;
    let p = solve_isentropic_profile(delta, &GridSpec::with_intervals(400)).unwrap();
    let h = p.spacing();
    let mut worst = 0.0f64;
    for i in 3..p.y_nodes.len() - 3 {
        let wp = &p.w_prime;
        let wpp = (-wp[i + 2] + 8.0 * wp[i + 1] - 8.0 * wp[i - 1] + wp[i - 2]) / (12.0 * h);
        let y = p.y_nodes[i];
        let w = p.w[i];
        let r = wpp + 2.0 / y * wp[i] + 0.25 * w * w * w + 0.75 * delta;
        worst = worst.max(r.abs());
    }
    assert!(worst < 1e-9, "{worst}");
}

#[test]
fn center_series_coefficient() {
    for &delta in &[0.0, 0.2, -0.001] {
        let p = solve_isentropic_profile(delta, &GridSpec::with_intervals(2000)).unwrap();
        // fit w(y) = 1 + c2 y^2 + c4 y^4 on the first few nodes
        let (y1, y2) = (p.y_nodes[3], p.y_nodes[6]);
        let (d1, d2) = ((p.w[3] - 1.0) / (y1 * y1), (p.w[6] - 1.0) / (y2 * y2));
        let c4 = (d2 - d1) / (y2 * y2 - y1 * y1);
        let c2 = d1 - c4 * y1 * y1;
        assert!((c2 - center_c2(delta)).abs() < 1e-7, "{delta}: {c2}");
    }
}

#[test]
fn fourth_moment_against_quadrature() {
    let p = solve_isentropic_profile(0.0, &GridSpec::with_intervals(4000)).unwrap();
    // Simpson on y^4 w^3 from the sampled profile
    let h = p.spacing();
    let n = p.intervals();
    let mut s = 0.0;
    for i in 0..=n {
        let c = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        s += c * p.y_nodes[i].powi(4) * p.rho_bar[i];
    }
    s *= h / 3.0;
    let (mass, m4) = profile_mass_moments(&p);
    assert!(((s - m4) / m4).abs() < 1e-6, "{s} vs {m4}");
    assert_eq!(mass[0], 0.0);
    assert!(mass.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn critical_delta_probe() {
    assert!(probe_isentropic(-0.001, 200.0).is_ok());
    assert!(probe_isentropic(-0.003, 200.0).is_err());
}

#[test]
fn thermo_reduces_to_lane_emden() {
    let p = solve_thermo_profile(1.0, 0.25, 1.0, &GridSpec::default()).unwrap();
    let a = p.reduction_constant;
    let mut worst = 0.0f64;
    for i in 0..p.y_nodes.len() {
        if p.y_nodes[i] > 0.95 * p.r0 {
            break;
        }
        let r = (p.rho_bar[i] - a * p.theta_bar[i].powi(3)) / p.rho_bar[i];
        worst = worst.max(r.abs());
    }
    assert!(worst < 1e-6, "{worst}");
    let oracle = lane_emden_first_zero(3.0) / (0.25f64 * a).sqrt();
    assert!(
        ((p.r0 - oracle) / oracle).abs() < 1e-6,
        "{} vs {oracle}",
        p.r0
    );
    assert!(p.theta_slope < 0.0 && p.rho_root_slope < 0.0);
    assert_eq!(p.c_nu, 3.0);
}

#[test]
fn thermo_other_indices() {
    // eps K = 1/2 gives index 1 with the closed form sin(x)/x
    let p = solve_thermo_profile(1.0, 0.5, 1.0, &GridSpec::default()).unwrap();
    let oracle = std::f64::consts::PI / 0.5f64.sqrt();
    assert!(((p.r0 - oracle) / oracle).abs() < 1e-7, "{}", p.r0);
    let p = solve_thermo_profile(2.0, 0.4, 2.0, &GridSpec::default()).unwrap();
    assert!(p.theta_slope < 0.0 && p.rho_root_slope < 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn profile_positive_and_mass_monotone(delta in -0.002f64..1.0) {
        let p = solve_isentropic_profile(delta, &GridSpec::with_intervals(64)).unwrap();
        prop_assert!(p.w[..64].iter().all(|&w| w > 0.0));
        prop_assert!(p.mass.windows(2).all(|m| m[1] >= m[0]));
        prop_assert!(p.boundary_slope < 0.0);
        prop_assert!(p.fourth_moment > 0.0);
    }

    #[test]
    fn thermo_zeros_coincide(ek in 0.2f64..0.95, rho_c in 0.5f64..2.0) {
        let p = solve_thermo_profile(1.0, ek, rho_c, &GridSpec::with_intervals(32)).unwrap();
        prop_assert!(p.theta_bar[..32].iter().all(|&t| t > 0.0));
        prop_assert!(p.rho_bar[..32].iter().all(|&r| r > 0.0));
    }
}
