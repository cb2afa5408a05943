mod common;

use common::{linear_uniform_oracle, self_similar_uniform_oracle};
use proptest::prelude::*;
use starlab_core::expansion::{classify_expansion, ClockModel, ExpansionParams};
use starlab_core::lagrangian::*;
use starlab_core::profile::{
    solve_isentropic_profile, solve_thermo_profile, GridSpec, IsentropicProfile,
};

const DELTA_SS: f64 = -0.001;

fn ss_setup(n: usize) -> (IsentropicProfile, ExpansionParams) {
    let p = solve_isentropic_profile(DELTA_SS, &GridSpec::with_intervals(n)).unwrap();
    let params = classify_expansion(DELTA_SS, 1.0, (2.0 * DELTA_SS.abs()).sqrt()).unwrap();
    (p, params)
}

fn linear_setup(delta: f64, n: usize) -> (IsentropicProfile, ExpansionParams) {
    let p = solve_isentropic_profile(delta, &GridSpec::with_intervals(n)).unwrap();
    (p, classify_expansion(delta, 1.0, 1.0).unwrap())
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[test]
fn zero_data_stays_zero_in_all_regimes() {
    let spec = SolverSpec {
        dt_max: 0.05,
        emit_every: 0.5,
        ..SolverSpec::default()
    };
    let (p, params) = ss_setup(40);
    let ev = evolve_self_similar(
        &p,
        &params,
        &IsentropicInitial::zero(41),
        3.0,
        &spec,
        &mut |_, _| {},
    )
    .unwrap();
    assert!(ev.events.is_empty());
    for f in &ev.snapshots {
        assert!(sup(&f.theta) <= 1e-12 && sup(&f.theta_t) <= 1e-12 && sup(&f.theta_tt) <= 1e-12);
    }
    assert!(ev.history.iter().all(|r| r.dissipation == 0.0));

    let (p, params) = linear_setup(0.0, 40);
    let ev = evolve_linear_isentropic(
        &p,
        &params,
        &IsentropicInitial::zero(41),
        3.0,
        &spec,
        &mut |_, _| {},
    )
    .unwrap();
    assert!(ev
        .snapshots
        .iter()
        .all(|f| sup(&f.theta) <= 1e-12 && sup(&f.theta_t) <= 1e-12));

    let tp = solve_thermo_profile(1.0, 0.25, 1.0, &GridSpec::with_intervals(40)).unwrap();
    let params = classify_expansion(0.0, 1.0, 2.0).unwrap();
    let ev = evolve_linear_thermo(
        &tp,
        &params,
        &ThermoInitial::zero(41),
        1.0,
        &spec,
        &mut |_, _| {},
    )
    .unwrap();
    for f in &ev.snapshots {
        assert!(sup(&f.xi) <= 1e-12 && sup(&f.zeta) <= 1e-12 && sup(&f.zeta_t) <= 1e-12);
    }
}

#[test]
fn self_similar_uniform_data_follow_the_phase_plane() {
    let (p, params) = ss_setup(60);
    let init = IsentropicInitial::uniform(61, 0.01, 0.05);
    let spec = SolverSpec {
        dt_max: 0.01,
        ..SolverSpec::default()
    };
    let ev = evolve_self_similar(&p, &params, &init, 2.0, &spec, &mut |_, _| {}).unwrap();
    let (phi, phi_s) = self_similar_uniform_oracle(DELTA_SS, 0.01, 0.05, 2.0, 4000);
    let f = ev.last();
    assert_eq!(f.clock, 2.0);
    for i in 0..f.theta.len() {
        assert!(((f.theta[i] - phi) / phi).abs() < 1e-4);
        assert!(((f.theta_t[i] - phi_s) / phi_s).abs() < 1e-4);
    }
}

#[test]
fn linear_uniform_data_follow_the_reduced_equation() {
    for &delta in &[DELTA_SS, 0.0, 0.1] {
        let (p, params) = linear_setup(delta, 40);
        let init = IsentropicInitial::uniform(41, 0.02, -0.03);
        let spec = SolverSpec {
            dt_max: 0.01,
            ..SolverSpec::default()
        };
        let ev = evolve_linear_isentropic(&p, &params, &init, 2.0, &spec, &mut |_, _| {}).unwrap();
        let (th, th_t) = linear_uniform_oracle(delta, 1.0, 1.0, 0.02, -0.03, 2.0, 4000);
        let f = ev.last();
        for i in 0..f.theta.len() {
            assert!(
                ((f.theta[i] - th) / th).abs() < 1e-4,
                "delta {delta}: {} vs {th}",
                f.theta[i]
            );
            assert!(
                ((f.theta_t[i] - th_t) / th_t).abs() < 1e-4,
                "delta {delta}: {} vs {th_t}",
                f.theta_t[i]
            );
        }
    }
}

#[test]
fn initial_second_derivative_examples() {
    let (p, params) = linear_setup(0.0, 40);
    let z = initial_second_derivatives(&p, &params, &IsentropicInitial::zero(41), 1.0).unwrap();
    assert!(z.iter().all(|&v| v == 0.0));

    let (p, params) = linear_setup(0.1, 40);
    let tt = initial_second_derivatives(
        &p,
        &params,
        &IsentropicInitial::uniform(41, 0.02, -0.03),
        1.0,
    )
    .unwrap();
    let q: f64 = 1.02;
    let expect = -(1.0 * -0.03 + 0.1 * (q - 1.0 / (q * q))) / 1.0;
    for v in &tt {
        assert!((v - expect).abs() < 1e-12, "{v} vs {expect}");
    }

    let tp = solve_thermo_profile(1.0, 0.25, 1.0, &GridSpec::with_intervals(40)).unwrap();
    let params = classify_expansion(0.0, 1.0, 2.0).unwrap();
    let (x2, z1) =
        initial_second_derivatives_thermo(&tp, &params, &ThermoInitial::zero(41), 1.0).unwrap();
    assert!(x2.iter().chain(&z1).all(|&v| v == 0.0));
}

/// `(theta_t(h) - theta_1) / h` approaches the initial second derivative
/// at first order.
#[test]
fn initial_second_derivative_matches_a_short_step() {
    let (p, params) = linear_setup(0.0, 40);
    let x = p.y_nodes.clone();
    let g0 = Family::RandomSmooth { modes: 4, seed: 5 }.sample(&x);
    let g1 = Family::RandomInterior { modes: 4, seed: 6 }.sample(&x);
    let init = IsentropicInitial::scaled(&x, &g0, &g1, 1e-3);
    let tt = initial_second_derivatives(&p, &params, &init, 1.0).unwrap();
    let err = |h: f64| {
        let spec = SolverSpec {
            dt_max: h,
            dt_min: 1e-12,
            ..SolverSpec::default()
        };
        let ev = evolve_linear_isentropic(&p, &params, &init, h, &spec, &mut |_, _| {}).unwrap();
        let f = ev.last();
        (1..=20)
            .map(|i| ((f.theta_t[i] - init.phi1[i]) / h - tt[i]).abs())
            .fold(0.0, f64::max)
    };
    let (e1, e2, e3) = (err(1e-3), err(5e-4), err(2.5e-4));
    assert!(e2 < 0.6 * e1 && e3 < 0.6 * e2, "{e1} {e2} {e3}");
    assert!(e3 < 0.05 * sup(&tt[..=20]), "{e3}");
}

#[test]
fn zero_perturbation_reconstructs_the_homogeneous_solution() {
    let (p, _) = ss_setup(40);
    let clock = ClockModel::self_similar(1.3, DELTA_SS);
    let n = p.y_nodes.len();
    for &s in &[0.0, 2.0, 7.5] {
        let f = PerturbationField {
            regime: Regime::SelfSimilar,
            clock: s,
            x_nodes: p.y_nodes.clone(),
            theta: vec![0.0; n],
            theta_t: vec![0.0; n],
            theta_tt: vec![0.0; n],
        };
        let e = reconstruct_eulerian(&f, &p, &clock).unwrap();
        let (alpha, alpha_s) = clock.alpha(s);
        let alpha_t = alpha_s * alpha.powf(-1.5);
        for i in 0..n {
            let x = p.y_nodes[i];
            assert!((e.r[i] - alpha * x).abs() <= 1e-14 * alpha * x);
            assert!((e.rho[i] - p.rho_bar[i] / alpha.powi(3)).abs() <= 1e-14 * p.rho_bar[0]);
            assert!((e.u[i] - alpha_t * x).abs() <= 1e-14 * alpha_t * p.r0);
        }
        assert_eq!(e.r[0], 0.0);
        let m = p.mass.last().unwrap();
        assert!(((e.total_mass() - m) / m).abs() < 1e-12);
    }
}

#[test]
fn physical_time_of_the_clocks() {
    let ss = ClockModel::self_similar(1.0, -0.5);
    // alpha = (1 + 3t/2)^{2/3} gives s = (2/3) ln(1 + 3t/2)
    let s = (2.0 / 3.0) * 2.5f64.ln();
    assert!((physical_time(&ss, s) - 1.0).abs() < 1e-12);
    let lin = ClockModel::LinearExact { a0: 1.0, a1: 2.0 };
    assert!((physical_time(&lin, 3f64.ln() / 2.0) - 1.0).abs() < 1e-12);
    let table = ClockModel::linear(0.1, 1.0, 1.0, 2.0).unwrap();
    let t = physical_time(&table, 1.5);
    // alpha_tt = delta + alpha_t^2/alpha in tau is alpha'' alpha^2 = delta in t
    let path = starlab_core::expansion::integrate_alpha(
        &classify_expansion(0.1, 1.0, 1.0).unwrap(),
        t,
        &starlab_core::expansion::DtSpec::default(),
    )
    .unwrap();
    assert!((path.tau.last().unwrap() - 1.5).abs() < 1e-6);
}

#[test]
fn mismatched_inputs_are_rejected() {
    let (p, params) = ss_setup(20);
    let short = IsentropicInitial::zero(7);
    let spec = SolverSpec::default();
    assert!(matches!(
        evolve_self_similar(&p, &params, &short, 1.0, &spec, &mut |_, _| {}),
        Err(LagrangianError::LengthMismatch {
            got: 7,
            expected: 21
        })
    ));
    let other = classify_expansion(-0.002, 1.0, 0.2f64.sqrt() * 0.2).unwrap();
    assert!(matches!(
        evolve_self_similar(
            &p,
            &other,
            &IsentropicInitial::zero(21),
            1.0,
            &spec,
            &mut |_, _| {}
        ),
        Err(LagrangianError::ParamMismatch(_))
    ));
    let folded = IsentropicInitial::uniform(21, -1.5, 0.0);
    assert!(matches!(
        evolve_self_similar(&p, &params, &folded, 1.0, &spec, &mut |_, _| {}),
        Err(LagrangianError::JacobianDegenerate { .. })
    ));
    let bad = SolverSpec {
        dt_max: -1.0,
        ..SolverSpec::default()
    };
    assert!(matches!(
        evolve_self_similar(
            &p,
            &params,
            &IsentropicInitial::zero(21),
            1.0,
            &bad,
            &mut |_, _| {}
        ),
        Err(LagrangianError::InvalidSpec(_))
    ));
    let tp = solve_thermo_profile(1.0, 0.25, 1.0, &GridSpec::with_intervals(20)).unwrap();
    let neg = ThermoInitial {
        zeta0: vec![-10.0; 21],
        ..ThermoInitial::zero(21)
    };
    let lin = classify_expansion(0.0, 1.0, 1.0).unwrap();
    assert!(matches!(
        evolve_linear_thermo(&tp, &lin, &neg, 1.0, &spec, &mut |_, _| {}),
        Err(LagrangianError::TemperatureNegative { .. })
    ));
}

#[test]
fn large_compression_ends_with_an_event() {
    let (p, params) = ss_setup(30);
    let x = p.y_nodes.clone();
    let g = Family::Bump {
        center: 0.5,
        width: 0.2,
    }
    .sample(&x);
    let init = IsentropicInitial {
        phi0: vec![0.0; 31],
        phi1: g.iter().map(|v| -2.0 * v).collect(),
    };
    let spec = SolverSpec {
        dt_max: 0.05,
        dt_min: 1e-6,
        ..SolverSpec::default()
    };
    let ev = evolve_self_similar(&p, &params, &init, 50.0, &spec, &mut |_, _| {}).unwrap();
    assert!(!ev.events.is_empty(), "steps {}", ev.steps);
    assert!(ev.final_clock < 50.0);
    let f = ev.last();
    assert!(f.theta.iter().all(|v| v.is_finite()));
}

#[test]
fn stability_range_is_flagged() {
    let delta = -0.2;
    let p = solve_isentropic_profile(delta, &GridSpec::with_intervals(20));
    // the profile only exists above the critical delta, so build the
    // flag check from a valid profile with a slow expansion instead
    assert!(p.is_err());
    let (p, _) = linear_setup(DELTA_SS, 20);
    let params = classify_expansion(DELTA_SS, 1.0, 0.08).unwrap();
    let spec = SolverSpec {
        dt_max: 0.05,
        ..SolverSpec::default()
    };
    let ev = evolve_linear_isentropic(
        &p,
        &params,
        &IsentropicInitial::zero(21),
        0.2,
        &spec,
        &mut |_, _| {},
    )
    .unwrap();
    assert!(ev.has_event(EventKind::OutsideStabilityRange));
    let params = classify_expansion(DELTA_SS, 1.0, 1.0).unwrap();
    let ev = evolve_linear_isentropic(
        &p,
        &params,
        &IsentropicInitial::zero(21),
        0.2,
        &spec,
        &mut |_, _| {},
    )
    .unwrap();
    assert!(!ev.has_event(EventKind::OutsideStabilityRange));
}

#[test]
fn families_are_normalized_and_seeded() {
    let x: Vec<f64> = (0..=50).map(|i| i as f64 * 0.2).collect();
    for fam in [
        Family::Constant,
        Family::Bump {
            center: 0.3,
            width: 0.2,
        },
        Family::RandomSmooth { modes: 5, seed: 9 },
        Family::RandomInterior { modes: 5, seed: 9 },
    ] {
        let g = fam.sample(&x);
        assert!((sup(&g) - 1.0).abs() < 1e-15, "{fam:?}");
        assert_eq!(g, fam.sample(&x));
    }
    let a = Family::RandomSmooth { modes: 5, seed: 1 }.sample(&x);
    let b = Family::RandomSmooth { modes: 5, seed: 2 }.sample(&x);
    assert_ne!(a, b);
    let interior = Family::RandomInterior { modes: 5, seed: 3 }.sample(&x);
    assert!(interior[38..].iter().all(|&v| v == 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn dissipation_is_nonnegative_and_mass_is_exact(seed in 0u64..1000, amp in 1e-4f64..5e-3) {
        let (p, params) = ss_setup(24);
        let x = p.y_nodes.clone();
        let g0 = Family::RandomSmooth { modes: 4, seed }.sample(&x);
        let g1 = Family::RandomSmooth { modes: 4, seed: seed + 1 }.sample(&x);
        let init = IsentropicInitial::scaled(&x, &g0, &g1, amp);
        let spec = SolverSpec { dt_max: 0.05, emit_every: 0.25, ..SolverSpec::default() };
        let clock = ClockModel::self_similar(params.a0, params.delta);
        let ev = evolve_self_similar(&p, &params, &init, 1.0, &spec, &mut |_, r| assert!(r.dissipation >= 0.0)).unwrap();
        let m = *p.mass.last().unwrap();
        for f in &ev.snapshots {
            let e = reconstruct_eulerian(f, &p, &clock).unwrap();
            prop_assert!(((e.total_mass() - m) / m).abs() < 1e-12);
            prop_assert!(e.r.windows(2).all(|w| w[1] > w[0]));
            prop_assert!(e.rho[..x.len() - 1].iter().all(|&r| r > 0.0));
        }
    }

    #[test]
    fn uniform_second_derivative_matches_the_reduced_equation(
        phi in -0.3f64..0.3, phi_s in -0.2f64..0.2, delta in -0.002f64..0.3
    ) {
        let p = solve_isentropic_profile(delta, &GridSpec::with_intervals(16)).unwrap();
        let params = classify_expansion(delta, 1.0, 1.5).unwrap();
        let tt = initial_second_derivatives(&p, &params, &IsentropicInitial::uniform(17, phi, phi_s), 1.0).unwrap();
        let q = 1.0 + phi;
        let expect = -(1.5 * phi_s + delta * (q - 1.0 / (q * q)));
        for v in tt {
            prop_assert!((v - expect).abs() < 1e-12 * (1.0 + expect.abs()));
        }
    }

    #[test]
    fn thermo_heating_and_boundary_temperature(seed in 0u64..1000) {
        let tp = solve_thermo_profile(1.0, 0.25, 1.0, &GridSpec::with_intervals(24)).unwrap();
        let params = classify_expansion(0.0, 1.0, 3.0).unwrap();
        let x = tp.y_nodes.clone();
        let g0 = Family::RandomSmooth { modes: 4, seed }.sample(&x);
        let g1 = Family::RandomSmooth { modes: 4, seed: seed + 7 }.sample(&x);
        let z = Family::RandomSmooth { modes: 4, seed: seed + 9 }.sample(&x);
        let init = ThermoInitial::scaled(&x, &g0, &g1, &z, 1e-3);
        let spec = SolverSpec { dt_max: 0.01, ..SolverSpec::default() };
        let ev = evolve_linear_thermo(&tp, &params, &init, 0.3, &spec, &mut |f, _| {
            assert_eq!(*f.zeta.last().unwrap(), 0.0);
            assert!(starlab_core::functionals::viscous_heating(f, 1.0).iter().all(|&h| h >= 0.0));
        }).unwrap();
        prop_assert!(ev.events.is_empty());
    }
}
