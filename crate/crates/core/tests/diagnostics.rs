use erds::diagnostics::{
    balance_report, entropy_bounds_check, flux_exponent, flux_norm, gn_exponents, gn_norms, l2_energy_identity, p_entropy,
    renorm_residual, truncation_property_suite, DiagnosticsError, TestProfile, Truncator,
};
use erds::onsager::{Regime, SampleDomain};
use erds::presets;
use erds::scenario::{RunConfig, Scenario};
use erds::stepper::Stepper;
use erds::{StateField, TrajectoryF64};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn preset(name: &str) -> RunConfig {
    presets::load(name).unwrap().unwrap()
}

fn run(cfg: &RunConfig, stride: usize) -> (Scenario<f64>, TrajectoryF64) {
    let sc = cfg.build::<f64>().unwrap();
    let st = Stepper::new(sc.models.clone(), sc.solver, sc.grid.clone()).unwrap();
    let traj = st.run(&sc.initial, sc.horizon, stride).unwrap();
    (sc, traj)
}

fn short(name: &str, horizon: f64) -> RunConfig {
    let mut cfg = preset(name);
    cfg.horizon = horizon;
    cfg
}

#[test]
fn ledgers_close_on_every_preset() {
    for name in presets::names() {
        let (_, traj) = run(&short(name, 0.05), 5);
        let b = balance_report(&traj).unwrap();
        assert!(b.passed, "{name}: {:?}", b.failures());
        assert_eq!(b.steps, 50);
        assert!(b.positivity_min > 0.0);
    }
}

#[test]
fn heat_only_l2_identity() {
    let (_, traj) = run(&short("heat-only", 0.1), 1);
    let r = l2_energy_identity(&traj).unwrap();
    assert!(r.passed && r.monotone, "{r:?}");
}

#[test]
fn empty_trajectory_is_rejected() {
    let (_, mut traj) = run(&short("heat-only", 0.002), 1);
    traj.reports.clear();
    assert!(matches!(balance_report(&traj), Err(DiagnosticsError::Empty)));
    assert!(matches!(l2_energy_identity(&traj), Err(DiagnosticsError::Empty)));
}

#[test]
fn p_entropy_examples() {
    assert_eq!(p_entropy(1.0, 2.0), 0.0);
    for w in [0.0f64, 0.5, 3.0] {
        assert!((p_entropy(w, 2.0) - (w - 1.0) * (w - 1.0) / 2.0).abs() < 1e-15);
    }
}

#[test]
fn entropy_bounds_hold_on_preset_data_and_random_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let domain = SampleDomain { c_range: (1e-4, 1e3), u_range: (1e-3, 1e3) };
    for cfg in presets::all() {
        let sc = cfg.build::<f64>().unwrap();
        let model = &sc.models.entropy;
        assert!(entropy_bounds_check(model, &sc.initial).unwrap().passed, "{}", cfg.name);
        let ns = model.species();
        let cells: Vec<Vec<f64>> = (0..500)
            .map(|_| {
                let (mut c, u) = domain.state::<f64, _>(ns, &mut rng);
                c.push(u);
                c
            })
            .collect();
        let grid = erds::Grid::new(1, 500).unwrap();
        let field = StateField::from_fn(grid, ns + 1, |p| cells[p].clone()).unwrap();
        let r = entropy_bounds_check(model, &field).unwrap();
        assert!(r.passed, "{}: {r:?}", cfg.name);
        assert!(r.upper_margin >= 0.0 && r.lower_margin >= 0.0);
    }
}

#[test]
fn exponents() {
    assert!((flux_exponent(1) - 4.0 / 3.0).abs() < 1e-15);
    assert!((flux_exponent(2) - 6.0 / 5.0).abs() < 1e-15);
    let g = gn_exponents(Regime::H, 2);
    assert_eq!((g.q1, g.q2), (3.0, 4.0));
    let g = gn_exponents(Regime::HPrime, 1);
    assert_eq!((g.q1, g.q2), (3.0, 6.0));
}

#[test]
fn flux_norm_vanishes_at_equilibrium() {
    let (_, traj) = run(&short("equilibrium", 0.01), 2);
    let f = flux_norm(&traj, flux_exponent(1)).unwrap();
    assert!(f.norms.iter().all(|&x| x == 0.0));
    assert_eq!(f.integrated, 0.0);
    assert!(flux_norm(&traj, 0.5).is_err());
}

#[test]
fn norms_of_a_constant_state() {
    // constant isomerization data: every Lq norm on the unit box equals the value
    let (_, traj) = run(&short("isomerization", 0.001), 1);
    let s = gn_norms(&traj, Regime::H, 1).unwrap();
    assert!((s.species[0][0] - 2.0).abs() < 1e-13);
    assert!((s.species[0][1] - 0.1).abs() < 1e-13);
    assert!((s.energy[0] - 1.0).abs() < 1e-13);
    assert!(gn_norms(&traj, Regime::H, 0).is_err());
}

#[test]
fn flux_norm_decays_on_heat_only() {
    let (_, traj) = run(&short("heat-only", 0.2), 20);
    let f = flux_norm(&traj, flux_exponent(1)).unwrap();
    assert!(f.norms.windows(2).all(|w| w[1] < w[0]), "{:?}", f.norms);
    assert!(f.integrated > 0.0 && f.integrated.is_finite());
}

#[test]
fn truncator_examples() {
    let tr = Truncator::new(2.0f64, 0).unwrap();
    // below the height it is the identity in the truncated component
    assert_eq!(tr.value(&[0.5, 0.3, 1.0]), 0.5);
    assert_eq!(tr.gradient(&[0.5, 0.3, 1.0]), vec![1.0, 0.0, 0.0]);
    // beyond twice the height it is the constant 3E
    assert_eq!(tr.value(&[1.0, 2.0, 3.0]), 6.0);
    assert!(tr.gradient(&[1.0, 2.0, 3.0]).iter().all(|&g| g == 0.0));
    assert!(Truncator::new(0.0f64, 0).is_err());
    assert!(Truncator::new(f64::INFINITY, 0).is_err());
}

#[test]
fn truncation_suite_passes() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let r = truncation_property_suite::<f64, _>(3, &[0.5, 1.0, 10.0, 1e3], &[1e2, 1e4, 1e6], 2000, &mut rng).unwrap();
    assert!(r.passed, "{:?}", r.properties);
    assert!(r.k1_observed <= r.k1_bound && r.k2_observed <= r.k2_bound);
    assert!(*r.c4_errors.last().unwrap() < 1e-12 && r.c4_errors.windows(2).all(|w| w[1] <= w[0]));
    assert!(r.c7_sups.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn renorm_residual_at_equilibrium_is_round_off() {
    let (_, traj) = run(&short("equilibrium", 0.02), 1);
    let res = renorm_residual(&traj, &[0.5, 2.0, 10.0], &TestProfile::new(0.02)).unwrap();
    for r in res {
        assert!(r.residual < 1e-12, "{r:?}");
    }
}

#[test]
fn renorm_residual_needs_every_step() {
    let (_, traj) = run(&short("heat-only", 0.01), 5);
    assert!(matches!(renorm_residual(&traj, &[1.0], &TestProfile::new(0.01)), Err(DiagnosticsError::Sparse { stride: 5 })));
}

#[test]
fn test_profile_vanishes_at_the_horizon() {
    let psi = TestProfile::new(2.0);
    assert_eq!(psi.value(2.0, [0.3, 0.7], 2), 0.0);
    assert!((psi.value(0.0, [0.0, 0.0], 2) - 1.0).abs() < 1e-15);
    assert!((psi.value(1.0, [0.0, 0.0], 1) - 0.25).abs() < 1e-15);
}

proptest! {
    #[test]
    fn truncator_derivatives_match_differences(z in prop::collection::vec(0.05..3.0f64, 3), e in 0.5..2.0f64, i in 0..2usize) {
        let tr = Truncator::new(e, i).unwrap();
        let g = tr.gradient(&z);
        let h = tr.hessian(&z);
        for j in 0..3 {
            let step = 1e-6;
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[j] += step;
            zm[j] -= step;
            let fd = (tr.value(&zp) - tr.value(&zm)) / (2.0 * step);
            prop_assert!((fd - g[j]).abs() < 1e-6 * (1.0 + g[j].abs()));
            let gp = tr.gradient(&zp);
            let gm = tr.gradient(&zm);
            for k in 0..3 {
                let fd2 = (gp[k] - gm[k]) / (2.0 * step);
                prop_assert!((fd2 - h[(k, j)]).abs() < 1e-4 * (1.0 + h[(k, j)].abs() / e), "{} vs {}", fd2, h[(k, j)]);
            }
        }
    }
}
