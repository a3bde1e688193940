use approx::assert_abs_diff_eq;
use erds::grid::Grid;
use erds::linalg::DenseMatrix;
use erds::onsager::{flux, flux_bound_report, MobilityModel, OnsagerError, Pi1Preset, Regime, SampleDomain};
use erds::thermo::{EntropyModel, EquilibriumFamily, SigmaFamily};
use erds::StateField;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn entropy(delta: f64) -> EntropyModel<f64> {
    EntropyModel::new(
        SigmaFamily::Log { b: 1.0 },
        vec![
            EquilibriumFamily::ShiftedPower { b0: 1.0, b1: 1.0, beta: 0.5 },
            EquilibriumFamily::PowerLaw { b0: 0.5, b1: 2.0, beta: 0.3 },
        ],
        delta,
    )
    .unwrap()
}

fn mob_h(delta: f64) -> MobilityModel<f64> {
    MobilityModel::new(vec![1.0, 0.5], vec![0.1, 0.2], Pi1Preset::OnePlusUSquared { p0: 0.5 }, Regime::H, delta).unwrap()
}

fn mob_hp(delta: f64) -> MobilityModel<f64> {
    MobilityModel::new(vec![1.0, 0.5], vec![0.0, 0.0], Pi1Preset::InverseGamma { p0: 1.0 }, Regime::HPrime, delta).unwrap()
}

fn state() -> impl Strategy<Value = (Vec<f64>, f64)> {
    let p = |lo: f64, hi: f64| (lo..hi).prop_map(|e: f64| 10f64.powf(e));
    (p(-3.0, 2.0), p(-3.0, 2.0), p(-2.0, 2.0)).prop_map(|(a, b, u)| (vec![a, b], u))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

/// 𝕄 assembled entry by entry from its definition.
fn mobility_oracle(e: &EntropyModel<f64>, m: &MobilityModel<f64>, c: &[f64], u: f64) -> DenseMatrix<f64> {
    let w = e.equilibrium(u);
    let dw = e.equilibrium_d1(u);
    let mu = [c[0] * dw[0] / w[0], c[1] * dw[1] / w[1], 1.0];
    let pi = m.pi1_delta(e, c, u);
    let a = m.a(c);
    let mut out = DenseMatrix::zeros(3, 3);
    for i in 0..3 {
        for j in 0..3 {
            out[(i, j)] = pi * mu[i] * mu[j] + if i == j && i < 2 { c[i] * a[i] } else { 0.0 };
        }
    }
    out
}

#[test]
fn pi1_delta_modifications() {
    let e = entropy(0.2);
    let (c, u) = ([1.0, 2.0], 3.0);
    assert_abs_diff_eq!(mob_h(0.2).pi1_delta(&e, &c, u), 0.5 * 16.0 + 0.2 * 9.0, epsilon = 1e-13);
    let g0 = e.gamma0(&c, u).unwrap();
    let expected = (1.0 / g0) * g0 / (g0 + 0.2 / u);
    assert_abs_diff_eq!(mob_hp(0.2).pi1_delta(&e, &c, u), expected, epsilon = 1e-14);
}

#[test]
fn mismatched_species_count_is_rejected() {
    let e = EntropyModel::new(SigmaFamily::Log { b: 1.0 }, vec![EquilibriumFamily::constant(1.0)], 0.0).unwrap();
    assert!(mob_h(0.0).mobility_matrix(&e, &[1.0], 1.0).is_err());
}

#[test]
fn invalid_kappa_is_rejected() {
    let r = MobilityModel::new(vec![-1.0], vec![0.0], Pi1Preset::InverseGamma { p0: 1.0 }, Regime::HPrime, 0.0);
    assert!(matches!(r, Err(OnsagerError::Parameter { .. })));
}

#[test]
fn coercivity_margins_lie_in_the_unit_interval() {
    let domain = SampleDomain::default();
    for (m, delta) in [(mob_h(0.0), 0.0), (mob_h(1e-2), 1e-2), (mob_hp(0.0), 0.0), (mob_hp(1e-2), 1e-2)] {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let eps = m.coercivity_margin(&entropy(delta), 5000, &domain, &mut rng).unwrap();
        assert!(eps > 0.0 && eps <= 1.0 + 1e-12, "{eps}");
    }
}

#[test]
fn uniform_state_has_zero_flux() {
    let e = entropy(1e-3);
    let grid = Grid::new(2, 5).unwrap();
    let z = StateField::from_fn(grid, 3, |_| vec![0.7, 1.1, 2.0]).unwrap();
    let fl = flux(&mob_h(1e-3), &e, &z, &z.gradients()).unwrap();
    assert!(fl.magnitudes().iter().all(|&x| x == 0.0));
    assert_eq!(flux_bound_report(&mob_h(1e-3), &e, &z, &z.gradients()).unwrap(), None);
}

#[test]
fn face_flux_matches_hand_assembly() {
    let e = entropy(1e-3);
    let m = mob_h(1e-3);
    let grid = Grid::new(1, 4).unwrap();
    let z = StateField::from_fn(grid.clone(), 3, |p| {
        let x = (p as f64 + 0.5) / 4.0;
        vec![1.0 + x, 2.0 - x * x, 0.5 + 3.0 * x]
    })
    .unwrap();
    let fl = flux(&m, &e, &z, &z.gradients()).unwrap();
    for &fi in grid.interior_faces() {
        let (l, r) = grid.faces()[fi].cells.unwrap();
        let zf: Vec<f64> = (0..3).map(|a| 0.5 * (z.cell(l)[a] + z.cell(r)[a])).collect();
        let g: Vec<f64> = (0..3).map(|a| 4.0 * (z.cell(r)[a] - z.cell(l)[a])).collect();
        let h = e.entropy_hessian(&zf[..2], zf[2]).unwrap();
        let a = mobility_oracle(&e, &m, &zf[..2], zf[2]).matmul(&h).scaled(-1.0);
        let expected = a.mul_vec(&g);
        for k in 0..3 {
            assert!(rel(fl.face(fi)[k], expected[k]) < 1e-12);
        }
    }
    // boundary faces carry nothing
    let boundary = (0..grid.face_count()).filter(|f| grid.faces()[*f].cells.is_none());
    for f in boundary {
        assert!(fl.face(f).iter().all(|&x| x == 0.0));
    }
}

#[test]
fn flux_control_ratio_is_finite_on_a_smooth_profile() {
    let e = entropy(1e-3);
    let grid = Grid::new(1, 32).unwrap();
    for m in [mob_h(1e-3), mob_hp(1e-3)] {
        let z = StateField::from_fn(grid.clone(), 3, |p| {
            let x = (p as f64 + 0.5) / 32.0;
            vec![1.0 + 0.5 * (6.0 * x).cos(), 0.8 + 0.3 * x, 1.0 + 0.5 * (3.0 * x).sin()]
        })
        .unwrap();
        let stats = flux_bound_report(&m, &e, &z, &z.gradients()).unwrap().unwrap();
        assert_eq!(stats.count, 31);
        assert!(stats.sup.is_finite() && stats.sup > 0.0 && stats.mean <= stats.sup);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn mobility_is_symmetric_psd_and_matches_definition((c, u) in state(), delta in prop::sample::select(vec![0.0, 1e-3, 0.5])) {
        let e = entropy(delta);
        for m in [mob_h(delta), mob_hp(delta)] {
            let mm = m.mobility_matrix(&e, &c, u).unwrap();
            prop_assert!(mm.is_symmetric());
            let oracle = mobility_oracle(&e, &m, &c, u);
            for i in 0..3 {
                for j in 0..3 {
                    prop_assert!(rel(mm[(i, j)], oracle[(i, j)]) < 1e-13);
                }
            }
            // diagonal-plus-rank-one with positive parts: strictly positive definite
            prop_assert!(mm.cholesky().is_ok());
        }
    }

    #[test]
    fn diffusion_matrix_equals_minus_mobility_times_hessian((c, u) in state(), delta in prop::sample::select(vec![0.0, 1e-3, 0.5])) {
        let e = entropy(delta);
        for m in [mob_h(delta), mob_hp(delta)] {
            let a = m.diffusion_matrix(&e, &c, u).unwrap();
            let b = mobility_oracle(&e, &m, &c, u).matmul(&e.entropy_hessian(&c, u).unwrap()).scaled(-1.0);
            let scale = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).fold(1.0f64, |s, (i, j)| s.max(b[(i, j)].abs()));
            prop_assert!(a.max_abs_diff(&b) <= 1e-10 * scale, "{:?} vs {:?}", a, b);
            // species rows decouple from one another
            prop_assert_eq!(a[(0, 1)], 0.0);
            prop_assert_eq!(a[(1, 0)], 0.0);
            prop_assert_eq!(a[(2, 0)], 0.0);
            prop_assert_eq!(a[(2, 1)], 0.0);
        }
    }

    #[test]
    fn production_form_matches_matrix_oracle((c, u) in state(), zeta in prop::collection::vec(-1.0..1.0f64, 3), delta in prop::sample::select(vec![0.0, 1e-3, 0.5])) {
        let e = entropy(delta);
        let h = e.entropy_hessian(&c, u).unwrap();
        let hz = h.mul_vec(&zeta);
        for m in [mob_h(delta), mob_hp(delta)] {
            let q = m.production_quadform(&e, &c, u, &zeta).unwrap();
            let oracle = mobility_oracle(&e, &m, &c, u).quadratic_form(&hz);
            prop_assert!(q >= 0.0);
            prop_assert!(rel(q, oracle) < 1e-9, "{} vs {}", q, oracle);
            let p = m.coercivity_form(&e, &c, u, &zeta).unwrap();
            prop_assert!(p >= 0.0);
            prop_assert!(m.p_form(&e, &c, u, &zeta).unwrap() <= p * (1.0 + 1e-15));
        }
    }
}
