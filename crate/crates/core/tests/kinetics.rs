use approx::assert_abs_diff_eq;
use erds::equilibrium::conserved_directions;
use erds::kinetics::{RateLaw, Reaction, ReactionNetwork};
use erds::onsager::{Regime, SolutionConcept};
use erds::thermo::{EntropyModel, EquilibriumFamily, SigmaFamily};
use proptest::prelude::*;

fn model() -> EntropyModel<f64> {
    EntropyModel::new(
        SigmaFamily::Log { b: 1.0 },
        vec![
            EquilibriumFamily::ShiftedPower { b0: 1.0, b1: 1.0, beta: 0.5 },
            EquilibriumFamily::PowerLaw { b0: 0.5, b1: 2.0, beta: 0.3 },
            EquilibriumFamily::constant(2.0),
        ],
        1e-2,
    )
    .unwrap()
}

fn network(rho: f64) -> ReactionNetwork<f64> {
    let r1 = Reaction { alpha: vec![1, 0, 0], beta: vec![0, 1, 0], rate: RateLaw { k: 1.5, activation: 0.5, c_powers: vec![] } };
    let r2 = Reaction {
        alpha: vec![2, 0, 0],
        beta: vec![0, 0, 1],
        rate: RateLaw { k: 0.7, activation: 1.0, c_powers: vec![0, 1, 0] },
    };
    let r3 = Reaction { alpha: vec![0, 1, 1], beta: vec![1, 0, 2], rate: RateLaw::constant(0.3) };
    ReactionNetwork::new(vec![r1, r2, r3], rho, 3).unwrap()
}

fn state() -> impl Strategy<Value = (Vec<f64>, f64)> {
    let p = |lo: f64, hi: f64| (lo..hi).prop_map(|e: f64| 10f64.powf(e));
    (p(-2.0, 1.0), p(-2.0, 1.0), p(-2.0, 1.0), p(-1.5, 1.5)).prop_map(|(a, b, c, u)| (vec![a, b, c], u))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn isomerization_example_by_hand() {
    // c/w = (3, 1), k = 2: rate 2·(3 − 1) = 4 towards the second species
    let m = EntropyModel::new(SigmaFamily::Log { b: 1.0 }, vec![EquilibriumFamily::constant(1.0); 2], 0.0).unwrap();
    let r = Reaction { alpha: vec![1, 0], beta: vec![0, 1], rate: RateLaw::constant(2.0) };
    let net = ReactionNetwork::new(vec![r], 0.0, 2).unwrap();
    assert_eq!(net.mass_action_rate(&m, &[3.0, 1.0], 0.5).unwrap(), vec![-4.0, 4.0]);
    assert_abs_diff_eq!(net.reaction_entropy_production(&m, &[3.0, 1.0], 0.5).unwrap(), 4.0 * 3f64.ln(), epsilon = 1e-14);
}

#[test]
fn regularized_rate_is_bounded_by_inverse_rho() {
    let net = ReactionNetwork::<f64> { reactions: vec![], rho: 1.0 };
    let r = net.regularize_rates(&[3.0, 0.0]);
    assert_abs_diff_eq!(r[0], 0.75);
    let net = ReactionNetwork::<f64> { reactions: vec![], rho: 0.1 };
    for s in [1e-3, 1.0, 1e3, 1e9] {
        let r = net.regularize_rates(&[s, -2.0 * s]);
        assert!(erds::linalg::norm2(&r) < 10.0);
    }
}

#[test]
fn rate_law_value_includes_arrhenius_and_monomial() {
    let law = RateLaw { k: 2.0, activation: 3.0, c_powers: vec![2, 1] };
    let v = law.value(&[1.5, 4.0], 2.0);
    assert_abs_diff_eq!(v, 2.0 * (-1.0f64).exp() * 2.25 * 4.0, epsilon = 1e-14);
    assert_eq!(law.degree(), 3);
}

#[test]
fn growth_thresholds_per_dimension() {
    let quad = Reaction { alpha: vec![2, 0], beta: vec![0, 1], rate: RateLaw::constant(1.0) };
    let net = ReactionNetwork::new(vec![quad], 0.0, 2).unwrap();
    assert!(net.validate_growth(Regime::H, SolutionConcept::Weak, 2).passes);
    assert!(net.validate_growth(Regime::H, SolutionConcept::Weak, 3).passes);
    let r = net.validate_growth(Regime::HPrime, SolutionConcept::Weak, 3);
    assert!(!r.passes);
    assert_eq!(r.threshold, Some(1.0 + 2.0 / 3.0));
    let r = net.validate_growth(Regime::HPrime, SolutionConcept::Renormalised, 3);
    assert!(r.passes && r.threshold.is_none());
    // degree 4 = 2 + 2/1 sits exactly on the H bound in one dimension and fails
    let quartic =
        Reaction { alpha: vec![2, 0], beta: vec![0, 1], rate: RateLaw { k: 1.0, activation: 0.0, c_powers: vec![2, 0] } };
    let net = ReactionNetwork::new(vec![quartic], 0.0, 2).unwrap();
    assert!(!net.validate_growth(Regime::H, SolutionConcept::Weak, 1).passes);
}

#[test]
fn reactions_round_trip_through_toml() {
    #[derive(serde::Serialize, serde::Deserialize, PartialEq, Debug)]
    struct Wrap {
        reactions: Vec<Reaction<f64>>,
    }
    let w = Wrap { reactions: network(0.0).reactions };
    let text = toml::to_string(&w).unwrap();
    assert_eq!(toml::from_str::<Wrap>(&text).unwrap(), w);
}

#[test]
fn detailed_balance_zeroes_every_rate() {
    let m = model();
    let net = network(0.0);
    for u in [0.1, 1.0, 7.0] {
        let c = m.equilibrium(u);
        let r = net.mass_action_rate(&m, &c, u).unwrap();
        assert!(r.iter().all(|x| x.abs() < 1e-14), "{r:?}");
        assert_eq!(net.reaction_entropy_production(&m, &c, u).unwrap(), 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn production_is_nonnegative_and_equals_species_gradient_pairing((c, u) in state()) {
        let m = model();
        let net = network(0.0);
        let r = net.mass_action_rate(&m, &c, u).unwrap();
        let ds = m.entropy_gradient(&c, u).unwrap();
        let p = net.reaction_entropy_production(&m, &c, u).unwrap();
        prop_assert!(p >= 0.0);
        let pairing = dot(&ds[..3], &r);
        prop_assert!((pairing - p).abs() <= 1e-10 * (1.0 + p.abs()), "{} vs {}", pairing, p);
    }

    #[test]
    fn rates_preserve_conserved_combinations((c, u) in state(), rho in prop::sample::select(vec![0.0, 0.1, 10.0])) {
        let m = model();
        let net = network(rho);
        let r = net.regularized_rate(&m, &c, u).unwrap();
        for q in conserved_directions(&net, 3) {
            prop_assert!(dot(&q, &r).abs() <= 1e-12 * (1.0 + erds::linalg::norm2(&r)));
        }
    }

    #[test]
    fn jacobians_match_finite_differences((c, u) in state(), rho in prop::sample::select(vec![0.0, 0.5])) {
        let m = model();
        let net = network(rho);
        let jac = net.regularized_jacobian(&m, &c, u).unwrap();
        let z: Vec<f64> = c.iter().copied().chain([u]).collect();
        for j in 0..4 {
            let h = 1e-6 * z[j];
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[j] += h;
            zm[j] -= h;
            let rp = net.regularized_rate(&m, &zp[..3], zp[3]).unwrap();
            let rm = net.regularized_rate(&m, &zm[..3], zm[3]).unwrap();
            for i in 0..3 {
                let fd = (rp[i] - rm[i]) / (2.0 * h);
                prop_assert!((fd - jac[(i, j)]).abs() <= 1e-5 * (1.0 + jac[(i, j)].abs()), "({},{}) {} vs {}", i, j, fd, jac[(i, j)]);
            }
        }
    }

    #[test]
    fn regularization_preserves_direction(r in prop::collection::vec(-1e3..1e3f64, 3), rho in 0.0..10.0f64) {
        let net = ReactionNetwork::<f64> { reactions: vec![], rho };
        let s = net.regularize_rates(&r);
        let n = erds::linalg::norm2(&r);
        for i in 0..3 {
            prop_assert!((s[i] - r[i] / (rho * n + 1.0)).abs() <= 1e-12 * (1.0 + r[i].abs()));
            prop_assert!(s[i] * r[i] >= 0.0);
        }
    }
}
