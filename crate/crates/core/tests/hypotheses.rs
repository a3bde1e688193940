use erds::hypotheses::{check_models, structural_hypotheses};
use erds::kinetics::{RateLaw, Reaction, ReactionNetwork};
use erds::onsager::{MobilityModel, Pi1Preset, Regime, SolutionConcept};
use erds::presets;
use erds::thermo::{EntropyModel, EquilibriumFamily, SigmaFamily};

#[test]
fn every_preset_passes_the_full_check() {
    for cfg in presets::all() {
        let sc = cfg.build::<f64>().unwrap();
        let m = &sc.models;
        let r = check_models(&m.entropy, &m.mobility, &m.reactions, sc.concept, sc.grid.dim(), 200, cfg.seed).unwrap();
        assert!(r.passed, "{}: {:?}", cfg.name, r.failures());
        let margin = r.coercivity_margin.unwrap();
        assert!(margin > 0.0 && margin <= 1.0);
    }
}

#[test]
fn power_law_equilibrium_fails_h3_with_nonvanishing_coupling() {
    let m =
        EntropyModel::new(SigmaFamily::Log { b: 1.0 }, vec![EquilibriumFamily::PowerLaw { b0: 1.0, b1: 1.0, beta: 0.5 }], 0.0)
            .unwrap();
    let mob = MobilityModel::new(vec![1.0], vec![1.0], Pi1Preset::OnePlusUSquared { p0: 1.0 }, Regime::H, 0.0).unwrap();
    let checks = structural_hypotheses(&m, &mob, SolutionConcept::Weak, 5);
    assert!(checks.iter().any(|c| c.name == "H3[0]" && !c.passed));
    let net = ReactionNetwork::new(vec![], 0.0, 1).unwrap();
    let r = check_models(&m, &mob, &net, SolutionConcept::Weak, 1, 100, 5).unwrap();
    assert!(!r.passed);
    assert!(r.failures().iter().any(|f| f.starts_with("H3[0]")));
}

#[test]
fn superlinear_reactions_fail_the_growth_check() {
    let mut cfg = presets::load("two-species-soret").unwrap().unwrap();
    cfg.reactions = vec![];
    let sc = cfg.build::<f64>().unwrap();
    let m = &sc.models;
    let fast = Reaction { alpha: vec![2, 0], beta: vec![0, 1], rate: RateLaw { k: 1.0, activation: 0.0, c_powers: vec![3, 0] } };
    let net = ReactionNetwork::new(vec![fast], 0.0, 2).unwrap();
    let r = check_models(&m.entropy, &m.mobility, &net, SolutionConcept::Weak, 1, 100, 1).unwrap();
    assert!(!r.passed && !r.growth.passes);
    assert!(r.failures().iter().any(|f| f.starts_with("growth")));
    let ok = check_models(&m.entropy, &m.mobility, &net, SolutionConcept::Renormalised, 1, 100, 1).unwrap();
    assert!(ok.growth.passes);
}
