//! Sampled verification of the structural hypotheses on σ̂₀, w, π₁ and the
//! reaction network, plus the pointwise identities the scheme relies on.
//!
//! Growth conditions of the form f ≲ g cannot be decided by sampling alone.
//! They are tested by saturation: the sup of f/g over a box 10^±4 is compared
//! with the sup over 10^±6, and the bound is accepted when enlarging the box
//! changes the sup by at most 10%.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::kinetics::{GrowthReport, ReactionNetwork};
use crate::linalg::DenseMatrix;
use crate::onsager::{MobilityModel, OnsagerError, Regime, SampleDomain, SolutionConcept};
use crate::scalar::Real;
use crate::thermo::{EntropyModel, EquilibriumFamily};

const INNER: i32 = 4;
const OUTER: i32 = 6;
const SATURATION_SLACK: f64 = 1.1;
const GRID_POINTS: usize = 241;
const RANDOM_POINTS: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl HypothesisCheck {
    fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

/// sup over the two boxes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Saturation {
    pub inner: f64,
    pub outer: f64,
}

impl Saturation {
    pub fn bounded(&self) -> bool {
        self.outer.is_finite() && self.outer <= SATURATION_SLACK * self.inner.max(f64::MIN_POSITIVE)
    }
}

impl std::fmt::Display for Saturation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "sup {:.4e} on 10^±{INNER}, {:.4e} on 10^±{OUTER}", self.inner, self.outer)
    }
}

/// Which part of the u-axis a quantity is probed on.
#[derive(Debug, Clone, Copy, PartialEq)]
enum URange {
    Full,
    /// (0, 1]: local conditions near u = 0.
    Small,
}

struct Sampler {
    species: usize,
    seed: u64,
}

impl Sampler {
    fn points(&self, k: i32, range: URange) -> Vec<(Vec<f64>, f64)> {
        let lo = 10f64.powi(-k);
        let hi = match range {
            URange::Full => 10f64.powi(k),
            URange::Small => 1.0,
        };
        let corners = [lo, 1.0, 10f64.powi(k)];
        let ncorner = 3usize.pow(self.species as u32);
        let mut pts = Vec::with_capacity(GRID_POINTS * ncorner + RANDOM_POINTS);
        for j in 0..GRID_POINTS {
            let s = j as f64 / (GRID_POINTS - 1) as f64;
            let u = (lo.ln() + s * (hi.ln() - lo.ln())).exp();
            for mut idx in 0..ncorner {
                let c = (0..self.species)
                    .map(|_| {
                        let v = corners[idx % 3];
                        idx /= 3;
                        v
                    })
                    .collect();
                pts.push((c, u));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ k as u64);
        let domain = SampleDomain { c_range: (lo, 10f64.powi(k)), u_range: (lo, hi) };
        for _ in 0..RANDOM_POINTS {
            pts.push(domain.state::<f64, _>(self.species, &mut rng));
        }
        pts
    }

    fn saturation(&self, range: URange, f: impl Fn(&[f64], f64) -> f64) -> Saturation {
        let sup = |k| {
            self.points(k, range)
                .iter()
                .map(|(c, u)| f(c, *u))
                .fold(0.0f64, |m, v| if v.is_nan() { f64::INFINITY } else { m.max(v) })
        };
        Saturation { inner: sup(INNER), outer: sup(OUTER) }
    }
}

/// 0/0 counts as 0; x/0 with x > 0 as +∞.
fn ratio(num: f64, den: f64) -> f64 {
    if num <= 0.0 {
        0.0
    } else if den <= 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

/// Verifies (B1)–(B6) and the regime conditions for `model` and `mobility`.
pub fn structural_hypotheses<T: Real>(
    model: &EntropyModel<T>,
    mobility: &MobilityModel<T>,
    concept: SolutionConcept,
    seed: u64,
) -> Vec<HypothesisCheck> {
    let model: EntropyModel<f64> = model.cast();
    let mob: MobilityModel<f64> = mobility.cast();
    let ns = model.species();
    let sampler = Sampler { species: ns, seed };
    let sigma = *model.sigma();
    let ws: Vec<EquilibriumFamily<f64>> = model.equilibria().to_vec();
    let mut out = Vec::new();

    // B1, B4 from the family parameters, cross-checked on the u-grid.
    let b1 = sigma.validate().is_ok()
        && sampler.points(OUTER, URange::Full).iter().all(|&(_, u)| sigma.d1(u) > 0.0 && sigma.d2(u) < 0.0);
    out.push(HypothesisCheck::new("B1", b1, format!("{sigma:?}: sigma' > 0 and sigma'' < 0 on the sample grid")));
    let (d1_lo, d1_hi) = (sigma.d1(1e-12), sigma.d1(1e12));
    let b4 = sigma.validate().is_ok() && d1_lo > 1e3 && d1_hi < 1e-3;
    out.push(HypothesisCheck::new("B4", b4, format!("sigma'(1e-12) = {d1_lo:.3e}, sigma'(1e12) = {d1_hi:.3e}")));

    for (i, w) in ws.iter().enumerate() {
        let grid = sampler.points(OUTER, URange::Full);
        let ok = w.validate().is_ok() && w.at_zero() > 0.0 && grid.iter().all(|&(_, u)| w.d1(u) >= 0.0 && w.d2(u) <= 0.0);
        out.push(HypothesisCheck::new(
            &format!("B2[{i}]"),
            ok,
            format!("w(0) = {:.4e}; w' >= 0 and w'' <= 0 on the sample grid", w.at_zero()),
        ));
    }

    let bc = model.bound_constants();
    for (i, w) in ws.iter().enumerate() {
        let s = sampler.saturation(URange::Full, |_, u| w.value(u) / (1.0 + u).powf(bc.beta));
        out.push(HypothesisCheck::new(&format!("B5[{i}]"), s.bounded(), format!("w/(1+u)^{:.3}: {s}", bc.beta)));
    }

    for (i, w) in ws.iter().enumerate() {
        let s = sampler.saturation(URange::Small, |c, u| mob.pi1(&model, c, u).sqrt() * w.d1(u));
        out.push(HypothesisCheck::new(&format!("B3[{i}]"), s.bounded(), format!("sqrt(pi1) w' near u = 0: {s}")));
    }

    let s = sampler.saturation(URange::Full, |c, u| mob.pi1(&model, c, u).sqrt() / (1.0 + u));
    out.push(HypothesisCheck::new("B6", s.bounded(), format!("sqrt(pi1)/(1+u): {s}")));

    let pi_gamma = |c: &[f64], u: f64| mob.pi1(&model, c, u) * model.gamma0_unchecked(c, u);
    match mob.regime() {
        Regime::H => {
            let s = sampler.saturation(URange::Full, |c, u| 1.0 / pi_gamma(c, u));
            out.push(HypothesisCheck::new("H1", s.bounded(), format!("1/(pi1 gamma): {s}")));
            for (i, w) in ws.iter().enumerate() {
                let s = sampler.saturation(URange::Full, |c, u| ratio(w.d1(u), -w.d2(u) * mob.pi1(&model, c, u).sqrt()));
                out.push(HypothesisCheck::new(&format!("H2[{i}]"), s.bounded(), format!("w'/(-w'' sqrt(pi1)): {s}")));
            }
            for (i, w) in ws.iter().enumerate() {
                let s = sampler.saturation(URange::Full, |c, u| mob.pi1(&model, c, u).sqrt() * w.d1(u) / w.value(u));
                out.push(HypothesisCheck::new(&format!("H3[{i}]"), s.bounded(), format!("sqrt(pi1) w'/w: {s}")));
            }
            let (ok, rule) = match concept {
                SolutionConcept::Weak => (mob.kappa1().iter().all(|&k| k > 0.0), "kappa1 > 0 for weak solutions"),
                SolutionConcept::Renormalised => (
                    mob.kappa1().iter().all(|&k| k == 0.0) && mob.kappa0().iter().all(|&k| k > 0.0),
                    "kappa1 = 0, kappa0 > 0 for renormalised solutions",
                ),
            };
            out.push(HypothesisCheck::new(
                "kappa",
                ok,
                format!("kappa0 = {:?}, kappa1 = {:?} ({rule})", mob.kappa0(), mob.kappa1()),
            ));
        }
        Regime::HPrime => {
            let up = sampler.saturation(URange::Full, pi_gamma);
            let down = sampler.saturation(URange::Full, |c, u| 1.0 / pi_gamma(c, u));
            out.push(HypothesisCheck::new(
                "H1'",
                up.bounded() && down.bounded(),
                format!("pi1 gamma: {up}; 1/(pi1 gamma): {down}"),
            ));
            for (i, w) in ws.iter().enumerate() {
                let s = sampler.saturation(URange::Full, |_, u| ratio(w.d1(u) * w.d1(u), -w.d2(u) * w.value(u)));
                out.push(HypothesisCheck::new(&format!("H2'[{i}]"), s.bounded(), format!("(w')^2/(-w'' w): {s}")));
            }
            let ok = mob.kappa1().iter().all(|&k| k == 0.0) && mob.kappa0().iter().all(|&k| k > 0.0);
            out.push(HypothesisCheck::new(
                "kappa",
                ok,
                format!("kappa0 = {:?}, kappa1 = {:?} (kappa1 = 0, kappa0 > 0 under H')", mob.kappa0(), mob.kappa1()),
            ));
        }
    }
    out
}

/// Worst deviations of the pointwise identities over random admissible states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityReport {
    pub samples: usize,
    /// max |A + 𝕄 D²S_δ| entrywise, relative to max(1, max |𝕄 D²S_δ|).
    pub a_identity: f64,
    /// max |𝕄 − 𝕄ᵀ|.
    pub asymmetry: f64,
    /// Smallest shift s ≥ 0 tried such that 𝕄 + s·I admits a Cholesky factor.
    pub psd_shift: f64,
}

pub fn identity_report<T: Real, R: Rng>(
    model: &EntropyModel<T>,
    mobility: &MobilityModel<T>,
    samples: usize,
    domain: &SampleDomain,
    rng: &mut R,
) -> Result<IdentityReport, OnsagerError> {
    let n = model.species();
    let mut a_identity = 0.0f64;
    let mut asymmetry = 0.0f64;
    let mut psd_shift = 0.0f64;
    for _ in 0..samples {
        let (c, u) = domain.state::<T, _>(n, rng);
        let m = mobility.mobility_matrix(model, &c, u)?;
        let a = mobility.diffusion_matrix(model, &c, u)?;
        let h = model.entropy_hessian(&c, u)?;
        let ma = m.matmul(&h).scaled(-T::one());
        let scale = (0..ma.rows()).flat_map(|i| ma.row(i).iter().map(|x| x.as_f64().abs())).fold(1.0, f64::max);
        a_identity = a_identity.max(a.max_abs_diff(&ma).as_f64() / scale);
        asymmetry = asymmetry.max(m.max_abs_diff(&m.transpose()).as_f64());
        let mut shift = 0.0;
        while shift <= 1.0 {
            let shifted = add_diagonal(&m, T::lit(shift));
            if shifted.cholesky().is_ok() {
                break;
            }
            shift = if shift == 0.0 { 1e-14 } else { shift * 10.0 };
        }
        psd_shift = psd_shift.max(shift);
    }
    Ok(IdentityReport { samples, a_identity, asymmetry, psd_shift })
}

fn add_diagonal<T: Real>(m: &DenseMatrix<T>, s: T) -> DenseMatrix<T> {
    let rows: Vec<Vec<T>> =
        (0..m.rows()).map(|i| m.row(i).iter().enumerate().map(|(j, &v)| if i == j { v + s } else { v }).collect()).collect();
    DenseMatrix::from_rows(&rows)
}

/// Minimum of the reaction entropy production over random states, and its
/// largest magnitude at c = w(u).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReactionProductionReport {
    pub samples: usize,
    pub min_production: f64,
    pub max_at_equilibrium: f64,
}

pub fn reaction_production_report<T: Real, R: Rng>(
    model: &EntropyModel<T>,
    network: &ReactionNetwork<T>,
    samples: usize,
    domain: &SampleDomain,
    rng: &mut R,
) -> Result<ReactionProductionReport, crate::kinetics::KineticsError> {
    let n = model.species();
    let mut min_production = f64::INFINITY;
    let mut max_at_equilibrium = 0.0f64;
    for _ in 0..samples {
        let (c, u) = domain.state::<T, _>(n, rng);
        min_production = min_production.min(network.reaction_entropy_production(model, &c, u)?.as_f64());
        let w = model.equilibrium(u);
        max_at_equilibrium = max_at_equilibrium.max(network.reaction_entropy_production(model, &w, u)?.as_f64().abs());
    }
    if samples == 0 {
        min_production = 0.0;
    }
    Ok(ReactionProductionReport { samples, min_production, max_at_equilibrium })
}

/// Everything the `check` command verifies for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub hypotheses: Vec<HypothesisCheck>,
    pub coercivity_margin: Option<f64>,
    pub coercivity_error: Option<String>,
    pub identities: IdentityReport,
    pub reaction_production: ReactionProductionReport,
    pub growth: GrowthReport,
    pub passed: bool,
}

impl CheckReport {
    pub fn failures(&self) -> Vec<String> {
        let mut f: Vec<String> =
            self.hypotheses.iter().filter(|h| !h.passed).map(|h| format!("{}: {}", h.name, h.detail)).collect();
        if let Some(e) = &self.coercivity_error {
            f.push(format!("coercivity: {e}"));
        } else if !self.coercivity_margin.is_some_and(|m| m > 0.0) {
            f.push(format!("coercivity: margin {:?} not positive", self.coercivity_margin));
        }
        if !identities_pass(&self.identities) {
            f.push(format!("identities: {:?}", self.identities));
        }
        if !(self.reaction_production.min_production >= -1e-12 && self.reaction_production.max_at_equilibrium <= 1e-12) {
            f.push(format!("reaction production: {:?}", self.reaction_production));
        }
        if !self.growth.passes {
            f.push(format!("growth: reactions {:?} reach the threshold {:?}", self.growth.violations, self.growth.threshold));
        }
        f
    }
}

fn identities_pass(r: &IdentityReport) -> bool {
    r.a_identity <= 1e-10 && r.asymmetry == 0.0 && r.psd_shift <= 1e-12
}

/// Runs every check with `samples` random points (coercivity uses 10×).
pub fn check_models<T: Real>(
    model: &EntropyModel<T>,
    mobility: &MobilityModel<T>,
    network: &ReactionNetwork<T>,
    concept: SolutionConcept,
    dim: usize,
    samples: usize,
    seed: u64,
) -> Result<CheckReport, crate::kinetics::KineticsError> {
    let hypotheses = structural_hypotheses(model, mobility, concept, seed);
    let domain = SampleDomain::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (coercivity_margin, coercivity_error) = match mobility.coercivity_margin(model, samples * 10, &domain, &mut rng) {
        Ok(m) => (Some(m.as_f64()), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let identities = identity_report(model, mobility, samples, &domain, &mut rng).map_err(|e| match e {
        OnsagerError::Thermo(t) => crate::kinetics::KineticsError::Thermo(t),
        other => crate::kinetics::KineticsError::Invalid { index: 0, message: other.to_string() },
    })?;
    let reaction_production = reaction_production_report(model, network, samples, &domain, &mut rng)?;
    let growth = network.validate_growth(mobility.regime(), concept, dim);
    let mut report =
        CheckReport { hypotheses, coercivity_margin, coercivity_error, identities, reaction_production, growth, passed: false };
    report.passed = report.failures().is_empty();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::onsager::Pi1Preset;
    use crate::thermo::SigmaFamily;

    fn names_failing(checks: &[HypothesisCheck]) -> Vec<String> {
        checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect()
    }

    #[test]
    fn sqrt_equilibrium_with_u_squared_coupling_satisfies_h() {
        let m = EntropyModel::new(
            SigmaFamily::Log { b: 1.0 },
            vec![EquilibriumFamily::PowerLaw { b0: 1.0, b1: 1.0, beta: 0.5 }],
            0.0,
        )
        .unwrap();
        let mob = MobilityModel::new(vec![1.0], vec![1.0], Pi1Preset::USquared { p0: 1.0 }, Regime::H, 0.0).unwrap();
        let checks = structural_hypotheses(&m, &mob, SolutionConcept::Weak, 3);
        assert!(names_failing(&checks).is_empty(), "{checks:#?}");
    }

    #[test]
    fn power_law_equilibrium_breaks_h3_under_shifted_coupling() {
        // sqrt(pi1) w'/w ~ u^{beta-1} as u -> 0 when pi1 does not vanish at 0
        let m = EntropyModel::new(
            SigmaFamily::Log { b: 1.0 },
            vec![EquilibriumFamily::PowerLaw { b0: 1.0, b1: 1.0, beta: 0.5 }],
            0.0,
        )
        .unwrap();
        let mob = MobilityModel::new(vec![1.0], vec![1.0], Pi1Preset::OnePlusUSquared { p0: 1.0 }, Regime::H, 0.0).unwrap();
        let failing = names_failing(&structural_hypotheses(&m, &mob, SolutionConcept::Weak, 3));
        assert!(failing.contains(&"H3[0]".to_string()), "{failing:?}");
    }

    #[test]
    fn saturation_separates_bounded_from_growing() {
        let s = Sampler { species: 1, seed: 0 };
        assert!(s.saturation(URange::Full, |_, u| u / (1.0 + u)).bounded());
        assert!(!s.saturation(URange::Full, |_, u| u.ln().abs()).bounded());
        assert!(!s.saturation(URange::Full, |_, u| u.sqrt()).bounded());
    }
}
