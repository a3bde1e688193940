//! Mobility and diffusion matrices, entropy-production forms and flux diagnostics.
//!
//! The mobility is diagonal plus rank one,
//! 𝕄 = diag(c₁a₁, …, c_I a_I, 0) + π₁,δ μ⊗μ with μᵢ = cᵢwᵢ′/wᵢ and μ_{I+1} = 1,
//! and the diffusion matrix is A = −𝕄 D²S_δ.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::field::StateField;
use crate::grid::Grid;
use crate::linalg::DenseMatrix;
use crate::scalar::Real;
use crate::thermo::{split, EntropyModel, ThermoError};

/// Structural hypothesis set the mobility is built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// Self-diffusion present (κ₁ᵢ > 0); π₁ grows like u².
    #[serde(rename = "H")]
    H,
    /// No self-diffusion (κ₁ᵢ = 0, κ₀ᵢ > 0); π₁γ bounded above and below.
    #[serde(rename = "H'")]
    HPrime,
}

/// Which solution concept a run targets; renormalised runs drop the growth
/// restriction on reactions but require κ₁ᵢ = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolutionConcept {
    #[default]
    Weak,
    Renormalised,
}

/// Coupling coefficient π₁ of the rank-one part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Pi1Preset<T> {
    /// p₀ (1+u)²
    OnePlusUSquared { p0: T },
    /// p₀ u²
    USquared { p0: T },
    /// p₀ / γ₀(c,u)
    InverseGamma { p0: T },
}

impl<T: Real> Pi1Preset<T> {
    pub fn p0(&self) -> T {
        let (Self::OnePlusUSquared { p0 } | Self::USquared { p0 } | Self::InverseGamma { p0 }) = *self;
        p0
    }

    pub fn cast<U: Real>(&self) -> Pi1Preset<U> {
        let p0 = U::lit(self.p0().as_f64());
        match self {
            Self::OnePlusUSquared { .. } => Pi1Preset::OnePlusUSquared { p0 },
            Self::USquared { .. } => Pi1Preset::USquared { p0 },
            Self::InverseGamma { .. } => Pi1Preset::InverseGamma { p0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OnsagerError {
    #[error(transparent)]
    Thermo(#[from] ThermoError),
    #[error("mobility parameter {name}[{index}] = {value} invalid: {requirement}")]
    Parameter { name: &'static str, index: usize, value: f64, requirement: &'static str },
    #[error("negative production/coercivity ratio {ratio} at sample {sample}")]
    NegativeRatio { ratio: f64, sample: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MobilityModel<T> {
    kappa0: Vec<T>,
    kappa1: Vec<T>,
    pi1: Pi1Preset<T>,
    regime: Regime,
    delta: T,
}

impl<T: Real> MobilityModel<T> {
    /// Checks sign constraints only; regime pairings are enforced where a
    /// solution concept is chosen.
    pub fn new(kappa0: Vec<T>, kappa1: Vec<T>, pi1: Pi1Preset<T>, regime: Regime, delta: T) -> Result<Self, OnsagerError> {
        let bad =
            |name, index, value: T, requirement| OnsagerError::Parameter { name, index, value: value.as_f64(), requirement };
        if kappa0.len() != kappa1.len() {
            return Err(bad("kappa1", kappa1.len(), T::zero(), "same length as kappa0"));
        }
        for (i, (&k0, &k1)) in kappa0.iter().zip(&kappa1).enumerate() {
            if !(k0 >= T::zero()) || !k0.is_finite() {
                return Err(bad("kappa0", i, k0, ">= 0"));
            }
            if !(k1 >= T::zero()) || !k1.is_finite() {
                return Err(bad("kappa1", i, k1, ">= 0"));
            }
            if k0 + k1 == T::zero() {
                return Err(bad("kappa0", i, k0, "kappa0 + kappa1 > 0"));
            }
        }
        let p0 = pi1.p0();
        if !(p0 > T::zero()) || !p0.is_finite() {
            return Err(bad("pi1.p0", 0, p0, "> 0"));
        }
        if !(delta >= T::zero()) {
            return Err(bad("delta", 0, delta, ">= 0"));
        }
        Ok(Self { kappa0, kappa1, pi1, regime, delta })
    }

    pub fn species(&self) -> usize {
        self.kappa0.len()
    }

    pub fn kappa0(&self) -> &[T] {
        &self.kappa0
    }

    pub fn kappa1(&self) -> &[T] {
        &self.kappa1
    }

    pub fn pi1_preset(&self) -> &Pi1Preset<T> {
        &self.pi1
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn with_delta(&self, delta: T) -> Self {
        Self { delta, ..self.clone() }
    }

    /// aᵢ = κ₀ᵢ + κ₁ᵢcᵢ.
    pub fn a(&self, c: &[T]) -> Vec<T> {
        c.iter().zip(self.kappa0.iter().zip(&self.kappa1)).map(|(&ci, (&k0, &k1))| k0 + k1 * ci).collect()
    }

    /// Unmodified π₁(c,u).
    pub fn pi1(&self, model: &EntropyModel<T>, c: &[T], u: T) -> T {
        match self.pi1 {
            Pi1Preset::OnePlusUSquared { p0 } => p0 * (T::one() + u) * (T::one() + u),
            Pi1Preset::USquared { p0 } => p0 * u * u,
            Pi1Preset::InverseGamma { p0 } => p0 / model.gamma0_unchecked(c, u),
        }
    }

    /// π₁,δ: π₁ + δu² under (H), π₁γ₀/γ_δ under (H′).
    pub fn pi1_delta(&self, model: &EntropyModel<T>, c: &[T], u: T) -> T {
        let p = self.pi1(model, c, u);
        match self.regime {
            Regime::H => p + self.delta * u * u,
            Regime::HPrime => {
                let g0 = model.gamma0_unchecked(c, u);
                p * g0 / (g0 + model.delta() / u)
            }
        }
    }

    fn check(&self, model: &EntropyModel<T>, c: &[T], u: T) -> Result<(), OnsagerError> {
        if model.species() != self.species() {
            return Err(ThermoError::Length { expected: self.species(), got: model.species() }.into());
        }
        model.gamma(c, u)?;
        Ok(())
    }

    fn mu(&self, model: &EntropyModel<T>, c: &[T], u: T) -> Vec<T> {
        let w = model.equilibrium(u);
        let d1 = model.equilibrium_d1(u);
        let mut mu: Vec<T> = c.iter().zip(w.iter().zip(&d1)).map(|(&ci, (&wi, &di))| ci * di / wi).collect();
        mu.push(T::one());
        mu
    }

    pub fn mobility_matrix(&self, model: &EntropyModel<T>, c: &[T], u: T) -> Result<DenseMatrix<T>, OnsagerError> {
        self.check(model, c, u)?;
        Ok(self.mobility_unchecked(model, c, u))
    }

    pub(crate) fn mobility_unchecked(&self, model: &EntropyModel<T>, c: &[T], u: T) -> DenseMatrix<T> {
        let n = self.species();
        let mu = self.mu(model, c, u);
        let pi = self.pi1_delta(model, c, u);
        let mut m = DenseMatrix::zeros(n + 1, n + 1);
        for i in 0..=n {
            for j in 0..=i {
                let v = pi * mu[i] * mu[j];
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        for (i, ai) in self.a(c).into_iter().enumerate() {
            m[(i, i)] += c[i] * ai;
        }
        m
    }

    /// Closed-form A(c,u).
    pub fn diffusion_matrix(&self, model: &EntropyModel<T>, c: &[T], u: T) -> Result<DenseMatrix<T>, OnsagerError> {
        self.check(model, c, u)?;
        Ok(self.diffusion_unchecked(model, c, u))
    }

    pub(crate) fn diffusion_unchecked(&self, model: &EntropyModel<T>, c: &[T], u: T) -> DenseMatrix<T> {
        let n = self.species();
        let a = self.a(c);
        let heat = self.pi1_delta(model, c, u) * (model.gamma0_unchecked(c, u) + model.delta() / u);
        let w = model.equilibrium(u);
        let d1 = model.equilibrium_d1(u);
        let mut m = DenseMatrix::zeros(n + 1, n + 1);
        for i in 0..n {
            m[(i, i)] = a[i];
            m[(i, n)] = (heat - a[i]) * c[i] * d1[i] / w[i];
        }
        m[(n, n)] = heat;
        m
    }

    /// ζᵀ D²S_δ 𝕄 D²S_δ ζ in expanded form.
    pub fn production_quadform(&self, model: &EntropyModel<T>, c: &[T], u: T, zeta: &[T]) -> Result<T, OnsagerError> {
        self.check(model, c, u)?;
        model.entropy_gradient(c, u)?;
        let n = self.species();
        let w = model.equilibrium(u);
        let d1 = model.equilibrium_d1(u);
        let a = self.a(c);
        let zu = zeta[n];
        let mut q = T::zero();
        for i in 0..n {
            let t = zeta[i] / c[i] - d1[i] / w[i] * zu;
            q += c[i] * a[i] * t * t;
        }
        let g = model.gamma(c, u)?;
        Ok(q + self.pi1_delta(model, c, u) * g * g * zu * zu)
    }

    /// Σᵢ(κ₁ᵢζᵢ² + κ₀ᵢζᵢ²/cᵢ) + π₁,δγ_δ²ζ_{I+1}².
    pub fn coercivity_form(&self, model: &EntropyModel<T>, c: &[T], u: T, zeta: &[T]) -> Result<T, OnsagerError> {
        self.weighted_form(model, c, u, zeta, T::one())
    }

    /// The functional P evaluated on gradient samples: the κ₀ term uses
    /// |∇√c|² = |∇c|²/(4c).
    pub fn p_form(&self, model: &EntropyModel<T>, c: &[T], u: T, zeta: &[T]) -> Result<T, OnsagerError> {
        self.weighted_form(model, c, u, zeta, T::lit(0.25))
    }

    fn weighted_form(&self, model: &EntropyModel<T>, c: &[T], u: T, zeta: &[T], weight: T) -> Result<T, OnsagerError> {
        self.check(model, c, u)?;
        let n = self.species();
        let mut p = T::zero();
        for i in 0..n {
            let z2 = zeta[i] * zeta[i];
            p += self.kappa1[i] * z2;
            if self.kappa0[i] > T::zero() && z2 > T::zero() {
                if c[i] == T::zero() {
                    return Ok(T::infinity());
                }
                p += weight * self.kappa0[i] * z2 / c[i];
            }
        }
        let g = model.gamma(c, u)?;
        Ok(p + self.pi1_delta(model, c, u) * g * g * zeta[n] * zeta[n])
    }

    /// Empirical ε* = min production/coercivity over random admissible samples.
    pub fn coercivity_margin<R: Rng>(
        &self,
        model: &EntropyModel<T>,
        sample_count: usize,
        domain: &SampleDomain,
        rng: &mut R,
    ) -> Result<T, OnsagerError> {
        let n = self.species();
        let mut best = T::infinity();
        for s in 0..sample_count {
            let (c, u) = domain.state::<T, _>(n, rng);
            let zeta: Vec<T> = (0..=n).map(|_| T::lit(rng.gen_range(-1.0..1.0))).collect();
            let q = self.production_quadform(model, &c, u, &zeta)?;
            let p = self.coercivity_form(model, &c, u, &zeta)?;
            if p == T::zero() || !p.is_finite() {
                continue;
            }
            let ratio = q / p;
            if ratio < T::zero() {
                return Err(OnsagerError::NegativeRatio { ratio: ratio.as_f64(), sample: s });
            }
            best = best.min(ratio);
        }
        Ok(best)
    }

    pub fn cast<U: Real>(&self) -> MobilityModel<U> {
        let c = |v: &[T]| v.iter().map(|x| U::lit(x.as_f64())).collect();
        MobilityModel {
            kappa0: c(&self.kappa0),
            kappa1: c(&self.kappa1),
            pi1: self.pi1.cast(),
            regime: self.regime,
            delta: U::lit(self.delta.as_f64()),
        }
    }
}

/// Log-uniform sampling box for states used by randomized checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleDomain {
    pub c_range: (f64, f64),
    pub u_range: (f64, f64),
}

impl Default for SampleDomain {
    fn default() -> Self {
        Self { c_range: (1e-3, 1e2), u_range: (1e-2, 1e2) }
    }
}

impl SampleDomain {
    fn log_uniform<R: Rng>(range: (f64, f64), rng: &mut R) -> f64 {
        let (a, b) = (range.0.ln(), range.1.ln());
        rng.gen_range(a..b).exp()
    }

    pub fn state<T: Real, R: Rng>(&self, species: usize, rng: &mut R) -> (Vec<T>, T) {
        let c = (0..species).map(|_| T::lit(Self::log_uniform(self.c_range, rng))).collect();
        (c, T::lit(Self::log_uniform(self.u_range, rng)))
    }
}

/// Normal face fluxes A(Z_f)∇Z, face-major with I+1 components per face.
///
/// On a Cartesian grid only the face-normal component enters the divergence,
/// so tangential components are not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxField<T> {
    grid: Grid,
    ncomp: usize,
    data: Vec<T>,
}

impl<T: Real> FluxField<T> {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn face(&self, f: usize) -> &[T] {
        &self.data[f * self.ncomp..(f + 1) * self.ncomp]
    }

    pub fn component(&self, a: usize) -> Vec<T> {
        self.data.iter().skip(a).step_by(self.ncomp).copied().collect()
    }

    /// Euclidean norm of the flux vector on each face.
    pub fn magnitudes(&self) -> Vec<T> {
        (0..self.grid.face_count()).map(|f| crate::linalg::norm2(self.face(f))).collect()
    }
}

/// A(Z_f)·∇Z on every interior face; `grads` is face-major as produced by
/// [`crate::field::CellField::gradients`].
pub fn flux<T: Real>(
    mob: &MobilityModel<T>,
    model: &EntropyModel<T>,
    field: &StateField<T>,
    grads: &[T],
) -> Result<FluxField<T>, OnsagerError> {
    let grid = field.grid().clone();
    let n = field.ncomp();
    let mut data = vec![T::zero(); grid.face_count() * n];
    for &fi in grid.interior_faces() {
        let (l, r) = grid.faces()[fi].cells.expect("interior");
        let zf = field.face_average(l, r);
        let (c, u) = split(&zf, n - 1)?;
        let a = mob.diffusion_matrix(model, c, u)?;
        let q = a.mul_vec(&grads[fi * n..(fi + 1) * n]);
        data[fi * n..(fi + 1) * n].copy_from_slice(&q);
    }
    Ok(FluxField { grid, ncomp: n, data })
}

/// Statistics of the flux-control ratio over faces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluxBoundStats<T> {
    pub sup: T,
    pub mean: T,
    pub count: usize,
}

/// Ratio |A∇Z| / (weight · P^{1/2}) per interior face, skipping 0/0 faces.
/// The weight is maxᵢ(cᵢ + κ₀ᵢ + √π₁) under (H) and maxᵢ(√cᵢ + √π₁) under (H′).
pub fn flux_bound_ratios<T: Real>(
    mob: &MobilityModel<T>,
    model: &EntropyModel<T>,
    field: &StateField<T>,
    grads: &[T],
) -> Result<Vec<T>, OnsagerError> {
    let grid = field.grid();
    let n = field.ncomp();
    let fl = flux(mob, model, field, grads)?;
    let mut out = Vec::new();
    for &fi in grid.interior_faces() {
        let (l, r) = grid.faces()[fi].cells.expect("interior");
        let zf = field.face_average(l, r);
        let (c, u) = split(&zf, n - 1)?;
        let num = crate::linalg::norm2(fl.face(fi));
        let p = mob.p_form(model, c, u, &grads[fi * n..(fi + 1) * n])?;
        if num == T::zero() && p == T::zero() {
            continue;
        }
        let sp = mob.pi1_delta(model, c, u).sqrt();
        let weight = (0..n - 1).fold(T::zero(), |m, i| {
            let wi = match mob.regime() {
                Regime::H => c[i] + mob.kappa0()[i] + sp,
                Regime::HPrime => c[i].sqrt() + sp,
            };
            m.max(wi)
        });
        out.push(num / (weight * p.sqrt()));
    }
    Ok(out)
}

pub fn flux_bound_report<T: Real>(
    mob: &MobilityModel<T>,
    model: &EntropyModel<T>,
    field: &StateField<T>,
    grads: &[T],
) -> Result<Option<FluxBoundStats<T>>, OnsagerError> {
    let ratios = flux_bound_ratios(mob, model, field, grads)?;
    if ratios.is_empty() {
        return Ok(None);
    }
    let sup = ratios.iter().fold(T::zero(), |m, &r| m.max(r));
    let mean = ratios.iter().copied().sum::<T>() / T::count(ratios.len());
    Ok(Some(FluxBoundStats { sup, mean, count: ratios.len() }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::{EquilibriumFamily, SigmaFamily};
    use approx::assert_abs_diff_eq;

    fn const_model(delta: f64) -> EntropyModel<f64> {
        EntropyModel::new(SigmaFamily::Log { b: 1.0 }, vec![EquilibriumFamily::constant(1.0)], delta).unwrap()
    }

    #[test]
    fn constant_w_mobility_is_diagonal() {
        let model = const_model(0.1);
        let mob = MobilityModel::new(vec![1.0], vec![0.5], Pi1Preset::OnePlusUSquared { p0: 0.3 }, Regime::H, 0.1).unwrap();
        let m = mob.mobility_matrix(&model, &[2.0], 1.5).unwrap();
        assert_eq!(m[(0, 1)], 0.0);
        assert_abs_diff_eq!(m[(0, 0)], 2.0 * (1.0 + 0.5 * 2.0));
        assert_abs_diff_eq!(m[(1, 1)], 0.3 * 2.5 * 2.5 + 0.1 * 1.5 * 1.5, epsilon = 1e-14);
        let a = mob.diffusion_matrix(&model, &[2.0], 1.5).unwrap();
        assert_eq!(a[(0, 1)], 0.0);
    }

    #[test]
    fn coercivity_form_examples() {
        let model = const_model(0.0);
        let mob = MobilityModel::new(vec![1.0], vec![0.0], Pi1Preset::InverseGamma { p0: 1.0 }, Regime::HPrime, 0.0).unwrap();
        assert_eq!(mob.coercivity_form(&model, &[4.0], 1.0, &[0.0, 0.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(mob.coercivity_form(&model, &[4.0], 1.0, &[2.0, 0.0]).unwrap(), 1.0);
        let mob1 = MobilityModel::new(vec![1.0], vec![1.0], Pi1Preset::InverseGamma { p0: 1.0 }, Regime::HPrime, 0.0).unwrap();
        assert_abs_diff_eq!(mob1.coercivity_form(&model, &[4.0], 1.0, &[2.0, 0.0]).unwrap(), 5.0);
        assert_abs_diff_eq!(mob.p_form(&model, &[4.0], 1.0, &[2.0, 0.0]).unwrap(), 0.25);
        assert_eq!(mob.coercivity_form(&model, &[0.0], 1.0, &[1.0, 0.0]).unwrap(), f64::INFINITY);
    }

    #[test]
    fn production_energy_direction() {
        let model = const_model(0.2);
        let mob = MobilityModel::new(vec![1.0], vec![1.0], Pi1Preset::OnePlusUSquared { p0: 0.5 }, Regime::H, 0.2).unwrap();
        let (c, u) = ([1.3], 0.7);
        let q = mob.production_quadform(&model, &c, u, &[0.0, 1.0]).unwrap();
        let sigma_dd = -1.0 / (u * u) - 0.2 / u;
        assert_abs_diff_eq!(q, mob.pi1_delta(&model, &c, u) * sigma_dd * sigma_dd, epsilon = 1e-12);
        assert_eq!(mob.production_quadform(&model, &c, u, &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn unit_margin_for_matching_forms() {
        use rand::SeedableRng;
        let model = const_model(0.0);
        let mob = MobilityModel::new(vec![1.0], vec![0.0], Pi1Preset::InverseGamma { p0: 1.0 }, Regime::HPrime, 0.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let m = mob.coercivity_margin(&model, 2000, &SampleDomain::default(), &mut rng).unwrap();
        assert!((0.25..=1.0 + 1e-12).contains(&m), "{m}");
    }

    #[test]
    fn regime_serde_names() {
        #[derive(Deserialize)]
        struct W {
            r: Regime,
        }
        let w: W = toml::from_str("r = \"H'\"").unwrap();
        assert_eq!(w.r, Regime::HPrime);
    }
}
