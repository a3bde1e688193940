//! Entropy density, its derivatives and the change to entropy variables.
//!
//! The state is Z = (c₁,…,c_I, u) with concentrations c and internal energy u.
//! The regularized entropy density is
//!
//! ```text
//! S_δ(c,u) = σ̂₀(u) + Σᵢ (cᵢ log wᵢ(u) − λ(cᵢ)) − δ λ(u),   λ(s) = s log s − s + 1
//! ```
//!
//! and the entropy variables are W = −DS_δ(Z) = (log(cᵢ/wᵢ(u)), −∂ᵤS_δ).
//! For δ > 0 the map Z ↦ W is a bijection from the open positive orthant onto
//! ℝ^{I+1}; [`EntropyModel::from_entropy_vars`] inverts it with a monotone
//! scalar root find in u.

use serde::{Deserialize, Serialize};

use crate::field::{EntropyVars, StateField};
use crate::linalg::DenseMatrix;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ThermoError {
    #[error("{quantity} = {value} is outside its domain ({requirement})")]
    Domain { quantity: &'static str, value: f64, requirement: &'static str },
    #[error("cell {cell}, component {component}: value {value} is not strictly positive")]
    NonPositiveCell { cell: usize, component: usize, value: f64 },
    #[error("parameter {name} = {value} violates {requirement}")]
    Parameter { name: &'static str, value: f64, requirement: &'static str },
    #[error("expected {expected} components, got {got}")]
    Length { expected: usize, got: usize },
    #[error("entropy-variable inversion needs delta > 0")]
    InversionRequiresDelta,
    #[error("energy inversion failed{}: v = {v}, {reason}", cell.map(|c| format!(" in cell {c}")).unwrap_or_default())]
    Inversion { cell: Option<usize>, v: f64, reason: &'static str },
    #[error("d_u S = {du_s} is not positive; temperature undefined on this branch")]
    NonMonotoneBranch { du_s: f64 },
}

fn param<T: Real>(name: &'static str, value: T, ok: bool, requirement: &'static str) -> Result<(), ThermoError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(ThermoError::Parameter { name, value: value.as_f64(), requirement })
    }
}

/// Boltzmann function λ(s) = s log s − s + 1 with λ(0) = 1.
pub fn boltzmann_lambda<T: Real>(s: T) -> Result<T, ThermoError> {
    if !(s >= T::zero()) || !s.is_finite() {
        return Err(ThermoError::Domain { quantity: "s", value: s.as_f64(), requirement: "s >= 0" });
    }
    Ok(lambda(s))
}

/// λ without the domain check; callers guarantee s ≥ 0.
pub(crate) fn lambda<T: Real>(s: T) -> T {
    if s == T::zero() {
        T::one()
    } else {
        s * s.ln() - s + T::one()
    }
}

/// Relative Boltzmann entropy B(c|w) = Σ wᵢ λ(cᵢ/wᵢ).
pub fn relative_boltzmann<T: Real>(c: &[T], w: &[T]) -> Result<T, ThermoError> {
    if c.len() != w.len() {
        return Err(ThermoError::Length { expected: w.len(), got: c.len() });
    }
    let mut total = T::zero();
    for (&ci, &wi) in c.iter().zip(w) {
        if !(wi > T::zero()) {
            return Err(ThermoError::Domain { quantity: "w", value: wi.as_f64(), requirement: "w > 0" });
        }
        total += wi * boltzmann_lambda(ci / wi)?;
    }
    Ok(total)
}

/// Thermal part σ̂₀ of the entropy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SigmaFamily<T> {
    /// σ̂₀(u) = b log u
    Log { b: T },
    /// σ̂₀(u) = b u^α, 0 < α < 1
    Power { b: T, alpha: T },
}

impl<T: Real> SigmaFamily<T> {
    pub fn validate(&self) -> Result<(), ThermoError> {
        match *self {
            Self::Log { b } => param("sigma.b", b, b > T::zero(), "b > 0"),
            Self::Power { b, alpha } => {
                param("sigma.b", b, b > T::zero(), "b > 0")?;
                param("sigma.alpha", alpha, alpha > T::zero() && alpha < T::one(), "0 < alpha < 1")
            }
        }
    }

    pub fn value(&self, u: T) -> T {
        match *self {
            Self::Log { b } => b * u.ln(),
            Self::Power { b, alpha } => b * u.powf(alpha),
        }
    }

    pub fn d1(&self, u: T) -> T {
        match *self {
            Self::Log { b } => b / u,
            Self::Power { b, alpha } => b * alpha * u.powf(alpha - T::one()),
        }
    }

    pub fn d2(&self, u: T) -> T {
        match *self {
            Self::Log { b } => -b / (u * u),
            Self::Power { b, alpha } => b * alpha * (alpha - T::one()) * u.powf(alpha - T::lit(2.0)),
        }
    }

    pub fn cast<U: Real>(&self) -> SigmaFamily<U> {
        match *self {
            Self::Log { b } => SigmaFamily::Log { b: U::lit(b.as_f64()) },
            Self::Power { b, alpha } => SigmaFamily::Power { b: U::lit(b.as_f64()), alpha: U::lit(alpha.as_f64()) },
        }
    }
}

/// Equilibrium concentration profile wᵢ(u).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EquilibriumFamily<T> {
    /// w(u) = b₀ + b₁ u^β
    PowerLaw { b0: T, b1: T, beta: T },
    /// w(u) = b₀ (1 + b₁ u)^β
    ShiftedPower { b0: T, b1: T, beta: T },
}

impl<T: Real> EquilibriumFamily<T> {
    pub fn constant(b0: T) -> Self {
        Self::PowerLaw { b0, b1: T::zero(), beta: T::lit(0.5) }
    }

    pub fn validate(&self) -> Result<(), ThermoError> {
        let (Self::PowerLaw { b0, b1, beta } | Self::ShiftedPower { b0, b1, beta }) = *self;
        param("w.b0", b0, b0 > T::zero(), "b0 > 0")?;
        param("w.b1", b1, b1 >= T::zero(), "b1 >= 0")?;
        param("w.beta", beta, beta > T::zero() && beta < T::one(), "0 < beta < 1")
    }

    pub fn beta(&self) -> T {
        let (Self::PowerLaw { beta, .. } | Self::ShiftedPower { beta, .. }) = *self;
        beta
    }

    pub fn is_constant(&self) -> bool {
        let (Self::PowerLaw { b1, .. } | Self::ShiftedPower { b1, .. }) = *self;
        b1 == T::zero()
    }

    pub fn value(&self, u: T) -> T {
        match *self {
            Self::PowerLaw { b0, b1, beta } => b0 + b1 * u.powf(beta),
            Self::ShiftedPower { b0, b1, beta } => b0 * (T::one() + b1 * u).powf(beta),
        }
    }

    pub fn d1(&self, u: T) -> T {
        if self.is_constant() {
            return T::zero();
        }
        match *self {
            Self::PowerLaw { b1, beta, .. } => b1 * beta * u.powf(beta - T::one()),
            Self::ShiftedPower { b0, b1, beta } => b0 * beta * b1 * (T::one() + b1 * u).powf(beta - T::one()),
        }
    }

    pub fn d2(&self, u: T) -> T {
        if self.is_constant() {
            return T::zero();
        }
        let two = T::lit(2.0);
        match *self {
            Self::PowerLaw { b1, beta, .. } => b1 * beta * (beta - T::one()) * u.powf(beta - two),
            Self::ShiftedPower { b0, b1, beta } => b0 * beta * (beta - T::one()) * b1 * b1 * (T::one() + b1 * u).powf(beta - two),
        }
    }

    /// w(0).
    pub fn at_zero(&self) -> T {
        let (Self::PowerLaw { b0, .. } | Self::ShiftedPower { b0, .. }) = *self;
        b0
    }

    /// Smallest K with w(u) ≤ K (1+u)^β for all u ≥ 0.
    pub fn growth_constant(&self) -> T {
        match *self {
            Self::PowerLaw { b0, b1, .. } => b0 + b1,
            Self::ShiftedPower { b0, b1, beta } => b0 * b1.max(T::one()).powf(beta),
        }
    }

    pub fn cast<U: Real>(&self) -> EquilibriumFamily<U> {
        let c = |x: T| U::lit(x.as_f64());
        match *self {
            Self::PowerLaw { b0, b1, beta } => EquilibriumFamily::PowerLaw { b0: c(b0), b1: c(b1), beta: c(beta) },
            Self::ShiftedPower { b0, b1, beta } => EquilibriumFamily::ShiftedPower { b0: c(b0), b1: c(b1), beta: c(beta) },
        }
    }
}

/// Bracket limits and tolerance for the energy root find.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionOptions<T> {
    pub lower_limit: T,
    pub upper_limit: T,
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for InversionOptions<T> {
    fn default() -> Self {
        Self {
            lower_limit: T::min_positive_value().sqrt(),
            upper_limit: T::max_value().sqrt(),
            tol: T::lit(1e-12).max(T::epsilon() * T::lit(64.0)),
            max_iter: 400,
        }
    }
}

/// Constants entering the upper and lower pointwise entropy bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundConstants<T> {
    /// Common growth exponent β = maxᵢ βᵢ.
    pub beta: T,
    /// wᵢ(u) ≤ C_w^β (1+u)^β for every species.
    pub c_w: T,
    /// w₀ = minᵢ wᵢ(0).
    pub w0: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyModel<T> {
    sigma: SigmaFamily<T>,
    w: Vec<EquilibriumFamily<T>>,
    delta: T,
    inversion: InversionOptions<T>,
}

struct Profile<T> {
    w: T,
    d1: T,
    d2: T,
}

impl<T: Real> EntropyModel<T> {
    pub fn new(sigma: SigmaFamily<T>, w: Vec<EquilibriumFamily<T>>, delta: T) -> Result<Self, ThermoError> {
        sigma.validate()?;
        if w.is_empty() {
            return Err(ThermoError::Parameter { name: "w", value: 0.0, requirement: "at least one species" });
        }
        for wi in &w {
            wi.validate()?;
        }
        param("delta", delta, delta >= T::zero(), "delta >= 0")?;
        Ok(Self { sigma, w, delta, inversion: InversionOptions::default() })
    }

    pub fn with_inversion(mut self, opts: InversionOptions<T>) -> Self {
        self.inversion = opts;
        self
    }

    /// Same model with δ replaced.
    pub fn with_delta(&self, delta: T) -> Result<Self, ThermoError> {
        param("delta", delta, delta >= T::zero(), "delta >= 0")?;
        Ok(Self { delta, ..self.clone() })
    }

    pub fn species(&self) -> usize {
        self.w.len()
    }

    pub fn sigma(&self) -> &SigmaFamily<T> {
        &self.sigma
    }

    pub fn equilibria(&self) -> &[EquilibriumFamily<T>] {
        &self.w
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn equilibrium(&self, u: T) -> Vec<T> {
        self.w.iter().map(|w| w.value(u)).collect()
    }

    pub fn equilibrium_d1(&self, u: T) -> Vec<T> {
        self.w.iter().map(|w| w.d1(u)).collect()
    }

    pub fn equilibrium_d2(&self, u: T) -> Vec<T> {
        self.w.iter().map(|w| w.d2(u)).collect()
    }

    fn profiles(&self, u: T) -> impl Iterator<Item = Profile<T>> + '_ {
        self.w.iter().map(move |w| Profile { w: w.value(u), d1: w.d1(u), d2: w.d2(u) })
    }

    fn check_state(&self, c: &[T], u: T, strict: bool) -> Result<(), ThermoError> {
        if c.len() != self.species() {
            return Err(ThermoError::Length { expected: self.species(), got: c.len() });
        }
        if !(u > T::zero()) || !u.is_finite() {
            return Err(ThermoError::Domain { quantity: "u", value: u.as_f64(), requirement: "u > 0" });
        }
        for &ci in c {
            let ok = if strict { ci > T::zero() } else { ci >= T::zero() };
            if !ok || !ci.is_finite() {
                return Err(ThermoError::Domain {
                    quantity: "c",
                    value: ci.as_f64(),
                    requirement: if strict { "c > 0" } else { "c >= 0" },
                });
            }
        }
        Ok(())
    }

    /// S_δ(c, u).
    pub fn entropy_density(&self, c: &[T], u: T) -> Result<T, ThermoError> {
        self.check_state(c, u, false)?;
        Ok(self.entropy_unchecked(c, u))
    }

    pub(crate) fn entropy_unchecked(&self, c: &[T], u: T) -> T {
        let mixing: T = c
            .iter()
            .zip(&self.w)
            .map(|(&ci, w)| if ci == T::zero() { -T::one() } else { ci * w.value(u).ln() - lambda(ci) })
            .sum();
        self.sigma.value(u) + mixing - self.delta * lambda(u)
    }

    /// ∂ᵤS_δ, defined for c ≥ 0.
    pub fn du_entropy(&self, c: &[T], u: T) -> Result<T, ThermoError> {
        self.check_state(c, u, false)?;
        Ok(self.du_unchecked(c, u))
    }

    fn du_unchecked(&self, c: &[T], u: T) -> T {
        let coupling: T = c.iter().zip(self.profiles(u)).map(|(&ci, p)| ci * p.d1 / p.w).sum();
        self.sigma.d1(u) + coupling - self.delta * u.ln()
    }

    /// DS_δ(c, u) = (−log(cᵢ/wᵢ), ∂ᵤS_δ).
    pub fn entropy_gradient(&self, c: &[T], u: T) -> Result<Vec<T>, ThermoError> {
        self.check_state(c, u, true)?;
        let mut g: Vec<T> = c.iter().zip(self.profiles(u)).map(|(&ci, p)| -(ci / p.w).ln()).collect();
        g.push(self.du_unchecked(c, u));
        Ok(g)
    }

    /// ∂²ᵤS₀ − δ/u.
    fn corner(&self, c: &[T], u: T) -> T {
        let mut s = self.sigma.d2(u);
        for (&ci, p) in c.iter().zip(self.profiles(u)) {
            let r = p.d1 / p.w;
            s += ci * p.d2 / p.w - ci * r * r;
        }
        s - self.delta / u
    }

    /// D²S_δ(c, u); symmetric and negative definite.
    pub fn entropy_hessian(&self, c: &[T], u: T) -> Result<DenseMatrix<T>, ThermoError> {
        self.check_state(c, u, true)?;
        let n = self.species();
        let mut h = DenseMatrix::zeros(n + 1, n + 1);
        for (i, (&ci, p)) in c.iter().zip(self.profiles(u)).enumerate() {
            h[(i, i)] = -T::one() / ci;
            let r = p.d1 / p.w;
            h[(i, n)] = r;
            h[(n, i)] = r;
        }
        h[(n, n)] = self.corner(c, u);
        Ok(h)
    }

    /// γ_δ(c, u) = −σ̂₀″ − Σ cᵢwᵢ″/wᵢ + δ/u.
    pub fn gamma(&self, c: &[T], u: T) -> Result<T, ThermoError> {
        self.check_state(c, u, false)?;
        Ok(self.gamma0_unchecked(c, u) + self.delta / u)
    }

    /// γ without the δ-term.
    pub fn gamma0(&self, c: &[T], u: T) -> Result<T, ThermoError> {
        self.check_state(c, u, false)?;
        Ok(self.gamma0_unchecked(c, u))
    }

    pub(crate) fn gamma0_unchecked(&self, c: &[T], u: T) -> T {
        let s: T = c.iter().zip(self.profiles(u)).map(|(&ci, p)| ci * p.d2 / p.w).sum();
        -self.sigma.d2(u) - s
    }

    /// θ = 1/∂ᵤS_δ.
    pub fn temperature(&self, c: &[T], u: T) -> Result<T, ThermoError> {
        let du = self.du_entropy(c, u)?;
        if du > T::zero() {
            Ok(T::one() / du)
        } else {
            Err(ThermoError::NonMonotoneBranch { du_s: du.as_f64() })
        }
    }

    /// W = −DS_δ at one point.
    pub fn local_entropy_vars(&self, z: &[T]) -> Result<Vec<T>, ThermoError> {
        let (c, u) = split(z, self.species())?;
        let mut g = self.entropy_gradient(c, u)?;
        for v in &mut g {
            *v = -*v;
        }
        Ok(g)
    }

    /// Ψ(u, y) = −σ̂₀′(u) − Σ e^{yᵢ} wᵢ′(u) + δ log u, with e^{yᵢ} supplied.
    fn psi(&self, u: T, ey: &[T]) -> (T, T, T) {
        let mut val = -self.sigma.d1(u) + self.delta * u.ln();
        let mut der = -self.sigma.d2(u) + self.delta / u;
        let mut scale = self.sigma.d1(u).abs() + (self.delta * u.ln()).abs();
        for (&e, w) in ey.iter().zip(&self.w) {
            if !w.is_constant() {
                let t = e * w.d1(u);
                val -= t;
                der -= e * w.d2(u);
                scale += t.abs();
            }
        }
        (val, der, scale)
    }

    /// The unique u with Ψ(u, y) = v.
    pub fn invert_energy(&self, y: &[T], v: T) -> Result<T, ThermoError> {
        if !(self.delta > T::zero()) {
            return Err(ThermoError::InversionRequiresDelta);
        }
        let fail = |reason| Err(ThermoError::Inversion { cell: None, v: v.as_f64(), reason });
        if !v.is_finite() {
            return fail("non-finite v");
        }
        let ey: Vec<T> = y.iter().map(|&yi| yi.exp()).collect();
        if ey.iter().any(|e| !e.is_finite()) {
            return fail("exp(y) overflows");
        }
        let opts = &self.inversion;
        let ten = T::lit(10.0);
        let (mut lo, mut hi) = (T::lit(1e-12).max(opts.lower_limit), T::one());
        while self.psi(lo, &ey).0 > v {
            hi = lo;
            lo = lo / ten;
            if lo < opts.lower_limit {
                return fail("bracket left the lower limit");
            }
        }
        while self.psi(hi, &ey).0 < v {
            lo = hi;
            hi = hi * ten;
            if hi > opts.upper_limit {
                return fail("bracket left the upper limit");
            }
        }
        let two = T::lit(2.0);
        let mut u = (lo * hi).sqrt();
        for _ in 0..opts.max_iter {
            let (p, dp, scale) = self.psi(u, &ey);
            let f = p - v;
            if f == T::zero() {
                return Ok(u);
            }
            if f < T::zero() {
                lo = u;
            } else {
                hi = u;
            }
            let newton = u - f / dp;
            let next = if newton > lo && newton < hi && newton.is_finite() {
                newton
            } else if hi > two * lo {
                (lo * hi).sqrt()
            } else {
                (lo + hi) / two
            };
            let step = (next - u).abs();
            u = next;
            if step <= T::epsilon() * u || hi - lo <= two * T::epsilon() * hi {
                let (p, _, scale_new) = self.psi(u, &ey);
                if (p - v).abs() <= opts.tol * T::one().max(scale).max(scale_new).max(v.abs()) {
                    return Ok(u);
                }
                return fail("residual above tolerance at bracket collapse");
            }
        }
        fail("iteration limit")
    }

    /// Z = (−DS_δ)⁻¹(W) at one point.
    pub fn local_from_entropy_vars(&self, w: &[T]) -> Result<Vec<T>, ThermoError> {
        let (y, v) = split(w, self.species())?;
        let u = self.invert_energy(y, v)?;
        let mut z: Vec<T> = y.iter().zip(&self.w).map(|(&yi, wi)| wi.value(u) * yi.exp()).collect();
        if z.iter().any(|c| !(*c > T::zero()) || !c.is_finite()) {
            return Err(ThermoError::Inversion { cell: None, v: v.as_f64(), reason: "concentration not representable" });
        }
        z.push(u);
        Ok(z)
    }

    /// dZ/dW = (−D²S_δ)⁻¹ at a state.
    pub fn state_jacobian(&self, z: &[T]) -> Result<DenseMatrix<T>, ThermoError> {
        let (c, u) = split(z, self.species())?;
        let h = self.entropy_hessian(c, u)?;
        h.scaled(-T::one()).inverse().map_err(|_| ThermoError::Domain {
            quantity: "u",
            value: u.as_f64(),
            requirement: "invertible Hessian",
        })
    }

    pub fn to_entropy_vars(&self, field: &StateField<T>) -> Result<EntropyVars<T>, ThermoError> {
        let n = self.species() + 1;
        if field.ncomp() != n {
            return Err(ThermoError::Length { expected: n, got: field.ncomp() });
        }
        for p in 0..field.cells() {
            for (a, &v) in field.cell(p).iter().enumerate() {
                if !(v > T::zero()) {
                    return Err(ThermoError::NonPositiveCell { cell: p, component: a, value: v.as_f64() });
                }
            }
        }
        let mut data = Vec::with_capacity(field.as_slice().len());
        for p in 0..field.cells() {
            data.extend(self.local_entropy_vars(field.cell(p))?);
        }
        Ok(EntropyVars::new(field.grid().clone(), n, data).expect("shape preserved"))
    }

    pub fn from_entropy_vars(&self, vars: &EntropyVars<T>) -> Result<StateField<T>, ThermoError> {
        let n = self.species() + 1;
        if vars.ncomp() != n {
            return Err(ThermoError::Length { expected: n, got: vars.ncomp() });
        }
        let mut data = Vec::with_capacity(vars.as_slice().len());
        for p in 0..vars.cells() {
            let z = self.local_from_entropy_vars(vars.cell(p)).map_err(|e| match e {
                ThermoError::Inversion { v, reason, .. } => ThermoError::Inversion { cell: Some(p), v, reason },
                other => other,
            })?;
            data.extend(z);
        }
        Ok(StateField::new(vars.grid().clone(), n, data).expect("shape preserved"))
    }

    /// 𝒮_δ(Z) = quad(S_δ(Z)).
    pub fn total_entropy(&self, field: &StateField<T>) -> Result<T, ThermoError> {
        let n = self.species();
        let mut s = T::zero();
        for p in 0..field.cells() {
            let z = field.cell(p);
            s += self.entropy_density(&z[..n], z[n])?;
        }
        Ok(s * field.grid().volume::<T>())
    }

    pub fn bound_constants(&self) -> BoundConstants<T> {
        let beta = self.w.iter().fold(T::zero(), |m, w| m.max(w.beta()));
        let k = self.w.iter().fold(T::zero(), |m, w| m.max(w.growth_constant()));
        let w0 = self.w.iter().fold(T::infinity(), |m, w| m.min(w.at_zero()));
        BoundConstants { beta, c_w: k.powf(T::one() / beta), w0 }
    }

    pub fn cast<U: Real>(&self) -> EntropyModel<U> {
        EntropyModel {
            sigma: self.sigma.cast(),
            w: self.w.iter().map(EquilibriumFamily::cast).collect(),
            delta: U::lit(self.delta.as_f64()),
            inversion: InversionOptions::default(),
        }
    }
}

/// Splits Z into (c, u).
pub fn split<T: Real>(z: &[T], species: usize) -> Result<(&[T], T), ThermoError> {
    if z.len() != species + 1 {
        return Err(ThermoError::Length { expected: species + 1, got: z.len() });
    }
    Ok((&z[..species], z[species]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn log_model(w: Vec<EquilibriumFamily<f64>>, delta: f64) -> EntropyModel<f64> {
        EntropyModel::new(SigmaFamily::Log { b: 1.0 }, w, delta).unwrap()
    }

    fn sqrt_w() -> EquilibriumFamily<f64> {
        EquilibriumFamily::PowerLaw { b0: 1.0, b1: 1.0, beta: 0.5 }
    }

    #[test]
    fn lambda_values() {
        assert_eq!(boltzmann_lambda(1.0).unwrap(), 0.0);
        assert_eq!(boltzmann_lambda(0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(boltzmann_lambda(std::f64::consts::E).unwrap(), 1.0, epsilon = 1e-15);
        assert!(boltzmann_lambda(-1e-3).is_err());
    }

    #[test]
    fn relative_boltzmann_values() {
        assert_eq!(relative_boltzmann(&[1.5, 2.0], &[1.5, 2.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(relative_boltzmann(&[0.0], &[2.0]).unwrap(), 2.0);
        let e = std::f64::consts::E;
        assert_abs_diff_eq!(relative_boltzmann(&[2.0 * e], &[2.0]).unwrap(), 2.0, epsilon = 1e-14);
        assert!(relative_boltzmann(&[1.0], &[0.0]).is_err());
    }

    #[test]
    fn entropy_density_examples() {
        let e = std::f64::consts::E;
        let m0 = log_model(vec![EquilibriumFamily::constant(1.0)], 0.0);
        assert_eq!(m0.entropy_density(&[1.0], 1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(m0.entropy_density(&[e], 1.0).unwrap(), -1.0, epsilon = 1e-15);
        let m1 = log_model(vec![EquilibriumFamily::constant(1.0)], 1.0);
        assert_eq!(m1.entropy_density(&[1.0], 1.0).unwrap(), 0.0);
        assert!(m0.entropy_density(&[1.0], 0.0).is_err());
    }

    #[test]
    fn gradient_examples() {
        let m0 = log_model(vec![EquilibriumFamily::constant(3.0)], 0.0);
        let g = m0.entropy_gradient(&[3.0], 2.0).unwrap();
        assert_eq!(g[0], 0.0);
        assert_abs_diff_eq!(g[1], 0.5);
        let m1 = log_model(vec![EquilibriumFamily::constant(3.0)], 1.0);
        assert_abs_diff_eq!(m1.entropy_gradient(&[2.0], 1.0).unwrap()[1], 1.0);
        assert!(m0.entropy_gradient(&[0.0], 1.0).is_err());
    }

    #[test]
    fn hessian_examples() {
        let m = log_model(vec![EquilibriumFamily::constant(1.0)], 0.0);
        let h = m.entropy_hessian(&[4.0], 1.0).unwrap();
        assert_eq!(h[(0, 0)], -0.25);
        assert_eq!(h[(0, 1)], 0.0);
        let m = log_model(vec![sqrt_w()], 0.0);
        let h = m.entropy_hessian(&[1.0], 1.0).unwrap();
        assert_abs_diff_eq!(h[(1, 1)], -1.1875, epsilon = 1e-15);
    }

    #[test]
    fn gamma_examples() {
        let m = log_model(vec![EquilibriumFamily::constant(1.0)], 0.0);
        assert_abs_diff_eq!(m.gamma(&[1.0], 2.0).unwrap(), 0.25);
        let m = log_model(vec![sqrt_w()], 0.0);
        assert_abs_diff_eq!(m.gamma(&[1.0], 1.0).unwrap(), 1.125, epsilon = 1e-15);
        let m = log_model(vec![sqrt_w()], 1.0);
        assert_abs_diff_eq!(m.gamma(&[1.0], 1.0).unwrap(), 2.125, epsilon = 1e-15);
    }

    #[test]
    fn temperature_examples() {
        let m = log_model(vec![EquilibriumFamily::constant(1.0)], 0.0);
        assert_abs_diff_eq!(m.temperature(&[1.0], 2.0).unwrap(), 2.0);
        assert_abs_diff_eq!(m.temperature(&[1.0], 1.0).unwrap(), 1.0);
        let p =
            EntropyModel::new(SigmaFamily::Power { b: 1.0, alpha: 0.5 }, vec![EquilibriumFamily::constant(1.0)], 0.0).unwrap();
        assert_abs_diff_eq!(p.temperature(&[1.0], 4.0).unwrap(), 4.0, epsilon = 1e-14);
        // large u with delta > 0 leaves the monotone branch
        let d = log_model(vec![EquilibriumFamily::constant(1.0)], 1.0);
        assert!(matches!(d.temperature(&[1.0], 10.0), Err(ThermoError::NonMonotoneBranch { .. })));
    }

    #[test]
    fn entropy_vars_examples() {
        let m = log_model(vec![EquilibriumFamily::constant(1.0)], 1.0);
        let w = m.local_entropy_vars(&[1.0, 1.0]).unwrap();
        assert_eq!(w, vec![0.0, -1.0]);
        let z = m.local_from_entropy_vars(&[0.7, -1.0]).unwrap();
        assert_abs_diff_eq!(z[1], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(z[0], 0.7f64.exp(), epsilon = 1e-13);
    }

    #[test]
    fn inversion_rejects_zero_delta() {
        let m = log_model(vec![sqrt_w()], 0.0);
        assert_eq!(m.local_from_entropy_vars(&[0.0, -1.0]), Err(ThermoError::InversionRequiresDelta));
    }

    #[test]
    fn inversion_reports_bracket_failure() {
        let m = log_model(vec![sqrt_w()], 1e-3).with_inversion(InversionOptions {
            lower_limit: 1e-6,
            upper_limit: 1e6,
            ..InversionOptions::default()
        });
        let err = m.local_from_entropy_vars(&[0.0, -1e9]).unwrap_err();
        assert!(matches!(err, ThermoError::Inversion { .. }), "{err}");
    }

    #[test]
    fn works_in_single_precision() {
        let m = EntropyModel::<f32>::new(SigmaFamily::Log { b: 1.0 }, vec![EquilibriumFamily::constant(1.0)], 1.0).unwrap();
        let z = m.local_from_entropy_vars(&[0.25, -1.0]).unwrap();
        assert!((z[1] - 1.0).abs() < 1e-5);
        assert!((m.gamma(&[1.0], 2.0).unwrap() - 0.75).abs() < 1e-6);
    }

    #[test]
    fn bound_constants_cover_profiles() {
        let m = log_model(vec![sqrt_w(), EquilibriumFamily::ShiftedPower { b0: 0.5, b1: 3.0, beta: 0.3 }], 0.0);
        let k = m.bound_constants();
        assert_eq!(k.w0, 0.5);
        for i in 0..200 {
            let u = 1e-3 * 1.1f64.powi(i);
            for w in m.equilibria() {
                assert!(w.value(u) <= k.c_w.powf(k.beta) * (1.0 + u).powf(k.beta) * (1.0 + 1e-12));
            }
        }
    }
}
