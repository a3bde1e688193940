//! Reversible mass-action kinetics relative to the equilibrium profile w(u).

use serde::{Deserialize, Serialize};

use crate::linalg::DenseMatrix;
use crate::onsager::{Regime, SolutionConcept};
use crate::scalar::Real;
use crate::thermo::{EntropyModel, ThermoError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KineticsError {
    #[error(transparent)]
    Thermo(#[from] ThermoError),
    #[error("reaction {index}: {message}")]
    Invalid { index: usize, message: String },
}

/// κ(c,u) = k · exp(−activation/(1+u)) · Πⱼ cⱼ^{pⱼ}.
///
/// The exponential factor is bounded and continuous in u; the monomial adds
/// to the polynomial degree checked by [`ReactionNetwork::validate_growth`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Real"))]
pub struct RateLaw<T> {
    pub k: T,
    #[serde(default = "zero")]
    pub activation: T,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub c_powers: Vec<u32>,
}

fn zero<T: Real>() -> T {
    T::zero()
}

impl<T: Real> RateLaw<T> {
    pub fn constant(k: T) -> Self {
        Self { k, activation: T::zero(), c_powers: Vec::new() }
    }

    pub fn value(&self, c: &[T], u: T) -> T {
        let mut v = self.k * (-self.activation / (T::one() + u)).exp();
        for (&ci, &p) in c.iter().zip(&self.c_powers) {
            v *= ci.powi(p as i32);
        }
        v
    }

    /// (∂κ/∂c, ∂κ/∂u).
    fn gradient(&self, c: &[T], u: T) -> (Vec<T>, T) {
        let base = self.k * (-self.activation / (T::one() + u)).exp();
        let mono = |skip: Option<usize>| {
            c.iter()
                .zip(&self.c_powers)
                .enumerate()
                .map(|(j, (&cj, &p))| match skip {
                    Some(s) if s == j => {
                        if p == 0 {
                            T::zero()
                        } else {
                            T::count(p as usize) * cj.powi(p as i32 - 1)
                        }
                    }
                    _ => cj.powi(p as i32),
                })
                .fold(T::one(), |a, b| a * b)
        };
        let dc = (0..c.len()).map(|j| if j < self.c_powers.len() { base * mono(Some(j)) } else { T::zero() }).collect();
        let one_u = T::one() + u;
        (dc, base * mono(None) * self.activation / (one_u * one_u))
    }

    pub fn degree(&self) -> u32 {
        self.c_powers.iter().sum()
    }

    pub fn cast<U: Real>(&self) -> RateLaw<U> {
        RateLaw { k: U::lit(self.k.as_f64()), activation: U::lit(self.activation.as_f64()), c_powers: self.c_powers.clone() }
    }
}

/// α₁𝒜₁ + … + α_I𝒜_I ⇌ β₁𝒜₁ + … + β_I𝒜_I.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Real"))]
pub struct Reaction<T> {
    pub alpha: Vec<u32>,
    pub beta: Vec<u32>,
    pub rate: RateLaw<T>,
}

impl<T: Real> Reaction<T> {
    /// Total polynomial degree in c of the reaction term.
    pub fn degree(&self) -> u32 {
        let a: u32 = self.alpha.iter().sum();
        let b: u32 = self.beta.iter().sum();
        a.max(b) + self.rate.degree()
    }

    /// (c_w^α, c_w^β) with c_w = c/w and 0⁰ = 1.
    fn monomials(&self, x: &[T]) -> (T, T) {
        let m = |e: &[u32]| x.iter().zip(e).fold(T::one(), |acc, (&xi, &p)| acc * xi.powi(p as i32));
        (m(&self.alpha), m(&self.beta))
    }

    fn log_monomial(e: &[u32], x: &[T]) -> T {
        x.iter().zip(e).filter(|(_, &p)| p > 0).map(|(&xi, &p)| T::count(p as usize) * xi.ln()).sum()
    }

    pub fn cast<U: Real>(&self) -> Reaction<U> {
        Reaction { alpha: self.alpha.clone(), beta: self.beta.clone(), rate: self.rate.cast() }
    }
}

/// Outcome of comparing reaction degrees against the growth exponent limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    /// Strict upper bound for the degree, `None` when no limit applies.
    pub threshold: Option<f64>,
    pub degrees: Vec<u32>,
    /// Indices of reactions at or above the threshold.
    pub violations: Vec<usize>,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real"))]
pub struct ReactionNetwork<T> {
    pub reactions: Vec<Reaction<T>>,
    pub rho: T,
}

impl<T: Real> ReactionNetwork<T> {
    pub fn new(reactions: Vec<Reaction<T>>, rho: T, species: usize) -> Result<Self, KineticsError> {
        for (index, r) in reactions.iter().enumerate() {
            let invalid = |message: String| Err(KineticsError::Invalid { index, message });
            if r.alpha.len() != species || r.beta.len() != species {
                return invalid(format!("stoichiometry must have {species} entries"));
            }
            if r.alpha == r.beta {
                return invalid("alpha equals beta".into());
            }
            if !r.rate.c_powers.is_empty() && r.rate.c_powers.len() != species {
                return invalid(format!("c_powers must be empty or have {species} entries"));
            }
            if !(r.rate.k >= T::zero()) || !r.rate.k.is_finite() {
                return invalid(format!("rate constant {} must be finite and >= 0", r.rate.k));
            }
            if !(r.rate.activation >= T::zero()) || !r.rate.activation.is_finite() {
                return invalid(format!("activation {} must be finite and >= 0", r.rate.activation));
            }
        }
        if !(rho >= T::zero()) || !rho.is_finite() {
            return Err(KineticsError::Invalid { index: 0, message: format!("rho = {rho} must be >= 0") });
        }
        Ok(Self { reactions, rho })
    }

    pub fn empty() -> Self {
        Self { reactions: Vec::new(), rho: T::zero() }
    }

    pub fn is_empty(&self) -> bool {
        self.reactions.is_empty()
    }

    fn scaled(model: &EntropyModel<T>, c: &[T], u: T) -> Result<Vec<T>, ThermoError> {
        model.gamma(c, u)?; // domain check
        Ok(c.iter().zip(model.equilibrium(u)).map(|(&ci, wi)| ci / wi).collect())
    }

    /// Mass-action rate vector R(c,u).
    pub fn mass_action_rate(&self, model: &EntropyModel<T>, c: &[T], u: T) -> Result<Vec<T>, KineticsError> {
        let x = Self::scaled(model, c, u)?;
        let mut r = vec![T::zero(); c.len()];
        for re in &self.reactions {
            let (a, b) = re.monomials(&x);
            let t = re.rate.value(c, u) * (a - b);
            for (i, ri) in r.iter_mut().enumerate() {
                let s = re.beta[i] as i64 - re.alpha[i] as i64;
                if s != 0 {
                    *ri += t * T::lit(s as f64);
                }
            }
        }
        Ok(r)
    }

    /// R_ϱ = R/(ϱ|R| + 1).
    pub fn regularize_rates(&self, r: &[T]) -> Vec<T> {
        let s = T::one() / (self.rho * crate::linalg::norm2(r) + T::one());
        r.iter().map(|&v| v * s).collect()
    }

    pub fn regularized_rate(&self, model: &EntropyModel<T>, c: &[T], u: T) -> Result<Vec<T>, KineticsError> {
        Ok(self.regularize_rates(&self.mass_action_rate(model, c, u)?))
    }

    /// ∂R/∂Z as an I×(I+1) matrix.
    pub fn rate_jacobian(&self, model: &EntropyModel<T>, c: &[T], u: T) -> Result<DenseMatrix<T>, KineticsError> {
        let x = Self::scaled(model, c, u)?;
        let n = c.len();
        let w = model.equilibrium(u);
        let dw = model.equilibrium_d1(u);
        let mut jac = DenseMatrix::zeros(n, n + 1);
        for re in &self.reactions {
            let (a, b) = re.monomials(&x);
            let kappa = re.rate.value(c, u);
            let (dk_dc, dk_du) = re.rate.gradient(c, u);
            // d(x^e)/dc_j = e_j x_j^{e_j-1} Π_{k≠j} x_k^{e_k} / w_j
            let dmono = |e: &[u32], j: usize| -> T {
                if e[j] == 0 {
                    return T::zero();
                }
                let mut v = T::count(e[j] as usize) * x[j].powi(e[j] as i32 - 1) / w[j];
                for k in (0..n).filter(|&k| k != j) {
                    v *= x[k].powi(e[k] as i32);
                }
                v
            };
            let mut dt = vec![T::zero(); n + 1];
            for j in 0..n {
                let (da, db) = (dmono(&re.alpha, j), dmono(&re.beta, j));
                dt[j] = kappa * (da - db) + dk_dc[j] * (a - b);
                // u enters through x_j = c_j / w_j(u)
                dt[n] -= kappa * (da - db) * c[j] * dw[j] / w[j];
            }
            dt[n] += dk_du * (a - b);
            for i in 0..n {
                let s = re.beta[i] as i64 - re.alpha[i] as i64;
                if s != 0 {
                    for (j, &d) in dt.iter().enumerate() {
                        jac[(i, j)] += T::lit(s as f64) * d;
                    }
                }
            }
        }
        Ok(jac)
    }

    /// ∂R_ϱ/∂Z.
    pub fn regularized_jacobian(&self, model: &EntropyModel<T>, c: &[T], u: T) -> Result<DenseMatrix<T>, KineticsError> {
        let jac = self.rate_jacobian(model, c, u)?;
        let r = self.mass_action_rate(model, c, u)?;
        let norm = crate::linalg::norm2(&r);
        let s = T::one() / (self.rho * norm + T::one());
        let mut out = jac.scaled(s);
        if self.rho > T::zero() && norm > T::zero() {
            let rt_j = jac.transpose().mul_vec(&r);
            let f = self.rho * s * s / norm;
            for i in 0..r.len() {
                for (j, &v) in rt_j.iter().enumerate() {
                    out[(i, j)] -= f * r[i] * v;
                }
            }
        }
        Ok(out)
    }

    /// Σ κ (c_w^α − c_w^β)(log c_w^α − log c_w^β) ≥ 0.
    pub fn reaction_entropy_production(&self, model: &EntropyModel<T>, c: &[T], u: T) -> Result<T, KineticsError> {
        let x = Self::scaled(model, c, u)?;
        let mut total = T::zero();
        for re in &self.reactions {
            let kappa = re.rate.value(c, u);
            let (a, b) = re.monomials(&x);
            if kappa == T::zero() || a == b {
                continue;
            }
            if a > T::zero() && b > T::zero() {
                let la = Reaction::log_monomial(&re.alpha, &x);
                let lb = Reaction::log_monomial(&re.beta, &x);
                total += kappa * (a - b) * (la - lb);
            } else {
                return Ok(T::infinity());
            }
        }
        Ok(total)
    }

    /// Compares reaction degrees with 2 + 2/d under (H) and 1 + 2/d under (H′).
    pub fn validate_growth(&self, regime: Regime, concept: SolutionConcept, d: usize) -> GrowthReport {
        let degrees: Vec<u32> = self.reactions.iter().map(Reaction::degree).collect();
        let threshold = match concept {
            SolutionConcept::Renormalised => None,
            SolutionConcept::Weak => Some(match regime {
                Regime::H => 2.0 + 2.0 / d as f64,
                Regime::HPrime => 1.0 + 2.0 / d as f64,
            }),
        };
        let violations: Vec<usize> = match threshold {
            None => Vec::new(),
            Some(q) => degrees.iter().enumerate().filter(|(_, &g)| g as f64 >= q).map(|(i, _)| i).collect(),
        };
        GrowthReport { threshold, passes: violations.is_empty(), degrees, violations }
    }

    pub fn cast<U: Real>(&self) -> ReactionNetwork<U> {
        ReactionNetwork { reactions: self.reactions.iter().map(Reaction::cast).collect(), rho: U::lit(self.rho.as_f64()) }
    }
}
