use serde::Serialize;

use super::DiagnosticsError;
use crate::field::StateField;
use crate::scalar::Real;
use crate::thermo::{lambda, EntropyModel};

/// U_p(w) = (w^p − pw + p − 1)/(p(p−1)).
pub fn p_entropy<T: Real>(w: T, p: T) -> T {
    (w.powf(p) - p * w + p - T::one()) / (p * (p - T::one()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyBoundsReport {
    pub cells: usize,
    pub upper_violations: usize,
    pub lower_violations: usize,
    /// Violations of the relative-entropy splitting inequality, counted per species.
    pub splitting_violations: usize,
    /// min over cells of (upper bound − S₀).
    pub upper_margin: f64,
    /// min over cells of (S₀ − lower bound).
    pub lower_margin: f64,
    pub passed: bool,
}

/// Pointwise upper and lower bounds for S₀ with the model's constants (β, C_w, w₀)
/// and p = 1/β, plus wλ(c/w) ≥ (p−1)/p·λ(c) − (p−1)U_p(w) ≥ (p−1)/p·λ(c) − w^p/p − 1.
pub fn entropy_bounds_check<T: Real>(
    model: &EntropyModel<T>,
    field: &StateField<T>,
) -> Result<EntropyBoundsReport, DiagnosticsError> {
    let n = model.species();
    if field.ncomp() != n + 1 {
        return Err(DiagnosticsError::Argument { name: "field", message: format!("expected {} components", n + 1) });
    }
    let s0 = model.with_delta(T::zero())?;
    let k = model.bound_constants();
    let (beta, c_w) = (k.beta, k.c_w);
    let p = T::one() / beta;
    let i = T::count(n);
    let two = T::lit(2.0);
    let w0 = k.w0.min(T::one());
    let tol = |scale: T| T::lit(1e-12) * (T::one() + scale.abs());

    let mut report = EntropyBoundsReport {
        cells: field.cells(),
        upper_violations: 0,
        lower_violations: 0,
        splitting_violations: 0,
        upper_margin: f64::INFINITY,
        lower_margin: f64::INFINITY,
        passed: true,
    };
    for cell in 0..field.cells() {
        let z = field.cell(cell);
        let (c, u) = (&z[..n], z[n]);
        let s = s0.entropy_density(c, u)?;
        let sigma = model.sigma().value(u);
        let lam: T = c.iter().map(|&ci| lambda(ci)).sum();
        let upper = sigma + two * i * beta * c_w * u + i * (two * beta * c_w + T::one()) - (T::one() - beta) * lam;
        let lower = sigma + i - i / w0 - two * lam;
        if s > upper + tol(upper) {
            report.upper_violations += 1;
        }
        if s < lower - tol(lower) {
            report.lower_violations += 1;
        }
        report.upper_margin = report.upper_margin.min((upper - s).as_f64());
        report.lower_margin = report.lower_margin.min((s - lower).as_f64());
        for (&ci, wi) in c.iter().zip(model.equilibrium(u)) {
            let rel = wi * lambda(ci / wi);
            let mid = (p - T::one()) / p * lambda(ci) - (p - T::one()) * p_entropy(wi, p);
            let low = (p - T::one()) / p * lambda(ci) - wi.powf(p) / p - T::one();
            if rel < mid - tol(mid) || mid < low - tol(low) {
                report.splitting_violations += 1;
            }
        }
    }
    report.passed = report.upper_violations == 0 && report.lower_violations == 0 && report.splitting_violations == 0;
    Ok(report)
}
