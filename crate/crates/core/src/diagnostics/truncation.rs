use rand::Rng;
use serde::Serialize;

use super::DiagnosticsError;
use crate::linalg::DenseMatrix;
use crate::scalar::Real;

/// Cutoff profile: 1 on (−∞,0], 0 on [1,∞), quintic smoothstep complement in between.
fn profile<T: Real>(x: T) -> (T, T, T) {
    if x <= T::zero() {
        return (T::one(), T::zero(), T::zero());
    }
    if x >= T::one() {
        return (T::zero(), T::zero(), T::zero());
    }
    let l = T::lit;
    let x2 = x * x;
    let x3 = x2 * x;
    let s = x3 * (l(10.0) - l(15.0) * x + l(6.0) * x2);
    let ds = l(30.0) * x2 * (T::one() - x) * (T::one() - x);
    let d2s = l(60.0) * x * (T::one() - x) * (T::one() - l(2.0) * x);
    (T::one() - s, -ds, -d2s)
}

/// max |φ′| = 15/8 at x = 1/2.
const PROFILE_D1: f64 = 1.875;
/// max |φ″| = 10/√3 at x = 1/2 ± √3/6.
fn profile_d2_max() -> f64 {
    10.0 / 3f64.sqrt()
}

/// φᵢ^E(Z) = Zᵢφ(x) + 3E(1 − φ(x)) with x = (ΣZ − E)/E.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Truncator<T> {
    pub height: T,
    pub species: usize,
}

impl<T: Real> Truncator<T> {
    pub fn new(height: T, species: usize) -> Result<Self, DiagnosticsError> {
        if !(height > T::zero()) || !height.is_finite() {
            return Err(DiagnosticsError::Argument { name: "height", message: format!("need E > 0, got {height}") });
        }
        Ok(Self { height, species })
    }

    fn arg(&self, z: &[T]) -> T {
        (z.iter().copied().sum::<T>() - self.height) / self.height
    }

    pub fn value(&self, z: &[T]) -> T {
        let (p, _, _) = profile(self.arg(z));
        let three_e = T::lit(3.0) * self.height;
        z[self.species] * p + three_e * (T::one() - p)
    }

    pub fn gradient(&self, z: &[T]) -> Vec<T> {
        let (p, dp, _) = profile(self.arg(z));
        let slope = (z[self.species] - T::lit(3.0) * self.height) * dp / self.height;
        (0..z.len()).map(|j| if j == self.species { p + slope } else { slope }).collect()
    }

    pub fn hessian(&self, z: &[T]) -> DenseMatrix<T> {
        let n = z.len();
        let (_, dp, d2p) = profile(self.arg(z));
        let e = self.height;
        let common = (z[self.species] - T::lit(3.0) * e) * d2p / (e * e);
        let mut h = DenseMatrix::zeros(n, n);
        for j in 0..n {
            for k in 0..n {
                let mut v = common;
                if j == self.species {
                    v += dp / e;
                }
                if k == self.species {
                    v += dp / e;
                }
                h[(j, k)] = v;
            }
        }
        h
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub samples: usize,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationReport {
    pub heights: Vec<f64>,
    /// Analytic constants the sampled quantities are compared against.
    pub k1_bound: f64,
    pub k2_bound: f64,
    /// Largest sampled |Z||D²φ| and |Dφ|.
    pub k1_observed: f64,
    pub k2_observed: f64,
    /// max |∂ⱼφᵢ^E − δᵢⱼ| at fixed points for each limit height.
    pub c4_errors: Vec<f64>,
    /// sup_{|Z|≤K} |D²φᵢ^E| for each limit height.
    pub c7_sups: Vec<f64>,
    pub properties: Vec<PropertyOutcome>,
    pub passed: bool,
}

fn frob<T: Real>(m: &DenseMatrix<T>) -> f64 {
    let mut s = 0.0;
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            s += m[(i, j)].as_f64().powi(2);
        }
    }
    s.sqrt()
}

fn euclid<T: Real>(v: &[T]) -> f64 {
    v.iter().map(|x| x.as_f64().powi(2)).sum::<f64>().sqrt()
}

/// Nonnegative point with ΣZ = total, including occasional zero components.
fn split_total<T: Real, R: Rng>(total: f64, ncomp: usize, rng: &mut R) -> Vec<T> {
    let weights: Vec<f64> = (0..ncomp).map(|_| if rng.gen_bool(0.15) { 0.0 } else { rng.gen_range(0.0..1.0) }).collect();
    let sum: f64 = weights.iter().sum();
    if sum == 0.0 {
        let mut z = vec![T::zero(); ncomp];
        z[rng.gen_range(0..ncomp)] = T::lit(total);
        return z;
    }
    weights.iter().map(|w| T::lit(total * w / sum)).collect()
}

fn monotone_nonincreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-15)
}

/// Samples C2, C3, C5, C6, C8 and C9 at each height in `heights`, and the
/// limits C4 and C7 along `limit_heights`, for Z ∈ [0,∞)^{ncomp} with
/// `species = ncomp − 1` truncated components.
pub fn truncation_property_suite<T: Real, R: Rng>(
    ncomp: usize,
    heights: &[T],
    limit_heights: &[T],
    samples: usize,
    rng: &mut R,
) -> Result<TruncationReport, DiagnosticsError> {
    if ncomp < 2 {
        return Err(DiagnosticsError::Argument { name: "ncomp", message: "need at least one species".into() });
    }
    let species = ncomp - 1;
    let nf = ncomp as f64;
    let k1_bound = 2.0 * PROFILE_D1 * (2.0 * nf + 2.0).sqrt() + 6.0 * nf * profile_d2_max();
    let k2_bound = 1.0 + 3.0 * PROFILE_D1 * nf.sqrt();
    let rel = 1e-12;

    let mut k1_obs: f64 = 0.0;
    let mut k2_obs: f64 = 0.0;
    let mut fails = [0usize; 6];
    let names = ["C2", "C3", "C5", "C6", "C8", "C9"];
    let mut counts = [0usize; 6];
    for &e in heights {
        let ef = e.as_f64();
        let trs: Vec<Truncator<T>> = (0..species).map(|i| Truncator::new(e, i)).collect::<Result<_, _>>()?;
        for _ in 0..samples {
            let total = rng.gen_range(0.0..3.0 * ef);
            let z: Vec<T> = split_total(total, ncomp, rng);
            let zsum: f64 = z.iter().map(|x| x.as_f64()).sum();
            let znorm = euclid(&z);
            for tr in &trs {
                let g = tr.gradient(&z);
                let h = tr.hessian(&z);
                let v = tr.value(&z).as_f64();
                let zi = z[tr.species].as_f64();
                // C2
                let q = znorm * frob(&h);
                k1_obs = k1_obs.max(q);
                counts[0] += 1;
                if q > k1_bound {
                    fails[0] += 1;
                }
                // C3
                if zsum >= 2.0 * ef {
                    counts[1] += 1;
                    if g.iter().any(|x| *x != T::zero()) {
                        fails[1] += 1;
                    }
                }
                // C5
                let gn = euclid(&g);
                k2_obs = k2_obs.max(gn);
                counts[2] += 1;
                if gn > k2_bound {
                    fails[2] += 1;
                }
                // C6
                if zsum < ef {
                    counts[3] += 1;
                    if v != zi {
                        fails[3] += 1;
                    }
                }
                // C8
                counts[4] += 1;
                if v > zi + 3.0 * zsum + rel * ef {
                    fails[4] += 1;
                }
            }
            // C9: pick E₀ ≤ E and a point whose species mass reaches E₀.
            let e0 = rng.gen_range(0.0..=ef);
            let mut z9: Vec<T> = split_total(rng.gen_range(e0..=3.0 * ef + e0), ncomp, rng);
            let cs: f64 = z9[..species].iter().map(|x| x.as_f64()).sum();
            if cs < e0 {
                z9[0] += T::lit(e0 - cs);
            }
            let total: f64 = trs.iter().map(|tr| tr.value(&z9).as_f64()).sum();
            counts[5] += 1;
            if total < e0 * (1.0 - rel) {
                fails[5] += 1;
            }
        }
    }
    let mut properties: Vec<PropertyOutcome> = names
        .iter()
        .enumerate()
        .map(|(k, &name)| PropertyOutcome {
            name,
            passed: fails[k] == 0 && counts[k] > 0,
            samples: counts[k],
            detail: format!("{} violations", fails[k]),
        })
        .collect();

    // C4: pointwise limit of the gradient at fixed points.
    let fixed: Vec<Vec<T>> = (0..samples.clamp(1, 200))
        .map(|_| {
            let total = rng.gen_range(0.0..2.0 * limit_heights.first().map_or(1.0, |e| e.as_f64()));
            split_total(total, ncomp, rng)
        })
        .collect();
    let mut c4_errors = Vec::new();
    let mut pointwise_monotone = true;
    let mut previous: Option<Vec<f64>> = None;
    for &e in limit_heights {
        let mut errs = Vec::with_capacity(fixed.len());
        for z in &fixed {
            let mut worst: f64 = 0.0;
            for i in 0..species {
                let g = Truncator::new(e, i)?.gradient(z);
                for (j, gj) in g.iter().enumerate() {
                    let target = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((gj.as_f64() - target).abs());
                }
            }
            errs.push(worst);
        }
        if let Some(prev) = &previous {
            pointwise_monotone &= prev.iter().zip(&errs).all(|(p, c)| *c <= p + 1e-15);
        }
        c4_errors.push(errs.iter().copied().fold(0.0, f64::max));
        previous = Some(errs);
    }
    let c4_ok = pointwise_monotone && monotone_nonincreasing(&c4_errors) && c4_errors.last().map_or(false, |&e| e < 1e-12);
    properties.push(PropertyOutcome {
        name: "C4",
        passed: c4_ok,
        samples: fixed.len() * limit_heights.len(),
        detail: format!("max errors {c4_errors:?}"),
    });

    // C7: uniform decay of the Hessian on a fixed ball.
    let radius = limit_heights.first().map_or(1.0, |e| e.as_f64());
    let ball: Vec<Vec<T>> = (0..samples.clamp(1, 2000))
        .map(|_| {
            let z: Vec<T> = split_total(rng.gen_range(0.0..radius * nf.sqrt()), ncomp, rng);
            let n = euclid(&z);
            if n > radius {
                z.iter().map(|&x| x * T::lit(radius / n)).collect()
            } else {
                z
            }
        })
        .collect();
    let mut c7_sups = Vec::new();
    for &e in limit_heights {
        let mut sup: f64 = 0.0;
        for z in &ball {
            for i in 0..species {
                let h = Truncator::new(e, i)?.hessian(z);
                for a in 0..ncomp {
                    for b in 0..ncomp {
                        sup = sup.max(h[(a, b)].as_f64().abs());
                    }
                }
            }
        }
        c7_sups.push(sup);
    }
    let c7_ok = monotone_nonincreasing(&c7_sups) && c7_sups.last().map_or(false, |&s| s < 1e-12);
    properties.push(PropertyOutcome {
        name: "C7",
        passed: c7_ok,
        samples: ball.len() * limit_heights.len(),
        detail: format!("sup |D²φ| on |Z| <= {radius}: {c7_sups:?}"),
    });

    let passed = properties.iter().all(|p| p.passed);
    Ok(TruncationReport {
        heights: heights.iter().map(|e| e.as_f64()).collect(),
        k1_bound,
        k2_bound,
        k1_observed: k1_obs,
        k2_observed: k2_obs,
        c4_errors,
        c7_sups,
        properties,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_is_continuous_at_knots() {
        for x in [0.0f64, 1.0] {
            let (a, da, d2a) = profile(x - 1e-9);
            let (b, db, d2b) = profile(x + 1e-9);
            assert!((a - b).abs() < 1e-7 && (da - db).abs() < 1e-6 && (d2a - d2b).abs() < 1e-5);
        }
        let (_, d, _) = profile(0.5f64);
        assert!((d.abs() - PROFILE_D1).abs() < 1e-14);
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        let tr = Truncator::new(2.0f64, 0).unwrap();
        let z = [1.1, 0.9, 0.7];
        let g = tr.gradient(&z);
        let h = tr.hessian(&z);
        let step = 1e-6;
        for j in 0..3 {
            let mut zp = z;
            let mut zm = z;
            zp[j] += step;
            zm[j] -= step;
            let fd = (tr.value(&zp) - tr.value(&zm)) / (2.0 * step);
            assert!((fd - g[j]).abs() < 1e-8);
            let gp = tr.gradient(&zp);
            let gm = tr.gradient(&zm);
            for k in 0..3 {
                assert!(((gp[k] - gm[k]) / (2.0 * step) - h[(j, k)]).abs() < 1e-6);
            }
        }
    }
}
