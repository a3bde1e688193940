use erds::linalg::DenseMatrix;

/// Backward Euler for u_t = div(π(u)∇v) + ε-regularization, v = −1/u + δ log u,
/// π(u) = p0(1+u)² + δu², on a 1D cell grid with no-flux ends. Solved by Newton
/// with a finite-difference Jacobian.
pub struct HeatOracle {
    pub n: usize,
    pub tau: f64,
    pub eps: f64,
    pub delta: f64,
    pub p0: f64,
}

impl HeatOracle {
    fn u_of_v(&self, v: f64) -> f64 {
        let f = |u: f64| -1.0 / u + self.delta * u.ln() - v;
        let (mut lo, mut hi) = (1e-12f64.ln(), 1e12f64.ln());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid.exp()) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        (0.5 * (lo + hi)).exp()
    }

    fn v_of_u(&self, u: f64) -> f64 {
        -1.0 / u + self.delta * u.ln()
    }

    fn lap(&self, f: &[f64]) -> Vec<f64> {
        let n2 = (self.n * self.n) as f64;
        (0..self.n)
            .map(|p| {
                let mut s = 0.0;
                if p > 0 {
                    s += f[p - 1] - f[p];
                }
                if p + 1 < self.n {
                    s += f[p + 1] - f[p];
                }
                n2 * s
            })
            .collect()
    }

    fn defect(&self, u_prev: &[f64], v: &[f64]) -> Vec<f64> {
        let u: Vec<f64> = v.iter().map(|&x| self.u_of_v(x)).collect();
        let pi = |u: f64| self.p0 * (1.0 + u) * (1.0 + u) + self.delta * u * u;
        let n2 = (self.n * self.n) as f64;
        let bi = self.lap(&self.lap(v));
        (0..self.n)
            .map(|p| {
                let mut div = 0.0;
                for q in [p.wrapping_sub(1), p + 1] {
                    if q < self.n {
                        div += pi(0.5 * (u[p] + u[q])) * (v[q] - v[p]);
                    }
                }
                u[p] - u_prev[p] - self.tau * n2 * div + self.tau * self.eps * (bi[p] + v[p])
            })
            .collect()
    }

    pub fn step(&self, u_prev: &[f64]) -> Vec<f64> {
        let mut v: Vec<f64> = u_prev.iter().map(|&u| self.v_of_u(u)).collect();
        for _ in 0..50 {
            let d = self.defect(u_prev, &v);
            if d.iter().map(|x| x.abs()).fold(0.0, f64::max) < 1e-14 {
                break;
            }
            // the stencil reaches two cells, so columns five apart can share a perturbation
            let mut jac = DenseMatrix::zeros(self.n, self.n);
            for colour in 0..5 {
                let cols: Vec<usize> = (colour..self.n).step_by(5).collect();
                let mut vp = v.clone();
                let hs: Vec<f64> = cols.iter().map(|&j| 1e-7 * v[j].abs().max(1.0)).collect();
                for (&j, h) in cols.iter().zip(&hs) {
                    vp[j] += h;
                }
                let dp = self.defect(u_prev, &vp);
                for (&j, h) in cols.iter().zip(&hs) {
                    for i in j.saturating_sub(2)..(j + 3).min(self.n) {
                        jac[(i, j)] = (dp[i] - d[i]) / h;
                    }
                }
            }
            let dv = jac.solve(&d).unwrap();
            v.iter_mut().zip(&dv).for_each(|(x, d)| *x -= d);
        }
        v.iter().map(|&x| self.u_of_v(x)).collect()
    }
}
