//! Gaussian-process regression with a squared-exponential ARD kernel.
//!
//! Targets are standardised before fitting; predictions are mapped back to the
//! caller's units. Hyperparameters are chosen by maximising the log marginal
//! likelihood over a small log-grid.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const LENGTH_GRID: [f64; 6] = [0.05, 0.1, 0.2, 0.4, 0.8, 1.6];
const SIGNAL_GRID: [f64; 3] = [0.25, 1.0, 4.0];
const NOISE_FLOOR: f64 = 1e-6;

/// A noisy observation of the objective at a point of the unit cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub u: Vec<f64>,
    pub y: f64,
    /// Standard deviation of the observation noise, in the units of `y`.
    pub noise_estimate: f64,
}

/// Squared-exponential kernel on the standardised scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub signal_variance: f64,
    pub length_scales: Vec<f64>,
}

impl Kernel {
    pub fn isotropic(signal_variance: f64, length_scale: f64, dim: usize) -> Kernel {
        Kernel { signal_variance, length_scales: vec![length_scale; dim] }
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        let r2: f64 = a
            .iter()
            .zip(b)
            .zip(&self.length_scales)
            .map(|((x, y), l)| {
                let d = (x - y) / l;
                d * d
            })
            .sum();
        self.signal_variance * (-0.5 * r2).exp()
    }
}

/// A fitted GP posterior.
#[derive(Debug, Clone)]
pub struct GpModel {
    x: Vec<Vec<f64>>,
    kernel: Kernel,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    y_mean: f64,
    y_scale: f64,
    lml: f64,
}

struct Standardised {
    y: DVector<f64>,
    noise: Vec<f64>,
    mean: f64,
    scale: f64,
}

fn standardise(obs: &[Observation]) -> Standardised {
    let n = obs.len() as f64;
    let mean = obs.iter().map(|o| o.y).sum::<f64>() / n;
    let var = obs.iter().map(|o| (o.y - mean).powi(2)).sum::<f64>() / n;
    let scale = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
    let y = DVector::from_iterator(obs.len(), obs.iter().map(|o| (o.y - mean) / scale));
    let noise = obs.iter().map(|o| ((o.noise_estimate / scale).powi(2)).max(NOISE_FLOOR)).collect();
    Standardised { y, noise, mean, scale }
}

/// Cholesky factor of `K + diag(noise)`, adding jitter if needed.
fn factor(x: &[Vec<f64>], kernel: &Kernel, noise: &[f64]) -> Option<Cholesky<f64, Dyn>> {
    let n = x.len();
    let mut k = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = kernel.eval(&x[i], &x[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
        k[(i, i)] += noise[i];
    }
    let mut jitter = 0.0;
    for _ in 0..8 {
        let mut kj = k.clone();
        for i in 0..n {
            kj[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(kj) {
            return Some(c);
        }
        jitter = if jitter == 0.0 { 1e-10 * kernel.signal_variance } else { jitter * 10.0 };
    }
    None
}

fn log_marginal(chol: &Cholesky<f64, Dyn>, y: &DVector<f64>) -> (f64, DVector<f64>) {
    let alpha = chol.solve(y);
    let log_det: f64 = chol.l_dirty().diagonal().iter().take(y.len()).map(|d| d.ln()).sum();
    let n = y.len() as f64;
    let lml = -0.5 * y.dot(&alpha) - log_det - 0.5 * n * (2.0 * std::f64::consts::PI).ln();
    (lml, alpha)
}

impl GpModel {
    /// Fits the model, selecting hyperparameters by marginal likelihood.
    pub fn fit(obs: &[Observation]) -> Result<GpModel> {
        let dim = check(obs)?;
        let s = standardise(obs);
        let x: Vec<Vec<f64>> = obs.iter().map(|o| o.u.clone()).collect();
        let score = |k: &Kernel| factor(&x, k, &s.noise).map(|c| log_marginal(&c, &s.y).0);

        let mut best: Option<(f64, Kernel)> = None;
        let consider = |k: Kernel, best: &mut Option<(f64, Kernel)>| {
            if let Some(l) = score(&k) {
                if l.is_finite() && best.as_ref().is_none_or(|(b, _)| l > *b) {
                    *best = Some((l, k));
                }
            }
        };
        for &sv in &SIGNAL_GRID {
            for &ls in &LENGTH_GRID {
                consider(Kernel::isotropic(sv, ls, dim), &mut best);
            }
        }
        if dim > 1 {
            for d in 0..dim {
                let Some((_, current)) = best.clone() else { break };
                for &ls in &LENGTH_GRID {
                    if ls == current.length_scales[d] {
                        continue;
                    }
                    let mut k = current.clone();
                    k.length_scales[d] = ls;
                    consider(k, &mut best);
                }
            }
        }
        let kernel = best.map(|(_, k)| k).unwrap_or_else(|| Kernel::isotropic(1.0, 0.2, dim));
        GpModel::with_kernel(obs, kernel)
    }

    /// Fits the model with fixed hyperparameters.
    pub fn with_kernel(obs: &[Observation], kernel: Kernel) -> Result<GpModel> {
        let dim = check(obs)?;
        if kernel.length_scales.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: kernel.length_scales.len() });
        }
        if kernel.signal_variance <= 0.0 || kernel.length_scales.iter().any(|l| *l <= 0.0) {
            return Err(Error::Config("kernel hyperparameters must be positive".into()));
        }
        let s = standardise(obs);
        let x: Vec<Vec<f64>> = obs.iter().map(|o| o.u.clone()).collect();
        let chol = factor(&x, &kernel, &s.noise)
            .ok_or_else(|| Error::Config("kernel matrix is not positive definite".into()))?;
        let (lml, alpha) = log_marginal(&chol, &s.y);
        Ok(GpModel { x, kernel, chol, alpha, y_mean: s.mean, y_scale: s.scale, lml })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        self.lml
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Prior variance of the latent function, in the caller's units.
    pub fn prior_variance(&self) -> f64 {
        self.kernel.signal_variance * self.y_scale * self.y_scale
    }

    /// Posterior mean and variance at `u`.
    pub fn posterior(&self, u: &[f64]) -> (f64, f64) {
        self.posterior_batch(std::slice::from_ref(&u.to_vec()))[0]
    }

    /// Posterior mean and variance at each point.
    pub fn posterior_batch(&self, us: &[Vec<f64>]) -> Vec<(f64, f64)> {
        let n = self.x.len();
        let m = us.len();
        if m == 0 {
            return Vec::new();
        }
        let mut ks = DMatrix::<f64>::zeros(n, m);
        for (j, u) in us.iter().enumerate() {
            for (i, xi) in self.x.iter().enumerate() {
                ks[(i, j)] = self.kernel.eval(xi, u);
            }
        }
        let means = ks.transpose() * &self.alpha;
        let v = self.chol.l().solve_lower_triangular(&ks).expect("triangular factor is invertible");
        let sv = self.kernel.signal_variance;
        (0..m)
            .map(|j| {
                let var_n = (sv - v.column(j).norm_squared()).max(0.0);
                let mean = self.y_mean + self.y_scale * means[j];
                (mean, var_n * self.y_scale * self.y_scale)
            })
            .collect()
    }
}

fn check(obs: &[Observation]) -> Result<usize> {
    let first = obs.first().ok_or_else(|| Error::Empty("GP needs at least one observation".into()))?;
    let dim = first.u.len();
    if let Some(o) = obs.iter().find(|o| o.u.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, got: o.u.len() });
    }
    if obs.iter().any(|o| !o.y.is_finite()) {
        return Err(Error::Config("GP observations must be finite".into()));
    }
    Ok(dim)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(u: f64, y: f64) -> Observation {
        Observation { u: vec![u], y, noise_estimate: 0.0 }
    }

    #[test]
    fn interpolates_noiseless_data() {
        let data: Vec<Observation> = [0.1, 0.4, 0.7, 0.9].iter().map(|&u| obs(u, (6.0 * u).sin())).collect();
        let m = GpModel::fit(&data).unwrap();
        for o in &data {
            let (mean, var) = m.posterior(&o.u);
            assert!((mean - o.y).abs() < 1e-2, "{mean} vs {}", o.y);
            assert!(var < 1e-3 * m.prior_variance());
        }
    }

    #[test]
    fn recovers_prior_far_away() {
        let data = vec![obs(0.0, 1.0), obs(0.05, 2.0), obs(0.1, 0.5)];
        let m = GpModel::with_kernel(&data, Kernel::isotropic(1.0, 0.05, 1)).unwrap();
        let (mean, var) = m.posterior(&[5.0]);
        assert!((var - m.prior_variance()).abs() < 1e-9 * m.prior_variance());
        let y_mean = (1.0 + 2.0 + 0.5) / 3.0;
        assert!((mean - y_mean).abs() < 1e-9);
    }

    #[test]
    fn quadratic_from_five_samples() {
        let f = |u: f64| -(u - 0.5) * (u - 0.5);
        let data: Vec<Observation> = (0..5).map(|i| i as f64 / 4.0).map(|u| obs(u, f(u))).collect();
        let m = GpModel::fit(&data).unwrap();
        for i in 0..=100 {
            let u = i as f64 / 100.0;
            let (mean, var) = m.posterior(&[u]);
            assert!((mean - f(u)).abs() < 0.05, "u = {u}: {mean} vs {}", f(u));
            assert!(var >= 0.0);
        }
    }

    #[test]
    fn rejects_empty_and_ragged() {
        assert!(matches!(GpModel::fit(&[]), Err(Error::Empty(_))));
        let ragged = vec![obs(0.0, 1.0), Observation { u: vec![0.0, 1.0], y: 0.0, noise_estimate: 0.0 }];
        assert!(matches!(GpModel::fit(&ragged), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn constant_targets() {
        let data = vec![obs(0.2, 3.0), obs(0.8, 3.0)];
        let m = GpModel::fit(&data).unwrap();
        assert_eq!(m.posterior(&[0.5]).0, 3.0);
    }
}
