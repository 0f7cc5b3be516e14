//! Bayesian maximisation of a noisy black-box score over the unit cube using
//! the GP upper-confidence-bound rule.

mod gp;
mod halton;

pub use gp::{GpModel, Kernel, Observation};
pub use halton::shifted_halton;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Hyperparameters are refitted at every iteration up to this many
/// observations, then every `REFIT_EVERY` iterations.
const REFIT_FULL_UNTIL: usize = 60;
const REFIT_EVERY: usize = 5;

/// Exploration weight schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaSchedule {
    /// `beta_t = 2 ln(t^2 pi^2 / (6 delta))`.
    Logarithmic { delta: f64 },
    Constant(f64),
}

impl BetaSchedule {
    pub fn beta(&self, t: usize) -> f64 {
        match *self {
            BetaSchedule::Logarithmic { delta } => {
                let t = t.max(1) as f64;
                2.0 * (t * t * std::f64::consts::PI.powi(2) / (6.0 * delta)).ln()
            }
            BetaSchedule::Constant(b) => b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcbConfig {
    /// Size of the initial design, warm-start points included.
    pub n_init: usize,
    /// Total evaluation budget.
    pub max_iter: usize,
    pub beta: BetaSchedule,
    pub seed: u64,
    /// Candidates scored per round before local refinement.
    pub candidates: usize,
    pub eps_stop: f64,
    pub k_stop: usize,
}

impl UcbConfig {
    /// Small budget used while scoring candidates inside the search.
    pub fn light(seed: u64) -> UcbConfig {
        UcbConfig { n_init: 10, max_iter: 40, ..UcbConfig::with_seed(seed) }
    }

    /// Larger budget used for the final refinement.
    pub fn thorough(seed: u64) -> UcbConfig {
        UcbConfig { n_init: 10, max_iter: 200, ..UcbConfig::with_seed(seed) }
    }

    fn with_seed(seed: u64) -> UcbConfig {
        UcbConfig {
            n_init: 10,
            max_iter: 40,
            beta: BetaSchedule::Logarithmic { delta: 0.1 },
            seed,
            candidates: 1024,
            eps_stop: 1e-3,
            k_stop: 5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_init < 2 || self.max_iter < self.n_init {
            return Err(Error::Config(format!(
                "need 2 <= n_init <= max_iter, got {} and {}",
                self.n_init, self.max_iter
            )));
        }
        if self.candidates == 0 {
            return Err(Error::Config("candidate count must be positive".into()));
        }
        if let BetaSchedule::Logarithmic { delta } = self.beta {
            if !(delta > 0.0 && delta < 1.0) {
                return Err(Error::Config(format!("delta must lie in (0,1), got {delta}")));
            }
        }
        Ok(())
    }
}

impl Default for UcbConfig {
    fn default() -> Self {
        UcbConfig::light(0)
    }
}

/// One score evaluation: a value and the standard deviation of its noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub noise: f64,
}

impl Evaluation {
    pub fn exact(value: f64) -> Evaluation {
        Evaluation { value, noise: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub u: Vec<f64>,
    /// Raw score; `None` when it was not finite.
    pub y: Option<f64>,
    pub noise: f64,
    /// Acquisition value that selected the point, absent for the initial design.
    pub acquisition: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    /// Observed point with the highest posterior mean.
    pub best_u: Vec<f64>,
    /// Posterior mean at `best_u`.
    pub estimated_best: f64,
    /// Highest raw score seen.
    pub best_observed: f64,
    pub evaluations: usize,
    pub stopped_early: bool,
    pub history: Vec<HistoryEntry>,
}

struct Run<'a, F> {
    score: F,
    obs: Vec<Observation>,
    finite: Vec<bool>,
    history: &'a mut Vec<HistoryEntry>,
}

impl<F: FnMut(&[f64]) -> Evaluation> Run<'_, F> {
    fn evaluate(&mut self, u: Vec<f64>, acquisition: Option<f64>) {
        let e = (self.score)(&u);
        let ok = e.value.is_finite();
        let noise = if e.noise.is_finite() { e.noise.abs() } else { 0.0 };
        self.history.push(HistoryEntry { u: u.clone(), y: ok.then_some(e.value), noise, acquisition });
        self.obs.push(Observation { u, y: e.value, noise_estimate: noise });
        self.finite.push(ok);
    }

    /// Observations with non-finite scores replaced by the worst finite one.
    fn imputed(&self) -> Option<Vec<Observation>> {
        let floor = self
            .obs
            .iter()
            .zip(&self.finite)
            .filter(|(_, ok)| **ok)
            .map(|(o, _)| o.y)
            .fold(f64::INFINITY, f64::min);
        if !floor.is_finite() {
            return None;
        }
        Some(
            self.obs
                .iter()
                .zip(&self.finite)
                .map(|(o, ok)| if *ok { o.clone() } else { Observation { y: floor, ..o.clone() } })
                .collect(),
        )
    }
}

fn ucb(model: &GpModel, beta: f64, pts: &[Vec<f64>]) -> Vec<f64> {
    let sb = beta.max(0.0).sqrt();
    model.posterior_batch(pts).into_iter().map(|(m, v)| m + sb * v.sqrt()).collect()
}

/// Compass search on the acquisition surface starting from `start`.
fn refine(model: &GpModel, beta: f64, start: Vec<f64>, start_val: f64) -> (Vec<f64>, f64) {
    let dim = start.len();
    let (mut x, mut fx) = (start, start_val);
    let mut step = 0.05;
    let mut budget = 40 * dim.max(1);
    while step > 1e-3 && budget > 0 {
        let polls: Vec<Vec<f64>> = (0..dim)
            .flat_map(|d| {
                [-step, step].into_iter().map({
                    let x = &x;
                    move |s| {
                        let mut p = x.clone();
                        p[d] = (p[d] + s).clamp(0.0, 1.0);
                        p
                    }
                })
            })
            .collect();
        budget = budget.saturating_sub(polls.len());
        let vals = ucb(model, beta, &polls);
        let (bi, bv) = vals.iter().copied().enumerate().fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        if bv > fx {
            x = polls[bi].clone();
            fx = bv;
        } else {
            step *= 0.5;
        }
    }
    (x, fx)
}

/// Maximises `score` over `[0,1]^dim`.
///
/// `warm_start` points are evaluated first and count toward the initial
/// design. Non-finite scores are kept in the history but enter the model at
/// the worst finite value seen so far.
pub fn optimize<F>(dim: usize, score: F, cfg: &UcbConfig, warm_start: &[Vec<f64>]) -> Result<OptimizeResult>
where
    F: FnMut(&[f64]) -> Evaluation,
{
    cfg.validate()?;
    if let Some(w) = warm_start.iter().find(|w| w.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, got: w.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut history = Vec::new();
    let mut run = Run { score, obs: Vec::new(), finite: Vec::new(), history: &mut history };

    if dim == 0 {
        run.evaluate(Vec::new(), None);
        let y = run.obs[0].y;
        if !y.is_finite() {
            return Err(Error::AllNonFinite);
        }
        return Ok(OptimizeResult {
            best_u: Vec::new(),
            estimated_best: y,
            best_observed: y,
            evaluations: 1,
            stopped_early: false,
            history,
        });
    }

    for w in warm_start.iter().take(cfg.max_iter) {
        run.evaluate(w.iter().map(|v| v.clamp(0.0, 1.0)).collect(), None);
    }
    let fill = cfg.n_init.saturating_sub(run.obs.len());
    for u in shifted_halton(dim, fill, &mut rng) {
        run.evaluate(u, None);
    }

    let mut kernel: Option<Kernel> = None;
    let mut since_refit = 0;
    let mut stall = 0;
    let mut stopped_early = false;
    while run.obs.len() < cfg.max_iter {
        let Some(data) = run.imputed() else {
            // Nothing finite yet: keep sampling the design.
            let u = shifted_halton(dim, 1, &mut rng).remove(0);
            run.evaluate(u, None);
            continue;
        };
        let model = match &kernel {
            Some(k) if data.len() > REFIT_FULL_UNTIL && since_refit < REFIT_EVERY => {
                since_refit += 1;
                GpModel::with_kernel(&data, k.clone())?
            }
            _ => {
                since_refit = 1;
                GpModel::fit(&data)?
            }
        };
        kernel = Some(model.kernel().clone());

        let beta = cfg.beta.beta(data.len() + 1);
        let cands = shifted_halton(dim, cfg.candidates, &mut rng);
        let vals = ucb(&model, beta, &cands);
        let (bi, bv) = vals.iter().copied().enumerate().fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        let (u, acq) = refine(&model, beta, cands[bi].clone(), bv);

        let incumbent = incumbent(&model, &run.obs, &run.finite).1;
        if acq - incumbent < cfg.eps_stop {
            stall += 1;
            if stall >= cfg.k_stop {
                stopped_early = true;
                break;
            }
        } else {
            stall = 0;
        }
        run.evaluate(u, Some(acq));
    }

    let data = run.imputed().ok_or(Error::AllNonFinite)?;
    let model = match kernel {
        Some(k) if data.len() > REFIT_FULL_UNTIL => GpModel::with_kernel(&data, k)?,
        _ => GpModel::fit(&data)?,
    };
    let (best_idx, estimated_best) = incumbent(&model, &run.obs, &run.finite);
    let best_observed = run
        .obs
        .iter()
        .zip(&run.finite)
        .filter(|(_, ok)| **ok)
        .map(|(o, _)| o.y)
        .fold(f64::NEG_INFINITY, f64::max);
    let best_u = run.obs[best_idx].u.clone();
    let evaluations = run.obs.len();
    Ok(OptimizeResult { best_u, estimated_best, best_observed, evaluations, stopped_early, history })
}

/// Index and posterior mean of the finite observation with the highest mean.
fn incumbent(model: &GpModel, obs: &[Observation], finite: &[bool]) -> (usize, f64) {
    let pts: Vec<Vec<f64>> = obs.iter().map(|o| o.u.clone()).collect();
    model
        .posterior_batch(&pts)
        .into_iter()
        .enumerate()
        .filter(|(i, _)| finite[*i])
        .fold((0, f64::NEG_INFINITY), |a, (i, (m, _))| if m > a.1 { (i, m) } else { a })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad2(u: &[f64]) -> Evaluation {
        Evaluation::exact(-((u[0] - 0.3).powi(2) + (u[1] - 0.7).powi(2)))
    }

    #[test]
    fn beta_schedule_grows() {
        let b = BetaSchedule::Logarithmic { delta: 0.1 };
        let expected = 2.0 * (std::f64::consts::PI.powi(2) / 0.6).ln();
        assert!((b.beta(1) - expected).abs() < 1e-12);
        assert!(b.beta(10) > b.beta(2));
    }

    #[test]
    fn finds_quadratic_peak() {
        let r = optimize(2, quad2, &UcbConfig::light(3), &[]).unwrap();
        assert!((r.best_u[0] - 0.3).abs() < 0.1 && (r.best_u[1] - 0.7).abs() < 0.1, "{:?}", r.best_u);
        assert_eq!(r.history.len(), r.evaluations);
    }

    #[test]
    fn constant_score() {
        let r = optimize(3, |_| Evaluation::exact(1.0), &UcbConfig::light(1), &[]).unwrap();
        assert_eq!(r.estimated_best, 1.0);
        assert_eq!(r.best_u.len(), 3);
    }

    #[test]
    fn larger_budget_never_worse() {
        let f = |u: &[f64]| Evaluation::exact((9.0 * u[0]).sin() * (5.0 * u[1]).cos());
        let mut last = f64::NEG_INFINITY;
        for budget in [12, 20, 30, 45] {
            let cfg = UcbConfig { max_iter: budget, ..UcbConfig::light(4) };
            let r = optimize(2, f, &cfg, &[]).unwrap();
            assert!(r.best_observed >= last);
            last = r.best_observed;
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let a = optimize(2, quad2, &UcbConfig::light(11), &[]).unwrap();
        let b = optimize(2, quad2, &UcbConfig::light(11), &[]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn warm_start_is_evaluated_first() {
        let warm = vec![vec![0.3, 0.7]];
        let r = optimize(2, quad2, &UcbConfig::light(5), &warm).unwrap();
        assert_eq!(r.history[0].u, warm[0]);
        assert!(r.best_observed >= -1e-12);
    }

    #[test]
    fn non_finite_scores() {
        let r = optimize(1, |u| Evaluation::exact(if u[0] < 0.5 { f64::NAN } else { u[0] }), &UcbConfig::light(2), &[])
            .unwrap();
        assert!(r.best_u[0] > 0.9);
        assert!(r.history.iter().any(|h| h.y.is_none()));
        let err = optimize(1, |_| Evaluation::exact(f64::NEG_INFINITY), &UcbConfig::light(2), &[]);
        assert!(matches!(err, Err(Error::AllNonFinite)));
    }

    #[test]
    fn zero_dimensional() {
        let r = optimize(0, |_| Evaluation::exact(2.5), &UcbConfig::light(0), &[]).unwrap();
        assert_eq!(r.estimated_best, 2.5);
        assert!(r.best_u.is_empty());
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = UcbConfig { n_init: 50, ..UcbConfig::light(0) };
        assert!(matches!(optimize(1, quad2, &cfg, &[]), Err(Error::Config(_))));
        assert!(matches!(optimize(2, quad2, &UcbConfig::light(0), &[vec![0.1]]), Err(Error::DimensionMismatch { .. })));
    }
}
