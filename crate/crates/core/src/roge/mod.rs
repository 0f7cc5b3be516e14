//! Genetic search over formula structures with GP-UCB parameter synthesis
//! for each candidate template.
//!
//! Candidates are scored by the discrimination
//! `G = (mean_p - mean_n) / (std_p + std_n)` of their robustness over the two
//! classes, and ranked by the fitness `G - g_avg * p^size`.

mod calibrate;
mod genetic;

use std::collections::{HashMap, HashSet};
use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use calibrate::{calibrate, choose_offset, class_stats, Calibration};
pub use genetic::{
    generate_initial_formulae, mutate, mutate_template, random_tree, recombine, recombine_at,
    recombine_templates, seed_family,
};

use crate::data::{pairwise_sum, robustness_values, Dataset};
use crate::gpucb::{optimize, Evaluation, HistoryEntry, OptimizeResult, UcbConfig};
use crate::pstl::{
    canonicalize, default_space, instantiate, placeholders, ParameterConfiguration, ParameterSpace, ParametricFormula,
    Slot,
};
use crate::stl::{format, Expr, Formula};
use crate::{Error, Result};

/// Score given to candidates whose robustness statistics are not finite.
pub const LARGE: f64 = 1e9;
const EPS_SIGMA: f64 = 1e-9;
const SELECTION_EPS: f64 = 1e-9;

/// Discrimination of `f` on `d` and the standard error of that estimate.
///
/// Formulas that cannot be evaluated, or whose robustness is infinite on
/// some trace (e.g. `true`), score `-LARGE`.
pub fn discrimination(f: &Formula, d: &Dataset) -> (f64, f64) {
    let stats = |traces| -> Option<(f64, f64, f64)> {
        let v = robustness_values(f, traces).ok()?;
        if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
            return None;
        }
        let n = v.len() as f64;
        let mean = pairwise_sum(&v) / n;
        let dev: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
        Some((mean, (pairwise_sum(&dev) / n).sqrt(), n))
    };
    match (stats(d.positives()), stats(d.negatives())) {
        (Some((mp, sp, np)), Some((mn, sn, nn))) => discrimination_from_stats((mp, sp, np), (mn, sn, nn)),
        _ => (-LARGE, 0.0),
    }
}

/// Discrimination from `(mean, population std, count)` of each class.
pub fn discrimination_from_stats(p: (f64, f64, f64), n: (f64, f64, f64)) -> (f64, f64) {
    let denom = p.1 + n.1 + EPS_SIGMA;
    let g = (p.0 - n.0) / denom;
    let se = (p.1 * p.1 / p.2 + n.1 * n.1 / n.2).sqrt() / denom;
    if g.is_finite() && se.is_finite() {
        (g, se)
    } else {
        (-LARGE, 0.0)
    }
}

/// Default penalty base: a formula of size 5 is charged half of `g_avg`.
pub fn default_penalty_base() -> f64 {
    0.5f64.powf(1.0 / 5.0)
}

/// `g_avg * p^size`.
pub fn size_penalty_with(size: usize, g_avg: f64, p: f64) -> f64 {
    g_avg * p.powi(size as i32)
}

pub fn size_penalty<V>(f: &Expr<V>, g_avg: f64) -> f64 {
    size_penalty_with(f.size(), g_avg, default_penalty_base())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    #[default]
    Roulette,
    Trunc,
}

impl std::str::FromStr for Selection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "roulette" => Ok(Selection::Roulette),
            "trunc" => Ok(Selection::Trunc),
            other => Err(Error::Config(format!("unknown selection `{other}` (expected roulette or trunc)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RogeConfig {
    /// Population size.
    pub ne: usize,
    /// Maximum number of generations.
    pub ng: usize,
    /// Probability of mutation rather than recombination.
    pub alpha: f64,
    /// Maximum size of the random initial formulas.
    pub s: usize,
    /// Offspring larger than this are redrawn.
    pub max_size: usize,
    pub seed: u64,
    pub selection: Selection,
    pub gpucb_light: UcbConfig,
    pub gpucb_final: UcbConfig,
    pub penalty_p: f64,
    /// Early stop after this many generations without improvement.
    pub patience: usize,
    pub min_improvement: f64,
}

impl Default for RogeConfig {
    fn default() -> Self {
        RogeConfig {
            ne: 40,
            ng: 20,
            alpha: 0.1,
            s: 5,
            max_size: 5,
            seed: 0,
            selection: Selection::Roulette,
            gpucb_light: UcbConfig::light(0),
            gpucb_final: UcbConfig::thorough(0),
            penalty_p: default_penalty_base(),
            patience: 5,
            min_improvement: 1e-4,
        }
    }
}

impl RogeConfig {
    pub fn with_seed(seed: u64) -> Self {
        RogeConfig { seed, ..RogeConfig::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ne < 4 || self.ne % 2 != 0 {
            return Err(Error::Config(format!("population size must be even and at least 4, got {}", self.ne)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("mutation probability must lie in [0, 1], got {}", self.alpha)));
        }
        if self.s == 0 || self.max_size < self.s {
            return Err(Error::Config(format!("need 1 <= s <= max_size, got {} and {}", self.s, self.max_size)));
        }
        if !(self.penalty_p > 0.0 && self.penalty_p <= 1.0) {
            return Err(Error::Config(format!("penalty base must lie in (0, 1], got {}", self.penalty_p)));
        }
        self.gpucb_light.validate()?;
        self.gpucb_final.validate()
    }
}

/// A template together with its best parameters and scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    #[serde(with = "template_text")]
    pub template: ParametricFormula,
    pub best_theta: ParameterConfiguration,
    pub g_score: f64,
    pub noise: f64,
    /// `g_score - S`, relative to the generation the candidate was ranked in.
    pub fitness: f64,
}

impl ScoredCandidate {
    pub fn size(&self) -> usize {
        self.template.size()
    }

    pub fn text(&self) -> String {
        format(&self.template)
    }

    pub fn formula(&self) -> Result<Formula> {
        instantiate(&self.template, &self.best_theta)
    }

    fn is_valid(&self) -> bool {
        self.g_score > -LARGE
    }
}

/// A population ranked by descending fitness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generation {
    pub index: usize,
    pub candidates: Vec<ScoredCandidate>,
    /// Mean discrimination over the members with a finite score.
    pub g_avg: f64,
}

impl Generation {
    /// Recomputes fitness against the members' mean discrimination and sorts.
    ///
    /// Ties are broken by smaller size, then by template text.
    pub fn rank(index: usize, mut candidates: Vec<ScoredCandidate>, penalty_p: f64) -> Generation {
        let valid: Vec<f64> = candidates.iter().filter(|c| c.is_valid()).map(|c| c.g_score).collect();
        let g_avg = if valid.is_empty() { 0.0 } else { pairwise_sum(&valid) / valid.len() as f64 };
        for c in &mut candidates {
            c.fitness = if c.is_valid() { c.g_score - size_penalty_with(c.size(), g_avg, penalty_p) } else { c.g_score };
        }
        candidates.sort_by(|a, b| {
            b.fitness
                .total_cmp(&a.fitness)
                .then(a.size().cmp(&b.size()))
                .then_with(|| a.text().cmp(&b.text()))
        });
        Generation { index, candidates, g_avg }
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn best_fitness(&self) -> f64 {
        self.candidates.first().map_or(f64::NEG_INFINITY, |c| c.fitness)
    }

    /// Member with the highest discrimination; ties go to the better rank.
    pub fn best_discrimination(&self) -> Option<&ScoredCandidate> {
        self.candidates.iter().fold(None, |best: Option<&ScoredCandidate>, c| match best {
            Some(b) if b.g_score >= c.g_score => Some(b),
            _ => Some(c),
        })
    }
}

/// Learns the parameters of `p` on `d` by maximising the discrimination.
///
/// `hint` supplies known values for some placeholders; when present the
/// completed hint (missing coordinates at the centre of the box) is evaluated
/// first. The returned score is the re-evaluated discrimination of the
/// chosen parameters, not the GP estimate.
pub fn learning_parameters(
    p: &ParametricFormula,
    d: &Dataset,
    space: &ParameterSpace,
    cfg: &UcbConfig,
    hint: Option<&ParameterConfiguration>,
) -> Result<ScoredCandidate> {
    Ok(learn(p, d, space, cfg, hint)?.0)
}

/// [`learning_parameters`] plus the optimiser trace.
pub fn learn(
    p: &ParametricFormula,
    d: &Dataset,
    space: &ParameterSpace,
    cfg: &UcbConfig,
    hint: Option<&ParameterConfiguration>,
) -> Result<(ScoredCandidate, OptimizeResult)> {
    let score = |u: &[f64]| match space.from_unit_cube(u).and_then(|theta| instantiate(p, &theta)) {
        Ok(f) => {
            let (g, noise) = discrimination(&f, d);
            Evaluation { value: if g > -LARGE { g } else { f64::NEG_INFINITY }, noise }
        }
        Err(_) => Evaluation::exact(f64::NAN),
    };
    let warm: Vec<Vec<f64>> = hint.map(|h| vec![hint_to_unit(space, h)]).unwrap_or_default();
    let result = match optimize(space.len(), score, cfg, &warm) {
        Ok(r) => r,
        Err(Error::AllNonFinite) => {
            // Unscoreable template: report it with a centre configuration.
            let best_theta = space.from_unit_cube(&vec![0.5; space.len()])?;
            let c = ScoredCandidate { template: p.clone(), best_theta, g_score: -LARGE, noise: 0.0, fitness: -LARGE };
            let empty = OptimizeResult {
                best_u: vec![0.5; space.len()],
                estimated_best: f64::NEG_INFINITY,
                best_observed: f64::NEG_INFINITY,
                evaluations: cfg.max_iter,
                stopped_early: false,
                history: Vec::new(),
            };
            return Ok((c, empty));
        }
        Err(e) => return Err(e),
    };
    let best_theta = space.from_unit_cube(&result.best_u)?;
    let (g_score, noise) = discrimination(&instantiate(p, &best_theta)?, d);
    let c = ScoredCandidate { template: p.clone(), best_theta, g_score, noise, fitness: g_score };
    Ok((c, result))
}

fn hint_to_unit(space: &ParameterSpace, hint: &ParameterConfiguration) -> Vec<f64> {
    space
        .dims()
        .iter()
        .map(|d| match hint.get(&d.name) {
            Some(v) if d.hi > d.lo => ((v - d.lo) / (d.hi - d.lo)).clamp(0.0, 1.0),
            Some(_) => 0.0,
            None => 0.5,
        })
        .collect()
}

/// Fitness-proportional selection of `count` candidates without replacement.
///
/// Weights are `fitness - min + ε` over the scoreable candidates; unscoreable
/// ones get weight `ε`. When all fitness values are equal the first `count`
/// in rank order are returned.
pub fn sample<R: Rng + ?Sized>(gen: &Generation, count: usize, rng: &mut R) -> Vec<ScoredCandidate> {
    let count = count.min(gen.len());
    let cands = &gen.candidates;
    let first = cands.first().map(|c| c.fitness);
    if count == gen.len() || cands.iter().all(|c| Some(c.fitness) == first) {
        return cands[..count].to_vec();
    }
    let min = cands.iter().filter(|c| c.is_valid()).map(|c| c.fitness).fold(f64::INFINITY, f64::min);
    let mut weights: Vec<f64> = cands
        .iter()
        .map(|c| if c.is_valid() { c.fitness - min + SELECTION_EPS } else { SELECTION_EPS })
        .collect();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let total: f64 = weights.iter().sum();
        let mut x = rng.random::<f64>() * total;
        let mut pick = weights.iter().rposition(|w| *w > 0.0).expect("a positive weight remains");
        for (i, w) in weights.iter().enumerate() {
            if *w > 0.0 && x < *w {
                pick = i;
                break;
            }
            x -= w;
        }
        out.push(cands[pick].clone());
        weights[pick] = 0.0;
    }
    out
}

/// The top `count` candidates in rank order.
pub fn truncate(gen: &Generation, count: usize) -> Vec<ScoredCandidate> {
    gen.candidates.iter().take(count).cloned().collect()
}

/// An offspring template with the parameter values inherited from its parents.
#[derive(Debug, Clone, PartialEq)]
pub struct Offspring {
    pub template: ParametricFormula,
    pub hint: ParameterConfiguration,
}

/// Template of `e` with canonical placeholders, plus the known values.
fn split_genes(e: &Expr<Option<f64>>) -> Offspring {
    let template = canonicalize(&e.map(&mut |_| Slot::param("p")));
    let names = placeholders(&template);
    let mut values = Vec::new();
    e.visit(&mut |n| match n {
        Expr::Atom { threshold, .. } => values.push(*threshold),
        Expr::Eventually(i, _) | Expr::Globally(i, _) | Expr::Until(i, _, _) => {
            values.push(i.start);
            values.push(i.end);
        }
        _ => {}
    });
    let hint = names.iter().zip(values).filter_map(|(ph, v)| v.map(|v| (ph.name.clone(), v))).collect();
    Offspring { template, hint }
}

fn genes(c: &ScoredCandidate) -> Expr<Option<f64>> {
    c.template.map(&mut |s| match s {
        Slot::Value(v) => Some(*v),
        Slot::Param(name) => c.best_theta.get(name),
    })
}

/// Breeds exactly `ne` offspring from `parents`: with probability `alpha` one
/// parent is mutated, otherwise two distinct parents are recombined.
/// Offspring larger than `max_size` are discarded and redrawn.
pub fn evolve<R: Rng + ?Sized>(
    parents: &[ScoredCandidate],
    alpha: f64,
    ne: usize,
    max_size: usize,
    vars: &[String],
    rng: &mut R,
) -> Vec<Offspring> {
    assert!(parents.len() >= 2, "evolve needs at least two parents");
    let g: Vec<Expr<Option<f64>>> = parents.iter().map(genes).collect();
    let mut out = Vec::with_capacity(ne);
    let mut attempts = 0usize;
    while out.len() < ne {
        attempts += 1;
        // Size limit relaxed if a pathological parent set keeps failing.
        let limit = if attempts > 100 * ne { usize::MAX } else { max_size };
        let p: f64 = rng.random();
        if p <= alpha {
            let a = &g[rng.random_range(0..g.len())];
            let child = mutate(a, vars, &mut || None, rng);
            if child.size() <= limit {
                out.push(split_genes(&child));
            }
        } else {
            let i = rng.random_range(0..g.len());
            let mut j = rng.random_range(0..g.len() - 1);
            if j >= i {
                j += 1;
            }
            let (x, y) = recombine(&g[i], &g[j], rng);
            for child in [x, y] {
                if out.len() < ne && child.size() <= limit {
                    out.push(split_genes(&child));
                }
            }
        }
    }
    out
}

/// Independent seed for stream `stream` of `master`.
pub fn split_seed(master: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream.wrapping_add(1));
    rng.next_u64()
}

fn score_all(
    templates: &[(ParametricFormula, Option<ParameterConfiguration>)],
    d: &Dataset,
    cfg: &RogeConfig,
    generation: usize,
) -> Result<Vec<ScoredCandidate>> {
    templates
        .par_iter()
        .enumerate()
        .map(|(i, (p, hint))| {
            let space = default_space(p, d)?;
            let ucb = UcbConfig { seed: split_seed(cfg.seed, ((generation as u64) << 32) | i as u64), ..cfg.gpucb_light.clone() };
            learning_parameters(p, d, &space, &ucb, hint.as_ref())
        })
        .collect()
}

/// Scores `jobs`, reusing earlier results for templates already scored.
///
/// Only the first occurrence of a new template is optimised; later copies in
/// the same batch share its result.
fn score_memo(
    jobs: Vec<(ParametricFormula, Option<ParameterConfiguration>)>,
    memo: &mut HashMap<String, ScoredCandidate>,
    d: &Dataset,
    cfg: &RogeConfig,
    generation: usize,
) -> Result<Vec<ScoredCandidate>> {
    let texts: Vec<String> = jobs.iter().map(|(p, _)| format(p)).collect();
    let mut queued = HashSet::new();
    let fresh: Vec<_> = jobs
        .into_iter()
        .zip(&texts)
        .filter(|(_, t)| !memo.contains_key(*t) && queued.insert((*t).clone()))
        .map(|(j, _)| j)
        .collect();
    for c in score_all(&fresh, d, cfg, generation)? {
        memo.insert(c.text(), c);
    }
    Ok(texts.iter().map(|t| memo[t].clone()).collect())
}

/// Keeps the best-ranked copy of each template, then refills with duplicates
/// if fewer than `count` distinct templates exist.
fn survivors<R: Rng + ?Sized>(pool: &Generation, count: usize, selection: Selection, rng: &mut R) -> Vec<ScoredCandidate> {
    let mut seen = HashSet::new();
    let (mut unique, mut dups): (Vec<_>, Vec<_>) =
        pool.candidates.iter().cloned().partition(|c| seen.insert(c.text()));
    if unique.len() <= count {
        unique.extend(dups.drain(..count - unique.len()));
        return unique;
    }
    // The best-fitness and best-discrimination members always survive.
    let best_g = unique
        .iter()
        .enumerate()
        .fold(0, |b, (i, c)| if c.g_score > unique[b].g_score { i } else { b });
    let mut elite = vec![unique[0].clone()];
    if best_g != 0 {
        elite.push(unique.remove(best_g));
    }
    unique.remove(0);
    let rest = Generation { index: pool.index, candidates: unique, g_avg: pool.g_avg };
    let need = count - elite.len();
    elite.extend(match selection {
        Selection::Roulette => sample(&rest, need, rng),
        Selection::Trunc => truncate(&rest, need),
    });
    elite
}

/// Outcome of [`roge`].
#[derive(Debug, Clone, PartialEq)]
pub struct RogeRun {
    pub generation: Generation,
    /// Best fitness after initialisation and after each generation.
    pub best_fitness_curve: Vec<f64>,
    pub generations_run: usize,
}

/// Runs the genetic search and returns the final ranked generation.
pub fn roge(d: &Dataset, cfg: &RogeConfig) -> Result<Generation> {
    Ok(roge_run(d, cfg)?.generation)
}

pub fn roge_run(d: &Dataset, cfg: &RogeConfig) -> Result<RogeRun> {
    cfg.validate()?;
    d.check_minable()?;
    let vars = d.variables().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(split_seed(cfg.seed, u64::MAX - 1));

    let mut memo = HashMap::new();
    let init: Vec<_> = generate_initial_formulae(cfg.ne, cfg.s, &vars, &mut rng).into_iter().map(|p| (p, None)).collect();
    let mut gen = Generation::rank(0, score_memo(init, &mut memo, d, cfg, 0)?, cfg.penalty_p);
    let mut curve = vec![gen.best_fitness()];
    let mut record = gen.best_fitness();
    let mut stall = 0;
    let mut generations_run = 0;

    for k in 1..=cfg.ng {
        let parents = match cfg.selection {
            Selection::Roulette => sample(&gen, cfg.ne / 2, &mut rng),
            Selection::Trunc => truncate(&gen, cfg.ne / 2),
        };
        let offspring = evolve(&parents, cfg.alpha, cfg.ne, cfg.max_size, &vars, &mut rng);
        let jobs: Vec<_> = offspring.into_iter().map(|o| (o.template, Some(o.hint))).collect();
        let scored = score_memo(jobs, &mut memo, d, cfg, k)?;

        let mut pool = gen.candidates;
        pool.extend(scored);
        let pool = Generation::rank(k, pool, cfg.penalty_p);
        let next = survivors(&pool, cfg.ne, cfg.selection, &mut rng);
        gen = Generation::rank(k, next, cfg.penalty_p);
        generations_run = k;

        let best = gen.best_fitness();
        curve.push(best);
        if best - record < cfg.min_improvement {
            stall += 1;
        } else {
            stall = 0;
        }
        record = record.max(best);
        if stall >= cfg.patience {
            break;
        }
    }
    Ok(RogeRun { generation: gen, best_fitness_curve: curve, generations_run })
}

/// Result of a full mining run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiningResult {
    pub schema_version: u32,
    /// Calibrated formula.
    pub best_formula: String,
    /// Formula before calibration.
    pub raw_formula: String,
    pub template: String,
    pub theta: ParameterConfiguration,
    pub g_score: f64,
    pub fitness: f64,
    /// Mean discrimination of the final generation, used by the size penalty.
    pub generation_g_avg: f64,
    pub calibration_offset: f64,
    pub training_misclassification: f64,
    pub generations_run: usize,
    pub seed: u64,
    pub config: RogeConfig,
    pub best_fitness_curve: Vec<f64>,
    pub elapsed_seconds: f64,
    /// Optimiser trace of the final refinement; not part of the JSON result.
    #[serde(skip)]
    pub refinement_history: Vec<HistoryEntry>,
}

/// Searches, refines the most discriminating candidate with the larger
/// budget, and calibrates it on `d`.
pub fn mine(d: &Dataset, cfg: &RogeConfig) -> Result<MiningResult> {
    let start = Instant::now();
    let run = roge_run(d, cfg)?;
    let gen = &run.generation;
    let best = gen.best_discrimination().ok_or_else(|| Error::Empty("empty generation".into()))?;
    if !best.is_valid() {
        return Err(Error::Empty("no candidate has a finite discrimination".into()));
    }
    let space = default_space(&best.template, d)?;
    let ucb = UcbConfig { seed: split_seed(cfg.seed, u64::MAX - 2), ..cfg.gpucb_final.clone() };
    let (refined, opt) = learn(&best.template, d, &space, &ucb, Some(&best.best_theta))?;
    let mut chosen = if refined.g_score > best.g_score { refined } else { best.clone() };
    chosen.fitness = chosen.g_score - size_penalty_with(chosen.size(), gen.g_avg, cfg.penalty_p);

    let raw = chosen.formula()?;
    let cal = calibrate(&raw, d)?;
    let training_misclassification = cal.errors as f64 / d.len() as f64;
    Ok(MiningResult {
        schema_version: 1,
        best_formula: format(&cal.formula),
        raw_formula: format(&raw),
        template: chosen.text(),
        theta: chosen.best_theta.clone(),
        g_score: chosen.g_score,
        fitness: chosen.fitness,
        generation_g_avg: gen.g_avg,
        calibration_offset: cal.alpha,
        training_misclassification,
        generations_run: run.generations_run,
        seed: cfg.seed,
        config: cfg.clone(),
        best_fitness_curve: run.best_fitness_curve,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        refinement_history: opt.history,
    })
}

pub(crate) mod template_text {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::pstl::{parse_template, ParametricFormula};
    use crate::stl::format;

    pub fn serialize<S: Serializer>(p: &ParametricFormula, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format(p))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ParametricFormula, D::Error> {
        let text = String::deserialize(d)?;
        parse_template(&text).map_err(serde::de::Error::custom)
    }
}

pub(crate) mod formula_text {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::stl::{format, parse, Formula};

    pub fn serialize<S: Serializer>(f: &Formula, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format(f))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Formula, D::Error> {
        let text = String::deserialize(d)?;
        parse(&text).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pstl::parse_template;
    use crate::stl::{parse, Trace};

    fn traces(vals: &[f64]) -> Vec<Trace> {
        vals.iter().map(|v| Trace::univariate("x", 1.0, vec![*v, *v]).unwrap()).collect()
    }

    fn dataset(p: &[f64], n: &[f64]) -> Dataset {
        Dataset::new(traces(p), traces(n)).unwrap()
    }

    #[test]
    fn discrimination_arithmetic() {
        let d = dataset(&[1.0, 3.0], &[-1.0, -3.0]);
        let (g, _) = discrimination(&parse("(x > 0)").unwrap(), &d);
        assert!((g - 2.0).abs() < 1e-8);
        assert_eq!(discrimination(&parse("true").unwrap(), &d).0, -LARGE);
        let same = dataset(&[1.0, 3.0], &[1.0, 3.0]);
        assert_eq!(discrimination(&parse("(x > 0)").unwrap(), &same).0, 0.0);
    }

    #[test]
    fn penalty_values() {
        let a = parse("F[0,1] ((x > 0) & (x <= 2))").unwrap();
        assert_eq!(a.size(), 4);
        assert!((size_penalty_with(5, 1.0, default_penalty_base()) - 0.5).abs() < 1e-12);
        assert!((size_penalty_with(10, 1.0, default_penalty_base()) - 0.25).abs() < 1e-12);
        assert_eq!(size_penalty(&a, 0.0), 0.0);
    }

    #[test]
    fn zero_placeholder_template() {
        let d = dataset(&[1.0, 3.0], &[-1.0, -3.0]);
        let p = parse_template("(x > 0)").unwrap();
        let space = default_space(&p, &d).unwrap();
        let c = learning_parameters(&p, &d, &space, &UcbConfig::light(0), None).unwrap();
        assert!(c.best_theta.is_empty());
        assert!((c.g_score - 2.0).abs() < 1e-8);
    }

    #[test]
    fn config_validation() {
        assert!(RogeConfig { ne: 5, ..RogeConfig::default() }.validate().is_err());
        assert!(RogeConfig { ne: 2, ..RogeConfig::default() }.validate().is_err());
        assert!(RogeConfig::default().validate().is_ok());
        assert_eq!("trunc".parse::<Selection>().unwrap(), Selection::Trunc);
        assert!("best".parse::<Selection>().is_err());
    }

    fn cand(text: &str, g: f64) -> ScoredCandidate {
        ScoredCandidate {
            template: parse_template(text).unwrap(),
            best_theta: ParameterConfiguration::new(),
            g_score: g,
            noise: 0.0,
            fitness: g,
        }
    }

    #[test]
    fn ranking_ties() {
        let g = Generation::rank(
            0,
            vec![cand("((x > 1) & (x > 2))", 1.0), cand("(x > 2)", 1.0), cand("(x > 1)", 1.0)],
            1.0,
        );
        let texts: Vec<String> = g.candidates.iter().map(|c| c.text()).collect();
        assert_eq!(texts, ["(x > 1)", "(x > 2)", "(x > 1) & (x > 2)"]);
    }

    #[test]
    fn roulette_prefers_dominant() {
        let mut cs = vec![cand("(x > 0)", 100.0)];
        for i in 1..10 {
            cs.push(cand(&format!("(x > {i})"), 0.0));
        }
        let g = Generation::rank(0, cs, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let hits = (0..100).filter(|_| sample(&g, 1, &mut rng)[0].g_score == 100.0).count();
        assert!(hits > 90, "{hits}");
        assert_eq!(sample(&g, 10, &mut rng).len(), 10);
    }

    #[test]
    fn equal_fitness_truncates() {
        let g = Generation::rank(0, vec![cand("(x > 2)", 1.0), cand("(x > 1)", 1.0), cand("(x > 3)", 1.0)], 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = sample(&g, 2, &mut rng);
        assert_eq!(s.iter().map(|c| c.text()).collect::<Vec<_>>(), ["(x > 1)", "(x > 2)"]);
    }

    #[test]
    fn offspring_inherit_values() {
        let mut theta = ParameterConfiguration::new();
        theta.insert("a0", 1.0);
        theta.insert("b0", 4.0);
        theta.insert("k0", 2.5);
        let c = ScoredCandidate { best_theta: theta, ..cand("F[?a0,?b0] (x > ?k0)", 1.0) };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let kids = evolve(&[c.clone(), c], 1.0, 10, 5, &["x".into()], &mut rng);
        assert_eq!(kids.len(), 10);
        for k in kids {
            for ph in placeholders(&k.template) {
                if let Some(v) = k.hint.get(&ph.name) {
                    assert!([1.0, 4.0, 2.5].contains(&v));
                }
            }
        }
    }

    #[test]
    fn survivors_keep_both_elites() {
        // Large formulas get a bigger bonus, so the best fitness and the best
        // discrimination belong to different members.
        let mut pool = vec![cand("(x > 1)", 3.0), cand("(x > 1)", 3.0)];
        pool.push(cand("F[?a0,?b0] G[?a1,?b1] ((x > ?k0) & (x <= ?k1))", 2.9));
        pool.extend((0..8).map(|i| cand(&format!("(x > {i}.5)"), 0.1)));
        let g = Generation::rank(1, pool, default_penalty_base());
        assert_ne!(g.candidates[0].text(), "(x > 1)");
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for sel in [Selection::Roulette, Selection::Trunc] {
                let s = survivors(&g, 4, sel, &mut rng);
                let texts: HashSet<String> = s.iter().map(|c| c.text()).collect();
                assert_eq!((s.len(), texts.len()), (4, 4));
                assert!(texts.contains("(x > 1)"));
                assert!(texts.contains(&g.candidates[0].text()));
            }
        }
    }

    #[test]
    fn split_seeds_differ() {
        assert_ne!(split_seed(1, 0), split_seed(1, 1));
        assert_ne!(split_seed(1, 0), split_seed(2, 0));
        assert_eq!(split_seed(3, 7), split_seed(3, 7));
    }
}
