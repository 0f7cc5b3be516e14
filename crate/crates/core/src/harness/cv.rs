//! Stratified k-fold cross-validation of the miner.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{confusion, Dataset};
use crate::roge::{mine, split_seed, RogeConfig};
use crate::stl::parse;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub n_train: usize,
    pub n_validation: usize,
    pub misclassification: f64,
    pub false_positive_rate: f64,
    pub false_negative_rate: f64,
    pub formula: String,
    pub template: String,
    pub g_score: f64,
    pub training_misclassification: f64,
    pub seed: u64,
    pub elapsed_seconds: f64,
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Summary { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub schema_version: u32,
    pub folds: Vec<FoldReport>,
    pub misclassification: Summary,
    pub false_positive_rate: Summary,
    pub false_negative_rate: Summary,
    pub elapsed_seconds: Summary,
    pub seed: u64,
    pub config: RogeConfig,
}

/// Assigns each index of a class of size `n` to one of `k` folds, after a
/// seeded shuffle. Fold sizes differ by at most one.
pub fn stratified_folds(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold = vec![0; n];
    for (rank, &i) in order.iter().enumerate() {
        fold[i] = rank % k;
    }
    fold
}

/// Cross-validates [`mine`] on `d` with `k` stratified folds.
///
/// Each fold mines and calibrates on the other folds with its own seed, then
/// applies the calibrated formula to the held-out traces.
pub fn kfold_cv(d: &Dataset, k: usize, cfg: &RogeConfig) -> Result<CvReport> {
    cfg.validate()?;
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    let (np, nn) = (d.positives().len(), d.negatives().len());
    if np < k || nn < k {
        return Err(Error::Config(format!(
            "each class needs at least {k} traces for {k} folds, got {np} positive and {nn} negative"
        )));
    }
    let pos_fold = stratified_folds(np, k, split_seed(cfg.seed, 1 << 40));
    let neg_fold = stratified_folds(nn, k, split_seed(cfg.seed, (1 << 40) + 1));
    let split = |fold: usize, held_out: bool| {
        let pick = |folds: &[usize]| -> Vec<usize> {
            (0..folds.len()).filter(|&i| (folds[i] == fold) == held_out).collect()
        };
        d.select(&pick(&pos_fold), &pick(&neg_fold))
    };

    let folds = (0..k)
        .into_par_iter()
        .map(|fold| {
            let start = Instant::now();
            let train = split(fold, false);
            let valid = split(fold, true);
            let seed = split_seed(cfg.seed, fold as u64);
            let result = mine(&train, &RogeConfig { seed, ..cfg.clone() })?;
            let c = confusion(&parse(&result.best_formula)?, &valid)?;
            Ok(FoldReport {
                fold,
                n_train: train.len(),
                n_validation: valid.len(),
                misclassification: c.misclassification_rate(),
                false_positive_rate: c.false_positive_rate(),
                false_negative_rate: c.false_negative_rate(),
                formula: result.best_formula,
                template: result.template,
                g_score: result.g_score,
                training_misclassification: result.training_misclassification,
                seed,
                elapsed_seconds: start.elapsed().as_secs_f64(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let col = |f: fn(&FoldReport) -> f64| Summary::of(&folds.iter().map(f).collect::<Vec<_>>());
    Ok(CvReport {
        schema_version: 1,
        misclassification: col(|f| f.misclassification),
        false_positive_rate: col(|f| f.false_positive_rate),
        false_negative_rate: col(|f| f.false_negative_rate),
        elapsed_seconds: col(|f| f.elapsed_seconds),
        folds,
        seed: cfg.seed,
        config: cfg.clone(),
    })
}
