//! Command-line interface.
//!
//! Every command writes JSON to stdout (`robust` writes a bare number) and
//! reports failures on stderr with a nonzero exit code.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::data::{confusion, load_dataset, read_trace, write_dataset};
use crate::gpucb::UcbConfig;
use crate::harness::{generate_naval, kfold_cv, NavalGenConfig};
use crate::roge::{mine, RogeConfig, Selection};
use crate::stl::{parse, robustness};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "stlmine", version, about = "Mine STL classifiers from labeled traces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Mine a calibrated formula from a dataset.
    Mine {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
        /// Also write the result JSON to this file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the optimiser trace of the final refinement to this file.
        #[arg(long)]
        trace_opt: Option<PathBuf>,
    },
    /// Stratified k-fold cross-validation of the miner.
    Cv {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Robustness of a formula on one trace.
    Robust {
        #[arg(long)]
        formula: String,
        #[arg(long)]
        trace: PathBuf,
        /// Sample index at which to evaluate.
        #[arg(long, default_value_t = 0)]
        index: usize,
    },
    /// Confusion counts of a formula on a labeled dataset.
    Classify {
        #[arg(long)]
        formula: String,
        #[arg(long)]
        data: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
enum GenKind {
    /// Maritime trajectories: normal vessels positive, anomalies negative.
    Naval {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1000)]
        n_normal: usize,
        #[arg(long, default_value_t = 500)]
        n_red: usize,
        #[arg(long, default_value_t = 500)]
        n_blue: usize,
        #[arg(long, default_value_t = 61)]
        samples: usize,
        #[arg(long, default_value_t = 300.0)]
        horizon: f64,
        #[arg(long, default_value_t = 0.5)]
        noise: f64,
    },
}

#[derive(Debug, Args)]
struct SearchArgs {
    #[arg(long)]
    seed: u64,
    /// Population size.
    #[arg(long, default_value_t = 40)]
    ne: usize,
    /// Maximum number of generations.
    #[arg(long, default_value_t = 20)]
    ng: usize,
    /// Mutation probability.
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Maximum size of random initial formulas.
    #[arg(long, default_value_t = 5)]
    s: usize,
    /// Offspring larger than this are redrawn.
    #[arg(long, default_value_t = 5)]
    max_size: usize,
    #[arg(long, default_value = "roulette")]
    selection: Selection,
    /// Evaluation budget per candidate.
    #[arg(long, default_value_t = 40)]
    budget: usize,
    /// Evaluation budget of the final refinement.
    #[arg(long, default_value_t = 200)]
    final_budget: usize,
}

impl SearchArgs {
    fn config(&self) -> RogeConfig {
        let light = UcbConfig { max_iter: self.budget, n_init: 10.min(self.budget), ..UcbConfig::light(0) };
        let thorough =
            UcbConfig { max_iter: self.final_budget, n_init: 10.min(self.final_budget), ..UcbConfig::thorough(0) };
        RogeConfig {
            ne: self.ne,
            ng: self.ng,
            alpha: self.alpha,
            s: self.s,
            max_size: self.max_size,
            seed: self.seed,
            selection: self.selection,
            gpucb_light: light,
            gpucb_final: thorough,
            ..RogeConfig::default()
        }
    }
}

#[derive(Serialize)]
struct GenSummary<'a> {
    schema_version: u32,
    out: &'a Path,
    positives: usize,
    negatives: usize,
    samples: usize,
    dt: f64,
}

#[derive(Serialize)]
struct ClassifyReport {
    schema_version: u32,
    formula: String,
    #[serde(flatten)]
    confusion: crate::data::Confusion,
    misclassification_rate: f64,
    false_positive_rate: f64,
    false_negative_rate: f64,
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    if let Some(path) = out {
        fs::write(path, format!("{text}\n")).map_err(|e| Error::io(path, e))?;
    }
    println!("{text}");
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { kind: GenKind::Naval { seed, out, n_normal, n_red, n_blue, samples, horizon, noise } } => {
            let cfg = NavalGenConfig {
                n_normal,
                n_anomalous_red: n_red,
                n_anomalous_blue: n_blue,
                samples_per_trace: samples,
                horizon,
                noise_std: noise,
                seed,
            };
            let d = generate_naval(&cfg)?;
            write_dataset(&d, &out)?;
            emit(
                &GenSummary {
                    schema_version: 1,
                    out: &out,
                    positives: d.positives().len(),
                    negatives: d.negatives().len(),
                    samples: d.samples(),
                    dt: d.dt(),
                },
                None,
            )
        }
        Command::Mine { data, search, out, trace_opt } => {
            let d = load_dataset(&data)?;
            let result = mine(&d, &search.config())?;
            if let Some(path) = trace_opt {
                let text = serde_json::to_string_pretty(&result.refinement_history)?;
                fs::write(&path, format!("{text}\n")).map_err(|e| Error::io(&path, e))?;
            }
            emit(&result, out.as_deref())
        }
        Command::Cv { data, folds, search, out } => {
            let d = load_dataset(&data)?;
            emit(&kfold_cv(&d, folds, &search.config())?, out.as_deref())
        }
        Command::Robust { formula, trace, index } => {
            let f = parse(&formula)?;
            let t = read_trace(&trace)?;
            let r = robustness(&f, &t, index)?;
            // JSON has no infinities; print them as strings.
            if r.is_finite() {
                println!("{r}");
            } else {
                println!("\"{r}\"");
            }
            Ok(())
        }
        Command::Classify { formula, data } => {
            let f = parse(&formula)?;
            let d = load_dataset(&data)?;
            let c = confusion(&f, &d)?;
            emit(
                &ClassifyReport {
                    schema_version: 1,
                    formula: crate::stl::format(&f),
                    confusion: c,
                    misclassification_rate: c.misclassification_rate(),
                    false_positive_rate: c.false_positive_rate(),
                    false_negative_rate: c.false_negative_rate(),
                },
                None,
            )
        }
    }
}

/// Parses `argv` (program name first) and runs the command; returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_search_flags() {
        let cli = Cli::try_parse_from([
            "stlmine", "mine", "--data", "d", "--seed", "3", "--ne", "8", "--selection", "trunc",
        ])
        .unwrap();
        let Command::Mine { search, .. } = cli.command else { panic!("expected mine") };
        let cfg = search.config();
        assert_eq!((cfg.ne, cfg.seed, cfg.selection), (8, 3, Selection::Trunc));
    }

    #[test]
    fn seed_is_required() {
        assert!(Cli::try_parse_from(["stlmine", "mine", "--data", "d"]).is_err());
        assert!(Cli::try_parse_from(["stlmine", "gen", "naval", "--out", "d"]).is_err());
    }

    #[test]
    fn errors_exit_nonzero() {
        assert_eq!(run(["stlmine", "robust", "--formula", "(x >", "--trace", "missing.csv"]), 1);
        assert_eq!(run(["stlmine", "frobnicate"]), 2);
    }
}
