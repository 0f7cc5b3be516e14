//! Experiment plumbing: synthetic data, cross-validation and the CLI.

pub mod cli;
mod cv;
mod naval;

pub use cv::{kfold_cv, stratified_folds, CvReport, FoldReport, Summary};
pub use naval::{generate_naval, generate_trace, NavalGenConfig, VesselClass, REFERENCE_FORMULA};
