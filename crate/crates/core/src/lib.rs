//! Mining signal temporal logic (STL) classifiers from labeled trajectories.
//!
//! The crate is organised bottom-up:
//!
//! * [`stl`]: formula syntax, text grammar and the robustness monitor.
//! * [`pstl`]: parametric templates, parameter spaces and instantiation.
//! * [`data`]: trace sets on disk and robustness statistics over them.
//! * [`gpucb`]: Gaussian-process upper-confidence-bound maximisation.
//! * [`roge`]: the genetic structure search with inner parameter synthesis.
//! * [`harness`]: synthetic naval data, cross-validation and the CLI.

pub mod data;
pub mod error;
pub mod gpucb;
pub mod harness;
pub mod pstl;
pub mod roge;
pub mod stl;

pub use error::{Error, Result};
pub use stl::{Formula, Interval, Relation, Trace};
