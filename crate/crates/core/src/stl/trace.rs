use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Class label of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive,
    Negative,
}

/// A uniformly sampled multivariate trajectory.
///
/// `values[v][j]` is variable `v` at time `t0 + j * dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    variables: Vec<String>,
    t0: f64,
    dt: f64,
    values: Vec<Vec<f64>>,
    label: Option<Label>,
}

impl Trace {
    pub fn new(variables: Vec<String>, t0: f64, dt: f64, values: Vec<Vec<f64>>) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidTrace(format!("time step must be positive, got {dt}")));
        }
        if !t0.is_finite() {
            return Err(Error::InvalidTrace("non-finite start time".into()));
        }
        if variables.is_empty() || variables.len() != values.len() {
            return Err(Error::InvalidTrace(format!(
                "{} variable names for {} value rows",
                variables.len(),
                values.len()
            )));
        }
        let len = values[0].len();
        if len < 2 {
            return Err(Error::InvalidTrace(format!("need at least 2 samples, got {len}")));
        }
        if values.iter().any(|row| row.len() != len) {
            return Err(Error::InvalidTrace("value rows differ in length".into()));
        }
        for (i, name) in variables.iter().enumerate() {
            if variables[..i].contains(name) {
                return Err(Error::InvalidTrace(format!("duplicate variable `{name}`")));
            }
        }
        Ok(Trace { variables, t0, dt, values, label: None })
    }

    /// Builds a single-variable trace starting at time 0.
    pub fn univariate(name: &str, dt: f64, values: Vec<f64>) -> Result<Self> {
        Trace::new(vec![name.to_string()], 0.0, dt, vec![values])
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = Some(label);
        self
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn label(&self) -> Option<Label> {
        self.label
    }

    pub fn len(&self) -> usize {
        self.values[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Time of the last sample relative to the first.
    pub fn horizon(&self) -> f64 {
        (self.len() - 1) as f64 * self.dt
    }

    pub fn time(&self, index: usize) -> f64 {
        self.t0 + index as f64 * self.dt
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == name)
    }

    pub fn row(&self, var: usize) -> &[f64] {
        &self.values[var]
    }

    pub fn signal(&self, name: &str) -> Option<&[f64]> {
        self.variable_index(name).map(|i| self.row(i))
    }

    pub fn value(&self, var: usize, index: usize) -> f64 {
        self.values[var][index]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }
}
