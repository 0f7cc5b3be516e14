//! Labeled trace sets and robustness statistics over them.
//!
//! On disk a dataset is a directory with one CSV per trace:
//!
//! ```text
//! <root>/positive/*.csv
//! <root>/negative/*.csv
//! <root>/manifest.json      (optional)
//! ```
//!
//! Every CSV has the header `time,<var1>,...,<varn>` and uniformly spaced,
//! increasing time stamps.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::stl::{Formula, Label, Monitor, Trace};
use crate::{Error, Result};

const DT_TOLERANCE: f64 = 1e-6;

/// Good (positive) and bad (negative) traces sharing one layout: the same
/// variables, time step and number of samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    variables: Vec<String>,
    dt: f64,
    samples: usize,
    positives: Vec<Trace>,
    negatives: Vec<Trace>,
    manifest: Option<serde_json::Value>,
}

impl Dataset {
    /// Builds a dataset, labelling the traces. Either class may be empty here;
    /// mining checks that both are populated.
    pub fn new(positives: Vec<Trace>, negatives: Vec<Trace>) -> Result<Dataset> {
        let first = positives
            .first()
            .or(negatives.first())
            .ok_or_else(|| Error::Empty("dataset has no traces".into()))?;
        let (variables, dt, samples) = (first.variables().to_vec(), first.dt(), first.len());
        for t in positives.iter().chain(&negatives) {
            check_layout(t, &variables, dt, samples).map_err(|msg| Error::Schema { path: PathBuf::new(), msg })?;
        }
        let positives = positives.into_iter().map(|t| t.with_label(Label::Positive)).collect();
        let negatives = negatives.into_iter().map(|t| t.with_label(Label::Negative)).collect();
        Ok(Dataset { variables, dt, samples, positives, negatives, manifest: None })
    }

    pub fn with_manifest(mut self, manifest: serde_json::Value) -> Self {
        self.manifest = Some(manifest);
        self
    }

    pub fn manifest(&self) -> Option<&serde_json::Value> {
        self.manifest.as_ref()
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn horizon(&self) -> f64 {
        (self.samples - 1) as f64 * self.dt
    }

    pub fn positives(&self) -> &[Trace] {
        &self.positives
    }

    pub fn negatives(&self) -> &[Trace] {
        &self.negatives
    }

    pub fn len(&self) -> usize {
        self.positives.len() + self.negatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn traces(&self) -> impl Iterator<Item = &Trace> {
        self.positives.iter().chain(&self.negatives)
    }

    /// Fails unless both classes are non-empty.
    pub fn check_minable(&self) -> Result<()> {
        if self.positives.is_empty() {
            return Err(Error::Empty("no positive traces".into()));
        }
        if self.negatives.is_empty() {
            return Err(Error::Empty("no negative traces".into()));
        }
        Ok(())
    }

    /// Minimum and maximum of a variable over every trace of both classes.
    pub fn envelope(&self, var: &str) -> Option<(f64, f64)> {
        let idx = self.variables.iter().position(|v| v == var)?;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for t in self.traces() {
            for &v in t.row(idx) {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        (lo <= hi).then_some((lo, hi))
    }

    /// Sub-dataset with the selected positive and negative indices.
    pub fn select(&self, positives: &[usize], negatives: &[usize]) -> Dataset {
        Dataset {
            variables: self.variables.clone(),
            dt: self.dt,
            samples: self.samples,
            positives: positives.iter().map(|&i| self.positives[i].clone()).collect(),
            negatives: negatives.iter().map(|&i| self.negatives[i].clone()).collect(),
            manifest: None,
        }
    }

    /// The same traces with the class labels exchanged.
    pub fn swapped(&self) -> Dataset {
        let relabel = |ts: &[Trace], l: Label| ts.iter().map(|t| t.clone().with_label(l)).collect();
        Dataset {
            variables: self.variables.clone(),
            dt: self.dt,
            samples: self.samples,
            positives: relabel(&self.negatives, Label::Positive),
            negatives: relabel(&self.positives, Label::Negative),
            manifest: None,
        }
    }
}

fn check_layout(t: &Trace, variables: &[String], dt: f64, samples: usize) -> std::result::Result<(), String> {
    if t.variables() != variables {
        return Err(format!("variables {:?} differ from {:?}", t.variables(), variables));
    }
    if (t.dt() - dt).abs() > DT_TOLERANCE * dt {
        return Err(format!("time step {} differs from {}", t.dt(), dt));
    }
    if t.len() != samples {
        return Err(format!("{} samples, expected {}", t.len(), samples));
    }
    Ok(())
}

/// Reads one trace from a CSV file with header `time,<var1>,...`.
pub fn read_trace(path: &Path) -> Result<Trace> {
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
    let schema = |msg: String| Error::Schema { path: path.to_path_buf(), msg };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(csv_err)?;
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.len() < 2 || &header[0] != "time" {
        return Err(schema("header must be `time,<var1>,...`".into()));
    }
    let variables: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut times = Vec::new();
    let mut rows = vec![Vec::new(); variables.len()];
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let mut fields = rec.iter().map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| schema(format!("row {}: `{s}` is not a finite number", line + 1)))
        });
        times.push(fields.next().ok_or_else(|| schema(format!("row {}: empty", line + 1)))??);
        for row in rows.iter_mut() {
            row.push(fields.next().ok_or_else(|| schema(format!("row {}: missing values", line + 1)))??);
        }
    }
    if times.len() < 2 {
        return Err(schema(format!("need at least 2 samples, got {}", times.len())));
    }
    let dt = times[1] - times[0];
    if dt <= 0.0 {
        return Err(schema("time must increase".into()));
    }
    for (j, w) in times.windows(2).enumerate() {
        if ((w[1] - w[0]) - dt).abs() > DT_TOLERANCE * dt {
            return Err(schema(format!("non-uniform sampling at row {}", j + 2)));
        }
    }
    Trace::new(variables, times[0], dt, rows).map_err(|e| schema(e.to_string()))
}

fn read_class(dir: &Path) -> Result<Vec<(PathBuf, Trace)>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let p = entry.map_err(|e| Error::io(dir, e))?.path();
        if p.extension().is_some_and(|e| e == "csv") {
            paths.push(p);
        }
    }
    paths.sort();
    paths.into_iter().map(|p| read_trace(&p).map(|t| (p, t))).collect()
}

/// Loads `<root>/positive/*.csv` and `<root>/negative/*.csv` (sorted by file
/// name) and the optional `manifest.json`.
pub fn load_dataset(root: impl AsRef<Path>) -> Result<Dataset> {
    let root = root.as_ref();
    let pos = read_class(&root.join("positive"))?;
    let neg = read_class(&root.join("negative"))?;
    if pos.is_empty() {
        return Err(Error::Empty(format!("{}: no positive traces", root.display())));
    }
    if neg.is_empty() {
        return Err(Error::Empty(format!("{}: no negative traces", root.display())));
    }
    let reference = &pos[0].1;
    let (vars, dt, n) = (reference.variables().to_vec(), reference.dt(), reference.len());
    for (path, t) in pos.iter().chain(&neg) {
        check_layout(t, &vars, dt, n).map_err(|msg| Error::Schema { path: path.clone(), msg })?;
    }
    let strip = |v: Vec<(PathBuf, Trace)>| v.into_iter().map(|(_, t)| t).collect();
    let mut d = Dataset::new(strip(pos), strip(neg))?;
    let manifest = root.join("manifest.json");
    if manifest.exists() {
        let text = fs::read_to_string(&manifest).map_err(|e| Error::io(&manifest, e))?;
        d.manifest = Some(serde_json::from_str(&text)?);
    }
    Ok(d)
}

/// Writes `t` in the format read by [`read_trace`].
pub fn write_trace(path: &Path, t: &Trace) -> Result<()> {
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header = vec!["time".to_string()];
    header.extend(t.variables().iter().cloned());
    w.write_record(&header).map_err(csv_err)?;
    for j in 0..t.len() {
        let mut rec = vec![t.time(j).to_string()];
        rec.extend(t.rows().iter().map(|row| row[j].to_string()));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes the directory layout read by [`load_dataset`]. Values are written
/// with shortest round-trip formatting, so loading reproduces them exactly.
pub fn write_dataset(d: &Dataset, root: impl AsRef<Path>) -> Result<()> {
    let root = root.as_ref();
    for (class, traces) in [("positive", d.positives()), ("negative", d.negatives())] {
        let dir = root.join(class);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let width = traces.len().max(1).to_string().len().max(4);
        for (i, t) in traces.iter().enumerate() {
            write_trace(&dir.join(format!("trace_{i:0width$}.csv")), t)?;
        }
    }
    if let Some(m) = &d.manifest {
        let path = root.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(m)?).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Mean and population standard deviation of robustness over a trace set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustnessStats {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
    /// False when at least one trace had infinite robustness.
    pub finite: bool,
}

impl RobustnessStats {
    /// Statistics of a list of robustness values.
    pub fn from_values(values: &[f64]) -> Result<RobustnessStats> {
        if values.is_empty() {
            return Err(Error::Empty("no robustness values".into()));
        }
        let n = values.len();
        let finite = values.iter().all(|v| v.is_finite());
        let mean = pairwise_sum(values) / n as f64;
        let std = if finite {
            let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
            (pairwise_sum(&dev) / n as f64).sqrt()
        } else {
            f64::NAN
        };
        Ok(RobustnessStats { mean, std, n, finite })
    }
}

/// Pairwise summation; the fixed split order makes the result independent of
/// how the values were produced.
pub(crate) fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        v.iter().sum()
    } else {
        let (a, b) = v.split_at(v.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

/// Robustness at the first sample of every trace, in input order.
pub fn robustness_values(f: &Formula, traces: &[Trace]) -> Result<Vec<f64>> {
    let Some(first) = traces.first() else {
        return Ok(Vec::new());
    };
    let monitor = Monitor::for_trace(f, first)?;
    traces.par_iter().with_min_len(128).map(|t| monitor.eval(t, 0)).collect()
}

pub fn robustness_stats(f: &Formula, traces: &[Trace]) -> Result<RobustnessStats> {
    if traces.is_empty() {
        return Err(Error::Empty("no traces".into()));
    }
    RobustnessStats::from_values(&robustness_values(f, traces)?)
}

/// Confusion counts of the verdict `robustness > 0` against the labels.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub true_positives: usize,
    pub false_negatives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.true_positives + self.false_negatives + self.false_positives + self.true_negatives
    }

    pub fn misclassification_rate(&self) -> f64 {
        ratio(self.false_negatives + self.false_positives, self.total())
    }

    /// Fraction of negatives accepted by the formula.
    pub fn false_positive_rate(&self) -> f64 {
        ratio(self.false_positives, self.false_positives + self.true_negatives)
    }

    /// Fraction of positives rejected by the formula.
    pub fn false_negative_rate(&self) -> f64 {
        ratio(self.false_negatives, self.false_negatives + self.true_positives)
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

pub fn confusion(f: &Formula, d: &Dataset) -> Result<Confusion> {
    if d.is_empty() {
        return Err(Error::Empty("dataset has no traces".into()));
    }
    let pos = robustness_values(f, d.positives())?;
    let neg = robustness_values(f, d.negatives())?;
    let tp = pos.iter().filter(|&&r| r > 0.0).count();
    let fp = neg.iter().filter(|&&r| r > 0.0).count();
    Ok(Confusion {
        true_positives: tp,
        false_negatives: pos.len() - tp,
        false_positives: fp,
        true_negatives: neg.len() - fp,
    })
}

/// (rejected positives + accepted negatives) / total.
pub fn misclassification_rate(f: &Formula, d: &Dataset) -> Result<f64> {
    Ok(confusion(f, d)?.misclassification_rate())
}
