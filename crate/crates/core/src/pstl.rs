//! Parametric STL: templates with named placeholders, their box parameter
//! spaces, and instantiation into concrete formulas.
//!
//! Template text is the formula grammar with `?name` in place of a number,
//! e.g. `(x2 > ?k1) U[?a,?b] (x1 <= ?k2)`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::stl::{parse_generic, Expr, Formula, Interval, Literal};
use crate::{Error, Result};

/// A numeric position of a template: either a literal or a named placeholder.
#[derive(Debug, Clone, PartialEq)]
pub enum Slot {
    Value(f64),
    Param(String),
}

impl Slot {
    pub fn param(name: impl Into<String>) -> Slot {
        Slot::Param(name.into())
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slot::Value(v) => write!(f, "{v}"),
            Slot::Param(name) => write!(f, "?{name}"),
        }
    }
}

impl Literal for Slot {
    fn from_number(value: f64) -> Self {
        Slot::Value(value)
    }

    fn from_placeholder(name: &str, _pos: usize) -> Result<Self> {
        Ok(Slot::Param(name.to_string()))
    }
}

/// An STL template whose thresholds and interval endpoints may be placeholders.
pub type ParametricFormula = Expr<Slot>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ParamKind {
    /// Threshold of an atom on the given variable.
    Threshold { var: String },
    /// Endpoint of a temporal interval.
    Temporal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Placeholder {
    pub name: String,
    pub kind: ParamKind,
}

/// Placeholders in pre-order (interval endpoints before the operands).
pub fn placeholders(p: &ParametricFormula) -> Vec<Placeholder> {
    let mut out = Vec::new();
    p.visit(&mut |e| match e {
        Expr::Atom { var, threshold: Slot::Param(name), .. } => {
            out.push(Placeholder { name: name.clone(), kind: ParamKind::Threshold { var: var.clone() } });
        }
        Expr::Eventually(i, _) | Expr::Globally(i, _) | Expr::Until(i, _, _) => {
            for s in [&i.start, &i.end] {
                if let Slot::Param(name) = s {
                    out.push(Placeholder { name: name.clone(), kind: ParamKind::Temporal });
                }
            }
        }
        _ => {}
    });
    out
}

/// Checks that placeholder names are unique.
pub fn validate_template(p: &ParametricFormula) -> Result<()> {
    let ps = placeholders(p);
    for (i, ph) in ps.iter().enumerate() {
        if ps[..i].iter().any(|q| q.name == ph.name) {
            return Err(Error::Parameter(format!("placeholder `?{}` used more than once", ph.name)));
        }
    }
    Ok(())
}

pub fn parse_template(text: &str) -> Result<ParametricFormula> {
    let p: ParametricFormula = parse_generic(text)?;
    validate_template(&p)?;
    Ok(p)
}

/// Renames placeholders to `k0, k1, ...` (thresholds) and `a0, b0, a1, b1, ...`
/// (intervals) in pre-order. Templates that differ only in placeholder names
/// become identical.
pub fn canonicalize(p: &ParametricFormula) -> ParametricFormula {
    fn walk(e: &mut ParametricFormula, k: &mut usize, t: &mut usize) {
        match e {
            Expr::Atom { threshold, .. } => {
                if let Slot::Param(name) = threshold {
                    *name = format!("k{k}");
                    *k += 1;
                }
            }
            Expr::Eventually(i, _) | Expr::Globally(i, _) | Expr::Until(i, _, _) => {
                if let Slot::Param(name) = &mut i.start {
                    *name = format!("a{t}");
                }
                if let Slot::Param(name) = &mut i.end {
                    *name = format!("b{t}");
                }
                *t += 1;
            }
            _ => {}
        }
        match e {
            Expr::True | Expr::Atom { .. } => {}
            Expr::Not(c) | Expr::Eventually(_, c) | Expr::Globally(_, c) => walk(c, k, t),
            Expr::And(l, r) | Expr::Or(l, r) | Expr::Until(_, l, r) => {
                walk(l, k, t);
                walk(r, k, t);
            }
        }
    }
    let mut out = p.clone();
    walk(&mut out, &mut 0, &mut 0);
    out
}

/// One point of a parameter space: placeholder name → value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterConfiguration(pub BTreeMap<String, f64>);

impl ParameterConfiguration {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: f64) {
        self.0.insert(name.into(), value);
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: Into<String>> FromIterator<(S, f64)> for ParameterConfiguration {
    fn from_iter<I: IntoIterator<Item = (S, f64)>>(iter: I) -> Self {
        ParameterConfiguration(iter.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }
}

/// Replaces every placeholder by its value in `theta`.
pub fn instantiate(p: &ParametricFormula, theta: &ParameterConfiguration) -> Result<Formula> {
    let mut used = 0usize;
    let f = p.try_map(&mut |s: &Slot| match s {
        Slot::Value(v) => Ok(*v),
        Slot::Param(name) => {
            used += 1;
            theta
                .get(name)
                .ok_or_else(|| Error::Parameter(format!("no value for placeholder `?{name}`")))
        }
    })?;
    if used != theta.len() {
        let names: Vec<String> = placeholders(p).into_iter().map(|ph| ph.name).collect();
        let extra: Vec<&String> = theta.0.keys().filter(|k| !names.contains(k)).collect();
        return Err(Error::Parameter(format!("values given for unknown placeholders {extra:?}")));
    }
    f.validate()?;
    Ok(f)
}

/// One coordinate of a parameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    pub kind: ParamKind,
    pub lo: f64,
    pub hi: f64,
}

/// Endpoint of a temporal interval as seen by the `a < b` constraint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Endpoint {
    Dim(usize),
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemporalPair {
    pub start: Endpoint,
    pub end: Endpoint,
}

/// Box domain of a template's placeholders plus the `a < b` constraint of
/// every interval that contains a placeholder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpace {
    dims: Vec<Dimension>,
    pairs: Vec<TemporalPair>,
    /// Minimum gap enforced when repairing an interval (one sample step).
    time_step: f64,
}

impl ParameterSpace {
    /// Builds the space for `p` with explicit bounds per placeholder.
    pub fn for_template(
        p: &ParametricFormula,
        time_step: f64,
        mut bounds: impl FnMut(&Placeholder) -> Result<(f64, f64)>,
    ) -> Result<ParameterSpace> {
        validate_template(p)?;
        if !(time_step > 0.0 && time_step.is_finite()) {
            return Err(Error::Parameter(format!("time step must be positive, got {time_step}")));
        }
        let mut dims = Vec::new();
        for ph in placeholders(p) {
            let (lo, hi) = bounds(&ph)?;
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Parameter(format!("bad bounds [{lo}, {hi}] for `?{}`", ph.name)));
            }
            if ph.kind == ParamKind::Temporal && lo < 0.0 {
                return Err(Error::Parameter(format!("temporal bound below zero for `?{}`", ph.name)));
            }
            dims.push(Dimension { name: ph.name, kind: ph.kind, lo, hi });
        }
        let endpoint = |s: &Slot, dims: &[Dimension]| match s {
            Slot::Value(v) => Endpoint::Fixed(*v),
            Slot::Param(name) => Endpoint::Dim(dims.iter().position(|d| &d.name == name).expect("dimension exists")),
        };
        let mut pairs = Vec::new();
        p.visit(&mut |e| {
            if let Expr::Eventually(i, _) | Expr::Globally(i, _) | Expr::Until(i, _, _) = e {
                if matches!(i.start, Slot::Param(_)) || matches!(i.end, Slot::Param(_)) {
                    pairs.push(TemporalPair { start: endpoint(&i.start, &dims), end: endpoint(&i.end, &dims) });
                }
            }
        });
        Ok(ParameterSpace { dims, pairs, time_step })
    }

    pub fn dims(&self) -> &[Dimension] {
        &self.dims
    }

    pub fn pairs(&self) -> &[TemporalPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn time_step(&self) -> f64 {
        self.time_step
    }

    /// True when `theta` assigns exactly this space's placeholders, each
    /// inside its box, and every interval has `a < b`.
    pub fn contains(&self, theta: &ParameterConfiguration) -> bool {
        if theta.len() != self.dims.len() {
            return false;
        }
        let mut values = Vec::with_capacity(self.dims.len());
        for d in &self.dims {
            match theta.get(&d.name) {
                Some(v) if v >= d.lo && v <= d.hi => values.push(v),
                _ => return false,
            }
        }
        self.pairs.iter().all(|p| self.endpoint(p.start, &values) < self.endpoint(p.end, &values))
    }

    fn endpoint(&self, e: Endpoint, values: &[f64]) -> f64 {
        match e {
            Endpoint::Dim(i) => values[i],
            Endpoint::Fixed(v) => v,
        }
    }

    /// Affine map of `theta` onto `[0, 1]^n`, in dimension order.
    pub fn to_unit_cube(&self, theta: &ParameterConfiguration) -> Result<Vec<f64>> {
        if theta.len() != self.dims.len() {
            return Err(Error::DimensionMismatch { expected: self.dims.len(), got: theta.len() });
        }
        self.dims
            .iter()
            .map(|d| {
                let v = theta
                    .get(&d.name)
                    .ok_or_else(|| Error::Parameter(format!("no value for placeholder `?{}`", d.name)))?;
                Ok(if d.hi > d.lo { (v - d.lo) / (d.hi - d.lo) } else { 0.0 })
            })
            .collect()
    }

    /// Inverse of [`to_unit_cube`](Self::to_unit_cube). Coordinates are clamped
    /// to the cube; intervals with `a >= b` are repaired by swapping the
    /// endpoints and, if still degenerate, moving `b` one time step past `a`.
    pub fn from_unit_cube(&self, u: &[f64]) -> Result<ParameterConfiguration> {
        if u.len() != self.dims.len() {
            return Err(Error::DimensionMismatch { expected: self.dims.len(), got: u.len() });
        }
        let mut values: Vec<f64> = self
            .dims
            .iter()
            .zip(u)
            .map(|(d, &x)| {
                let x = if x.is_nan() { 0.0 } else { x.clamp(0.0, 1.0) };
                if x >= 1.0 {
                    d.hi
                } else {
                    d.lo + x * (d.hi - d.lo)
                }
            })
            .collect();
        for pair in &self.pairs {
            self.repair(pair, &mut values);
        }
        Ok(self.dims.iter().zip(values).map(|(d, v)| (d.name.clone(), v)).collect())
    }

    /// Like [`from_unit_cube`](Self::from_unit_cube) but starting from a
    /// configuration: values are clamped to the box and intervals repaired.
    pub fn project(&self, theta: &ParameterConfiguration) -> Result<ParameterConfiguration> {
        let u = self.to_unit_cube(theta)?;
        self.from_unit_cube(&u)
    }

    fn repair(&self, pair: &TemporalPair, values: &mut [f64]) {
        let eps = self.time_step;
        match (pair.start, pair.end) {
            (Endpoint::Dim(ia), Endpoint::Dim(ib)) => {
                if values[ia] > values[ib] {
                    values.swap(ia, ib);
                    values[ia] = values[ia].clamp(self.dims[ia].lo, self.dims[ia].hi);
                    values[ib] = values[ib].clamp(self.dims[ib].lo, self.dims[ib].hi);
                }
                if values[ia] >= values[ib] {
                    let (da, db) = (&self.dims[ia], &self.dims[ib]);
                    let b = (values[ia] + eps).min(db.hi);
                    values[ib] = b;
                    if values[ia] >= b {
                        values[ia] = (b - eps).max(da.lo);
                    }
                }
            }
            (Endpoint::Fixed(a), Endpoint::Dim(ib)) => {
                if values[ib] <= a {
                    values[ib] = (a + eps).min(self.dims[ib].hi);
                }
            }
            (Endpoint::Dim(ia), Endpoint::Fixed(b)) => {
                if values[ia] >= b {
                    values[ia] = (b - eps).max(self.dims[ia].lo);
                }
            }
            (Endpoint::Fixed(_), Endpoint::Fixed(_)) => {}
        }
    }
}

/// Threshold bounds from the data envelope of each variable, temporal bounds
/// `[0, horizon]`.
pub fn default_space(p: &ParametricFormula, d: &Dataset) -> Result<ParameterSpace> {
    if d.is_empty() {
        return Err(Error::Empty("dataset has no traces".into()));
    }
    let horizon = d.horizon();
    ParameterSpace::for_template(p, d.dt(), |ph| match &ph.kind {
        ParamKind::Temporal => Ok((0.0, horizon)),
        ParamKind::Threshold { var } => d.envelope(var).ok_or_else(|| Error::UnknownVariable(var.clone())),
    })
}

impl ParametricFormula {
    /// Interval with the given placeholder names, for template construction.
    pub fn param_interval(start: &str, end: &str) -> Interval<Slot> {
        Interval::new(Slot::param(start), Slot::param(end))
    }
}
