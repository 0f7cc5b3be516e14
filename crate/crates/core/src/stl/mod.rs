//! Signal temporal logic: syntax, traces and quantitative semantics.
//!
//! Formulas are trees over atoms `x ⋈ k` with `⋈ ∈ {>, <=}`, Boolean
//! connectives and bounded future operators `F[a,b]`, `G[a,b]` and `U[a,b]`.
//! The tree type [`Expr`] is generic in the numeric slot so that the same
//! syntax serves both concrete formulas (`Expr<f64>`) and parametric templates
//! (see [`crate::pstl`]).

mod monitor;
mod parse;
mod trace;
mod transform;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use monitor::{robustness, satisfies, Monitor};
pub use parse::parse;
pub(crate) use parse::{parse_generic, Literal};
pub use trace::{Label, Trace};
pub use transform::{is_nnf, nnf, shift};

/// Comparison used by an atom. `x > k` has robustness `x - k`; `x <= k` has
/// robustness `k - x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Relation {
    Gt,
    Le,
}

impl Relation {
    pub fn flip(self) -> Relation {
        match self {
            Relation::Gt => Relation::Le,
            Relation::Le => Relation::Gt,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Gt => ">",
            Relation::Le => "<=",
        }
    }
}

/// Time interval `[start, end]` of a temporal operator, relative to the
/// evaluation instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Interval<V> {
    pub start: V,
    pub end: V,
}

impl<V> Interval<V> {
    pub fn new(start: V, end: V) -> Self {
        Interval { start, end }
    }
}

impl Interval<f64> {
    /// Checks `0 <= start < end` with finite endpoints.
    pub fn validate(&self) -> crate::Result<()> {
        let ok = self.start.is_finite()
            && self.end.is_finite()
            && self.start >= 0.0
            && self.start < self.end;
        if ok {
            Ok(())
        } else {
            Err(crate::Error::InvalidInterval { start: self.start, end: self.end })
        }
    }
}

/// STL syntax tree, generic over the type stored in numeric positions.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr<V> {
    True,
    Atom { var: String, rel: Relation, threshold: V },
    Not(Box<Expr<V>>),
    And(Box<Expr<V>>, Box<Expr<V>>),
    Or(Box<Expr<V>>, Box<Expr<V>>),
    Eventually(Interval<V>, Box<Expr<V>>),
    Globally(Interval<V>, Box<Expr<V>>),
    Until(Interval<V>, Box<Expr<V>>, Box<Expr<V>>),
}

/// A concrete STL formula.
pub type Formula = Expr<f64>;

impl<V> Expr<V> {
    pub fn atom(var: impl Into<String>, rel: Relation, threshold: V) -> Self {
        Expr::Atom { var: var.into(), rel, threshold }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(child: Expr<V>) -> Self {
        Expr::Not(Box::new(child))
    }

    pub fn and(l: Expr<V>, r: Expr<V>) -> Self {
        Expr::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Expr<V>, r: Expr<V>) -> Self {
        Expr::Or(Box::new(l), Box::new(r))
    }

    pub fn eventually(interval: Interval<V>, child: Expr<V>) -> Self {
        Expr::Eventually(interval, Box::new(child))
    }

    pub fn globally(interval: Interval<V>, child: Expr<V>) -> Self {
        Expr::Globally(interval, Box::new(child))
    }

    pub fn until(interval: Interval<V>, l: Expr<V>, r: Expr<V>) -> Self {
        Expr::Until(interval, Box::new(l), Box::new(r))
    }

    /// Number of nodes in the tree. Every atom, constant, connective and
    /// temporal operator counts once.
    pub fn size(&self) -> usize {
        match self {
            Expr::True | Expr::Atom { .. } => 1,
            Expr::Not(c) | Expr::Eventually(_, c) | Expr::Globally(_, c) => 1 + c.size(),
            Expr::And(l, r) | Expr::Or(l, r) | Expr::Until(_, l, r) => 1 + l.size() + r.size(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::True | Expr::Atom { .. } => 1,
            Expr::Not(c) | Expr::Eventually(_, c) | Expr::Globally(_, c) => 1 + c.depth(),
            Expr::And(l, r) | Expr::Or(l, r) | Expr::Until(_, l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    /// Direct children, left to right.
    pub fn children(&self) -> Vec<&Expr<V>> {
        match self {
            Expr::True | Expr::Atom { .. } => vec![],
            Expr::Not(c) | Expr::Eventually(_, c) | Expr::Globally(_, c) => vec![c],
            Expr::And(l, r) | Expr::Or(l, r) | Expr::Until(_, l, r) => vec![l, r],
        }
    }

    /// Node at the given pre-order position (the root is 0).
    pub fn node(&self, index: usize) -> Option<&Expr<V>> {
        fn walk<'a, V>(e: &'a Expr<V>, target: usize, next: &mut usize) -> Option<&'a Expr<V>> {
            if *next == target {
                return Some(e);
            }
            *next += 1;
            for c in e.children() {
                if let Some(found) = walk(c, target, next) {
                    return Some(found);
                }
            }
            None
        }
        walk(self, index, &mut 0)
    }

    /// Mutable node at the given pre-order position.
    pub fn node_mut(&mut self, index: usize) -> Option<&mut Expr<V>> {
        fn walk<'a, V>(e: &'a mut Expr<V>, target: usize, next: &mut usize) -> Option<&'a mut Expr<V>> {
            if *next == target {
                return Some(e);
            }
            *next += 1;
            match e {
                Expr::True | Expr::Atom { .. } => None,
                Expr::Not(c) | Expr::Eventually(_, c) | Expr::Globally(_, c) => walk(c, target, next),
                Expr::And(l, r) | Expr::Or(l, r) | Expr::Until(_, l, r) => {
                    walk(l, target, next).or_else(|| walk(r, target, next))
                }
            }
        }
        walk(self, index, &mut 0)
    }

    /// Variables referenced by atoms, in order of first appearance.
    pub fn variables(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        self.visit(&mut |e| {
            if let Expr::Atom { var, .. } = e {
                if !out.contains(&var.as_str()) {
                    out.push(var);
                }
            }
        });
        out
    }

    /// Pre-order traversal.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Expr<V>)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }

    /// Rebuilds the tree with every numeric slot mapped through `f`.
    pub fn try_map<W, E>(&self, f: &mut impl FnMut(&V) -> Result<W, E>) -> Result<Expr<W>, E> {
        let iv = |i: &Interval<V>, f: &mut dyn FnMut(&V) -> Result<W, E>| -> Result<Interval<W>, E> {
            Ok(Interval { start: f(&i.start)?, end: f(&i.end)? })
        };
        Ok(match self {
            Expr::True => Expr::True,
            Expr::Atom { var, rel, threshold } => Expr::Atom { var: var.clone(), rel: *rel, threshold: f(threshold)? },
            Expr::Not(c) => Expr::not(c.try_map(f)?),
            Expr::And(l, r) => Expr::and(l.try_map(f)?, r.try_map(f)?),
            Expr::Or(l, r) => Expr::or(l.try_map(f)?, r.try_map(f)?),
            Expr::Eventually(i, c) => {
                let i = iv(i, f)?;
                Expr::eventually(i, c.try_map(f)?)
            }
            Expr::Globally(i, c) => {
                let i = iv(i, f)?;
                Expr::globally(i, c.try_map(f)?)
            }
            Expr::Until(i, l, r) => {
                let i = iv(i, f)?;
                let l = l.try_map(f)?;
                Expr::until(i, l, r.try_map(f)?)
            }
        })
    }

    pub fn map<W>(&self, f: &mut impl FnMut(&V) -> W) -> Expr<W> {
        match self.try_map::<W, std::convert::Infallible>(&mut |v| Ok(f(v))) {
            Ok(e) => e,
            Err(never) => match never {},
        }
    }

    pub(crate) fn is_leaf(&self) -> bool {
        matches!(self, Expr::True | Expr::Atom { .. })
    }
}

impl Formula {
    /// Checks that every interval satisfies `0 <= a < b` and thresholds are finite.
    pub fn validate(&self) -> crate::Result<()> {
        let mut err = None;
        self.visit(&mut |e| {
            if err.is_some() {
                return;
            }
            match e {
                Expr::Atom { threshold, .. } if !threshold.is_finite() => {
                    err = Some(crate::Error::Parameter(format!("non-finite threshold {threshold}")));
                }
                Expr::Eventually(i, _) | Expr::Globally(i, _) | Expr::Until(i, _, _) => {
                    if let Err(e) = i.validate() {
                        err = Some(e);
                    }
                }
                _ => {}
            }
        });
        err.map_or(Ok(()), Err)
    }
}

impl<V: fmt::Display> fmt::Display for Expr<V> {
    /// Canonical fully parenthesised text accepted by [`parse`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn wrapped<V: fmt::Display>(e: &Expr<V>, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            if e.is_leaf() {
                write!(f, "{e}")
            } else {
                write!(f, "({e})")
            }
        }
        match self {
            Expr::True => write!(f, "true"),
            Expr::Atom { var, rel, threshold } => write!(f, "({var} {} {threshold})", rel.symbol()),
            Expr::Not(c) => {
                write!(f, "!")?;
                wrapped(c, f)
            }
            Expr::And(l, r) | Expr::Or(l, r) => {
                let op = if matches!(self, Expr::And(..)) { "&" } else { "|" };
                wrapped(l, f)?;
                write!(f, " {op} ")?;
                wrapped(r, f)
            }
            Expr::Eventually(i, c) | Expr::Globally(i, c) => {
                let op = if matches!(self, Expr::Eventually(..)) { "F" } else { "G" };
                write!(f, "{op}[{},{}] ", i.start, i.end)?;
                wrapped(c, f)
            }
            Expr::Until(i, l, r) => {
                wrapped(l, f)?;
                write!(f, " U[{},{}] ", i.start, i.end)?;
                wrapped(r, f)
            }
        }
    }
}

/// Canonical text of a formula; inverse of [`parse`].
pub fn format<V: fmt::Display>(f: &Expr<V>) -> String {
    f.to_string()
}
