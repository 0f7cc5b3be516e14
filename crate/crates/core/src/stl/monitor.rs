//! Robustness monitor on the discrete sample grid.
//!
//! Temporal operators quantify over the samples `j` with
//! `t_j ∈ [t_i + a, t_i + b]`. A window that falls past the end of the trace is
//! empty: `sup ∅ = -∞` and `inf ∅ = +∞`.
//!
//! Evaluation is demand driven: a node is only evaluated on the index range
//! its parent needs, so checking a formula at `t_0` touches only the samples
//! inside the formula's time horizon.

use super::{Expr, Formula, Relation, Trace};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
struct Window {
    lo: usize,
    hi: usize,
}

fn window_offsets(start: f64, end: f64, dt: f64) -> Option<Window> {
    let tol = |q: f64| 1e-9 * q.abs().max(1.0);
    let qa = start / dt;
    let qb = end / dt;
    let lo = (qa - tol(qa)).ceil().max(0.0);
    let hi = (qb + tol(qb)).floor();
    if hi < lo {
        return None;
    }
    const CAP: f64 = 1e15;
    Some(Window { lo: lo.min(CAP) as usize, hi: hi.min(CAP) as usize })
}

#[derive(Debug, Clone)]
enum Node {
    True,
    Atom { var: usize, rel: Relation, threshold: f64 },
    Not(Box<Node>),
    And(Box<Node>, Box<Node>),
    Or(Box<Node>, Box<Node>),
    Eventually(Option<Window>, Box<Node>),
    Globally(Option<Window>, Box<Node>),
    Until(Option<Window>, Box<Node>, Box<Node>),
}

/// A formula compiled against a variable layout and a time step.
///
/// Compile once and evaluate on every trace that shares the layout; this is
/// how robustness statistics over a data set are computed.
#[derive(Debug, Clone)]
pub struct Monitor {
    root: Node,
    variables: Vec<String>,
    dt: f64,
}

impl Monitor {
    pub fn new(formula: &Formula, variables: &[String], dt: f64) -> Result<Monitor> {
        formula.validate()?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidTrace(format!("time step must be positive, got {dt}")));
        }
        let root = compile(formula, variables, dt)?;
        Ok(Monitor { root, variables: variables.to_vec(), dt })
    }

    pub fn for_trace(formula: &Formula, trace: &Trace) -> Result<Monitor> {
        Monitor::new(formula, trace.variables(), trace.dt())
    }

    fn check_layout(&self, trace: &Trace) -> Result<()> {
        if trace.variables() != self.variables.as_slice() {
            let missing = self
                .variables
                .iter()
                .find(|v| trace.variable_index(v).is_none())
                .cloned()
                .unwrap_or_else(|| format!("layout {:?}", trace.variables()));
            return Err(Error::UnknownVariable(missing));
        }
        if (trace.dt() - self.dt).abs() > 1e-6 * self.dt {
            return Err(Error::InvalidTrace(format!(
                "monitor compiled for dt = {}, trace has dt = {}",
                self.dt,
                trace.dt()
            )));
        }
        Ok(())
    }

    /// Robustness at sample `index`.
    pub fn eval(&self, trace: &Trace, index: usize) -> Result<f64> {
        self.check_layout(trace)?;
        if index >= trace.len() {
            return Err(Error::IndexOutOfRange { index, len: trace.len() });
        }
        Ok(eval(&self.root, trace, index, index)[0])
    }

    /// Robustness at the first sample. The trace must share the layout the
    /// monitor was compiled for.
    pub fn eval_start(&self, trace: &Trace) -> f64 {
        debug_assert!(self.check_layout(trace).is_ok());
        eval(&self.root, trace, 0, 0)[0]
    }

    /// Robustness at every sample.
    pub fn signal(&self, trace: &Trace) -> Result<Vec<f64>> {
        self.check_layout(trace)?;
        Ok(eval(&self.root, trace, 0, trace.len() - 1))
    }
}

fn compile(f: &Formula, variables: &[String], dt: f64) -> Result<Node> {
    let rec = |c: &Formula| compile(c, variables, dt).map(Box::new);
    Ok(match f {
        Expr::True => Node::True,
        Expr::Atom { var, rel, threshold } => {
            let idx = variables
                .iter()
                .position(|v| v == var)
                .ok_or_else(|| Error::UnknownVariable(var.clone()))?;
            Node::Atom { var: idx, rel: *rel, threshold: *threshold }
        }
        Expr::Not(c) => Node::Not(rec(c)?),
        Expr::And(l, r) => Node::And(rec(l)?, rec(r)?),
        Expr::Or(l, r) => Node::Or(rec(l)?, rec(r)?),
        Expr::Eventually(i, c) => Node::Eventually(window_offsets(i.start, i.end, dt), rec(c)?),
        Expr::Globally(i, c) => Node::Globally(window_offsets(i.start, i.end, dt), rec(c)?),
        Expr::Until(i, l, r) => Node::Until(window_offsets(i.start, i.end, dt), rec(l)?, rec(r)?),
    })
}

/// Values of `node` at indices `from..=to` (requires `to < trace.len()`).
fn eval(node: &Node, x: &Trace, from: usize, to: usize) -> Vec<f64> {
    let n = x.len();
    debug_assert!(from <= to && to < n);
    match node {
        Node::True => vec![f64::INFINITY; to - from + 1],
        Node::Atom { var, rel, threshold } => {
            let row = &x.row(*var)[from..=to];
            match rel {
                Relation::Gt => row.iter().map(|v| v - threshold).collect(),
                Relation::Le => row.iter().map(|v| threshold - v).collect(),
            }
        }
        Node::Not(c) => eval(c, x, from, to).into_iter().map(|v| -v).collect(),
        Node::And(l, r) | Node::Or(l, r) => {
            let mut a = eval(l, x, from, to);
            let b = eval(r, x, from, to);
            let is_and = matches!(node, Node::And(..));
            for (u, v) in a.iter_mut().zip(b) {
                *u = if is_and { u.min(v) } else { u.max(v) };
            }
            a
        }
        Node::Eventually(w, c) | Node::Globally(w, c) => {
            let is_ev = matches!(node, Node::Eventually(..));
            let empty = if is_ev { f64::NEG_INFINITY } else { f64::INFINITY };
            let mut out = vec![empty; to - from + 1];
            let Some(w) = *w else { return out };
            let first = from.saturating_add(w.lo);
            if first > n - 1 {
                return out;
            }
            let last = to.saturating_add(w.hi).min(n - 1);
            let child = eval(c, x, first, last);
            for (slot, i) in out.iter_mut().zip(from..=to) {
                let a = i + w.lo;
                if a > n - 1 {
                    break;
                }
                let b = i.saturating_add(w.hi).min(n - 1);
                let win = &child[a - first..=b - first];
                *slot = if is_ev {
                    win.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                } else {
                    win.iter().copied().fold(f64::INFINITY, f64::min)
                };
            }
            out
        }
        Node::Until(w, l, r) => {
            let mut out = vec![f64::NEG_INFINITY; to - from + 1];
            let Some(w) = *w else { return out };
            let first_r = from.saturating_add(w.lo);
            if first_r > n - 1 {
                return out;
            }
            let last = to.saturating_add(w.hi).min(n - 1);
            let left = eval(l, x, from, last);
            let right = eval(r, x, first_r, last);
            for (slot, i) in out.iter_mut().zip(from..=to) {
                let a = i + w.lo;
                if a > n - 1 {
                    break;
                }
                let b = i.saturating_add(w.hi).min(n - 1);
                // running = inf of the left operand over [i, j)
                let mut running = f64::INFINITY;
                let mut best = f64::NEG_INFINITY;
                for j in i..=b {
                    if j >= a {
                        best = best.max(right[j - first_r].min(running));
                    }
                    running = running.min(left[j - from]);
                }
                *slot = best;
            }
            out
        }
    }
}

/// Robustness of `f` on `x` at sample `index`.
pub fn robustness(f: &Formula, x: &Trace, index: usize) -> Result<f64> {
    Monitor::for_trace(f, x)?.eval(x, index)
}

/// Boolean verdict at the first sample: `true` iff robustness is strictly
/// positive. Zero robustness counts as a violation.
pub fn satisfies(f: &Formula, x: &Trace) -> Result<bool> {
    Ok(robustness(f, x, 0)? > 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stl::{parse, Interval};

    fn ramp() -> Trace {
        Trace::univariate("x", 1.0, vec![-1.0, 0.0, 1.0]).unwrap()
    }

    #[test]
    fn constant_true_is_plus_infinity() {
        assert_eq!(robustness(&Formula::True, &ramp(), 0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn atom_value() {
        let x = Trace::univariate("x1", 1.0, vec![5.0, 0.0]).unwrap();
        assert_eq!(robustness(&parse("(x1 > 3)").unwrap(), &x, 0).unwrap(), 2.0);
        assert_eq!(robustness(&parse("(x1 <= 3)").unwrap(), &x, 0).unwrap(), -2.0);
    }

    #[test]
    fn eventually_on_ramp() {
        let f = parse("F[0,2] (x > 0)").unwrap();
        assert_eq!(robustness(&f, &ramp(), 0).unwrap(), 1.0);
        let g = parse("G[0,2] (x > 0)").unwrap();
        assert_eq!(robustness(&g, &ramp(), 0).unwrap(), -1.0);
    }

    #[test]
    fn until_on_ramp() {
        // j = 0: min(-1, +inf) = -1; j = 1: min(0, 2) = 0; j = 2: min(1, min(2, 1)) = 1
        let f = parse("(x <= 1) U[0,2] (x > 0)").unwrap();
        assert_eq!(robustness(&f, &ramp(), 0).unwrap(), 1.0);
        // j = 1: min(0, 0.5) = 0 beats j = 2: min(1, min(0.5, -0.5)) = -0.5
        let g = parse("(x <= -0.5) U[0,2] (x > 0)").unwrap();
        assert_eq!(robustness(&g, &ramp(), 0).unwrap(), 0.0);
    }

    #[test]
    fn empty_windows() {
        let x = ramp();
        let beyond = Interval::new(5.0, 7.0);
        let a = || Formula::atom("x", Relation::Gt, 0.0);
        assert_eq!(robustness(&Formula::eventually(beyond.clone(), a()), &x, 0).unwrap(), f64::NEG_INFINITY);
        assert_eq!(robustness(&Formula::globally(beyond.clone(), a()), &x, 0).unwrap(), f64::INFINITY);
        assert_eq!(robustness(&Formula::until(beyond, a(), a()), &x, 0).unwrap(), f64::NEG_INFINITY);
        // no grid point inside [0.2, 0.8] when dt = 1
        let between = Formula::eventually(Interval::new(0.2, 0.8), a());
        assert_eq!(robustness(&between, &x, 0).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn window_is_truncated_at_trace_end() {
        let f = parse("G[1,10] (x > -0.5)").unwrap();
        assert_eq!(robustness(&f, &ramp(), 0).unwrap(), 0.5);
        assert_eq!(robustness(&f, &ramp(), 2).unwrap(), f64::INFINITY);
    }

    #[test]
    fn satisfies_sign_rule() {
        let x = Trace::univariate("x", 1.0, vec![3.0, 0.0]).unwrap();
        assert!(satisfies(&parse("(x > 1)").unwrap(), &x).unwrap());
        assert!(!satisfies(&parse("(x > 3.5)").unwrap(), &x).unwrap());
        assert!(!satisfies(&parse("(x > 3)").unwrap(), &x).unwrap());
    }

    #[test]
    fn errors() {
        let x = ramp();
        assert!(matches!(robustness(&parse("(y > 0)").unwrap(), &x, 0), Err(Error::UnknownVariable(v)) if v == "y"));
        assert!(matches!(
            robustness(&parse("(x > 0)").unwrap(), &x, 3),
            Err(Error::IndexOutOfRange { index: 3, len: 3 })
        ));
    }

    #[test]
    fn window_offsets_round_to_grid() {
        assert_eq!(window_offsets(49.0, 287.0, 5.0), Some(Window { lo: 10, hi: 57 }));
        assert_eq!(window_offsets(0.0, 2.0, 1.0), Some(Window { lo: 0, hi: 2 }));
        assert_eq!(window_offsets(0.3, 0.6, 0.1), Some(Window { lo: 3, hi: 6 }));
        assert_eq!(window_offsets(0.2, 0.8, 1.0), None);
    }

    #[test]
    fn signal_matches_pointwise_eval() {
        let x = Trace::univariate("x", 0.5, vec![0.0, 2.0, -1.0, 3.0, 1.0, -2.0, 0.5]).unwrap();
        let f = parse("!((x > 0) U[0.5,1.5] G[0,1] (x <= 2))").unwrap();
        let m = Monitor::for_trace(&f, &x).unwrap();
        let sig = m.signal(&x).unwrap();
        for (i, v) in sig.iter().enumerate() {
            assert_eq!(*v, m.eval(&x, i).unwrap());
        }
    }
}
