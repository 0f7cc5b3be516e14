//! Negation normal form and threshold translation.
//!
//! Without a release operator, `!(φ U ψ)` has no negation-free dual, so the
//! normal form used here allows `Not` directly above an `Until` (or `true`)
//! and nowhere else. Translation passes through such a `Not` by flipping the
//! sign of the offset, which keeps `ρ(shift(f, c)) = ρ(f) - c` exact.

use super::{Expr, Formula, Relation};
use crate::{Error, Result};

/// Pushes negations down to atoms, flipping relations on the way.
///
/// The result has the same robustness as `f` at every sample.
pub fn nnf<V: Clone>(f: &Expr<V>) -> Expr<V> {
    match f {
        Expr::True | Expr::Atom { .. } => f.clone(),
        Expr::Not(c) => negated(c),
        Expr::And(l, r) => Expr::and(nnf(l), nnf(r)),
        Expr::Or(l, r) => Expr::or(nnf(l), nnf(r)),
        Expr::Eventually(i, c) => Expr::eventually(i.clone(), nnf(c)),
        Expr::Globally(i, c) => Expr::globally(i.clone(), nnf(c)),
        Expr::Until(i, l, r) => Expr::until(i.clone(), nnf(l), nnf(r)),
    }
}

/// NNF of `!f`.
fn negated<V: Clone>(f: &Expr<V>) -> Expr<V> {
    match f {
        Expr::True => Expr::not(Expr::True),
        Expr::Atom { var, rel, threshold } => {
            Expr::Atom { var: var.clone(), rel: rel.flip(), threshold: threshold.clone() }
        }
        Expr::Not(c) => nnf(c),
        Expr::And(l, r) => Expr::or(negated(l), negated(r)),
        Expr::Or(l, r) => Expr::and(negated(l), negated(r)),
        Expr::Eventually(i, c) => Expr::globally(i.clone(), negated(c)),
        Expr::Globally(i, c) => Expr::eventually(i.clone(), negated(c)),
        Expr::Until(i, l, r) => Expr::not(Expr::until(i.clone(), nnf(l), nnf(r))),
    }
}

/// True when every `Not` sits directly above an `Until` or `true`.
pub fn is_nnf<V>(f: &Expr<V>) -> bool {
    match f {
        Expr::True | Expr::Atom { .. } => true,
        Expr::Not(c) => match c.as_ref() {
            Expr::True => true,
            Expr::Until(_, l, r) => is_nnf(l) && is_nnf(r),
            _ => false,
        },
        Expr::Eventually(_, c) | Expr::Globally(_, c) => is_nnf(c),
        Expr::And(l, r) | Expr::Or(l, r) | Expr::Until(_, l, r) => is_nnf(l) && is_nnf(r),
    }
}

/// Translates every atom so that robustness drops by exactly `c`:
/// `x > k` becomes `x > k + c` and `x <= k` becomes `x <= k - c`.
pub fn shift(f: &Formula, c: f64) -> Result<Formula> {
    if !is_nnf(f) {
        return Err(Error::NotNnf);
    }
    Ok(shift_unchecked(f, c))
}

fn shift_unchecked(f: &Formula, c: f64) -> Formula {
    match f {
        Expr::True => Expr::True,
        Expr::Atom { var, rel, threshold } => {
            let threshold = match rel {
                Relation::Gt => threshold + c,
                Relation::Le => threshold - c,
            };
            Expr::Atom { var: var.clone(), rel: *rel, threshold }
        }
        // ρ(!g) - c = -(ρ(g) + c)
        Expr::Not(g) => Expr::not(shift_unchecked(g, -c)),
        Expr::And(l, r) => Expr::and(shift_unchecked(l, c), shift_unchecked(r, c)),
        Expr::Or(l, r) => Expr::or(shift_unchecked(l, c), shift_unchecked(r, c)),
        Expr::Eventually(i, g) => Expr::eventually(i.clone(), shift_unchecked(g, c)),
        Expr::Globally(i, g) => Expr::globally(i.clone(), shift_unchecked(g, c)),
        Expr::Until(i, l, r) => Expr::until(i.clone(), shift_unchecked(l, c), shift_unchecked(r, c)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stl::{parse, robustness, Interval, Trace};

    #[test]
    fn negated_atom_flips() {
        let f = parse("!(x > 2)").unwrap();
        assert_eq!(nnf(&f), Formula::atom("x", Relation::Le, 2.0));
    }

    #[test]
    fn negated_eventually_becomes_globally() {
        let f = parse("!F[0,3] ((x > 1) & (y <= 2))").unwrap();
        let expected = Formula::globally(
            Interval::new(0.0, 3.0),
            Formula::or(Formula::atom("x", Relation::Le, 1.0), Formula::atom("y", Relation::Gt, 2.0)),
        );
        assert_eq!(nnf(&f), expected);
        assert!(is_nnf(&expected));
    }

    #[test]
    fn negated_until_keeps_single_not() {
        let f = parse("!((x > 1) U[0,2] !(y > 0))").unwrap();
        let n = nnf(&f);
        assert_eq!(n, parse("!((x > 1) U[0,2] (y <= 0))").unwrap());
        assert!(is_nnf(&n));
        assert!(!is_nnf(&f));
    }

    #[test]
    fn shift_atoms() {
        let a = parse("(x > 0)").unwrap();
        assert_eq!(shift(&a, 1.5).unwrap(), parse("(x > 1.5)").unwrap());
        assert_eq!(shift(&parse("(x <= 0)").unwrap(), 1.5).unwrap(), parse("(x <= -1.5)").unwrap());
        let f = parse("G[0,1] ((x > 1) | (y <= 3))").unwrap();
        assert_eq!(shift(&f, 0.0).unwrap(), f);
        assert!(matches!(shift(&parse("!(x > 0)").unwrap(), 1.0), Err(Error::NotNnf)));
    }

    #[test]
    fn shift_through_negated_until() {
        let x = Trace::new(
            vec!["x".into(), "y".into()],
            0.0,
            1.0,
            vec![vec![2.0, 1.5, 0.0, 3.0], vec![-1.0, -0.5, 1.0, 2.0]],
        )
        .unwrap();
        let f = nnf(&parse("!((x > 1) U[1,3] (y > 0))").unwrap());
        let r = robustness(&f, &x, 0).unwrap();
        let s = robustness(&shift(&f, 0.25).unwrap(), &x, 0).unwrap();
        assert!((s - (r - 0.25)).abs() < 1e-12);
    }
}
