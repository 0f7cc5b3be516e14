//! Structure-level genetic operators on formula trees.
//!
//! The operators are generic over the numeric slot so they can carry either
//! placeholders or known parameter values through a crossover. New numeric
//! positions are filled by a caller-supplied `fresh` factory.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::pstl::{canonicalize, ParametricFormula, Slot};
use crate::stl::{Expr, Interval, Relation};

fn fresh_slot() -> Slot {
    Slot::param("p")
}

fn random_relation<R: Rng + ?Sized>(rng: &mut R) -> Relation {
    if rng.random_bool(0.5) {
        Relation::Gt
    } else {
        Relation::Le
    }
}

fn random_atom<V, R: Rng + ?Sized>(vars: &[String], fresh: &mut impl FnMut() -> V, rng: &mut R) -> Expr<V> {
    let var = vars.choose(rng).expect("at least one variable").clone();
    Expr::Atom { var, rel: random_relation(rng), threshold: fresh() }
}

fn fresh_interval<V>(fresh: &mut impl FnMut() -> V) -> Interval<V> {
    Interval::new(fresh(), fresh())
}

/// A uniformly shaped random tree with exactly `size` nodes (at least one).
///
/// Leaves are atoms; `true` is never produced since it cannot discriminate.
pub fn random_tree<V, R: Rng + ?Sized>(
    size: usize,
    vars: &[String],
    fresh: &mut impl FnMut() -> V,
    rng: &mut R,
) -> Expr<V> {
    match size {
        0 | 1 => random_atom(vars, fresh, rng),
        2 => unary(random_tree(1, vars, fresh, rng), fresh, rng),
        n => {
            // Three binary and three unary operators.
            if rng.random_range(0..6) < 3 {
                unary(random_tree(n - 1, vars, fresh, rng), fresh, rng)
            } else {
                let left = rng.random_range(1..n - 1);
                let l = random_tree(left, vars, fresh, rng);
                let r = random_tree(n - 1 - left, vars, fresh, rng);
                match rng.random_range(0..3) {
                    0 => Expr::and(l, r),
                    1 => Expr::or(l, r),
                    _ => Expr::until(fresh_interval(fresh), l, r),
                }
            }
        }
    }
}

fn unary<V, R: Rng + ?Sized>(child: Expr<V>, fresh: &mut impl FnMut() -> V, rng: &mut R) -> Expr<V> {
    match rng.random_range(0..3) {
        0 => Expr::not(child),
        1 => Expr::eventually(fresh_interval(fresh), child),
        _ => Expr::globally(fresh_interval(fresh), child),
    }
}

/// Seed templates: `F μ`, `G μ` over single atoms and over pairs of atoms
/// joined by `&` or `|`, and `μ1 U μ2` over ordered pairs of distinct atoms.
pub fn seed_family(vars: &[String]) -> Vec<ParametricFormula> {
    let atoms: Vec<ParametricFormula> = vars
        .iter()
        .flat_map(|v| [Relation::Gt, Relation::Le].map(|rel| Expr::atom(v.clone(), rel, fresh_slot())))
        .collect();
    let mut bodies = atoms.clone();
    for i in 0..atoms.len() {
        for j in i + 1..atoms.len() {
            bodies.push(Expr::and(atoms[i].clone(), atoms[j].clone()));
            bodies.push(Expr::or(atoms[i].clone(), atoms[j].clone()));
        }
    }
    let mut out = Vec::new();
    for b in &bodies {
        out.push(Expr::eventually(fresh_interval(&mut fresh_slot), b.clone()));
        out.push(Expr::globally(fresh_interval(&mut fresh_slot), b.clone()));
    }
    for (i, l) in atoms.iter().enumerate() {
        for (j, r) in atoms.iter().enumerate() {
            if i != j {
                out.push(Expr::until(fresh_interval(&mut fresh_slot), l.clone(), r.clone()));
            }
        }
    }
    out.iter().map(canonicalize).collect()
}

/// Initial population of `ne` templates: up to `ne / 2` drawn without
/// replacement from [`seed_family`], the rest random trees of size at most `s`.
pub fn generate_initial_formulae<R: Rng + ?Sized>(
    ne: usize,
    s: usize,
    vars: &[String],
    rng: &mut R,
) -> Vec<ParametricFormula> {
    let family = seed_family(vars);
    let n_l = (ne / 2).min(family.len());
    let mut out: Vec<ParametricFormula> = rand::seq::index::sample(rng, family.len(), n_l)
        .into_iter()
        .map(|i| family[i].clone())
        .collect();
    while out.len() < ne {
        let size = rng.random_range(1..=s.max(1));
        out.push(canonicalize(&random_tree(size, vars, &mut fresh_slot, rng)));
    }
    out
}

/// Swaps a uniformly chosen subtree of `a` with one of `b`.
pub fn recombine<V: Clone, R: Rng + ?Sized>(a: &Expr<V>, b: &Expr<V>, rng: &mut R) -> (Expr<V>, Expr<V>) {
    let ia = rng.random_range(0..a.size());
    let ib = rng.random_range(0..b.size());
    recombine_at(a, b, ia, ib)
}

/// Swaps subtree `ia` (pre-order) of `a` with subtree `ib` of `b`.
pub fn recombine_at<V: Clone>(a: &Expr<V>, b: &Expr<V>, ia: usize, ib: usize) -> (Expr<V>, Expr<V>) {
    let sa = a.node(ia).expect("index within tree").clone();
    let sb = b.node(ib).expect("index within tree").clone();
    let (mut ca, mut cb) = (a.clone(), b.clone());
    *ca.node_mut(ia).expect("index within tree") = sb;
    *cb.node_mut(ib).expect("index within tree") = sa;
    (ca, cb)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Move {
    Flip,
    Variable,
    Connective,
    SwapTemporal,
    ToUntil,
    UntilToEventually,
    Negation,
}

fn moves<V>(e: &Expr<V>, n_vars: usize) -> Vec<Move> {
    match e {
        Expr::True => Vec::new(),
        Expr::Atom { .. } => {
            let mut m = vec![Move::Flip];
            if n_vars > 1 {
                m.push(Move::Variable);
            }
            m
        }
        Expr::Not(_) => vec![Move::Negation],
        Expr::And(..) | Expr::Or(..) => vec![Move::Connective, Move::Negation],
        Expr::Eventually(..) | Expr::Globally(..) => vec![Move::SwapTemporal, Move::ToUntil, Move::Negation],
        Expr::Until(..) => vec![Move::UntilToEventually, Move::Negation],
    }
}

/// Applies one random structural change at one random node: inequality flip,
/// atom variable change, `&`/`|` swap, `F`/`G` swap, `F`/`G` to `U` with a
/// fresh left atom, `U` to `F` on its right operand, or negation toggle.
///
/// Returns a clone when no node admits a move (only possible for `true`).
pub fn mutate<V: Clone, R: Rng + ?Sized>(
    a: &Expr<V>,
    vars: &[String],
    fresh: &mut impl FnMut() -> V,
    rng: &mut R,
) -> Expr<V> {
    let candidates: Vec<usize> = (0..a.size())
        .filter(|&i| !moves(a.node(i).expect("index within tree"), vars.len()).is_empty())
        .collect();
    let Some(&idx) = candidates.choose(rng) else {
        return a.clone();
    };
    let mut out = a.clone();
    let node = out.node_mut(idx).expect("index within tree");
    let mv = *moves(node, vars.len()).choose(rng).expect("non-empty menu");
    let old = std::mem::replace(node, Expr::True);
    *node = match (mv, old) {
        (Move::Flip, Expr::Atom { var, rel, threshold }) => Expr::Atom { var, rel: rel.flip(), threshold },
        (Move::Variable, Expr::Atom { var, rel, threshold }) => {
            let others: Vec<&String> = vars.iter().filter(|v| **v != var).collect();
            let var = (*others.choose(rng).expect("another variable")).clone();
            Expr::Atom { var, rel, threshold }
        }
        (Move::Connective, Expr::And(l, r)) => Expr::Or(l, r),
        (Move::Connective, Expr::Or(l, r)) => Expr::And(l, r),
        (Move::SwapTemporal, Expr::Eventually(i, c)) => Expr::Globally(i, c),
        (Move::SwapTemporal, Expr::Globally(i, c)) => Expr::Eventually(i, c),
        (Move::ToUntil, Expr::Eventually(i, c) | Expr::Globally(i, c)) => {
            Expr::Until(i, Box::new(random_atom(vars, fresh, rng)), c)
        }
        (Move::UntilToEventually, Expr::Until(i, _, r)) => Expr::Eventually(i, r),
        (Move::Negation, Expr::Not(c)) => *c,
        (Move::Negation, e) => Expr::not(e),
        _ => unreachable!("move not applicable to node"),
    };
    out
}

/// [`mutate`] for templates; new placeholders are renamed canonically.
pub fn mutate_template<R: Rng + ?Sized>(a: &ParametricFormula, vars: &[String], rng: &mut R) -> ParametricFormula {
    canonicalize(&mutate(a, vars, &mut fresh_slot, rng))
}

/// [`recombine`] for templates; placeholders are renamed canonically.
pub fn recombine_templates<R: Rng + ?Sized>(
    a: &ParametricFormula,
    b: &ParametricFormula,
    rng: &mut R,
) -> (ParametricFormula, ParametricFormula) {
    let (x, y) = recombine(a, b, rng);
    (canonicalize(&x), canonicalize(&y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pstl::{parse_template, validate_template};
    use crate::stl::format;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn vars(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn seed_family_sizes() {
        assert_eq!(seed_family(&vars(1)).len(), 2 * (2 + 2) + 2);
        assert_eq!(seed_family(&vars(2)).len(), 44);
        let texts: Vec<String> = seed_family(&vars(1)).iter().map(format).collect();
        assert!(texts.contains(&"F[?a0,?b0] (x1 > ?k0)".to_string()), "{texts:?}");
        assert!(texts.contains(&"G[?a0,?b0] (x1 <= ?k0)".to_string()));
        assert!(texts.contains(&"(x1 > ?k0) U[?a0,?b0] (x1 <= ?k1)".to_string()));
    }

    #[test]
    fn initial_population() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pop = generate_initial_formulae(40, 5, &vars(2), &mut rng);
        assert_eq!(pop.len(), 40);
        let family = seed_family(&vars(2));
        assert_eq!(pop.iter().take(20).filter(|p| family.contains(p)).count(), 20);
        for p in &pop[20..] {
            assert!(p.size() <= 5);
        }
        let atoms = generate_initial_formulae(4, 1, &vars(2), &mut rng);
        assert!(atoms[2..].iter().all(|p| matches!(p, Expr::Atom { .. })));
    }

    #[test]
    fn random_tree_has_requested_size() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for size in 1..12 {
            let t = random_tree(size, &vars(3), &mut fresh_slot, &mut rng);
            assert_eq!(t.size(), size);
        }
    }

    #[test]
    fn root_swap_exchanges_parents() {
        let a = parse_template("F[?a,?b] (x1 > ?k)").unwrap();
        let b = parse_template("(x1 > ?k) U[?a,?b] (x2 <= ?j)").unwrap();
        assert_eq!(recombine_at(&a, &b, 0, 0), (b.clone(), a.clone()));
    }

    #[test]
    fn atom_menu() {
        let a = parse_template("(x1 > ?k)").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let m = mutate_template(&a, &vars(1), &mut rng);
            assert_eq!(format(&m), "(x1 <= ?k0)");
        }
    }

    #[test]
    fn flip_is_involution() {
        let a = Expr::atom("x", Relation::Gt, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let v = ["x".to_string()];
        let once = mutate(&a, &v, &mut || 0.0, &mut rng);
        assert_eq!(mutate(&once, &v, &mut || 0.0, &mut rng), a);
    }

    #[test]
    fn until_to_eventually_keeps_right_operand() {
        let a = parse_template("(x1 > ?k) U[?a,?b] (x2 <= ?j)").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let seen: Vec<String> = (0..200).map(|_| format(&mutate_template(&a, &vars(2), &mut rng))).collect();
        assert!(seen.contains(&"F[?a0,?b0] (x2 <= ?k0)".to_string()));
        assert!(seen.contains(&"!((x1 > ?k0) U[?a0,?b0] (x2 <= ?k1))".to_string()));
        for s in &seen {
            validate_template(&parse_template(s).unwrap()).unwrap();
        }
    }
}
