#![allow(dead_code)]

use rand::Rng;
use stlmine::stl::{Expr, Interval, Relation};
use stlmine::{Formula, Trace};

pub const VARS: [&str; 2] = ["x", "y"];

/// Robustness straight from the recursive definition: only `true`, atoms,
/// negation, conjunction and until are primitive. Times are compared
/// directly, so interval bounds should be exact multiples of `dt`.
pub fn oracle(f: &Formula, x: &Trace, i: usize) -> f64 {
    match f {
        Expr::True => f64::INFINITY,
        Expr::Atom { var, rel, threshold } => {
            let v = x.signal(var).unwrap()[i];
            match rel {
                Relation::Gt => v - threshold,
                Relation::Le => threshold - v,
            }
        }
        Expr::Not(g) => -oracle(g, x, i),
        Expr::And(l, r) => oracle(l, x, i).min(oracle(r, x, i)),
        Expr::Or(l, r) => -(-oracle(l, x, i)).min(-oracle(r, x, i)),
        Expr::Until(iv, l, r) => until(iv, x, i, &|k| oracle(l, x, k), &|k| oracle(r, x, k)),
        Expr::Eventually(iv, g) => until(iv, x, i, &|_| f64::INFINITY, &|k| oracle(g, x, k)),
        Expr::Globally(iv, g) => -until(iv, x, i, &|_| f64::INFINITY, &|k| -oracle(g, x, k)),
    }
}

fn until(iv: &Interval<f64>, x: &Trace, i: usize, phi: &dyn Fn(usize) -> f64, psi: &dyn Fn(usize) -> f64) -> f64 {
    let t = x.time(i);
    let mut sup = f64::NEG_INFINITY;
    for j in 0..x.len() {
        let tj = x.time(j);
        if tj < t + iv.start || tj > t + iv.end {
            continue;
        }
        let mut inf = f64::INFINITY;
        for k in i..j {
            inf = inf.min(phi(k));
        }
        sup = sup.max(psi(j).min(inf));
    }
    sup
}

pub fn random_interval<R: Rng>(rng: &mut R, dt: f64) -> Interval<f64> {
    // Multiples of dt, so sample times land exactly on the bounds.
    let a = rng.random_range(0..5) as f64 * dt;
    let b = a + rng.random_range(1..6) as f64 * dt;
    Interval::new(a, b)
}

pub fn random_formula<R: Rng>(rng: &mut R, depth: usize, dt: f64) -> Formula {
    if depth == 0 || rng.random_bool(0.25) {
        if rng.random_bool(0.05) {
            return Formula::True;
        }
        let var = VARS[rng.random_range(0..VARS.len())];
        let rel = if rng.random_bool(0.5) { Relation::Gt } else { Relation::Le };
        let k = rng.random_range(-6..=6) as f64 * 0.5;
        return Formula::atom(var, rel, k);
    }
    let sub = |rng: &mut R| random_formula(rng, depth - 1, dt);
    match rng.random_range(0..7) {
        0 => Formula::not(sub(rng)),
        1 => Formula::and(sub(rng), sub(rng)),
        2 => Formula::or(sub(rng), sub(rng)),
        3 => Formula::eventually(random_interval(rng, dt), sub(rng)),
        4 => Formula::globally(random_interval(rng, dt), sub(rng)),
        _ => {
            let l = sub(rng);
            Formula::until(random_interval(rng, dt), l, sub(rng))
        }
    }
}

pub fn random_trace<R: Rng>(rng: &mut R, len: usize, dt: f64) -> Trace {
    // Coarse values so that ties between samples are common.
    let row = |rng: &mut R| (0..len).map(|_| rng.random_range(-8..=8) as f64 * 0.5).collect::<Vec<_>>();
    let values = vec![row(rng), row(rng)];
    Trace::new(VARS.iter().map(|v| v.to_string()).collect(), 0.0, dt, values).unwrap()
}

/// Equality that treats matching infinities as equal and otherwise allows a
/// relative error of `tol`.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
