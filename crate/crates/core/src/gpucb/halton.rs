//! Randomly shifted Halton points in the unit cube.

use rand::Rng;

const PRIMES: [u64; 32] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103,
    107, 109, 113, 127, 131,
];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

fn prime(d: usize) -> u64 {
    // Beyond the table, fall back to trial division; dimensions that high are rare.
    if let Some(p) = PRIMES.get(d) {
        return *p;
    }
    let mut count = PRIMES.len();
    let mut n = *PRIMES.last().unwrap() + 2;
    loop {
        if (2..).take_while(|k| k * k <= n).all(|k| n % k != 0) {
            if count == d {
                return n;
            }
            count += 1;
        }
        n += 2;
    }
}

/// `n` points of the Halton sequence in `[0,1]^dim`, shifted modulo one by a
/// random vector and started at a random index.
pub fn shifted_halton<R: Rng + ?Sized>(dim: usize, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let shift: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    let bases: Vec<u64> = (0..dim).map(prime).collect();
    let start: u64 = rng.random_range(1..1 << 16);
    (0..n as u64)
        .map(|i| {
            bases
                .iter()
                .zip(&shift)
                .map(|(&b, s)| (radical_inverse(start + i, b) + s).fract())
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn radical_inverse_base_two() {
        let v: Vec<f64> = (1..=4).map(|i| radical_inverse(i, 2)).collect();
        assert_eq!(v, vec![0.5, 0.25, 0.75, 0.125]);
    }

    #[test]
    fn primes_beyond_table() {
        assert_eq!(prime(0), 2);
        assert_eq!(prime(31), 131);
        assert_eq!(prime(32), 137);
        assert_eq!(prime(33), 139);
    }

    #[test]
    fn points_cover_each_axis() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts = shifted_halton(3, 256, &mut rng);
        assert_eq!(pts.len(), 256);
        for d in 0..3 {
            let mut bins = [0usize; 8];
            for p in &pts {
                assert!((0.0..1.0).contains(&p[d]));
                bins[(p[d] * 8.0) as usize] += 1;
            }
            assert!(bins.iter().all(|&b| (24..=40).contains(&b)), "{bins:?}");
        }
    }
}
