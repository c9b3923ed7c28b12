//! Small prime utilities shared by the sieve and the Euler-product evaluators.

use std::sync::{Arc, OnceLock, RwLock};

/// All primes `p <= limit`, ascending. Plain odd-only sieve of Eratosthenes.
pub fn primes_up_to(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let limit = usize::try_from(limit).expect("prime limit exceeds address space");
    // index i stands for 2i + 1
    let half = limit / 2 + 1;
    let mut composite = vec![false; half];
    composite[0] = true;
    let mut i = 1;
    while (2 * i + 1) * (2 * i + 1) <= limit {
        if !composite[i] {
            let p = 2 * i + 1;
            let mut j = p * p / 2;
            while j < half {
                composite[j] = true;
                j += p;
            }
        }
        i += 1;
    }
    let mut primes = Vec::with_capacity(approx_prime_count(limit as u64));
    primes.push(2);
    primes.extend(
        composite
            .iter()
            .enumerate()
            .filter(|&(i, &c)| !c && 2 * i < limit)
            .map(|(i, _)| (2 * i + 1) as u64),
    );
    primes
}

fn approx_prime_count(limit: u64) -> usize {
    if limit < 17 {
        return 8;
    }
    let l = limit as f64;
    (1.26 * l / l.ln()) as usize + 8
}

/// Process-wide cache so repeated Euler-product evaluations at the same
/// truncation do not re-sieve. Grows monotonically.
pub(crate) fn cached_primes(limit: u64) -> Arc<Vec<u64>> {
    static CACHE: OnceLock<RwLock<(u64, Arc<Vec<u64>>)>> = OnceLock::new();
    let cell = CACHE.get_or_init(|| RwLock::new((0, Arc::new(Vec::new()))));
    {
        let guard = cell.read().expect("prime cache poisoned");
        if guard.0 >= limit {
            return Arc::clone(&guard.1);
        }
    }
    let mut guard = cell.write().expect("prime cache poisoned");
    if guard.0 < limit {
        *guard = (limit, Arc::new(primes_up_to(limit)));
    }
    Arc::clone(&guard.1)
}

/// Distinct primes `p <= limit` taken from the cache as a borrowed prefix.
pub(crate) fn with_primes<R>(limit: u64, f: impl FnOnce(&[u64]) -> R) -> R {
    let all = cached_primes(limit);
    let end = all.partition_point(|&p| p <= limit);
    f(&all[..end])
}

/// Integer square root, exact for all `u64`.
pub fn isqrt(n: u64) -> u64 {
    if n < 2 {
        return n;
    }
    let mut r = (n as f64).sqrt() as u64;
    while r.checked_mul(r).is_none_or(|sq| sq > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|sq| sq <= n) {
        r += 1;
    }
    r
}

/// Prime factorization `n = ∏ p^e` by trial division, ascending primes.
///
/// Intended for the modest arguments used by the arithmetic-function layer
/// (`n` up to around 10^12).
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    if n < 2 {
        return out;
    }
    for p in [2u64, 3] {
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
    }
    let mut d = 5u64;
    let mut step = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            let mut e = 0;
            while n.is_multiple_of(d) {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += step;
        step = 6 - step;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn is_prime(n: u64) -> bool {
    matches!(factorize(n).as_slice(), [(_, 1)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_prime_lists() {
        assert!(primes_up_to(1).is_empty());
        assert_eq!(primes_up_to(2), vec![2]);
        assert_eq!(primes_up_to(30), vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert_eq!(primes_up_to(10_000_000).len(), 664_579);
    }

    #[test]
    fn isqrt_edges() {
        assert_eq!(isqrt(0), 0);
        assert_eq!(isqrt(15), 3);
        assert_eq!(isqrt(16), 4);
        assert_eq!(isqrt(u64::MAX), 4_294_967_295);
        assert_eq!(isqrt(1 << 40), 1 << 20);
    }

    #[test]
    fn factorization() {
        assert_eq!(factorize(1), vec![]);
        assert_eq!(factorize(360), vec![(2, 3), (3, 2), (5, 1)]);
        assert_eq!(factorize(999_983), vec![(999_983, 1)]);
        assert!(is_prime(97));
        assert!(!is_prime(91));
        assert!(!is_prime(1));
    }

    #[test]
    fn cache_prefix() {
        with_primes(100, |ps| assert_eq!(ps.len(), 25));
        with_primes(10, |ps| assert_eq!(ps, &[2, 3, 5, 7]));
    }
}
