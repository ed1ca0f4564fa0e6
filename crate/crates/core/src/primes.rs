//! Prime bookkeeping and the exact identities between j, j*, h, h* and ω.

use num_bigint::BigUint;

use crate::error::{Error, Result};

/// Largest prime index handled without an explicit override (p_54 = 251).
pub const DEFAULT_MAX_INDEX: usize = 54;

/// The first `n` primes p_1 = 2, p_2 = 3, ..., p_n.
///
/// Searches only ever look at the odd slice p_2..p_n, see [`PrimeSet::odd`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeSet {
    primes: Vec<u32>,
}

impl PrimeSet {
    /// First `n` primes, refusing indices beyond [`DEFAULT_MAX_INDEX`].
    pub fn first(n: usize) -> Result<Self> {
        if n > DEFAULT_MAX_INDEX {
            return Err(Error::IndexOutOfRange {
                n,
                max: DEFAULT_MAX_INDEX,
            });
        }
        Ok(Self::first_unchecked(n))
    }

    /// First `n` primes without the range guard.
    pub fn first_unchecked(n: usize) -> Self {
        assert!(n >= 1, "a prime set needs at least p_1 = 2");
        let mut limit = 32usize;
        loop {
            let primes = sieve(limit);
            if primes.len() >= n {
                return PrimeSet {
                    primes: primes[..n].to_vec(),
                };
            }
            limit *= 2;
        }
    }

    /// Index n of the largest prime.
    pub fn n(&self) -> usize {
        self.primes.len()
    }

    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    /// The odd primes p_2..p_n that the searches place.
    pub fn odd(&self) -> &[u32] {
        &self.primes[1..]
    }

    /// p_i for 1-based `i`.
    pub fn prime_at(&self, i: usize) -> Option<u32> {
        i.checked_sub(1).and_then(|j| self.primes.get(j).copied())
    }

    /// 1-based index of `p`, if it belongs to the set.
    pub fn index_of(&self, p: u32) -> Option<usize> {
        self.primes.binary_search(&p).ok().map(|j| j + 1)
    }

    pub fn largest(&self) -> u32 {
        *self.primes.last().expect("non-empty")
    }

    /// p_n# as an exact integer.
    pub fn primorial(&self) -> BigUint {
        self.primes
            .iter()
            .fold(BigUint::from(1u32), |acc, &p| acc * p)
    }
}

/// Sieve of Eratosthenes, primes `<= limit`.
pub fn sieve(limit: usize) -> Vec<u32> {
    if limit < 2 {
        return Vec::new();
    }
    let mut composite = vec![false; limit + 1];
    let mut out = Vec::new();
    for i in 2..=limit {
        if composite[i] {
            continue;
        }
        out.push(i as u32);
        let mut j = i * i;
        while j <= limit {
            composite[j] = true;
            j += i;
        }
    }
    out
}

/// h(n), h*(n) and ω(n) for one index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JacobsthalValues {
    pub n: usize,
    /// ω(n); absent for n = 1.
    pub omega: Option<u32>,
    pub h: u32,
    pub h_star: u32,
}

impl JacobsthalValues {
    /// h(1) = j(2) = 2.
    pub fn first() -> Self {
        JacobsthalValues {
            n: 1,
            omega: None,
            h: 2,
            h_star: 1,
        }
    }
}

/// h(n) = 2·ω(n) + 2 for n > 1.
pub fn h_from_omega(omega: u32, n: usize) -> Result<JacobsthalValues> {
    if n <= 1 {
        return Err(Error::OmegaUndefined { n });
    }
    let h = 2 * omega + 2;
    Ok(JacobsthalValues {
        n,
        omega: Some(omega),
        h,
        h_star: h - 1,
    })
}

/// j(2m) = 2·j(m) for odd m; the caller vouches that `j_odd` belongs to an odd argument.
pub fn j_even_doubling(j_odd: u64) -> u64 {
    2 * j_odd
}

/// j(modulus) by scanning one full period: the longest run of integers sharing
/// a factor with `modulus`, plus one.
///
/// Cost is linear in `modulus`; meant for cross-checks on small arguments.
pub fn jacobsthal_brute(modulus: u64) -> u64 {
    assert!(modulus >= 1);
    if modulus == 1 {
        return 1;
    }
    let factors = distinct_prime_factors(modulus);
    let coprime = |x: u64| factors.iter().all(|&p| x % p != 0);
    // The pattern is periodic in `modulus`; 1 is coprime, so start a run after it
    // and scan up to 1 + modulus, which is coprime again.
    let mut longest = 0u64;
    let mut run = 0u64;
    for x in 2..=modulus + 1 {
        if coprime(x) {
            longest = longest.max(run);
            run = 0;
        } else {
            run += 1;
        }
    }
    longest + 1
}

fn distinct_prime_factors(mut x: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= x {
        if x % d == 0 {
            out.push(d);
            while x % d == 0 {
                x /= d;
            }
        }
        d += 1;
    }
    if x > 1 {
        out.push(x);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_primes() {
        assert_eq!(PrimeSet::first(2).unwrap().primes(), &[2, 3]);
        assert_eq!(
            PrimeSet::first(6).unwrap().primes(),
            &[2, 3, 5, 7, 11, 13]
        );
        assert_eq!(PrimeSet::first(54).unwrap().largest(), 251);
        assert!(matches!(
            PrimeSet::first(55),
            Err(Error::IndexOutOfRange { n: 55, .. })
        ));
        assert_eq!(PrimeSet::first_unchecked(60).largest(), 281);
    }

    #[test]
    fn index_round_trip() {
        let ps = PrimeSet::first(54).unwrap();
        for i in 1..=54 {
            assert_eq!(ps.index_of(ps.prime_at(i).unwrap()), Some(i));
        }
        assert_eq!(ps.index_of(4), None);
        assert_eq!(ps.prime_at(0), None);
        assert_eq!(ps.prime_at(55), None);
    }

    #[test]
    fn h_identity() {
        assert_eq!(h_from_omega(1, 2).unwrap().h, 4);
        assert_eq!(h_from_omega(10, 6).unwrap().h, 22);
        let v = h_from_omega(428, 54).unwrap();
        assert_eq!((v.h, v.h_star), (858, 857));
        assert!(matches!(h_from_omega(3, 1), Err(Error::OmegaUndefined { .. })));
        assert_eq!(JacobsthalValues::first().h, 2);
    }

    #[test]
    fn doubling_matches_brute_force() {
        assert_eq!(jacobsthal_brute(1), 1);
        assert_eq!(jacobsthal_brute(2), 2);
        assert_eq!(j_even_doubling(jacobsthal_brute(1)), jacobsthal_brute(2));
        assert_eq!(jacobsthal_brute(3), 2);
        assert_eq!(jacobsthal_brute(6), 4);
        assert_eq!(j_even_doubling(jacobsthal_brute(3)), jacobsthal_brute(6));
        // coprime to 15: 1 2 4 7 8 11 13 14 16, widest gap 3
        assert_eq!(jacobsthal_brute(15), 3);
        assert_eq!(j_even_doubling(jacobsthal_brute(15)), jacobsthal_brute(30));
        for m in (1..200u64).step_by(2) {
            assert_eq!(j_even_doubling(jacobsthal_brute(m)), jacobsthal_brute(2 * m));
        }
    }

    #[test]
    fn primorial_values() {
        assert_eq!(PrimeSet::first(5).unwrap().primorial(), BigUint::from(2310u32));
    }
}
