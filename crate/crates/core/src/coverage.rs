//! Positional coverage of 1..L by residue classes.
//!
//! Position q (1-based) lives in bit q-1. Arrays are small fixed-capacity
//! values; each search branch owns its own copy.

use num_bigint::BigUint;
use num_bigint::ToBigUint;

use crate::error::{Error, Result};
use crate::primes::PrimeSet;

pub const MAX_WORDS: usize = 16;
/// Largest supported array length.
pub const MAX_CAPACITY: usize = MAX_WORDS * 64;

#[derive(Clone, Copy, PartialEq, Eq)]
pub struct CoverageArray {
    words: [u64; MAX_WORDS],
    len: usize,
    nwords: usize,
}

impl std::fmt::Debug for CoverageArray {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let marks: String = (1..=self.len)
            .map(|q| if self.is_covered(q) { '#' } else { '.' })
            .collect();
        write!(f, "CoverageArray({marks})")
    }
}

impl CoverageArray {
    /// Empty array over positions 1..=len.
    pub fn new(len: usize) -> Result<Self> {
        if len == 0 || len > MAX_CAPACITY {
            return Err(Error::CapacityExhausted { capacity: len });
        }
        Ok(CoverageArray {
            words: [0; MAX_WORDS],
            len,
            nwords: len.div_ceil(64),
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.words[..self.nwords].iter().all(|&w| w == 0)
    }

    pub fn words(&self) -> &[u64] {
        &self.words[..self.nwords]
    }

    pub fn is_covered(&self, q: usize) -> bool {
        debug_assert!(q >= 1 && q <= self.len);
        let b = q - 1;
        self.words[b / 64] >> (b % 64) & 1 == 1
    }

    pub fn cover(&mut self, q: usize) {
        debug_assert!(q >= 1 && q <= self.len);
        let b = q - 1;
        self.words[b / 64] |= 1 << (b % 64);
    }

    /// Marks every q in 1..=L with q ≡ r (mod p).
    pub fn fill(&mut self, r: u32, p: u32) -> Result<()> {
        let r = r % p;
        if r == 0 {
            return Err(Error::ZeroResidue { r, p });
        }
        let mut q = r as usize;
        while q <= self.len {
            self.cover(q);
            q += p as usize;
        }
        Ok(())
    }

    /// Copy of `self` with the class r mod p filled.
    pub fn filled(&self, r: u32, p: u32) -> Result<Self> {
        let mut out = *self;
        out.fill(r, p)?;
        Ok(out)
    }

    /// ORs a precomputed class mask (see [`MaskTable`]).
    #[inline]
    pub fn fill_mask(&mut self, mask: &[u64]) {
        debug_assert_eq!(mask.len(), self.nwords);
        for (w, m) in self.words[..self.nwords].iter_mut().zip(mask) {
            *w |= m;
        }
    }

    #[inline]
    pub fn with_mask(&self, mask: &[u64]) -> Self {
        let mut out = *self;
        out.fill_mask(mask);
        out
    }

    /// Smallest uncovered position, or `None` when 1..=L is fully covered.
    #[inline]
    pub fn next_free(&self) -> Option<usize> {
        for (i, &w) in self.words[..self.nwords].iter().enumerate() {
            if w != u64::MAX {
                let q = i * 64 + w.trailing_ones() as usize + 1;
                return (q <= self.len).then_some(q);
            }
        }
        None
    }

    /// Smallest uncovered position that is `>= from`.
    pub fn next_free_from(&self, from: usize) -> Option<usize> {
        if from > self.len {
            return None;
        }
        let b = from - 1;
        let mut i = b / 64;
        let mut w = self.words[i] | ((1u64 << (b % 64)) - 1);
        loop {
            if w != u64::MAX {
                let q = i * 64 + w.trailing_ones() as usize + 1;
                return (q <= self.len).then_some(q);
            }
            i += 1;
            if i >= self.nwords {
                return None;
            }
            w = self.words[i];
        }
    }

    /// ψ: number of covered positions in 1..=m.
    #[inline]
    pub fn psi(&self, m: usize) -> usize {
        debug_assert!(m <= self.len);
        let full = m / 64;
        let mut c: u32 = self.words[..full].iter().map(|w| w.count_ones()).sum();
        let rest = m % 64;
        if rest > 0 {
            c += (self.words[full] & ((1u64 << rest) - 1)).count_ones();
        }
        c as usize
    }

    /// The shortest window holding every uncovered position of 1..=m, as
    /// (window length m*, covered count ψ* inside it). `(0, 0)` when 1..=m is
    /// fully covered.
    #[inline]
    pub fn reduced_window(&self, m: usize) -> (usize, usize) {
        debug_assert!(m <= self.len);
        let first = match self.next_free() {
            Some(q) if q <= m => q,
            _ => return (0, 0),
        };
        let last = self.last_free(m).expect("first exists");
        let span = last - first + 1;
        let uncovered = m - self.psi(m);
        (span, span - uncovered)
    }

    /// Largest uncovered position in 1..=m.
    pub fn last_free(&self, m: usize) -> Option<usize> {
        let mut i = m.div_ceil(64);
        while i > 0 {
            i -= 1;
            let mut inv = !self.words[i];
            if i == m / 64 {
                let rest = m % 64;
                inv &= (1u64 << rest).wrapping_sub(1);
            }
            if inv != 0 {
                return Some(i * 64 + 63 - inv.leading_zeros() as usize + 1);
            }
        }
        None
    }

    /// Uncovered positions of 1..=m in ascending order.
    pub fn uncovered(&self, m: usize) -> impl Iterator<Item = usize> + '_ {
        debug_assert!(m <= self.len);
        (0..m.div_ceil(64)).flat_map(move |i| {
            let mut inv = !self.words[i];
            if i == m / 64 {
                inv &= (1u64 << (m % 64)).wrapping_sub(1);
            }
            std::iter::from_fn(move || {
                if inv == 0 {
                    return None;
                }
                let b = inv.trailing_zeros() as usize;
                inv &= inv - 1;
                Some(i * 64 + b + 1)
            })
        })
    }
}

/// Precomputed class masks for a list of primes at a fixed array length.
#[derive(Debug, Clone)]
pub struct MaskTable {
    len: usize,
    nwords: usize,
    primes: Vec<u32>,
    offsets: Vec<usize>,
    data: Vec<u64>,
}

impl MaskTable {
    pub fn new(primes: &[u32], len: usize) -> Result<Self> {
        let empty = CoverageArray::new(len)?;
        let nwords = len.div_ceil(64);
        let mut offsets = Vec::with_capacity(primes.len());
        let mut data = Vec::new();
        for &p in primes {
            offsets.push(data.len());
            // residue 0 gets an empty mask so indexing stays direct
            data.extend(std::iter::repeat_n(0, nwords));
            for r in 1..p {
                let a = empty.filled(r, p)?;
                data.extend_from_slice(a.words());
            }
        }
        Ok(MaskTable {
            len,
            nwords,
            primes: primes.to_vec(),
            offsets,
            data,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    /// Mask of r mod primes[i].
    #[inline]
    pub fn mask(&self, i: usize, r: u32) -> &[u64] {
        let start = self.offsets[i] + r as usize * self.nwords;
        &self.data[start..start + self.nwords]
    }

    pub fn empty_array(&self) -> CoverageArray {
        CoverageArray::new(self.len).expect("validated at construction")
    }
}

/// One non-zero remainder a_i per odd prime, possibly partial, plus the
/// reconstructed offset a once known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidueAssignment {
    n: usize,
    /// Indexed by odd position: slot 0 holds a_2.
    remainders: Vec<Option<u32>>,
    offset: Option<BigUint>,
}

impl ResidueAssignment {
    pub fn new(n: usize) -> Self {
        ResidueAssignment {
            n,
            remainders: vec![None; n.saturating_sub(1)],
            offset: None,
        }
    }

    /// Complete assignment from (a_2, ..., a_n).
    pub fn from_remainders(primes: &PrimeSet, remainders: &[u32]) -> Result<Self> {
        if remainders.len() != primes.odd().len() {
            return Err(Error::InvalidRecord(format!(
                "expected {} remainders, got {}",
                primes.odd().len(),
                remainders.len()
            )));
        }
        let mut ra = Self::new(primes.n());
        for (j, &a) in remainders.iter().enumerate() {
            ra.assign(primes, j + 2, a)?;
        }
        Ok(ra)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Sets a_i for the 1-based prime index `i` (2..=n).
    pub fn assign(&mut self, primes: &PrimeSet, i: usize, a: u32) -> Result<()> {
        let p = primes
            .prime_at(i)
            .filter(|_| i >= 2 && i <= self.n)
            .ok_or(Error::InvalidRecord(format!("prime index {i} out of 2..={}", self.n)))?;
        if a == 0 || a >= p {
            return Err(Error::ZeroResidue { r: a, p });
        }
        self.remainders[i - 2] = Some(a);
        self.offset = None;
        Ok(())
    }

    pub fn get(&self, i: usize) -> Option<u32> {
        i.checked_sub(2)
            .and_then(|j| self.remainders.get(j).copied().flatten())
    }

    pub fn is_complete(&self) -> bool {
        self.remainders.iter().all(Option::is_some)
    }

    /// (a_2, ..., a_n) when complete.
    pub fn remainders(&self) -> Option<Vec<u32>> {
        self.remainders.iter().copied().collect()
    }

    pub fn offset(&self) -> Option<&BigUint> {
        self.offset.as_ref()
    }

    /// Smallest a >= 0 with a ≡ -a_i (mod p_i) for every i, stored and returned.
    pub fn reconstruct_offset(&mut self, primes: &PrimeSet) -> Result<BigUint> {
        let rem = self
            .remainders()
            .ok_or_else(|| Error::InvalidRecord("assignment is incomplete".into()))?;
        let a = crt_offset(&primes.odd()[..rem.len()], &rem);
        self.offset = Some(a.clone());
        Ok(a)
    }
}

/// Solves a ≡ -rem[i] (mod primes[i]) by incremental CRT.
pub fn crt_offset(primes: &[u32], rem: &[u32]) -> BigUint {
    let mut x = BigUint::from(0u32);
    let mut modulus = BigUint::from(1u32);
    for (&p, &a) in primes.iter().zip(rem) {
        let p64 = p as u64;
        let target = (p64 - a as u64 % p64) % p64;
        let x_mod = (&x % p64).to_u64_digits().first().copied().unwrap_or(0);
        let m_mod = (&modulus % p64).to_u64_digits().first().copied().unwrap_or(0);
        let diff = (target + p64 - x_mod) % p64;
        let t = diff * mod_inverse(m_mod, p64) % p64;
        x += &modulus * t.to_biguint().expect("non-negative");
        modulus *= p;
    }
    x
}

fn mod_inverse(a: u64, p: u64) -> u64 {
    let (mut old_r, mut r) = (a as i128, p as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    debug_assert_eq!(old_r, 1, "moduli are distinct primes");
    old_s.rem_euclid(p as i128) as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn covered(a: &CoverageArray) -> Vec<usize> {
        (1..=a.len()).filter(|&q| a.is_covered(q)).collect()
    }

    fn example_1_15() -> CoverageArray {
        let mut a = CoverageArray::new(10).unwrap();
        for (r, p) in [(1, 3), (3, 5), (2, 7), (5, 11), (6, 13)] {
            a.fill(r, p).unwrap();
        }
        a
    }

    #[test]
    fn fill_examples() {
        let e = CoverageArray::new(10).unwrap();
        assert_eq!(covered(&e.filled(1, 3).unwrap()), vec![1, 4, 7, 10]);
        assert_eq!(covered(&e.filled(3, 5).unwrap()), vec![3, 8]);
        let a = e.filled(1, 3).unwrap().filled(2, 7).unwrap();
        assert_eq!(covered(&a), vec![1, 2, 4, 7, 9, 10]);
        assert!(matches!(e.filled(6, 3), Err(Error::ZeroResidue { .. })));
        assert!(matches!(e.filled(0, 5), Err(Error::ZeroResidue { .. })));
    }

    #[test]
    fn next_free_examples() {
        let e = CoverageArray::new(10).unwrap();
        assert_eq!(e.next_free(), Some(1));
        let a = e.filled(1, 3).unwrap();
        assert_eq!(a.next_free(), Some(2));
        assert_eq!(a.filled(2, 7).unwrap().next_free(), Some(3));
        assert_eq!(example_1_15().next_free(), None);
        assert_eq!(a.next_free_from(5), Some(5));
        assert_eq!(a.next_free_from(7), Some(8));
        assert_eq!(a.next_free_from(10), None);
    }

    #[test]
    fn psi_examples() {
        let e = CoverageArray::new(10).unwrap();
        assert_eq!(e.psi(10), 0);
        assert_eq!(e.filled(1, 3).unwrap().psi(10), 4);
        assert_eq!(example_1_15().psi(10), 10);
    }

    #[test]
    fn reduced_window_examples() {
        let e = CoverageArray::new(10).unwrap();
        assert_eq!(e.reduced_window(10), (10, 0));
        let mut a = e;
        for q in [1, 2, 3, 9, 10] {
            a.cover(q);
        }
        assert_eq!(a.reduced_window(10), (5, 0));
        let mut b = e;
        for q in (1..=10).filter(|&q| q != 5) {
            b.cover(q);
        }
        assert_eq!(b.reduced_window(10), (1, 0));
        assert_eq!(example_1_15().reduced_window(10), (0, 0));
        let c = e.filled(1, 3).unwrap();
        // uncovered 2 3 5 6 8 9 -> window 2..9 holds 4 and 7
        assert_eq!(c.reduced_window(10), (8, 2));
        assert_eq!(c.last_free(10), Some(9));
        assert_eq!(c.uncovered(10).collect::<Vec<_>>(), vec![2, 3, 5, 6, 8, 9]);
    }

    #[test]
    fn word_boundaries() {
        let mut a = CoverageArray::new(130).unwrap();
        for q in 1..=64 {
            a.cover(q);
        }
        assert_eq!(a.next_free(), Some(65));
        assert_eq!(a.psi(64), 64);
        assert_eq!(a.psi(130), 64);
        assert_eq!(a.last_free(64), None);
        assert_eq!(a.last_free(128), Some(128));
        assert_eq!(a.reduced_window(128), (64, 0));
        for q in 65..=130 {
            a.cover(q);
        }
        assert_eq!(a.next_free(), None);
        assert!(CoverageArray::new(MAX_CAPACITY + 1).is_err());
    }

    #[test]
    fn masks_match_fill() {
        let primes = [3, 5, 7, 11];
        let t = MaskTable::new(&primes, 100).unwrap();
        let e = t.empty_array();
        for (i, &p) in primes.iter().enumerate() {
            for r in 1..p {
                assert_eq!(e.with_mask(t.mask(i, r)), e.filled(r, p).unwrap());
            }
        }
    }

    #[test]
    fn offset_reconstruction() {
        let ps = PrimeSet::first(6).unwrap();
        let mut ra = ResidueAssignment::from_remainders(&ps, &[1, 3, 2, 5, 6]).unwrap();
        assert_eq!(ra.reconstruct_offset(&ps).unwrap(), BigUint::from(12227u32));
        assert_eq!(ra.offset(), Some(&BigUint::from(12227u32)));

        let ps2 = PrimeSet::first(2).unwrap();
        let mut r2 = ResidueAssignment::from_remainders(&ps2, &[1]).unwrap();
        assert_eq!(r2.reconstruct_offset(&ps2).unwrap(), BigUint::from(2u32));

        // oracle: scan 0..15 for a ≡ 2 (mod 3), a ≡ 3 (mod 5)
        let ps3 = PrimeSet::first(3).unwrap();
        let expect = (0u32..15).find(|a| a % 3 == 2 && a % 5 == 3).unwrap();
        let mut r3 = ResidueAssignment::from_remainders(&ps3, &[1, 2]).unwrap();
        assert_eq!(r3.reconstruct_offset(&ps3).unwrap(), BigUint::from(expect));
        assert_eq!(expect, 8);
    }

    #[test]
    fn assignment_rejects_zero_and_partial() {
        let ps = PrimeSet::first(4).unwrap();
        let mut ra = ResidueAssignment::new(4);
        assert!(ra.assign(&ps, 3, 5).is_err());
        assert!(ra.assign(&ps, 1, 1).is_err());
        ra.assign(&ps, 2, 2).unwrap();
        assert_eq!(ra.get(2), Some(2));
        assert!(!ra.is_complete());
        assert!(ra.reconstruct_offset(&ps).is_err());
    }
}
