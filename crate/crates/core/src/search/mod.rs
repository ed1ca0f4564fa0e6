//! Exhaustive searches for ω(n) and the full set of maximum-length sequences.
//!
//! Every algorithm reports complete remainder tuples (a_2, ..., a_n); the
//! recorded set always holds exactly the tuples reaching the best length seen
//! (at or above the configured floor).

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use crate::bounds::PsiMinTable;
use crate::coverage::{CoverageArray, MaskTable, MAX_CAPACITY};
use crate::error::{Error, Result};
use crate::golden;
use crate::primes::PrimeSet;

pub mod basic;
pub mod discarding;
pub mod greedy;

pub use basic::{bpa, bsa, rpa};
pub use discarding::{crpdsa, dsa};
pub use greedy::{gpa, FrequencyTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Bsa,
    Bpa,
    Rpa,
    Dsa,
    Crpdsa,
    Gpa,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Bsa,
        Algorithm::Bpa,
        Algorithm::Rpa,
        Algorithm::Dsa,
        Algorithm::Crpdsa,
        Algorithm::Gpa,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Bsa => "bsa",
            Algorithm::Bpa => "bpa",
            Algorithm::Rpa => "rpa",
            Algorithm::Dsa => "dsa",
            Algorithm::Crpdsa => "crpdsa",
            Algorithm::Gpa => "gpa",
        }
    }

    /// Largest n the algorithm accepts, if it has a guard.
    pub fn max_n(self) -> Option<usize> {
        match self {
            Algorithm::Bsa => Some(9),
            Algorithm::Bpa => Some(10),
            Algorithm::Rpa => Some(12),
            _ => None,
        }
    }

    /// Whether the algorithm enumerates permutations of primes from the top
    /// of the tree (and so splits into permutation prefixes).
    pub fn is_permutation(self) -> bool {
        matches!(self, Algorithm::Bpa | Algorithm::Rpa)
    }

    pub fn check_guard(self, n: usize) -> Result<()> {
        if n < 2 {
            return Err(Error::OmegaUndefined { n });
        }
        let Some(max) = self.max_n() else {
            return Ok(());
        };
        if n <= max {
            return Ok(());
        }
        let reason = match self {
            Algorithm::Bsa => {
                let ps = PrimeSet::first_unchecked(n);
                let count: f64 = ps.odd().iter().map(|&p| (p - 1) as f64).product();
                format!(
                    "N_BSA = prod(p_i - 1) = {count:.3e} residue combinations exceeds the guard n <= {max}; use dsa or gpa"
                )
            }
            Algorithm::Bpa => format!(
                "N_BPA <= (n-1)! = {} permutations exceeds the guard n <= {max}; use rpa, dsa or gpa",
                (1..n as u64).product::<u64>()
            ),
            _ => format!("guard n <= {max} exceeded; use dsa, crpdsa or gpa"),
        };
        Err(Error::Guard {
            algo: self.name(),
            n,
            reason,
        })
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown algorithm `{s}`")))
    }
}

/// Result of one search (or one work unit).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchOutcome {
    pub n: usize,
    /// Best cover length found; ω(n) for a complete run.
    pub omega: u32,
    /// Every remainder tuple (a_2, ..., a_n) reaching `omega`, in ascending order.
    pub sequences: BTreeSet<Vec<u32>>,
    /// Complete assignments examined.
    pub visited: u64,
}

impl SearchOutcome {
    pub fn n_seq(&self) -> usize {
        self.sequences.len()
    }

    /// Merges per-unit outcomes: the best length wins and the sequence sets
    /// of every unit reaching it are united. Order independent.
    pub fn merge(n: usize, parts: impl IntoIterator<Item = SearchOutcome>) -> SearchOutcome {
        let mut out = SearchOutcome {
            n,
            omega: 0,
            sequences: BTreeSet::new(),
            visited: 0,
        };
        for part in parts {
            out.visited += part.visited;
            if part.omega > out.omega {
                out.omega = part.omega;
                out.sequences = part.sequences;
            } else if part.omega == out.omega {
                out.sequences.extend(part.sequences);
            }
        }
        out
    }
}

/// Tuning for the discarding and greedy searches.
#[derive(Debug, Clone, PartialEq)]
pub struct DsaConfig {
    /// Prime index k at which checks start: a node is tested once the first
    /// pending prime is p_k with k >= k_star. For the greedy search, primes
    /// below p_{k_star} are enumerated sequentially.
    pub k_star: usize,
    /// Deepest ψ_min column to use; the effective column at a node is also
    /// capped by k-1 and the table depth.
    pub t: usize,
    /// Starting tentative length; nothing shorter is recorded.
    pub m0: usize,
    /// The combined search enumerates primes below p_n * switch_ratio sequentially.
    pub switch_ratio: f64,
    /// Turns the rejection test off (the search then differs only in cost).
    pub criterion: bool,
}

impl DsaConfig {
    /// Defaults for `algo` at index `n`.
    pub fn default_for(algo: Algorithm, n: usize) -> Self {
        let m0 = default_m0(n);
        let ps = PrimeSet::first_unchecked(n.max(2));
        let switch_ratio = 1.0 / 3.0;
        let k_star = match algo {
            Algorithm::Crpdsa => {
                let seq = sequential_part_len(&ps, switch_ratio);
                (seq + 1).clamp(2, 8)
            }
            Algorithm::Gpa => default_gpa_k_star(n),
            _ => 6.min(n).max(2),
        };
        DsaConfig {
            k_star,
            t: (k_star - 1).max(1),
            m0,
            switch_ratio,
            criterion: true,
        }
    }

    pub fn validate(&self, algo: Algorithm, primes: &PrimeSet) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.k_star < 2 {
            return bad(format!("k_star must be >= 2, got {}", self.k_star));
        }
        if self.t < 1 || self.t >= self.k_star {
            return bad(format!(
                "t must satisfy 1 <= t < k_star, got t={} k_star={}",
                self.t, self.k_star
            ));
        }
        if self.m0 < 1 {
            return bad("m0 must be >= 1".into());
        }
        if !(self.switch_ratio > 0.0 && self.switch_ratio <= 1.0) {
            return bad(format!("switch_ratio must lie in (0, 1], got {}", self.switch_ratio));
        }
        if algo == Algorithm::Crpdsa {
            let seq = sequential_part_len(primes, self.switch_ratio);
            if self.k_star > (seq + 1).max(2) {
                return bad(format!(
                    "crpdsa needs p_k_star < p_n * {:.3}; k_star={} but only p_2..p_{} qualify",
                    self.switch_ratio,
                    self.k_star,
                    seq + 1
                ));
            }
        }
        Ok(())
    }
}

/// Starting length: the published ω(n-1) + 1 when known (ω is strictly
/// increasing in n), else 1. A wrong seed is caught by the fallback rerun.
pub fn default_m0(n: usize) -> usize {
    if n >= 3 {
        golden::known_omega(n - 1).map_or(1, |w| w as usize + 1)
    } else {
        1
    }
}

fn default_gpa_k_star(n: usize) -> usize {
    // sequential prefix over the smallest primes; the greedy part handles the rest
    match n {
        0..=5 => 2,
        6..=12 => 4,
        _ => 5,
    }
}

/// Number of odd primes strictly below p_n * ratio.
pub fn sequential_part_len(primes: &PrimeSet, ratio: f64) -> usize {
    let limit = primes.largest() as f64 * ratio;
    primes.odd().iter().take_while(|&&p| (p as f64) < limit).count()
}

/// Working array length for index n.
pub fn default_capacity(n: usize) -> usize {
    let est = match golden::known_omega(n) {
        Some(w) => w as usize + 16,
        None => {
            let nf = n as f64;
            (4.0 * nf * nf.ln()).ceil() as usize
        }
    };
    (est + 1).div_ceil(64).max(1) * 64
}

/// Shared state of one search: primes and class masks at a fixed array length.
#[derive(Debug, Clone)]
pub(crate) struct Ctx {
    pub primes: PrimeSet,
    pub odd: Vec<u32>,
    pub masks: MaskTable,
}

impl Ctx {
    pub fn new(primes: &PrimeSet, len: usize) -> Result<Self> {
        let odd = primes.odd().to_vec();
        if odd.len() > 63 {
            return Err(Error::InvalidConfig(
                "at most 63 odd primes are supported".into(),
            ));
        }
        Ok(Ctx {
            primes: primes.clone(),
            masks: MaskTable::new(&odd, len)?,
            odd,
        })
    }

    pub fn np(&self) -> usize {
        self.odd.len()
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn all_pending(&self) -> u64 {
        (1u64 << self.np()) - 1
    }

    #[inline]
    pub fn mask(&self, i: usize, r: u32) -> &[u64] {
        self.masks.mask(i, r)
    }

    pub fn empty(&self) -> CoverageArray {
        self.masks.empty_array()
    }
}

/// Tracks the best length and the tuples achieving it.
#[derive(Debug)]
pub(crate) struct Recorder<'a> {
    floor: usize,
    best: usize,
    seqs: BTreeSet<Vec<u32>>,
    pub visited: u64,
    pub exhausted: bool,
    shared: Option<&'a AtomicUsize>,
}

impl<'a> Recorder<'a> {
    pub fn new(floor: usize, shared: Option<&'a AtomicUsize>) -> Self {
        Recorder {
            floor: floor.max(1),
            best: 0,
            seqs: BTreeSet::new(),
            visited: 0,
            exhausted: false,
            shared,
        }
    }

    /// Leaves shorter than this are irrelevant.
    #[inline]
    pub fn threshold(&self) -> usize {
        self.floor.max(self.best)
    }

    /// Tentative length for rejection tests.
    #[inline]
    pub fn target(&self) -> usize {
        let own = self.threshold();
        match self.shared {
            Some(s) => own.max(s.load(Ordering::Relaxed)),
            None => own,
        }
    }

    #[inline]
    pub fn observe(&mut self, len: usize, residues: &[u32]) {
        if len < self.threshold() {
            return;
        }
        if len > self.best {
            self.best = len;
            self.seqs.clear();
            if let Some(s) = self.shared {
                s.fetch_max(len, Ordering::Relaxed);
            }
        }
        if !self.seqs.contains(residues) {
            self.seqs.insert(residues.to_vec());
        }
    }

    /// Records a leaf given its array; flags exhaustion when the cover runs
    /// to the end of the array.
    #[inline]
    pub fn leaf(&mut self, arr: &CoverageArray, residues: &[u32]) {
        match arr.next_free() {
            Some(q) => self.observe(q - 1, residues),
            None => self.exhausted = true,
        }
    }

    pub fn finish(self, n: usize) -> Result<SearchOutcome> {
        if self.exhausted {
            return Err(Error::CapacityExhausted { capacity: 0 });
        }
        Ok(SearchOutcome {
            n,
            omega: self.best as u32,
            sequences: self.seqs,
            visited: self.visited,
        })
    }
}

/// Runs `f` with growing array lengths until the cover fits.
pub(crate) fn with_capacity_retry<T>(n: usize, mut f: impl FnMut(usize) -> Result<T>) -> Result<T> {
    let mut len = default_capacity(n);
    loop {
        match f(len) {
            Err(Error::CapacityExhausted { .. }) if len < MAX_CAPACITY => {
                len = (len * 2).min(MAX_CAPACITY);
            }
            Err(Error::CapacityExhausted { .. }) => {
                return Err(Error::CapacityExhausted { capacity: len })
            }
            other => return other,
        }
    }
}

/// Reruns with a floor of 1 if the seeded floor turned out to exceed ω.
pub(crate) fn with_seed_fallback(
    cfg: &DsaConfig,
    mut f: impl FnMut(&DsaConfig) -> Result<SearchOutcome>,
) -> Result<SearchOutcome> {
    let out = f(cfg)?;
    if (out.omega as usize) < cfg.m0 && cfg.m0 > 1 {
        let relaxed = DsaConfig { m0: 1, ..cfg.clone() };
        return f(&relaxed);
    }
    Ok(out)
}

/// Runs `algo` with its default configuration.
pub fn search(
    algo: Algorithm,
    primes: &PrimeSet,
    table: &PsiMinTable,
) -> Result<SearchOutcome> {
    let cfg = DsaConfig::default_for(algo, primes.n());
    search_with(algo, primes, &cfg, table)
}

pub fn search_with(
    algo: Algorithm,
    primes: &PrimeSet,
    cfg: &DsaConfig,
    table: &PsiMinTable,
) -> Result<SearchOutcome> {
    match algo {
        Algorithm::Bsa => bsa(primes),
        Algorithm::Bpa => bpa(primes),
        Algorithm::Rpa => rpa(primes),
        Algorithm::Dsa => dsa(primes, cfg, table),
        Algorithm::Crpdsa => crpdsa(primes, cfg, table),
        Algorithm::Gpa => gpa(primes, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("xyz".parse::<Algorithm>().is_err());
    }

    #[test]
    fn guards_name_the_cost() {
        let e = Algorithm::Bsa.check_guard(10).unwrap_err().to_string();
        assert!(e.contains("N_BSA"), "{e}");
        assert!(Algorithm::Bsa.check_guard(9).is_ok());
        assert!(Algorithm::Bpa.check_guard(11).is_err());
        assert!(Algorithm::Rpa.check_guard(13).is_err());
        assert!(Algorithm::Gpa.check_guard(30).is_ok());
        assert!(Algorithm::Gpa.check_guard(1).is_err());
    }

    #[test]
    fn recorder_keeps_only_the_best() {
        let mut r = Recorder::new(1, None);
        r.observe(3, &[1, 2]);
        r.observe(2, &[2, 2]);
        r.observe(3, &[2, 1]);
        r.observe(3, &[2, 1]);
        assert_eq!(r.seqs.len(), 2);
        r.observe(4, &[1, 1]);
        let out = r.finish(3).unwrap();
        assert_eq!(out.omega, 4);
        assert_eq!(out.sequences.len(), 1);
    }

    #[test]
    fn merge_is_order_independent() {
        let part = |omega: u32, s: &[&[u32]], v: u64| SearchOutcome {
            n: 3,
            omega,
            sequences: s.iter().map(|x| x.to_vec()).collect(),
            visited: v,
        };
        let parts = vec![
            part(2, &[&[1, 2]], 3),
            part(1, &[&[1, 1]], 4),
            part(2, &[&[2, 1]], 5),
        ];
        let a = SearchOutcome::merge(3, parts.clone());
        let b = SearchOutcome::merge(3, parts.into_iter().rev());
        assert_eq!(a, b);
        assert_eq!(a.omega, 2);
        assert_eq!(a.sequences.len(), 2);
        assert_eq!(a.visited, 12);
    }

    #[test]
    fn config_validation() {
        let ps = PrimeSet::first(20).unwrap();
        let cfg = DsaConfig::default_for(Algorithm::Dsa, 20);
        assert!(cfg.validate(Algorithm::Dsa, &ps).is_ok());
        assert!(DsaConfig { k_star: 1, ..cfg.clone() }.validate(Algorithm::Dsa, &ps).is_err());
        assert!(DsaConfig { t: 8, ..cfg.clone() }.validate(Algorithm::Dsa, &ps).is_err());
        assert!(DsaConfig { m0: 0, ..cfg.clone() }.validate(Algorithm::Dsa, &ps).is_err());
        let c = DsaConfig::default_for(Algorithm::Crpdsa, 20);
        assert!(c.validate(Algorithm::Crpdsa, &ps).is_ok());
        // p_10 = 29 is not below 71/3
        assert!(DsaConfig { k_star: 10, t: 7, ..c }.validate(Algorithm::Crpdsa, &ps).is_err());
    }

    #[test]
    fn capacity_covers_known_values() {
        for n in 2..=54 {
            let w = golden::known_omega(n).unwrap() as usize;
            assert!(default_capacity(n) > w + 1);
            assert!(default_capacity(n) <= MAX_CAPACITY);
        }
    }
}
