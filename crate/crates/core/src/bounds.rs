//! ψ_min tables and the bound-based rejection test used by the discarding
//! searches.
//!
//! Column k of a table counts the primes p_2..p_k, so column 1 is identically
//! zero and column k holds k-1 odd primes.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::coverage::{CoverageArray, MAX_CAPACITY};
use crate::error::{Error, Result};
use crate::primes::PrimeSet;

/// Default guard on table depth; cost grows with the product of (p_i) over the column.
pub const MAX_K_DEFAULT: usize = 8;
pub const MAX_M_DEFAULT: usize = 500;

/// Extents of the table committed under `data/psi_min.txt`.
pub const SHIPPED_MAX_M: usize = 200;
pub const SHIPPED_MAX_K: usize = 7;

const SHIPPED: &str = include_str!("../data/psi_min.txt");

/// ψ_min(m, k) for 1 <= m <= max_m, 1 <= k <= max_k.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PsiMinTable {
    max_m: usize,
    max_k: usize,
    values: Vec<u32>,
}

impl PsiMinTable {
    pub fn max_m(&self) -> usize {
        self.max_m
    }

    pub fn max_k(&self) -> usize {
        self.max_k
    }

    /// Exact table entry; panics outside the extents.
    pub fn get(&self, m: usize, k: usize) -> u32 {
        assert!((1..=self.max_m).contains(&m) && (1..=self.max_k).contains(&k));
        self.values[(m - 1) * self.max_k + (k - 1)]
    }

    /// A valid lower bound for ψ_min(m, k) at any arguments: k is clamped to
    /// the table depth and m to its length (ψ_min is non-decreasing in both).
    #[inline]
    pub fn lower_bound(&self, m: usize, k: usize) -> u32 {
        if m == 0 || k <= 1 {
            return 0;
        }
        let k = k.min(self.max_k);
        let m = m.min(self.max_m);
        self.values[(m - 1) * self.max_k + (k - 1)]
    }

    /// The table shipped with the crate (m <= 200, k <= 7).
    pub fn shipped() -> Self {
        Self::parse(SHIPPED.as_bytes()).expect("shipped psi_min table parses")
    }

    /// Loads from `JACOBSTHAL_PSIMIN_PATH` when set, otherwise the shipped table.
    pub fn from_env_or_shipped() -> Result<Self> {
        match std::env::var_os("JACOBSTHAL_PSIMIN_PATH") {
            Some(path) => {
                let f = std::fs::File::open(path)?;
                Self::parse(std::io::BufReader::new(f))
            }
            None => Ok(Self::shipped()),
        }
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "psi_min v1 max_m={} max_k={}", self.max_m, self.max_k)?;
        let mut line = String::new();
        for m in 1..=self.max_m {
            line.clear();
            for k in 1..=self.max_k {
                if k > 1 {
                    line.push(' ');
                }
                write!(line, "{}", self.get(m, k)).expect("write to String");
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("ascii")
    }

    pub fn parse<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty file".into(),
        })??;
        let (max_m, max_k) = parse_header(&header)?;
        let mut values = Vec::with_capacity(max_m * max_k);
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<u32> = line
                .split_whitespace()
                .map(|s| s.parse())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse {
                    line: i + 2,
                    msg: format!("{e}"),
                })?;
            if row.len() != max_k {
                return Err(Error::Parse {
                    line: i + 2,
                    msg: format!("expected {max_k} columns, found {}", row.len()),
                });
            }
            values.extend(row);
        }
        if values.len() != max_m * max_k {
            return Err(Error::Parse {
                line: values.len() / max_k.max(1) + 2,
                msg: format!("expected {max_m} rows"),
            });
        }
        Ok(PsiMinTable {
            max_m,
            max_k,
            values,
        })
    }
}

fn parse_header(h: &str) -> Result<(usize, usize)> {
    let bad = |msg: &str| Error::Parse {
        line: 1,
        msg: msg.to_string(),
    };
    let mut parts = h.split_whitespace();
    if parts.next() != Some("psi_min") || parts.next() != Some("v1") {
        return Err(bad("header must start with `psi_min v1`"));
    }
    let mut max_m = None;
    let mut max_k = None;
    for p in parts {
        if let Some(v) = p.strip_prefix("max_m=") {
            max_m = v.parse().ok();
        } else if let Some(v) = p.strip_prefix("max_k=") {
            max_k = v.parse().ok();
        }
    }
    match (max_m, max_k) {
        (Some(m), Some(k)) if m >= 1 && k >= 1 => Ok((m, k)),
        _ => Err(bad("header needs max_m=<M> max_k=<K>")),
    }
}

/// r_{m,p} = 1 + ⌊(m-1)/p⌋, the most multiples of p among m consecutive integers.
#[inline]
pub fn r_multiples(m: usize, p: u32) -> usize {
    debug_assert!(m >= 1);
    1 + (m - 1) / p as usize
}

/// Exact ψ_min by minimising over every residue combination (zero classes
/// included) of p_2..p_max_k.
pub fn compute_psi_min(max_m: usize, max_k: usize, allow_large: bool) -> Result<PsiMinTable> {
    if max_m == 0 || max_k == 0 {
        return Err(Error::InvalidConfig("table extents must be positive".into()));
    }
    if !allow_large && (max_k > MAX_K_DEFAULT || max_m > MAX_M_DEFAULT) {
        return Err(Error::InvalidConfig(format!(
            "psi_min extents max_m={max_m} max_k={max_k} exceed the default guard \
             (max_m <= {MAX_M_DEFAULT}, max_k <= {MAX_K_DEFAULT})"
        )));
    }
    if max_m > MAX_CAPACITY {
        return Err(Error::CapacityExhausted { capacity: max_m });
    }
    let ps = PrimeSet::first_unchecked(max_k);
    let odd = ps.odd().to_vec();
    // mins[(k-1) * max_m + (m-1)]
    let init = vec![u32::MAX; max_k * max_m];

    let mut prefixes: Vec<(CoverageArray, usize)> = vec![(CoverageArray::new(max_m)?, 0)];
    // split on the first few primes so the walks can run independently
    let split = odd.len().min(3);
    let mut mins = init.clone();
    for d in 0..split {
        let mut next = Vec::new();
        for (arr, _) in &prefixes {
            update_column(&mut mins, arr, d + 1, max_m);
            for r in 0..odd[d] {
                let mut a = *arr;
                fill_class(&mut a, r, odd[d]);
                next.push((a, d + 1));
            }
        }
        prefixes = next;
    }

    let walk = |(arr, depth): &(CoverageArray, usize)| {
        let mut local = vec![u32::MAX; max_k * max_m];
        psi_min_walk(arr, *depth, &odd, max_m, &mut local);
        local
    };
    let merge = |mut a: Vec<u32>, b: Vec<u32>| {
        for (x, y) in a.iter_mut().zip(b) {
            *x = (*x).min(y);
        }
        a
    };

    #[cfg(feature = "parallel")]
    let partial = {
        use rayon::prelude::*;
        prefixes
            .par_iter()
            .map(walk)
            .reduce(|| vec![u32::MAX; max_k * max_m], merge)
    };
    #[cfg(not(feature = "parallel"))]
    let partial = prefixes.iter().map(walk).fold(init, merge);

    mins = merge(mins, partial);

    let mut values = vec![0u32; max_m * max_k];
    for m in 1..=max_m {
        for k in 1..=max_k {
            let v = mins[(k - 1) * max_m + (m - 1)];
            values[(m - 1) * max_k + (k - 1)] = if v == u32::MAX { 0 } else { v };
        }
    }
    Ok(PsiMinTable {
        max_m,
        max_k,
        values,
    })
}

fn fill_class(a: &mut CoverageArray, r: u32, p: u32) {
    let mut q = if r == 0 { p as usize } else { r as usize };
    while q <= a.len() {
        a.cover(q);
        q += p as usize;
    }
}

fn update_column(mins: &mut [u32], arr: &CoverageArray, k: usize, max_m: usize) {
    let col = &mut mins[(k - 1) * max_m..k * max_m];
    let mut count = 0u32;
    for (m, slot) in col.iter_mut().enumerate() {
        if arr.is_covered(m + 1) {
            count += 1;
        }
        if count < *slot {
            *slot = count;
        }
    }
}

fn psi_min_walk(arr: &CoverageArray, depth: usize, odd: &[u32], max_m: usize, mins: &mut [u32]) {
    update_column(mins, arr, depth + 1, max_m);
    if depth == odd.len() {
        return;
    }
    let p = odd[depth];
    for r in 0..p {
        let mut a = *arr;
        fill_class(&mut a, r, p);
        psi_min_walk(&a, depth + 1, odd, max_m, mins);
    }
}

/// Upper bound on ν_max(m, k): r_{m,k} - ψ_min(r_{m,k}, k-1), with the
/// column clamped to the table depth.
pub fn nu_max_bound(m: usize, k: usize, primes: &PrimeSet, table: &PsiMinTable) -> usize {
    assert!(k >= 2, "nu_max is defined for k >= 2");
    let p = primes.prime_at(k).expect("k within the prime set");
    let r = r_multiples(m, p);
    r - table.lower_bound(r, k - 1) as usize
}

/// Inputs to one evaluation of the bound-based rejection test.
#[derive(Debug, Clone)]
pub struct CriterionContext {
    /// ψ_min column used for every pending prime.
    pub t: usize,
    /// Window length (m, or the reduced m*).
    pub window: usize,
    /// Covered positions inside the window.
    pub psi_known: usize,
    /// The primes still to be placed.
    pub pending: Vec<u32>,
}

/// True when the pending primes provably cannot cover what is left of the window.
pub fn criterion_discard(ctx: &CriterionContext, table: &PsiMinTable) -> bool {
    let uncovered = ctx.window.saturating_sub(ctx.psi_known);
    if uncovered == 0 {
        return false;
    }
    let reach: usize = ctx
        .pending
        .iter()
        .map(|&p| {
            let r = r_multiples(ctx.window, p);
            r - table.lower_bound(r, ctx.t) as usize
        })
        .sum();
    reach < uncovered
}

/// Precomputed per-prime bounds r_{w,p} - ψ_min(r_{w,p}, t) for every window
/// length w and column t, for use inside search loops.
#[derive(Debug, Clone)]
pub struct BoundCache {
    max_window: usize,
    max_t: usize,
    nprimes: usize,
    /// [(t-1) * nprimes + i] * (max_window + 1) + w
    reach: Vec<u16>,
}

impl BoundCache {
    pub fn new(odd: &[u32], table: &PsiMinTable, max_window: usize) -> Self {
        let max_t = table.max_k();
        let nprimes = odd.len();
        let stride = max_window + 1;
        let mut reach = vec![0u16; max_t * nprimes * stride];
        for t in 1..=max_t {
            for (i, &p) in odd.iter().enumerate() {
                let base = ((t - 1) * nprimes + i) * stride;
                for w in 1..=max_window {
                    let r = r_multiples(w, p);
                    reach[base + w] = (r - table.lower_bound(r, t) as usize) as u16;
                }
            }
        }
        BoundCache {
            max_window,
            max_t,
            nprimes,
            reach,
        }
    }

    pub fn max_t(&self) -> usize {
        self.max_t
    }

    pub fn max_window(&self) -> usize {
        self.max_window
    }

    /// Bound on what odd prime `i` can newly cover in a window of `w`, using column `t`.
    #[inline]
    pub fn reach(&self, t: usize, i: usize, w: usize) -> usize {
        let t = t.clamp(1, self.max_t);
        let w = w.min(self.max_window);
        self.reach[((t - 1) * self.nprimes + i) * (self.max_window + 1) + w] as usize
    }

    /// Sum of reaches over the pending primes in `pending` (bit i = odd prime i).
    #[inline]
    pub fn reach_sum(&self, t: usize, mut pending: u64, w: usize) -> usize {
        let t = t.clamp(1, self.max_t);
        let w = w.min(self.max_window);
        let stride = self.max_window + 1;
        let base = (t - 1) * self.nprimes * stride + w;
        let mut s = 0usize;
        while pending != 0 {
            let i = pending.trailing_zeros() as usize;
            pending &= pending - 1;
            s += self.reach[base + i * stride] as usize;
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// ψ_min by scanning every offset a modulo the product of p_2..p_k.
    fn oracle(m: usize, k: usize) -> u32 {
        let ps = PrimeSet::first_unchecked(k.max(1));
        let odd: Vec<u64> = ps.odd().iter().map(|&p| p as u64).collect();
        let period: u64 = odd.iter().product();
        (0..period)
            .map(|a| {
                (1..=m as u64)
                    .filter(|q| odd.iter().any(|p| (a + q) % p == 0))
                    .count() as u32
            })
            .min()
            .unwrap()
    }

    #[test]
    fn r_multiples_examples() {
        assert_eq!(r_multiples(10, 3), 4);
        assert_eq!(r_multiples(1, 13), 1);
        assert_eq!(r_multiples(13, 13), 1);
        assert_eq!(r_multiples(14, 13), 2);
    }

    #[test]
    fn small_table_matches_offset_oracle() {
        let t = compute_psi_min(40, 5, false).unwrap();
        for m in 1..=40 {
            for k in 1..=5 {
                assert_eq!(t.get(m, k), oracle(m, k), "m={m} k={k}");
            }
        }
        assert_eq!(t.get(10, 2), 3);
        assert_eq!(t.get(2, 2), 0);
    }

    #[test]
    fn guards() {
        assert!(compute_psi_min(10, 9, false).is_err());
        assert!(compute_psi_min(501, 3, false).is_err());
        assert!(compute_psi_min(0, 3, false).is_err());
    }

    #[test]
    fn shipped_table_is_current() {
        let shipped = PsiMinTable::shipped();
        assert_eq!((shipped.max_m(), shipped.max_k()), (SHIPPED_MAX_M, SHIPPED_MAX_K));
        let fresh = compute_psi_min(SHIPPED_MAX_M, SHIPPED_MAX_K, false).unwrap();
        assert_eq!(shipped, fresh);
    }

    #[test]
    fn text_round_trip() {
        let t = compute_psi_min(12, 3, false).unwrap();
        let text = t.to_text();
        assert!(text.starts_with("psi_min v1 max_m=12 max_k=3\n"));
        assert_eq!(PsiMinTable::parse(text.as_bytes()).unwrap(), t);
        assert!(PsiMinTable::parse("psi_min v2 max_m=1 max_k=1\n0\n".as_bytes()).is_err());
        assert!(PsiMinTable::parse("psi_min v1 max_m=2 max_k=1\n0\n".as_bytes()).is_err());
        assert!(PsiMinTable::parse("psi_min v1 max_m=1 max_k=2\n0\n".as_bytes()).is_err());
    }

    #[test]
    fn nu_max_examples() {
        let ps = PrimeSet::first(10).unwrap();
        let t = compute_psi_min(30, 7, false).unwrap();
        // r_{10,5} = 2, ψ_min(2,2) = 0
        assert_eq!(nu_max_bound(10, 3, &ps, &t), 2);
        assert_eq!(nu_max_bound(10, 2, &ps, &t), 4);
        assert_eq!(t.get(1, 7), 0);
        assert_eq!(nu_max_bound(16, 8, &ps, &t), 1);
    }

    #[test]
    fn criterion_examples() {
        let t = compute_psi_min(30, 4, false).unwrap();
        let ctx = CriterionContext {
            t: 3,
            window: 10,
            psi_known: 7,
            pending: vec![11, 13],
        };
        assert!(criterion_discard(&ctx, &t));
        let full = CriterionContext {
            psi_known: 10,
            ..ctx.clone()
        };
        assert!(!criterion_discard(&full, &t));
        let roomy = CriterionContext {
            psi_known: 8,
            ..ctx
        };
        assert!(!criterion_discard(&roomy, &t));
    }

    #[test]
    fn cache_agrees_with_direct_evaluation() {
        let ps = PrimeSet::first(14).unwrap();
        let t = compute_psi_min(60, 5, false).unwrap();
        let cache = BoundCache::new(ps.odd(), &t, 120);
        for tt in 1..=5 {
            for (i, &p) in ps.odd().iter().enumerate() {
                for w in 1..=120 {
                    let r = r_multiples(w, p);
                    assert_eq!(cache.reach(tt, i, w), r - t.lower_bound(r, tt) as usize);
                }
            }
        }
        let pending = 0b1011_0000u64;
        let direct: usize = [4, 5, 7].iter().map(|&i| cache.reach(3, i, 50)).sum();
        assert_eq!(cache.reach_sum(3, pending, 50), direct);
    }
}
