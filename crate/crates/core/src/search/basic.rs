//! Plain enumerations: residue by residue, and over prime permutations.

use super::{with_capacity_retry, Algorithm, Ctx, Recorder, SearchOutcome};
use crate::coverage::CoverageArray;
use crate::error::{Error, Result};
use crate::primes::PrimeSet;

/// Tries every residue combination. Guarded to n <= 9.
pub fn bsa(primes: &PrimeSet) -> Result<SearchOutcome> {
    Algorithm::Bsa.check_guard(primes.n())?;
    with_capacity_retry(primes.n(), |len| {
        let ctx = Ctx::new(primes, len)?;
        let mut rec = Recorder::new(1, None);
        bsa_from(&ctx, &[], &mut rec)?;
        rec.finish(primes.n())
    })
}

/// Every ordering of the primes, each placed at the first uncovered position.
/// Guarded to n <= 10.
pub fn bpa(primes: &PrimeSet) -> Result<SearchOutcome> {
    Algorithm::Bpa.check_guard(primes.n())?;
    permutation_search(primes, false)
}

/// Like [`bpa`] but visits only canonical orderings, one per tuple.
/// Guarded to n <= 12.
pub fn rpa(primes: &PrimeSet) -> Result<SearchOutcome> {
    Algorithm::Rpa.check_guard(primes.n())?;
    permutation_search(primes, true)
}

fn permutation_search(primes: &PrimeSet, guard: bool) -> Result<SearchOutcome> {
    with_capacity_retry(primes.n(), |len| {
        let ctx = Ctx::new(primes, len)?;
        let mut rec = Recorder::new(1, None);
        permutation_from(&ctx, &[], guard, &mut rec)?;
        rec.finish(primes.n())
    })
}

/// Applies a residue prefix to an empty array.
pub(crate) fn replay_residues(ctx: &Ctx, prefix: &[u32], path: &mut [u32]) -> Result<CoverageArray> {
    if prefix.len() > ctx.np() {
        return Err(Error::InvalidConfig(format!(
            "prefix of {} residues exceeds {} odd primes",
            prefix.len(),
            ctx.np()
        )));
    }
    let mut arr = ctx.empty();
    for (i, &r) in prefix.iter().enumerate() {
        let p = ctx.odd[i];
        if r == 0 || r >= p {
            return Err(Error::ZeroResidue { r, p });
        }
        arr.fill_mask(ctx.mask(i, r));
        path[i] = r;
    }
    Ok(arr)
}

pub(crate) fn bsa_from(ctx: &Ctx, prefix: &[u32], rec: &mut Recorder) -> Result<()> {
    let mut path = vec![0u32; ctx.np()];
    let arr = replay_residues(ctx, prefix, &mut path)?;
    if prefix.len() == ctx.np() {
        rec.visited += 1;
        rec.leaf(&arr, &path);
    } else {
        bsa_rec(ctx, &arr, prefix.len(), &mut path, rec);
    }
    Ok(())
}

fn bsa_rec(ctx: &Ctx, arr: &CoverageArray, d: usize, path: &mut [u32], rec: &mut Recorder) {
    let p = ctx.odd[d];
    let last = d + 1 == ctx.np();
    for r in 1..p {
        let a = arr.with_mask(ctx.mask(d, r));
        path[d] = r;
        if last {
            rec.visited += 1;
            rec.leaf(&a, path);
        } else {
            bsa_rec(ctx, &a, d + 1, path, rec);
        }
        if rec.exhausted {
            return;
        }
    }
}

/// State after placing an ordered list of primes at successive first-free anchors.
#[derive(Debug, Clone)]
pub(crate) struct Placement {
    pub arr: CoverageArray,
    pub pending: u64,
    /// (odd prime index, anchor) in placement order.
    pub anchors: Vec<(usize, usize)>,
    pub path: Vec<u32>,
    /// Next anchor; `None` once the array is full.
    pub next: Option<usize>,
}

impl Placement {
    pub fn new(ctx: &Ctx) -> Self {
        Placement {
            arr: ctx.empty(),
            pending: ctx.all_pending(),
            anchors: Vec::new(),
            path: vec![0; ctx.np()],
            next: Some(1),
        }
    }

    /// Places the prime of index `i` at the current anchor, applying the
    /// canonical-order test when `guard` is set. Returns false if the move is
    /// not allowed.
    pub fn place(&mut self, ctx: &Ctx, i: usize, guard: bool) -> bool {
        let Some(q) = self.next else { return false };
        if self.pending >> i & 1 == 0 {
            return false;
        }
        let p = ctx.odd[i];
        let r = (q % p as usize) as u32;
        if r == 0 || (guard && blocked(ctx, &self.anchors, p, r)) {
            return false;
        }
        self.arr.fill_mask(ctx.mask(i, r));
        self.path[i] = r;
        self.pending &= !(1u64 << i);
        self.anchors.push((i, q));
        self.next = self.arr.next_free();
        true
    }

    pub fn replay(ctx: &Ctx, order: &[u32], guard: bool) -> Result<Self> {
        let mut st = Placement::new(ctx);
        for &p in order {
            let i = ctx
                .odd
                .iter()
                .position(|&x| x == p)
                .ok_or_else(|| Error::InvalidConfig(format!("{p} is not an odd prime of the set")))?;
            if !st.place(ctx, i, guard) {
                return Err(Error::InvalidConfig(format!(
                    "prime {p} cannot be placed at anchor {:?}",
                    st.next
                )));
            }
        }
        Ok(st)
    }
}

/// True if an earlier anchor of a larger prime lies in the class r mod p:
/// the smaller prime would have claimed that anchor in the canonical order.
#[inline]
pub(crate) fn blocked(ctx: &Ctx, anchors: &[(usize, usize)], p: u32, r: u32) -> bool {
    anchors
        .iter()
        .any(|&(j, qj)| ctx.odd[j] > p && (qj % p as usize) as u32 == r)
}

pub(crate) fn permutation_from(ctx: &Ctx, order: &[u32], guard: bool, rec: &mut Recorder) -> Result<()> {
    let mut st = Placement::replay(ctx, order, guard)?;
    if st.pending == 0 {
        rec.visited += 1;
        rec.leaf(&st.arr, &st.path);
        return Ok(());
    }
    let Some(q) = st.next else {
        rec.exhausted = true;
        return Ok(());
    };
    let arr = st.arr;
    let pending = st.pending;
    perm_rec(ctx, &arr, pending, q, &mut st.anchors, &mut st.path, guard, rec);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn perm_rec(
    ctx: &Ctx,
    arr: &CoverageArray,
    pending: u64,
    q: usize,
    anchors: &mut Vec<(usize, usize)>,
    path: &mut [u32],
    guard: bool,
    rec: &mut Recorder,
) {
    let mut rest = pending;
    while rest != 0 {
        let i = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        let p = ctx.odd[i];
        let r = (q % p as usize) as u32;
        if r == 0 || (guard && blocked(ctx, anchors, p, r)) {
            continue;
        }
        let a = arr.with_mask(ctx.mask(i, r));
        path[i] = r;
        let left = pending & !(1u64 << i);
        if left == 0 {
            rec.visited += 1;
            rec.leaf(&a, path);
        } else {
            match a.next_free() {
                Some(q1) => {
                    anchors.push((i, q));
                    perm_rec(ctx, &a, left, q1, anchors, path, guard, rec);
                    anchors.pop();
                }
                None => rec.exhausted = true,
            }
        }
        path[i] = 0;
        if rec.exhausted {
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::golden;

    #[test]
    fn small_n_match_known_values() {
        for n in 2..=7 {
            let ps = PrimeSet::first(n).unwrap();
            let row = golden::known(n).unwrap();
            for out in [bsa(&ps).unwrap(), bpa(&ps).unwrap(), rpa(&ps).unwrap()] {
                assert_eq!(Some(out.omega), row.omega, "n={n}");
                assert_eq!(Some(out.n_seq() as u32), row.n_seq, "n={n}");
            }
        }
    }

    #[test]
    fn n3_sequences() {
        let ps = PrimeSet::first(3).unwrap();
        let out = bsa(&ps).unwrap();
        assert_eq!(out.omega, 2);
        let seqs: Vec<_> = out.sequences.into_iter().collect();
        assert_eq!(seqs, vec![vec![1, 2], vec![2, 1]]);
        assert_eq!(out.visited, 8);
    }

    #[test]
    fn canonical_order_visits_each_tuple_once() {
        let ps = PrimeSet::first(7).unwrap();
        let plain = bpa(&ps).unwrap();
        let canon = rpa(&ps).unwrap();
        assert_eq!(plain.sequences, canon.sequences);
        assert!(canon.visited < plain.visited);
    }

    #[test]
    fn guards_refuse_large_n() {
        let ps = PrimeSet::first(13).unwrap();
        assert!(matches!(bsa(&ps), Err(Error::Guard { .. })));
        assert!(matches!(bpa(&ps), Err(Error::Guard { .. })));
        assert!(matches!(rpa(&ps), Err(Error::Guard { .. })));
    }

    #[test]
    fn replay_rejects_bad_orders() {
        let ps = PrimeSet::first(4).unwrap();
        let ctx = Ctx::new(&ps, 64).unwrap();
        // anchor 1 then 2: 5 at anchor 2 fine, but 3 placed twice is not
        assert!(Placement::replay(&ctx, &[3, 3], false).is_err());
        assert!(Placement::replay(&ctx, &[4], false).is_err());
        let st = Placement::replay(&ctx, &[3, 5, 7], true).unwrap();
        assert_eq!(st.pending, 0);
    }
}
