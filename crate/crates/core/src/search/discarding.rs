//! Searches that reject partial assignments which cannot reach the current
//! tentative length.

use super::basic::{blocked, replay_residues};
use super::{with_capacity_retry, with_seed_fallback, Algorithm, Ctx, DsaConfig, Recorder, SearchOutcome};
use crate::bounds::{BoundCache, PsiMinTable};
use crate::coverage::CoverageArray;
use crate::error::Result;
use crate::primes::PrimeSet;

/// Residue enumeration with rejection by the ψ_min bound; the last few
/// primes are settled by following first-gap covers.
pub fn dsa(primes: &PrimeSet, cfg: &DsaConfig, table: &PsiMinTable) -> Result<SearchOutcome> {
    Algorithm::Dsa.check_guard(primes.n())?;
    cfg.validate(Algorithm::Dsa, primes)?;
    let n = primes.n();
    with_seed_fallback(cfg, |c| {
        with_capacity_retry(n, |len| {
            let ctx = Ctx::new(primes, len)?;
            let pr = Pruner::new(&ctx, c, table);
            let mut rec = Recorder::new(c.m0, None);
            dsa_unit(&ctx, &pr, &[], &mut rec)?;
            rec.finish(n)
        })
    })
}

/// Residue enumeration over the small primes, canonical placement over the
/// large ones, with the rejection test applied throughout the second part.
pub fn crpdsa(primes: &PrimeSet, cfg: &DsaConfig, table: &PsiMinTable) -> Result<SearchOutcome> {
    Algorithm::Crpdsa.check_guard(primes.n())?;
    cfg.validate(Algorithm::Crpdsa, primes)?;
    let n = primes.n();
    with_seed_fallback(cfg, |c| {
        with_capacity_retry(n, |len| {
            let ctx = Ctx::new(primes, len)?;
            let pr = Pruner::new(&ctx, c, table);
            let mut rec = Recorder::new(c.m0, None);
            crpdsa_unit(&ctx, &pr, &[], &mut rec)?;
            rec.finish(n)
        })
    })
}

/// Precomputed rejection bounds for one array length.
#[derive(Debug, Clone)]
pub(crate) struct Pruner {
    cache: BoundCache,
    t: usize,
    k_star: usize,
    criterion: bool,
    /// Odd primes enumerated by residue in the combined search.
    pub seq_len: usize,
    /// suffix[d][w]: total reach of odd primes d.. in a window of w, at the
    /// column allowed once the first d odd primes are fixed.
    suffix: Vec<Vec<u32>>,
}

impl Pruner {
    pub fn new(ctx: &Ctx, cfg: &DsaConfig, table: &PsiMinTable) -> Self {
        let len = ctx.len();
        let np = ctx.np();
        let cache = BoundCache::new(&ctx.odd, table, len);
        let mut suffix = vec![vec![0u32; len + 1]; np + 1];
        for d in (0..np).rev() {
            let t = cfg.t.min(d + 1);
            for w in 0..=len {
                let below: u32 = (d..np).map(|i| cache.reach(t, i, w) as u32).sum();
                suffix[d][w] = below;
            }
        }
        Pruner {
            cache,
            t: cfg.t,
            k_star: cfg.k_star,
            criterion: cfg.criterion,
            seq_len: super::sequential_part_len(&ctx.primes, cfg.switch_ratio),
            suffix,
        }
    }

    /// Whether nodes with `d` residues fixed are tested.
    #[inline]
    fn active(&self, d: usize) -> bool {
        self.criterion && d + 2 >= self.k_star
    }

    /// True if no completion of the first `d` odd primes can cover 1..target.
    #[inline]
    pub fn reject_prefix(&self, arr: &CoverageArray, d: usize, target: usize) -> bool {
        if !self.active(d) {
            return false;
        }
        let (w, covered) = arr.reduced_window(target.min(arr.len()));
        w != 0 && (self.suffix[d][w] as usize) < w - covered
    }

    /// Same test for an arbitrary set of pending primes.
    #[inline]
    pub fn reject_pending(&self, arr: &CoverageArray, pending: u64, all: u64, target: usize) -> bool {
        if !self.criterion {
            return false;
        }
        let (w, covered) = arr.reduced_window(target.min(arr.len()));
        if w == 0 {
            return false;
        }
        let fixed_prefix = (!pending & all).trailing_ones() as usize;
        let t = self.t.min(fixed_prefix + 1);
        self.cache.reach_sum(t, pending, w) < w - covered
    }
}

pub(crate) fn dsa_unit(ctx: &Ctx, pr: &Pruner, prefix: &[u32], rec: &mut Recorder) -> Result<()> {
    let mut path = vec![0u32; ctx.np()];
    let arr = replay_residues(ctx, prefix, &mut path)?;
    let d = prefix.len();
    if d == ctx.np() {
        rec.visited += 1;
        rec.leaf(&arr, &path);
    } else if !pr.reject_prefix(&arr, d, rec.target()) {
        dsa_rec(ctx, pr, &arr, d, &mut path, rec);
    }
    Ok(())
}

fn dsa_rec(ctx: &Ctx, pr: &Pruner, arr: &CoverageArray, d: usize, path: &mut [u32], rec: &mut Recorder) {
    let np = ctx.np();
    if d + FINISH_DEPTH >= np {
        finish_all(ctx, arr, ctx.all_pending() & !((1u64 << d) - 1), path, rec);
        return;
    }
    let p = ctx.odd[d];
    for r in 1..p {
        let a = arr.with_mask(ctx.mask(d, r));
        path[d] = r;
        if !pr.reject_prefix(&a, d + 1, rec.target()) {
            dsa_rec(ctx, pr, &a, d + 1, path, rec);
        }
        if rec.exhausted {
            return;
        }
    }
    path[d] = 0;
}

/// Number of trailing primes settled by [`finish`] instead of plain enumeration.
pub(crate) const FINISH_DEPTH: usize = 5;

/// Accounts for every completion of the primes in `rem` and records those
/// reaching the threshold.
pub(crate) fn finish_all(ctx: &Ctx, arr: &CoverageArray, rem: u64, path: &mut [u32], rec: &mut Recorder) {
    let mut bits = rem;
    let mut count = 1u64;
    while bits != 0 {
        let i = bits.trailing_zeros() as usize;
        bits &= bits - 1;
        count *= (ctx.odd[i] - 1) as u64;
    }
    rec.visited += count;
    finish(ctx, arr, rem, path, rec);
}

/// A completion can only pass the first gap q if one of the remaining primes
/// covers q, so below the threshold it suffices to follow those classes.
/// Once q - 1 reaches the threshold every completion counts and is listed.
fn finish(ctx: &Ctx, arr: &CoverageArray, rem: u64, path: &mut [u32], rec: &mut Recorder) {
    let Some(q) = arr.next_free() else {
        rec.exhausted = true;
        return;
    };
    if rem == 0 {
        rec.observe(q - 1, path);
        return;
    }
    if q - 1 >= rec.threshold() {
        let i = rem.trailing_zeros() as usize;
        for r in 1..ctx.odd[i] {
            path[i] = r;
            finish(ctx, &arr.with_mask(ctx.mask(i, r)), rem & (rem - 1), path, rec);
            if rec.exhausted {
                return;
            }
        }
        path[i] = 0;
        return;
    }
    let mut bits = rem;
    while bits != 0 {
        let i = bits.trailing_zeros() as usize;
        bits &= bits - 1;
        let r = (q % ctx.odd[i] as usize) as u32;
        if r == 0 {
            continue;
        }
        path[i] = r;
        finish(ctx, &arr.with_mask(ctx.mask(i, r)), rem & !(1u64 << i), path, rec);
        path[i] = 0;
        if rec.exhausted {
            return;
        }
    }
}

pub(crate) fn crpdsa_unit(ctx: &Ctx, pr: &Pruner, prefix: &[u32], rec: &mut Recorder) -> Result<()> {
    let mut path = vec![0u32; ctx.np()];
    let arr = replay_residues(ctx, prefix, &mut path)?;
    let d = prefix.len();
    if d > pr.seq_len {
        return Err(crate::error::Error::InvalidConfig(format!(
            "prefix of {d} residues exceeds the sequential part ({})",
            pr.seq_len
        )));
    }
    if !pr.reject_prefix(&arr, d, rec.target()) {
        crp_seq(ctx, pr, &arr, d, &mut path, rec);
    }
    Ok(())
}

fn crp_seq(ctx: &Ctx, pr: &Pruner, arr: &CoverageArray, d: usize, path: &mut [u32], rec: &mut Recorder) {
    if d >= pr.seq_len {
        let all = ctx.all_pending();
        let pending = all & !((1u64 << d) - 1);
        if pending == 0 {
            rec.visited += 1;
            rec.leaf(arr, path);
            return;
        }
        let Some(q) = arr.next_free() else {
            rec.exhausted = true;
            return;
        };
        let mut anchors = Vec::with_capacity(ctx.np());
        crp_place(ctx, pr, arr, pending, q, &mut anchors, path, rec);
        return;
    }
    let p = ctx.odd[d];
    for r in 1..p {
        let a = arr.with_mask(ctx.mask(d, r));
        path[d] = r;
        if !pr.reject_prefix(&a, d + 1, rec.target()) {
            crp_seq(ctx, pr, &a, d + 1, path, rec);
        }
        if rec.exhausted {
            return;
        }
    }
    path[d] = 0;
}

#[allow(clippy::too_many_arguments)]
fn crp_place(
    ctx: &Ctx,
    pr: &Pruner,
    arr: &CoverageArray,
    pending: u64,
    q: usize,
    anchors: &mut Vec<(usize, usize)>,
    path: &mut [u32],
    rec: &mut Recorder,
) {
    let all = ctx.all_pending();
    let mut rest = pending;
    while rest != 0 {
        let i = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        let p = ctx.odd[i];
        let r = (q % p as usize) as u32;
        if r == 0 || blocked(ctx, anchors, p, r) {
            continue;
        }
        let a = arr.with_mask(ctx.mask(i, r));
        path[i] = r;
        let left = pending & !(1u64 << i);
        if left == 0 {
            rec.visited += 1;
            rec.leaf(&a, path);
        } else if !pr.reject_pending(&a, left, all, rec.target()) {
            match a.next_free() {
                Some(q1) => {
                    anchors.push((i, q));
                    crp_place(ctx, pr, &a, left, q1, anchors, path, rec);
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
