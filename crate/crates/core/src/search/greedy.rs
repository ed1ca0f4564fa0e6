//! Greedy branching on the residue class that covers the most uncovered
//! positions of the tentative window.

use super::basic::{blocked, replay_residues};
use super::discarding::{finish_all, FINISH_DEPTH};
use super::{with_capacity_retry, with_seed_fallback, Algorithm, Ctx, DsaConfig, Recorder, SearchOutcome};
use crate::coverage::CoverageArray;
use crate::error::{Error, Result};
use crate::primes::PrimeSet;

/// Greedy search. Primes below p_{k_star} are enumerated residue by residue;
/// the rest are assigned class by class in order of decreasing frequency.
pub fn gpa(primes: &PrimeSet, cfg: &DsaConfig) -> Result<SearchOutcome> {
    Algorithm::Gpa.check_guard(primes.n())?;
    cfg.validate(Algorithm::Gpa, primes)?;
    let n = primes.n();
    with_seed_fallback(cfg, |c| {
        with_capacity_retry(n, |len| {
            let ctx = Ctx::new(primes, len)?;
            let mut rec = Recorder::new(c.m0, None);
            gpa_unit(&ctx, c, &[], &mut rec)?;
            rec.finish(n)
        })
    })
}

/// Per-residue counts of the uncovered positions in 1..=window, for each
/// pending prime. Residue 0 is counted too, so every prime's row sums to the
/// number of uncovered positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyTable {
    window: usize,
    uncovered: usize,
    primes: Vec<u32>,
    offsets: Vec<usize>,
    pending: u64,
    counts: Vec<u16>,
}

impl FrequencyTable {
    /// Counts for the primes whose bit is set in `pending` (bit i = `primes[i]`).
    pub fn build(primes: &[u32], arr: &CoverageArray, window: usize, pending: u64) -> Self {
        let window = window.min(arr.len());
        let mut offsets = Vec::with_capacity(primes.len());
        let mut total = 0;
        for &p in primes {
            offsets.push(total);
            total += p as usize;
        }
        let mut t = FrequencyTable {
            window,
            uncovered: 0,
            primes: primes.to_vec(),
            offsets,
            pending,
            counts: vec![0; total],
        };
        for q in arr.uncovered(window) {
            t.uncovered += 1;
            t.bump(q, true);
        }
        t
    }

    #[inline]
    fn bump(&mut self, q: usize, up: bool) {
        let mut rest = self.pending;
        while rest != 0 {
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let slot = self.offsets[i] + q % self.primes[i] as usize;
            if up {
                self.counts[slot] += 1;
            } else {
                self.counts[slot] -= 1;
            }
        }
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// |S|: uncovered positions in the window.
    pub fn uncovered(&self) -> usize {
        self.uncovered
    }

    pub fn pending(&self) -> u64 {
        self.pending
    }

    /// ρ: uncovered positions in the window lying in the class r mod primes[i].
    #[inline]
    pub fn rho(&self, i: usize, r: u32) -> usize {
        self.counts[self.offsets[i] + r as usize] as usize
    }

    /// Largest ρ over the non-zero residues of prime `i` not rejected by `skip`.
    pub fn rho_max(&self, i: usize, skip: impl Fn(u32) -> bool) -> usize {
        (1..self.primes[i])
            .filter(|&r| !skip(r))
            .map(|r| self.rho(i, r))
            .max()
            .unwrap_or(0)
    }

    /// Drops prime `i` from the pending set without covering anything.
    pub fn defer(&mut self, i: usize) {
        self.pending &= !(1u64 << i);
        let base = self.offsets[i];
        self.counts[base..base + self.primes[i] as usize].fill(0);
    }

    /// Updates the counts after filling r mod primes[i] into `arr` (the array
    /// before the fill) and drops prime `i` from the pending set.
    pub fn assign(&mut self, arr: &CoverageArray, i: usize, r: u32) {
        let p = self.primes[i] as usize;
        self.pending &= !(1u64 << i);
        let base = self.offsets[i];
        self.counts[base..base + p].fill(0);
        let mut q = r as usize;
        if q == 0 {
            q = p;
        }
        while q <= self.window {
            if !arr.is_covered(q) {
                self.uncovered -= 1;
                self.bump(q, false);
            }
            q += p;
        }
    }
}

/// True if the pending primes, each contributing at most its largest
/// unblocked ρ, cannot cover every uncovered position of the window.
pub fn criterion5_discard(table: &FrequencyTable, blocked: &[(usize, u32)]) -> bool {
    let mut sum = 0;
    let mut rest = table.pending;
    while rest != 0 {
        let i = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        sum += table.rho_max(i, |r| blocked.contains(&(i, r)));
    }
    sum < table.uncovered
}

/// Sum of ρ_max over pending primes, and the pair with the largest ρ
/// (ties: smallest prime, then smallest residue).
fn scan(table: &FrequencyTable) -> (usize, Option<(usize, u32, usize)>) {
    let mut sum = 0;
    let mut best: Option<(usize, u32, usize)> = None;
    let mut rest = table.pending;
    while rest != 0 {
        let i = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        let row = &table.counts[table.offsets[i] + 1..table.offsets[i] + table.primes[i] as usize];
        let mut local = 0;
        let mut arg = 0;
        for (k, &c) in row.iter().enumerate() {
            if c as usize > local {
                local = c as usize;
                arg = k as u32 + 1;
            }
        }
        if local > 0 && best.is_none_or(|b| local > b.2) {
            best = Some((i, arg, local));
        }
        sum += local;
    }
    (sum, best)
}

pub(crate) fn gpa_unit(ctx: &Ctx, cfg: &DsaConfig, prefix: &[u32], rec: &mut Recorder) -> Result<()> {
    let seq = (cfg.k_star - 2).min(ctx.np());
    if prefix.len() > seq {
        return Err(Error::InvalidConfig(format!(
            "prefix of {} residues exceeds the sequential part ({seq})",
            prefix.len()
        )));
    }
    let mut path = vec![0u32; ctx.np()];
    let arr = replay_residues(ctx, prefix, &mut path)?;
    gpa_seq(ctx, cfg, &arr, prefix.len(), seq, &mut path, rec);
    Ok(())
}

fn gpa_seq(
    ctx: &Ctx,
    cfg: &DsaConfig,
    arr: &CoverageArray,
    d: usize,
    seq: usize,
    path: &mut [u32],
    rec: &mut Recorder,
) {
    if d == seq {
        let pending = ctx.all_pending() & !((1u64 << d) - 1);
        let table = FrequencyTable::build(&ctx.odd, arr, rec.target(), pending);
        greedy(ctx, cfg.criterion, arr, table, 0, path, rec);
        return;
    }
    for r in 1..ctx.odd[d] {
        path[d] = r;
        gpa_seq(ctx, cfg, &arr.with_mask(ctx.mask(d, r)), d + 1, seq, path, rec);
        if rec.exhausted {
            return;
        }
    }
    path[d] = 0;
}

/// One level per prime: the prime owning the most frequent class is tried
/// on each of its classes that hit the window, most frequent first, and
/// finally deferred (its class then misses the window's remaining gaps).
fn greedy(
    ctx: &Ctx,
    criterion: bool,
    arr: &CoverageArray,
    mut table: FrequencyTable,
    deferred: u64,
    path: &mut [u32],
    rec: &mut Recorder,
) {
    let left = table.pending() | deferred;
    if (left.count_ones() as usize) <= FINISH_DEPTH {
        finish_all(ctx, arr, left, path, rec);
        return;
    }
    let target = rec.target().min(arr.len());
    if target > table.window() {
        table = FrequencyTable::build(&ctx.odd, arr, target, table.pending());
    }
    if table.uncovered() == 0 {
        let mut anchors = Vec::new();
        tail(ctx, arr, left, &mut anchors, path, rec);
        return;
    }
    let (sum, best) = scan(&table);
    if criterion && sum < table.uncovered() {
        return;
    }
    let Some((i, _, top)) = best else { return };
    let others = sum - top;
    let mut level_blocked: Vec<u32> = Vec::new();
    loop {
        let mut pick: Option<(u32, usize)> = None;
        for r in 1..ctx.odd[i] {
            let c = table.rho(i, r);
            if c > 0 && pick.is_none_or(|p| c > p.1) && !level_blocked.contains(&r) {
                pick = Some((r, c));
            }
        }
        let Some((r, c)) = pick else { break };
        if criterion && others + c < table.uncovered() {
            break;
        }
        let mut child = table.clone();
        child.assign(arr, i, r);
        path[i] = r;
        greedy(ctx, criterion, &arr.with_mask(ctx.mask(i, r)), child, deferred, path, rec);
        path[i] = 0;
        if rec.exhausted {
            return;
        }
        level_blocked.push(r);
    }
    if criterion && others < table.uncovered() {
        return;
    }
    if (1..ctx.odd[i]).all(|r| table.rho(i, r) > 0) {
        return;
    }
    table.defer(i);
    greedy(ctx, criterion, arr, table, deferred | 1u64 << i, path, rec);
}

/// Window fully covered: the remaining primes go to successive first-free
/// positions beyond it, in canonical order.
fn tail(
    ctx: &Ctx,
    arr: &CoverageArray,
    pending: u64,
    anchors: &mut Vec<(usize, usize)>,
    path: &mut [u32],
    rec: &mut Recorder,
) {
    let Some(q) = arr.next_free() else {
        rec.exhausted = true;
        return;
    };
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
        } else {
            anchors.push((i, q));
            tail(ctx, &a, left, anchors, path, rec);
            anchors.pop();
        }
        path[i] = 0;
        if rec.exhausted {
            return;
        }
    }
}
