//! Splitting a search into independent work units at level k*, running them
//! on a thread pool, and merging the results.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::sync::atomic::AtomicUsize;

use sha2::{Digest, Sha256};

use crate::bounds::PsiMinTable;
use crate::coverage::CoverageArray;
use crate::error::{Error, Result};
use crate::primes::PrimeSet;
use crate::search::basic::{bsa_from, permutation_from, Placement};
use crate::search::discarding::{crpdsa_unit, dsa_unit, Pruner};
use crate::search::greedy::gpa_unit;
use crate::search::{with_capacity_retry, Algorithm, Ctx, DsaConfig, Recorder, SearchOutcome};

/// One subtree of the search below a fixed prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkUnit {
    pub unit_id: usize,
    pub algo: Algorithm,
    pub k_star: usize,
    /// Residues a_2..a_{k*} for residue-wise searches; the primes placed at
    /// the first k*-1 anchors for permutation searches.
    pub prefix: Vec<u32>,
    /// Covered positions of the tentative window after the prefix.
    pub psi_at_split: usize,
}

impl WorkUnit {
    /// Array state reached by replaying the prefix.
    pub fn replay(&self, primes: &PrimeSet, len: usize) -> Result<CoverageArray> {
        let ctx = Ctx::new(primes, len)?;
        if self.algo.is_permutation() {
            Ok(Placement::replay(&ctx, &self.prefix, self.algo == Algorithm::Rpa)?.arr)
        } else {
            let mut path = vec![0; ctx.np()];
            crate::search::basic::replay_residues(&ctx, &self.prefix, &mut path)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub workers: usize,
    /// Let units read each other's best length for pruning. Results are the
    /// same either way; visited counts are not.
    pub share_best: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            workers: 1,
            share_best: false,
        }
    }
}

/// An algorithm bound to one array length, runnable from any prefix.
struct Engine {
    algo: Algorithm,
    ctx: Ctx,
    cfg: DsaConfig,
    pruner: Option<Pruner>,
}

impl Engine {
    fn new(algo: Algorithm, primes: &PrimeSet, cfg: &DsaConfig, table: &PsiMinTable, len: usize) -> Result<Self> {
        let ctx = Ctx::new(primes, len)?;
        let pruner = matches!(algo, Algorithm::Dsa | Algorithm::Crpdsa).then(|| Pruner::new(&ctx, cfg, table));
        Ok(Engine {
            algo,
            ctx,
            cfg: cfg.clone(),
            pruner,
        })
    }

    fn run(&self, prefix: &[u32], rec: &mut Recorder) -> Result<()> {
        match self.algo {
            Algorithm::Bsa => bsa_from(&self.ctx, prefix, rec),
            Algorithm::Bpa => permutation_from(&self.ctx, prefix, false, rec),
            Algorithm::Rpa => permutation_from(&self.ctx, prefix, true, rec),
            Algorithm::Dsa => dsa_unit(&self.ctx, self.pruner.as_ref().expect("pruner"), prefix, rec),
            Algorithm::Crpdsa => crpdsa_unit(&self.ctx, self.pruner.as_ref().expect("pruner"), prefix, rec),
            Algorithm::Gpa => gpa_unit(&self.ctx, &self.cfg, prefix, rec),
        }
    }

    /// Surviving prefixes of `depth` primes with their ψ at split, in generation order.
    fn split(&self, depth: usize) -> Result<Vec<(Vec<u32>, usize)>> {
        let window = self.cfg.m0.min(self.ctx.len());
        let mut out = Vec::new();
        if self.algo.is_permutation() {
            let st = Placement::new(&self.ctx);
            self.split_perm(&st, depth, window, &mut Vec::new(), &mut out)?;
        } else {
            let limit = match self.algo {
                Algorithm::Crpdsa => self.pruner.as_ref().expect("pruner").seq_len,
                _ => self.ctx.np(),
            };
            if depth > limit {
                return Err(Error::InvalidConfig(format!(
                    "{} can only split within its first {limit} primes, not {depth}",
                    self.algo
                )));
            }
            self.split_res(&self.ctx.empty(), depth, window, &mut Vec::new(), &mut out);
        }
        Ok(out)
    }

    fn split_res(
        &self,
        arr: &CoverageArray,
        depth: usize,
        window: usize,
        prefix: &mut Vec<u32>,
        out: &mut Vec<(Vec<u32>, usize)>,
    ) {
        let d = prefix.len();
        if let Some(pr) = &self.pruner {
            if pr.reject_prefix(arr, d, self.cfg.m0) {
                return;
            }
        }
        if d == depth {
            out.push((prefix.clone(), arr.psi(window)));
            return;
        }
        for r in 1..self.ctx.odd[d] {
            prefix.push(r);
            self.split_res(&arr.with_mask(self.ctx.mask(d, r)), depth, window, prefix, out);
            prefix.pop();
        }
    }

    fn split_perm(
        &self,
        st: &Placement,
        depth: usize,
        window: usize,
        prefix: &mut Vec<u32>,
        out: &mut Vec<(Vec<u32>, usize)>,
    ) -> Result<()> {
        if prefix.len() == depth {
            out.push((prefix.clone(), st.arr.psi(window)));
            return Ok(());
        }
        if st.next.is_none() {
            return Err(Error::CapacityExhausted { capacity: self.ctx.len() });
        }
        for i in 0..self.ctx.np() {
            let mut child = st.clone();
            if child.place(&self.ctx, i, self.algo == Algorithm::Rpa) {
                prefix.push(self.ctx.odd[i]);
                self.split_perm(&child, depth, window, prefix, out)?;
                prefix.pop();
            }
        }
        Ok(())
    }
}

/// Configuration actually used for a split at `k_star`: the greedy search
/// must enumerate at least the split primes sequentially.
fn effective_config(algo: Algorithm, cfg: &DsaConfig, k_star: usize) -> DsaConfig {
    let mut c = cfg.clone();
    if algo == Algorithm::Gpa && c.k_star < k_star + 1 {
        c.k_star = k_star + 1;
    }
    c
}

/// Splits the search after p_2..p_{k_star}, sorted by descending ψ at split
/// (ties keep generation order).
pub fn generate_units(
    primes: &PrimeSet,
    algo: Algorithm,
    k_star: usize,
    cfg: &DsaConfig,
    table: &PsiMinTable,
) -> Result<Vec<WorkUnit>> {
    algo.check_guard(primes.n())?;
    if k_star < 2 || k_star >= primes.n() {
        return Err(Error::InvalidConfig(format!(
            "split level must satisfy 2 <= k* < n, got k*={k_star} n={}",
            primes.n()
        )));
    }
    let cfg = effective_config(algo, cfg, k_star);
    cfg.validate(algo, primes)?;
    let prefixes = with_capacity_retry(primes.n(), |len| Engine::new(algo, primes, &cfg, table, len)?.split(k_star - 1))?;
    let mut units: Vec<WorkUnit> = prefixes
        .into_iter()
        .map(|(prefix, psi)| WorkUnit {
            unit_id: 0,
            algo,
            k_star,
            prefix,
            psi_at_split: psi,
        })
        .collect();
    units.sort_by(|a, b| b.psi_at_split.cmp(&a.psi_at_split));
    for (id, u) in units.iter_mut().enumerate() {
        u.unit_id = id;
    }
    Ok(units)
}

fn run_unit(engine: &Engine, unit: &WorkUnit, n: usize, floor: usize, shared: Option<&AtomicUsize>) -> Result<SearchOutcome> {
    let attempt = || -> Result<SearchOutcome> {
        let mut rec = Recorder::new(floor, shared);
        engine.run(&unit.prefix, &mut rec)?;
        rec.finish(n)
    };
    match attempt() {
        Ok(out) => Ok(out),
        Err(e @ Error::CapacityExhausted { .. }) => Err(e),
        Err(_) => attempt().map_err(|e| match e {
            e @ Error::CapacityExhausted { .. } => e,
            e => Error::UnitFailed {
                unit_id: unit.unit_id,
                msg: e.to_string(),
            },
        }),
    }
}

#[cfg(feature = "parallel")]
fn execute<T: Send>(workers: usize, units: &[WorkUnit], f: impl Fn(&WorkUnit) -> T + Sync) -> Result<Vec<T>> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(|| units.par_iter().map(&f).collect()))
}

#[cfg(not(feature = "parallel"))]
fn execute<T: Send>(_workers: usize, units: &[WorkUnit], f: impl Fn(&WorkUnit) -> T + Sync) -> Result<Vec<T>> {
    Ok(units.iter().map(f).collect())
}

/// Runs every unit and merges: the best length over all units, and the union
/// of the sequence sets of the units reaching it.
pub fn run_units(
    primes: &PrimeSet,
    units: &[WorkUnit],
    cfg: &DsaConfig,
    table: &PsiMinTable,
    opts: RunOptions,
) -> Result<SearchOutcome> {
    if opts.workers < 1 {
        return Err(Error::InvalidConfig("worker count must be >= 1".into()));
    }
    let Some(first) = units.first() else {
        return Ok(SearchOutcome::merge(primes.n(), []));
    };
    let algo = first.algo;
    let k_star = first.k_star;
    if units.iter().any(|u| u.algo != algo || u.k_star != k_star) {
        return Err(Error::InvalidConfig("units mix algorithms or split levels".into()));
    }
    algo.check_guard(primes.n())?;
    let cfg = effective_config(algo, cfg, k_star);
    cfg.validate(algo, primes)?;
    let n = primes.n();
    with_capacity_retry(n, |len| {
        let engine = Engine::new(algo, primes, &cfg, table, len)?;
        let shared = AtomicUsize::new(0);
        let shared = opts.share_best.then_some(&shared);
        let results = execute(opts.workers, units, |u| run_unit(&engine, u, n, cfg.m0, shared))?;
        let parts = results.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(SearchOutcome::merge(n, parts))
    })
}

/// Split at `k_star` and run on `opts.workers` threads. Falls back to a
/// floor of 1 if the seeded floor was above ω.
pub fn parallel_search(
    algo: Algorithm,
    primes: &PrimeSet,
    cfg: &DsaConfig,
    table: &PsiMinTable,
    k_star: usize,
    opts: RunOptions,
) -> Result<SearchOutcome> {
    let units = generate_units(primes, algo, k_star, cfg, table)?;
    let out = run_units(primes, &units, cfg, table, opts)?;
    if (out.omega as usize) < cfg.m0 && cfg.m0 > 1 {
        let relaxed = DsaConfig { m0: 1, ..cfg.clone() };
        let units = generate_units(primes, algo, k_star, &relaxed, table)?;
        return run_units(primes, &units, &relaxed, table, opts);
    }
    Ok(out)
}

/// Hash binding a unit file to n, the algorithm, its configuration, the
/// ψ_min table and the library version.
pub fn config_hash(n: usize, algo: Algorithm, k_star: usize, cfg: &DsaConfig, table: &PsiMinTable) -> String {
    let mut h = Sha256::new();
    h.update(format!(
        "v{} n={n} algo={algo} split={k_star} {}\n",
        env!("CARGO_PKG_VERSION"),
        config_fields(cfg)
    ));
    h.update(table.to_text());
    let digest = h.finalize();
    digest.iter().take(16).fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn config_fields(cfg: &DsaConfig) -> String {
    format!(
        "kstar={} t={} m0={} ratio={:?} criterion={}",
        cfg.k_star, cfg.t, cfg.m0, cfg.switch_ratio, cfg.criterion
    )
}

/// Contents of a parameter file.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitFile {
    pub n: usize,
    pub algo: Algorithm,
    pub k_star: usize,
    pub cfg: DsaConfig,
    pub hash: String,
    pub units: Vec<WorkUnit>,
}

const UNIT_FILE_MAGIC: &str = "# jacobsthal work units v1";

impl UnitFile {
    pub fn new(n: usize, algo: Algorithm, k_star: usize, cfg: &DsaConfig, table: &PsiMinTable, units: Vec<WorkUnit>) -> Self {
        UnitFile {
            n,
            algo,
            k_star,
            cfg: cfg.clone(),
            hash: config_hash(n, algo, k_star, cfg, table),
            units,
        }
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{UNIT_FILE_MAGIC}")?;
        writeln!(
            w,
            "n={} algo={} split={} {} hash={} units={}",
            self.n,
            self.algo,
            self.k_star,
            config_fields(&self.cfg),
            self.hash,
            self.units.len()
        )?;
        for u in &self.units {
            let mut line = format!("{} {} {}", u.unit_id, u.algo, u.k_star);
            for a in &u.prefix {
                let _ = write!(line, " {a}");
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Parses a parameter file and rejects it if its hash does not match
    /// the current table and library version. ψ at split is recomputed.
    pub fn read_from<R: BufRead>(r: R, table: &PsiMinTable) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let parse_err = |line: usize, msg: String| Error::Parse { line, msg };
        match lines.next() {
            Some((_, Ok(l))) if l.trim() == UNIT_FILE_MAGIC => {}
            Some((_, Err(e))) => return Err(e.into()),
            _ => return Err(parse_err(1, "missing unit file header".into())),
        }
        let header = match lines.next() {
            Some((_, l)) => l?,
            None => return Err(parse_err(2, "missing configuration line".into())),
        };
        let mut fields = std::collections::HashMap::new();
        for tok in header.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| parse_err(2, format!("bad field `{tok}`")))?;
            fields.insert(k.to_string(), v.to_string());
        }
        let get = |k: &str| fields.get(k).cloned().ok_or_else(|| parse_err(2, format!("missing field `{k}`")));
        let num = |k: &str| -> Result<usize> { get(k)?.parse().map_err(|_| parse_err(2, format!("bad number for `{k}`"))) };
        let n = num("n")?;
        let algo: Algorithm = get("algo")?.parse()?;
        let k_star = num("split")?;
        let cfg = DsaConfig {
            k_star: num("kstar")?,
            t: num("t")?,
            m0: num("m0")?,
            switch_ratio: get("ratio")?.parse().map_err(|_| parse_err(2, "bad ratio".into()))?,
            criterion: get("criterion")?.parse().map_err(|_| parse_err(2, "bad criterion flag".into()))?,
        };
        let hash = get("hash")?;
        let count = num("units")?;
        let expected = config_hash(n, algo, k_star, &cfg, table);
        if hash != expected {
            return Err(Error::StaleUnits(format!(
                "file hash {hash} does not match {expected} for the current configuration, table and version"
            )));
        }
        let mut units = Vec::with_capacity(count);
        for (idx, line) in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let err = |msg: &str| parse_err(idx + 1, msg.to_string());
            let unit_id = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| err("bad unit id"))?;
            let u_algo: Algorithm = it.next().ok_or_else(|| err("missing algorithm"))?.parse()?;
            let u_k: usize = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| err("bad split level"))?;
            if u_algo != algo || u_k != k_star {
                return Err(Error::StaleUnits(format!("unit {unit_id} does not match the header")));
            }
            let prefix = it
                .map(|s| s.parse().map_err(|_| err("bad prefix value")))
                .collect::<Result<Vec<u32>>>()?;
            units.push(WorkUnit {
                unit_id,
                algo,
                k_star,
                prefix,
                psi_at_split: 0,
            });
        }
        if units.len() != count {
            return Err(Error::StaleUnits(format!("header announces {count} units, file has {}", units.len())));
        }
        // ψ at split is not stored; replaying also validates each prefix
        let primes = PrimeSet::first(n)?;
        let len = crate::search::default_capacity(n);
        for u in &mut units {
            u.psi_at_split = u.replay(&primes, len)?.psi(cfg.m0.min(len));
        }
        Ok(UnitFile {
            n,
            algo,
            k_star,
            cfg,
            hash,
            units,
        })
    }
}
