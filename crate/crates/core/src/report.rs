//! Run summaries, cross-algorithm verification and timing runs.

use std::time::{Duration, Instant};

use crate::bounds::PsiMinTable;
use crate::error::{Error, Result};
use crate::golden;
use crate::parallel::{parallel_search, RunOptions};
use crate::primes::{h_from_omega, PrimeSet};
use crate::search::{search_with, Algorithm, DsaConfig, SearchOutcome};

/// One row of results, mirroring the columns of the published table.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub n: usize,
    pub algo: Option<Algorithm>,
    /// Absent for n = 1.
    pub omega: Option<u32>,
    pub h: u32,
    pub n_seq: Option<usize>,
    pub visited: u64,
    pub wall_time: Duration,
}

impl RunReport {
    /// h(1) = 2 needs no search.
    pub fn first() -> Self {
        RunReport {
            n: 1,
            algo: None,
            omega: None,
            h: 2,
            n_seq: None,
            visited: 0,
            wall_time: Duration::ZERO,
        }
    }

    pub fn from_outcome(algo: Algorithm, out: &SearchOutcome, wall_time: Duration) -> Result<Self> {
        let vals = h_from_omega(out.omega, out.n)?;
        Ok(RunReport {
            n: out.n,
            algo: Some(algo),
            omega: Some(out.omega),
            h: vals.h,
            n_seq: Some(out.n_seq()),
            visited: out.visited,
            wall_time,
        })
    }
}

/// How to run a single computation.
#[derive(Debug, Clone)]
pub struct ComputePlan {
    pub algo: Algorithm,
    pub cfg: DsaConfig,
    /// Split level and pool options for a parallel run; `None` runs directly.
    pub parallel: Option<(usize, RunOptions)>,
}

impl ComputePlan {
    pub fn direct(algo: Algorithm, n: usize) -> Self {
        ComputePlan {
            algo,
            cfg: DsaConfig::default_for(algo, n),
            parallel: None,
        }
    }
}

/// Default split level for a parallel run of `algo` at index n.
pub fn default_split(algo: Algorithm, primes: &PrimeSet, cfg: &DsaConfig) -> usize {
    let n = primes.n();
    let want = match algo {
        Algorithm::Crpdsa => {
            let seq = crate::search::sequential_part_len(primes, cfg.switch_ratio);
            (seq + 1).min(4)
        }
        _ => 4,
    };
    want.clamp(2, n.saturating_sub(1).max(2))
}

pub fn compute(primes: &PrimeSet, plan: &ComputePlan, table: &PsiMinTable) -> Result<(RunReport, SearchOutcome)> {
    let start = Instant::now();
    let out = match plan.parallel {
        Some((k_star, opts)) if primes.n() > 2 => parallel_search(plan.algo, primes, &plan.cfg, table, k_star, opts)?,
        _ => search_with(plan.algo, primes, &plan.cfg, table)?,
    };
    let report = RunReport::from_outcome(plan.algo, &out, start.elapsed())?;
    Ok((report, out))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CellStatus {
    /// Matches the other algorithms and the published row where known.
    Agree,
    Mismatch(String),
    Skipped(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyCell {
    pub n: usize,
    pub algo: Algorithm,
    pub omega: Option<u32>,
    pub n_seq: Option<usize>,
    pub status: CellStatus,
}

#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub cells: Vec<VerifyCell>,
}

impl VerifyReport {
    pub fn first_mismatch(&self) -> Option<&VerifyCell> {
        self.cells.iter().find(|c| matches!(c.status, CellStatus::Mismatch(_)))
    }

    pub fn passed(&self) -> bool {
        self.first_mismatch().is_none()
    }
}

/// Runs every algorithm for n = 2..=n_max, comparing (ω, sequence set)
/// across algorithms and ω, n_seq against the published table. Runs are
/// skipped when an algorithm's guard refuses n or the time budget is spent.
pub fn verify(n_max: usize, algos: &[Algorithm], table: &PsiMinTable, budget: Option<Duration>) -> Result<VerifyReport> {
    let start = Instant::now();
    let mut report = VerifyReport::default();
    for n in 2..=n_max {
        let primes = PrimeSet::first(n)?;
        let mut reference: Option<(Algorithm, SearchOutcome)> = None;
        for &algo in algos {
            let cell = |omega, n_seq, status| VerifyCell {
                n,
                algo,
                omega,
                n_seq,
                status,
            };
            if let Err(e) = algo.check_guard(n) {
                report.cells.push(cell(None, None, CellStatus::Skipped(e.to_string())));
                continue;
            }
            if budget.is_some_and(|b| start.elapsed() > b) {
                report.cells.push(cell(None, None, CellStatus::Skipped("time budget spent".into())));
                continue;
            }
            let cfg = DsaConfig::default_for(algo, n);
            let out = match search_with(algo, &primes, &cfg, table) {
                Ok(out) => out,
                Err(e @ Error::Guard { .. }) => {
                    report.cells.push(cell(None, None, CellStatus::Skipped(e.to_string())));
                    continue;
                }
                Err(e) => return Err(e),
            };
            let mut problems = Vec::new();
            if let Some(row) = golden::known(n) {
                if row.omega != Some(out.omega) {
                    problems.push(format!("omega {} but the table has {:?}", out.omega, row.omega));
                }
                if row.n_seq != Some(out.n_seq() as u32) {
                    problems.push(format!("n_seq {} but the table has {:?}", out.n_seq(), row.n_seq));
                }
            }
            if let Some((ref_algo, ref_out)) = &reference {
                if ref_out.omega != out.omega || ref_out.sequences != out.sequences {
                    problems.push(format!("differs from {ref_algo}"));
                }
            }
            let status = if problems.is_empty() {
                CellStatus::Agree
            } else {
                CellStatus::Mismatch(problems.join("; "))
            };
            report.cells.push(cell(Some(out.omega), Some(out.n_seq()), status));
            if reference.is_none() {
                reference = Some((algo, out));
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub algo: Algorithm,
    /// `None` when the algorithm refused n.
    pub seconds: Option<f64>,
    pub visited: Option<u64>,
}

pub const BENCH_HEADER: &str = "n,algo,seconds,log1p_seconds,visited";

impl BenchRow {
    /// log(1 + t) with t rounded to whole seconds.
    pub fn log1p_seconds(&self) -> Option<f64> {
        self.seconds.map(|t| t.round().ln_1p())
    }

    pub fn csv(&self) -> String {
        let f = |x: Option<f64>| x.map(|v| format!("{v:.6}")).unwrap_or_default();
        format!(
            "{},{},{},{},{}",
            self.n,
            self.algo,
            f(self.seconds),
            f(self.log1p_seconds()),
            self.visited.map(|v| v.to_string()).unwrap_or_default()
        )
    }
}

/// Times each algorithm on each n with its default configuration.
pub fn bench(ns: &[usize], algos: &[Algorithm], table: &PsiMinTable) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for &n in ns {
        let primes = PrimeSet::first(n)?;
        for &algo in algos {
            if algo.check_guard(n).is_err() {
                rows.push(BenchRow {
                    n,
                    algo,
                    seconds: None,
                    visited: None,
                });
                continue;
            }
            let start = Instant::now();
            let out = search_with(algo, &primes, &DsaConfig::default_for(algo, n), table)?;
            rows.push(BenchRow {
                n,
                algo,
                seconds: Some(start.elapsed().as_secs_f64()),
                visited: Some(out.visited),
            });
        }
    }
    Ok(rows)
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut s = String::from(BENCH_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv());
        s.push('\n');
    }
    s
}
