use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use jacobsthal::bounds::{compute_psi_min, PsiMinTable};
use jacobsthal::enumeration::{write_exports, SequenceSet};
use jacobsthal::golden;
use jacobsthal::ilp::{build_model, classify_solution, Assignment, IlpModel};
use jacobsthal::parallel::{generate_units, run_units, RunOptions, UnitFile};
use jacobsthal::primes::PrimeSet;
use jacobsthal::report::{self, bench_csv, default_split, CellStatus, ComputePlan, RunReport};
use jacobsthal::search::{Algorithm, DsaConfig};

/// Primorial Jacobsthal function h(n) and its maximum-length sequences.
#[derive(Parser, Debug)]
#[command(name = "jacobsthal", version, about, long_about = None)]
struct Cli {
    /// Output format for results.
    #[arg(long, value_enum, default_value_t = Format::Human, global = true)]
    format: Format,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Csv,
    Jsonl,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Compute ω(n) and h(n) = 2ω(n) + 2.
    Compute {
        #[arg(long)]
        n: usize,
        #[arg(long, value_parser = parse_algo, default_value = "gpa")]
        algo: Algorithm,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        par: ParallelArgs,
    },
    /// Write every maximum-length sequence as moduli, remainders and permutations.
    Enumerate {
        #[arg(long)]
        n: usize,
        /// Also enumerate every index from this one up to n, one section each.
        #[arg(long)]
        from: Option<usize>,
        #[arg(long, value_parser = parse_algo, default_value = "gpa")]
        algo: Algorithm,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        par: ParallelArgs,
    },
    /// Generate a ψ_min table.
    Psimin {
        #[arg(long)]
        max_m: usize,
        #[arg(long)]
        max_k: usize,
        #[arg(long)]
        out: PathBuf,
        /// Allow extents beyond max_m=500, max_k=8.
        #[arg(long)]
        allow_large: bool,
    },
    /// Write the bracketing integer program for (n, m1, m2) in LP format.
    ExportIlp {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m1: u32,
        #[arg(long)]
        m2: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Read a solver's `name value` solution and classify it.
    ClassifySolution {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Split a search into work units and write them to a parameter file.
    Split {
        #[arg(long)]
        n: usize,
        #[arg(long, value_parser = parse_algo)]
        algo: Algorithm,
        /// Split level: units start below p_2..p_kstar.
        #[arg(long)]
        kstar: usize,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Run the units of a parameter file and merge the results.
    RunUnits {
        #[arg(long)]
        file: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Only run these unit ids (comma separated).
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
        #[arg(long)]
        share_best: bool,
        /// Also write the sequence files here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Time each algorithm over a range of n.
    Bench {
        #[arg(long, default_value_t = 2)]
        n_min: usize,
        #[arg(long)]
        n_max: usize,
        #[arg(long, value_parser = parse_algo, value_delimiter = ',')]
        algos: Vec<Algorithm>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every applicable algorithm and compare with each other and the published table.
    Verify {
        #[arg(long)]
        n_max: usize,
        #[arg(long, value_parser = parse_algo, value_delimiter = ',')]
        algos: Vec<Algorithm>,
        /// Stop starting new runs after this many seconds.
        #[arg(long)]
        budget_secs: Option<u64>,
        /// Check h = 2ω + 2 on every embedded literature row.
        #[arg(long)]
        literature: bool,
    },
}

#[derive(Args, Debug, Clone, Default)]
struct SearchArgs {
    /// Level k* from which the pruning criterion applies.
    #[arg(long)]
    criterion_level: Option<usize>,
    /// ψ_min column used by the criterion.
    #[arg(long)]
    psi_depth: Option<usize>,
    /// Starting tentative length.
    #[arg(long)]
    m0: Option<usize>,
    /// Switch point of the combined search, as a fraction of p_n.
    #[arg(long)]
    switch_ratio: Option<f64>,
    #[arg(long)]
    no_criterion: bool,
}

impl SearchArgs {
    fn config(&self, algo: Algorithm, n: usize) -> DsaConfig {
        let mut cfg = DsaConfig::default_for(algo, n);
        if let Some(k) = self.criterion_level {
            cfg.k_star = k;
            cfg.t = (k - 1).max(1);
        }
        if let Some(t) = self.psi_depth {
            cfg.t = t;
        }
        if let Some(m0) = self.m0 {
            cfg.m0 = m0;
        }
        if let Some(r) = self.switch_ratio {
            cfg.switch_ratio = r;
        }
        cfg.criterion = !self.no_criterion;
        cfg
    }
}

#[derive(Args, Debug, Clone, Default)]
struct ParallelArgs {
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Split level for a parallel run; defaults to a per-algorithm choice when workers > 1.
    #[arg(long)]
    split: Option<usize>,
    #[arg(long)]
    share_best: bool,
}

impl ParallelArgs {
    fn plan(&self, algo: Algorithm, primes: &PrimeSet, cfg: DsaConfig) -> ComputePlan {
        let parallel = (self.workers > 1 || self.split.is_some()).then(|| {
            let split = self.split.unwrap_or_else(|| default_split(algo, primes, &cfg));
            let opts = RunOptions {
                workers: self.workers,
                share_best: self.share_best,
            };
            (split, opts)
        });
        ComputePlan { algo, cfg, parallel }
    }
}

fn parse_algo(s: &str) -> std::result::Result<Algorithm, String> {
    s.parse().map_err(|e: jacobsthal::Error| e.to_string())
}

#[derive(Serialize)]
struct ReportLine {
    n: usize,
    algo: Option<String>,
    omega: Option<u32>,
    h: u32,
    n_seq: Option<usize>,
    visited: u64,
    wall_time: f64,
}

impl From<&RunReport> for ReportLine {
    fn from(r: &RunReport) -> Self {
        ReportLine {
            n: r.n,
            algo: r.algo.map(|a| a.to_string()),
            omega: r.omega,
            h: r.h,
            n_seq: r.n_seq,
            visited: r.visited,
            wall_time: r.wall_time.as_secs_f64(),
        }
    }
}

const REPORT_HEADER: &str = "n,algo,omega,h,n_seq,visited,wall_time";

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn print_reports(format: Format, reports: &[RunReport]) -> Result<()> {
    let mut out = io::stdout().lock();
    if format == Format::Csv {
        writeln!(out, "{REPORT_HEADER}")?;
    }
    for r in reports {
        match format {
            Format::Human => match r.omega {
                Some(omega) => writeln!(
                    out,
                    "n={} algo={} omega={omega} h={} n_seq={} visited={} time={:.3}s",
                    r.n,
                    opt(r.algo),
                    r.h,
                    opt(r.n_seq),
                    r.visited,
                    r.wall_time.as_secs_f64()
                )?,
                None => writeln!(out, "n={} h={} (omega undefined)", r.n, r.h)?,
            },
            Format::Csv => writeln!(
                out,
                "{},{},{},{},{},{},{:.6}",
                r.n,
                opt(r.algo),
                opt(r.omega),
                r.h,
                opt(r.n_seq),
                r.visited,
                r.wall_time.as_secs_f64()
            )?,
            Format::Jsonl => writeln!(out, "{}", serde_json::to_string(&ReportLine::from(r))?)?,
        }
    }
    Ok(())
}

/// Algorithms whose guard admits n, for error messages.
fn feasible(n: usize) -> String {
    Algorithm::ALL
        .iter()
        .filter(|a| a.check_guard(n).is_ok())
        .map(|a| a.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

fn compute_one(n: usize, algo: Algorithm, search: &SearchArgs, par: &ParallelArgs, table: &PsiMinTable) -> Result<(RunReport, Option<SequenceSet>)> {
    if n == 1 {
        return Ok((RunReport::first(), None));
    }
    let primes = PrimeSet::first(n)?;
    let cfg = search.config(algo, n);
    let plan = par.plan(algo, &primes, cfg);
    let (report, out) = report::compute(&primes, &plan, table)?;
    let set = SequenceSet::from_outcome(&primes, &out)?;
    Ok((report, Some(set)))
}

fn run(cli: Cli) -> Result<ExitCode> {
    let format = cli.format;
    match cli.cmd {
        Cmd::Compute { n, algo, search, par } => {
            let table = PsiMinTable::from_env_or_shipped()?;
            let (report, _) = compute_one(n, algo, &search, &par, &table)?;
            print_reports(format, &[report])?;
        }
        Cmd::Enumerate {
            n,
            from,
            algo,
            out_dir,
            search,
            par,
        } => {
            let table = PsiMinTable::from_env_or_shipped()?;
            let start = from.unwrap_or(n).max(2);
            if start > n {
                bail!("--from {start} is past --n {n}");
            }
            let mut reports = Vec::new();
            let mut sets = Vec::new();
            for k in start..=n {
                let (report, set) = compute_one(k, algo, &search, &par, &table)?;
                reports.push(report);
                sets.extend(set);
            }
            let paths = write_exports(&out_dir, &sets)?;
            print_reports(format, &reports)?;
            if format == Format::Human {
                for p in paths {
                    println!("wrote {}", p.display());
                }
            }
        }
        Cmd::Psimin {
            max_m,
            max_k,
            out,
            allow_large,
        } => {
            let table = compute_psi_min(max_m, max_k, allow_large)?;
            let f = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            let mut w = BufWriter::new(f);
            table.write_to(&mut w)?;
            w.flush()?;
            if format == Format::Human {
                println!("wrote psi_min table max_m={max_m} max_k={max_k} to {}", out.display());
            }
        }
        Cmd::ExportIlp { n, m1, m2, out } => {
            let primes = PrimeSet::first(n)?;
            let model = build_model(n, m1, m2, &primes)?;
            let f = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            let mut w = BufWriter::new(f);
            model.write_lp(&mut w)?;
            w.flush()?;
            if format == Format::Human {
                println!(
                    "wrote model n={n} m1={m1} m2={m2} ({} x, {} y, {} rows) to {}",
                    model.x_vars().len(),
                    model.y_vars().len(),
                    model.rows.len(),
                    out.display()
                );
            }
        }
        Cmd::ClassifySolution { model, solution } => {
            let text = fs::read_to_string(&model).with_context(|| format!("reading {}", model.display()))?;
            let (n, m1, m2) = IlpModel::read_header(&text)?;
            let model = build_model(n, m1, m2, &PrimeSet::first(n)?)?;
            let f = File::open(&solution).with_context(|| format!("opening {}", solution.display()))?;
            let sol = Assignment::parse(BufReader::new(f))?;
            let outcome = classify_solution(&model, &sol)?;
            match format {
                Format::Human => println!("{outcome}"),
                Format::Csv => println!("n,m1,m2,outcome\n{n},{m1},{m2},{outcome}"),
                Format::Jsonl => println!(
                    "{}",
                    serde_json::json!({"n": n, "m1": m1, "m2": m2, "outcome": outcome.to_string()})
                ),
            }
        }
        Cmd::Split {
            n,
            algo,
            kstar,
            out,
            search,
        } => {
            let table = PsiMinTable::from_env_or_shipped()?;
            let primes = PrimeSet::first(n)?;
            let cfg = search.config(algo, n);
            let units = generate_units(&primes, algo, kstar, &cfg, &table)?;
            let file = UnitFile::new(n, algo, kstar, &cfg, &table, units);
            let f = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            let mut w = BufWriter::new(f);
            file.write_to(&mut w)?;
            w.flush()?;
            if format == Format::Human {
                println!("wrote {} units for n={n} algo={algo} split={kstar} to {}", file.units.len(), out.display());
            }
        }
        Cmd::RunUnits {
            file,
            workers,
            only,
            share_best,
            out_dir,
        } => {
            let table = PsiMinTable::from_env_or_shipped()?;
            let f = File::open(&file).with_context(|| format!("opening {}", file.display()))?;
            let uf = UnitFile::read_from(BufReader::new(f), &table)?;
            let units: Vec<_> = if only.is_empty() {
                uf.units.clone()
            } else {
                if let Some(id) = only.iter().find(|&&id| !uf.units.iter().any(|u| u.unit_id == id)) {
                    bail!("unit {id} is not in {}", file.display());
                }
                uf.units.iter().filter(|u| only.contains(&u.unit_id)).cloned().collect()
            };
            let primes = PrimeSet::first(uf.n)?;
            let opts = RunOptions { workers, share_best };
            let start = std::time::Instant::now();
            let out = run_units(&primes, &units, &uf.cfg, &table, opts)?;
            if out.sequences.is_empty() {
                if units.len() < uf.units.len() {
                    println!("no cover of length >= m0={} below these units", uf.cfg.m0);
                    return Ok(ExitCode::SUCCESS);
                }
                bail!("no cover reaches the seed m0={}; split again with a smaller --m0", uf.cfg.m0);
            }
            let report = RunReport::from_outcome(uf.algo, &out, start.elapsed())?;
            if let Some(dir) = out_dir {
                write_exports(&dir, &[SequenceSet::from_outcome(&primes, &out)?])?;
            }
            print_reports(format, &[report])?;
            if units.len() < uf.units.len() && format == Format::Human {
                println!("partial run: {} of {} units", units.len(), uf.units.len());
            }
        }
        Cmd::Bench {
            n_min,
            n_max,
            algos,
            out,
        } => {
            let table = PsiMinTable::from_env_or_shipped()?;
            let algos = if algos.is_empty() { Algorithm::ALL.to_vec() } else { algos };
            let ns: Vec<usize> = (n_min.max(2)..=n_max).collect();
            let rows = report::bench(&ns, &algos, &table)?;
            let text = if format == Format::Jsonl {
                rows.iter()
                    .map(|r| {
                        let v = serde_json::json!({
                            "n": r.n,
                            "algo": r.algo.to_string(),
                            "seconds": r.seconds,
                            "log1p_seconds": r.log1p_seconds(),
                            "visited": r.visited,
                        });
                        format!("{v}\n")
                    })
                    .collect()
            } else {
                bench_csv(&rows)
            };
            match out {
                Some(path) => fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{text}"),
            }
        }
        Cmd::Verify {
            n_max,
            algos,
            budget_secs,
            literature,
        } => {
            let table = PsiMinTable::from_env_or_shipped()?;
            let algos = if algos.is_empty() { Algorithm::ALL.to_vec() } else { algos };
            let rep = report::verify(n_max, &algos, &table, budget_secs.map(Duration::from_secs))?;
            print_matrix(format, &algos, &rep)?;
            let mut ok = rep.passed();
            if let Some(bad) = rep.first_mismatch() {
                let CellStatus::Mismatch(why) = &bad.status else { unreachable!() };
                eprintln!("mismatch at n={} algo={}: {why}", bad.n, bad.algo);
            }
            if literature {
                for row in &golden::KNOWN {
                    let expected = row.omega.map_or(2, |w| 2 * w + 2);
                    if row.h != expected {
                        eprintln!("literature row n={} has h={} but 2*omega+2={expected}", row.n, row.h);
                        ok = false;
                    }
                }
                if format == Format::Human {
                    println!("literature rows n=1..{}: h = 2*omega + 2 checked", golden::KNOWN.len());
                }
            }
            if !ok {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn print_matrix(format: Format, algos: &[Algorithm], rep: &report::VerifyReport) -> Result<()> {
    let mut out = io::stdout().lock();
    match format {
        Format::Human => {
            write!(out, "{:>3}", "n")?;
            for a in algos {
                write!(out, " {:>8}", a.to_string())?;
            }
            writeln!(out)?;
            for chunk in rep.cells.chunks(algos.len()) {
                write!(out, "{:>3}", chunk[0].n)?;
                for c in chunk {
                    let s = match &c.status {
                        CellStatus::Agree => format!("{}/{}", opt(c.omega), opt(c.n_seq)),
                        CellStatus::Mismatch(_) => "MISMATCH".to_string(),
                        CellStatus::Skipped(_) => "-".to_string(),
                    };
                    write!(out, " {s:>8}")?;
                }
                writeln!(out)?;
            }
            writeln!(out, "{}", if rep.passed() { "all runs agree" } else { "verification FAILED" })?;
        }
        Format::Csv | Format::Jsonl => {
            if format == Format::Csv {
                writeln!(out, "n,algo,omega,n_seq,status,detail")?;
            }
            for c in &rep.cells {
                let (status, detail) = match &c.status {
                    CellStatus::Agree => ("agree", String::new()),
                    CellStatus::Mismatch(d) => ("mismatch", d.clone()),
                    CellStatus::Skipped(d) => ("skipped", d.clone()),
                };
                if format == Format::Csv {
                    writeln!(
                        out,
                        "{},{},{},{},{status},\"{}\"",
                        c.n,
                        c.algo,
                        opt(c.omega),
                        opt(c.n_seq),
                        detail.replace('"', "'")
                    )?;
                } else {
                    let v = serde_json::json!({
                        "n": c.n, "algo": c.algo.to_string(), "omega": c.omega,
                        "n_seq": c.n_seq, "status": status, "detail": detail,
                    });
                    writeln!(out, "{v}")?;
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            if let Some(jacobsthal::Error::Guard { n, .. }) = e.downcast_ref::<jacobsthal::Error>() {
                eprintln!("error: {e}");
                eprintln!("hint: algorithms that accept n={n}: {}", feasible(*n));
            } else {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(2)
        }
    }
}
