//! Binary integer program whose optimum brackets ω(n) between m1 and m2,
//! written in CPLEX LP text format, plus solution parsing and classification.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::primes::PrimeSet;
use crate::search::bsa;

/// Largest m2 - m1 for which every objective weight fits exactly.
pub const MAX_SPAN: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    /// x_{i,j}: prime index i (2..n) takes residue j.
    X { i: usize, j: u32 },
    /// y_k: position k is covered.
    Y { k: u32 },
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::X { i, j } => write!(f, "x_{i}_{j}"),
            Var::Y { k } => write!(f, "y_{k}"),
        }
    }
}

impl FromStr for Var {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidSolution(format!("unknown variable `{s}`"));
        let mut parts = s.split('_');
        let kind = parts.next().ok_or_else(bad)?;
        let nums: Vec<u64> = parts.map(|p| p.parse().map_err(|_| bad())).collect::<Result<_>>()?;
        match (kind, nums.as_slice()) {
            ("x", [i, j]) => Ok(Var::X { i: *i as usize, j: *j as u32 }),
            ("y", [k]) => Ok(Var::Y { k: *k as u32 }),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub name: String,
    pub terms: Vec<(i64, Var)>,
    pub sense: Sense,
    pub rhs: i64,
}

impl Row {
    fn holds(&self, value: impl Fn(Var) -> u8) -> bool {
        let lhs: i64 = self.terms.iter().map(|&(c, v)| c * value(v) as i64).sum();
        match self.sense {
            Sense::Eq => lhs == self.rhs,
            Sense::Ge => lhs >= self.rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IlpModel {
    pub n: usize,
    pub m1: u32,
    pub m2: u32,
    primes: Vec<u32>,
    pub objective: Vec<(u128, Var)>,
    pub rows: Vec<Row>,
}

/// x terms of the primes whose class r = q mod p can contain q.
fn cover_terms(primes: &[u32], q: u32) -> Vec<(i64, Var)> {
    primes
        .iter()
        .enumerate()
        .filter(|&(_, &p)| q % p != 0)
        .map(|(idx, &p)| (1, Var::X { i: idx + 2, j: q % p }))
        .collect()
}

/// Builds the bracketing model for (n, m1, m2).
pub fn build_model(n: usize, m1: u32, m2: u32, primes: &PrimeSet) -> Result<IlpModel> {
    if n < 2 || primes.n() != n {
        return Err(Error::InvalidConfig(format!("model needs 2 <= n matching the prime set, got n={n}")));
    }
    if m1 < 1 || m1 > m2 {
        return Err(Error::InvalidConfig(format!("need 1 <= m1 <= m2, got m1={m1} m2={m2}")));
    }
    if m2 - m1 > MAX_SPAN {
        return Err(Error::InvalidConfig(format!(
            "m2 - m1 = {} exceeds {MAX_SPAN}; bracket the range in several runs",
            m2 - m1
        )));
    }
    let odd = primes.odd().to_vec();
    let objective = (m1..=m2).map(|k| (1u128 << (m2 - k), Var::Y { k })).collect();
    let mut rows = Vec::new();
    for (idx, &p) in odd.iter().enumerate() {
        rows.push(Row {
            name: format!("choose_{}", idx + 2),
            terms: (1..p).map(|j| (1, Var::X { i: idx + 2, j })).collect(),
            sense: Sense::Eq,
            rhs: 1,
        });
    }
    for q in 1..m1 {
        rows.push(Row {
            name: format!("cover_{q}"),
            terms: cover_terms(&odd, q),
            sense: Sense::Ge,
            rhs: 1,
        });
    }
    for k in m1..=m2 {
        let mut terms = cover_terms(&odd, k);
        terms.push((-1, Var::Y { k }));
        rows.push(Row {
            name: format!("link_{k}"),
            terms,
            sense: Sense::Ge,
            rhs: 0,
        });
    }
    Ok(IlpModel {
        n,
        m1,
        m2,
        primes: odd,
        objective,
        rows,
    })
}

impl IlpModel {
    pub fn x_vars(&self) -> Vec<Var> {
        self.primes
            .iter()
            .enumerate()
            .flat_map(|(idx, &p)| (1..p).map(move |j| Var::X { i: idx + 2, j }))
            .collect()
    }

    pub fn y_vars(&self) -> Vec<Var> {
        (self.m1..=self.m2).map(|k| Var::Y { k }).collect()
    }

    pub fn odd_primes(&self) -> &[u32] {
        &self.primes
    }

    fn has_var(&self, v: Var) -> bool {
        match v {
            Var::X { i, j } => i >= 2 && i - 2 < self.primes.len() && j >= 1 && j < self.primes[i - 2],
            Var::Y { k } => (self.m1..=self.m2).contains(&k),
        }
    }

    /// CPLEX LP text.
    pub fn write_lp<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "\\ jacobsthal bracketing model n={} m1={} m2={}", self.n, self.m1, self.m2)?;
        writeln!(w, "Maximize")?;
        let obj: Vec<String> = self
            .objective
            .iter()
            .enumerate()
            .map(|(idx, (c, v))| if idx == 0 { format!("{c} {v}") } else { format!("+ {c} {v}") })
            .collect();
        write_expr(&mut w, " obj:", &obj)?;
        writeln!(w, "Subject To")?;
        for row in &self.rows {
            let mut terms: Vec<String> = row
                .terms
                .iter()
                .map(|&(c, v)| match c {
                    1 => format!("+ {v}"),
                    -1 => format!("- {v}"),
                    c if c < 0 => format!("- {} {v}", -c),
                    c => format!("+ {c} {v}"),
                })
                .collect();
            if terms.is_empty() {
                // no prime can reach this position; the row is infeasible as stated
                terms.push(format!("0 {}", self.x_vars()[0]));
            } else if let Some(first) = terms.first_mut() {
                if let Some(rest) = first.strip_prefix("+ ") {
                    *first = rest.to_string();
                }
            }
            let sense = match row.sense {
                Sense::Eq => "=",
                Sense::Ge => ">=",
            };
            terms.push(format!("{sense} {}", row.rhs));
            write_expr(&mut w, &format!(" {}:", row.name), &terms)?;
        }
        writeln!(w, "Binary")?;
        let vars: Vec<String> = self.x_vars().into_iter().chain(self.y_vars()).map(|v| v.to_string()).collect();
        for chunk in vars.chunks(8) {
            writeln!(w, " {}", chunk.join(" "))?;
        }
        writeln!(w, "End")?;
        Ok(())
    }

    pub fn to_lp_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_lp(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii")
    }

    /// Header values of an LP file written by [`IlpModel::write_lp`].
    pub fn read_header(text: &str) -> Result<(usize, u32, u32)> {
        let line = text.lines().next().unwrap_or("");
        let mut n = None;
        let mut m1 = None;
        let mut m2 = None;
        for tok in line.split_whitespace() {
            if let Some(v) = tok.strip_prefix("n=") {
                n = v.parse().ok();
            } else if let Some(v) = tok.strip_prefix("m1=") {
                m1 = v.parse().ok();
            } else if let Some(v) = tok.strip_prefix("m2=") {
                m2 = v.parse().ok();
            }
        }
        match (line.starts_with("\\ jacobsthal"), n, m1, m2) {
            (true, Some(n), Some(m1), Some(m2)) => Ok((n, m1, m2)),
            _ => Err(Error::Parse {
                line: 1,
                msg: "not a model written by this tool (missing `\\ jacobsthal ... n= m1= m2=` header)".into(),
            }),
        }
    }

    pub fn objective_value(&self, sol: &Assignment) -> u128 {
        self.objective.iter().map(|&(c, v)| c * sol.get(v) as u128).sum()
    }
}

fn write_expr<W: Write>(w: &mut W, head: &str, terms: &[String]) -> Result<()> {
    write!(w, "{head}")?;
    for (idx, t) in terms.iter().enumerate() {
        if idx > 0 && idx % 8 == 0 {
            write!(w, "\n   ")?;
        }
        write!(w, " {t}")?;
    }
    writeln!(w)?;
    Ok(())
}

/// 0/1 values by variable; absent variables read as 0.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    values: BTreeMap<Var, u8>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, v: Var, value: bool) {
        self.values.insert(v, value as u8);
    }

    pub fn get(&self, v: Var) -> u8 {
        self.values.get(&v).copied().unwrap_or(0)
    }

    /// Parses `name value` lines. Blank lines and `#` comments are skipped;
    /// values must round to 0 or 1.
    pub fn parse<R: BufRead>(r: R) -> Result<Self> {
        let mut out = Assignment::new();
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::Parse { line: idx + 1, msg };
            let mut it = line.split_whitespace();
            let (Some(name), Some(value), None) = (it.next(), it.next(), it.next()) else {
                return Err(err(format!("expected `name value`, got `{line}`")));
            };
            let var: Var = name.parse().map_err(|e: Error| err(e.to_string()))?;
            let x: f64 = value.parse().map_err(|_| err(format!("bad value `{value}`")))?;
            let rounded = x.round();
            if (x - rounded).abs() > 1e-6 || !(rounded == 0.0 || rounded == 1.0) {
                return Err(err(format!("{name} = {value} is not binary")));
            }
            out.set(var, rounded == 1.0);
        }
        Ok(out)
    }

    pub fn to_text(&self) -> String {
        self.values.iter().map(|(v, x)| format!("{v} {x}\n")).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IlpOutcome {
    /// ω(n) < m1.
    TooLargeM1,
    /// ω(n) >= m2.
    TooSmallM2,
    OmegaFound(u32),
}

impl fmt::Display for IlpOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IlpOutcome::TooLargeM1 => f.write_str("too_large_m1"),
            IlpOutcome::TooSmallM2 => f.write_str("too_small_m2"),
            IlpOutcome::OmegaFound(m) => write!(f, "omega_found({m})"),
        }
    }
}

/// Checks the assignment against every row and reads ω off the first
/// uncovered y. Ones after that first zero are allowed: at the optimum y_k
/// simply mirrors whether k happens to be covered.
pub fn classify_solution(model: &IlpModel, sol: &Assignment) -> Result<IlpOutcome> {
    if let Some(v) = sol.values.keys().find(|&&v| !model.has_var(v)) {
        return Err(Error::InvalidSolution(format!("variable {v} is not part of the model")));
    }
    if let Some(row) = model.rows.iter().find(|r| !r.holds(|v| sol.get(v))) {
        return Err(Error::InvalidSolution(format!("constraint {} is violated", row.name)));
    }
    let first_zero = (model.m1..=model.m2).find(|&k| sol.get(Var::Y { k }) == 0);
    Ok(match first_zero {
        Some(k) if k == model.m1 => IlpOutcome::TooLargeM1,
        Some(k) => IlpOutcome::OmegaFound(k - 1),
        None => IlpOutcome::TooSmallM2,
    })
}

/// Expected outcome for a model given the true ω.
pub fn expected_outcome(model: &IlpModel, omega: u32) -> IlpOutcome {
    if omega < model.m1 {
        IlpOutcome::TooLargeM1
    } else if omega >= model.m2 {
        IlpOutcome::TooSmallM2
    } else {
        IlpOutcome::OmegaFound(omega)
    }
}

/// Optimal assignment by trying every residue choice; `None` if the cover
/// rows below m1 cannot all be met.
pub fn brute_force_optimum(model: &IlpModel) -> Option<Assignment> {
    let odd = &model.primes;
    let mut rem = vec![1u32; odd.len()];
    let mut best: Option<(u128, Vec<u32>)> = None;
    let covered = |rem: &[u32], q: u32| odd.iter().zip(rem).any(|(&p, &a)| q % p == a);
    loop {
        if (1..model.m1).all(|q| covered(&rem, q)) {
            let value: u128 = (model.m1..=model.m2)
                .filter(|&k| covered(&rem, k))
                .map(|k| 1u128 << (model.m2 - k))
                .sum();
            if best.as_ref().is_none_or(|b| value > b.0) {
                best = Some((value, rem.clone()));
            }
        }
        // odometer step
        let mut i = 0;
        loop {
            if i == odd.len() {
                let (_, rem) = best?;
                let mut sol = Assignment::new();
                for (idx, &a) in rem.iter().enumerate() {
                    sol.set(Var::X { i: idx + 2, j: a }, true);
                }
                for k in model.m1..=model.m2 {
                    sol.set(Var::Y { k }, covered(&rem, k));
                }
                return Some(sol);
            }
            rem[i] += 1;
            if rem[i] < odd[i] {
                break;
            }
            rem[i] = 1;
            i += 1;
        }
    }
}

/// Classifies the brute-force optimum (an infeasible model counts as
/// [`IlpOutcome::TooLargeM1`]) and compares it with ω from the search.
pub fn validate_small(model: &IlpModel) -> Result<bool> {
    if model.n > 6 {
        return Err(Error::InvalidConfig(format!("validate_small is limited to n <= 6, got {}", model.n)));
    }
    let primes = PrimeSet::first(model.n)?;
    let omega = bsa(&primes)?.omega;
    let got = match brute_force_optimum(model) {
        Some(sol) => classify_solution(model, &sol)?,
        None => IlpOutcome::TooLargeM1,
    };
    Ok(got == expected_outcome(model, omega))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(n: usize, m1: u32, m2: u32) -> IlpModel {
        build_model(n, m1, m2, &PrimeSet::first(n).unwrap()).unwrap()
    }

    #[test]
    fn variable_counts() {
        let m = model(3, 2, 4);
        assert_eq!(m.x_vars().len(), 6);
        assert_eq!(m.y_vars().len(), 3);
        let m = model(6, 8, 12);
        let covers: Vec<_> = m.rows.iter().filter(|r| r.name.starts_with("cover_")).collect();
        let links: Vec<_> = m.rows.iter().filter(|r| r.name.starts_with("link_")).collect();
        assert_eq!(covers.len(), 7);
        assert_eq!(links.len(), 5);
        assert_eq!(m.rows.iter().filter(|r| r.name.starts_with("choose_")).count(), 5);
    }

    #[test]
    fn cover_rows_skip_dividing_primes() {
        let m = model(3, 4, 5);
        let row = m.rows.iter().find(|r| r.name == "cover_3").unwrap();
        assert_eq!(row.terms, vec![(1, Var::X { i: 3, j: 3 })]);
    }

    #[test]
    fn objective_weights_dominate() {
        let m = model(4, 1, 65);
        let w: Vec<u128> = m.objective.iter().map(|&(c, _)| c).collect();
        for i in 0..w.len() {
            assert!(w[i] > w[i + 1..].iter().sum::<u128>());
        }
        assert!(build_model(4, 1, 66, &PrimeSet::first(4).unwrap()).is_err());
        assert!(build_model(4, 3, 2, &PrimeSet::first(4).unwrap()).is_err());
    }

    #[test]
    fn lp_text_shape() {
        let text = model(3, 2, 4).to_lp_string();
        assert!(text.starts_with("\\ jacobsthal bracketing model n=3 m1=2 m2=4\nMaximize\n obj: 4 y_2 + 2 y_3 + 1 y_4\n"));
        assert!(text.contains(" choose_2: x_2_1 + x_2_2 = 1\n"));
        assert!(text.contains(" cover_1: x_2_1 + x_3_1 >= 1\n"));
        assert!(text.contains(" link_3: x_3_3 - y_3 >= 0\n"));
        assert!(text.trim_end().ends_with("End"));
        assert_eq!(IlpModel::read_header(&text).unwrap(), (3, 2, 4));
    }

    #[test]
    fn trichotomy() {
        let m = model(3, 1, 4);
        let mut sol = Assignment::new();
        sol.set(Var::X { i: 2, j: 1 }, true);
        sol.set(Var::X { i: 3, j: 2 }, true);
        sol.set(Var::Y { k: 1 }, true);
        sol.set(Var::Y { k: 2 }, true);
        assert_eq!(classify_solution(&m, &sol).unwrap(), IlpOutcome::OmegaFound(2));
        sol.set(Var::Y { k: 4 }, true);
        assert_eq!(classify_solution(&m, &sol).unwrap(), IlpOutcome::OmegaFound(2));
        let best = brute_force_optimum(&m).unwrap();
        assert_eq!(classify_solution(&m, &best).unwrap(), IlpOutcome::OmegaFound(2));
        let ys: Vec<u8> = m.y_vars().into_iter().map(|v| best.get(v)).collect();
        assert_eq!(ys, vec![1, 1, 0, 1]);

        let zero = Assignment::parse("x_2_1 1\nx_3_1 1\n".as_bytes()).unwrap();
        assert_eq!(classify_solution(&m, &zero).unwrap(), IlpOutcome::TooLargeM1);
        let m = model(5, 1, 5);
        let best = brute_force_optimum(&m).unwrap();
        assert_eq!(classify_solution(&m, &best).unwrap(), IlpOutcome::TooSmallM2);
    }

    #[test]
    fn invalid_solutions() {
        let m = model(3, 1, 4);
        // y_1 claims a cover the x choice does not provide
        let sol = Assignment::parse("x_2_2 1\nx_3_2 1\ny_1 1\n".as_bytes()).unwrap();
        assert!(classify_solution(&m, &sol).is_err());
        let sol = Assignment::parse("x_2_1 1\n".as_bytes()).unwrap();
        assert!(classify_solution(&m, &sol).is_err());
        let sol = Assignment::parse("x_2_1 1\nx_3_1 1\ny_9 0\n".as_bytes()).unwrap();
        assert!(classify_solution(&m, &sol).is_err());
        assert!(Assignment::parse("x_2_1 0.5\n".as_bytes()).is_err());
        assert!(Assignment::parse("z_1 1\n".as_bytes()).is_err());
        assert_eq!(Assignment::parse("x_2_1 0.9999999\n".as_bytes()).unwrap().get(Var::X { i: 2, j: 1 }), 1);
    }

    #[test]
    fn small_models_agree_with_search() {
        assert!(validate_small(&model(4, 3, 6)).unwrap());
        assert!(validate_small(&model(5, 7, 9)).unwrap());
        assert!(validate_small(&model(5, 1, 5)).unwrap());
        assert_eq!(brute_force_optimum(&model(5, 9, 12)), None);
        assert!(validate_small(&model(5, 9, 12)).unwrap());
    }
}
