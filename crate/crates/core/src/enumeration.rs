//! Maximum-length sequences in their three equivalent forms: remainders,
//! per-position minimal moduli, and the first-free permutation of primes.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_bigint::BigUint;

use crate::coverage::crt_offset;
use crate::error::{Error, Result};
use crate::primes::PrimeSet;
use crate::search::SearchOutcome;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SequenceRecord {
    pub n: usize,
    /// Cover length.
    pub m: u32,
    /// a_2..a_n.
    pub remainders: Vec<u32>,
    /// For q in 1..=m, the smallest prime whose class contains q.
    pub moduli: Vec<u32>,
    /// (π_j, q_j): prime and the anchor it was placed at.
    pub permutation: Vec<(u32, u32)>,
}

impl SequenceRecord {
    /// Builds every representation from the remainders; `m` is the full
    /// cover length of the tuple.
    pub fn from_remainders(primes: &PrimeSet, remainders: &[u32]) -> Result<Self> {
        let odd = primes.odd();
        if remainders.len() != odd.len() {
            return Err(Error::InvalidRecord(format!(
                "expected {} remainders for n={}, got {}",
                odd.len(),
                primes.n(),
                remainders.len()
            )));
        }
        for (&a, &p) in remainders.iter().zip(odd) {
            if a == 0 || a >= p {
                return Err(Error::ZeroResidue { r: a, p });
            }
        }
        let m = cover_length(odd, remainders);
        let moduli = (1..=m)
            .map(|q| minimal_modulus(odd, remainders, q).expect("q lies inside the cover"))
            .collect();
        let permutation = remainders_to_permutation(remainders, m, primes)?;
        Ok(SequenceRecord {
            n: primes.n(),
            m,
            remainders: remainders.to_vec(),
            moduli,
            permutation,
        })
    }

    /// Smallest a >= 0 such that each moduli[q] divides a + q.
    pub fn offset(&self, primes: &PrimeSet) -> BigUint {
        crt_offset(primes.odd(), &self.remainders)
    }

    pub fn permutation_primes(&self) -> Vec<u32> {
        self.permutation.iter().map(|&(p, _)| p).collect()
    }

    pub fn anchors(&self) -> Vec<u32> {
        self.permutation.iter().map(|&(_, q)| q).collect()
    }
}

fn covers(p: u32, a: u32, q: u32) -> bool {
    q % p == a
}

fn minimal_modulus(odd: &[u32], remainders: &[u32], q: u32) -> Option<u32> {
    odd.iter()
        .zip(remainders)
        .find(|&(&p, &a)| covers(p, a, q))
        .map(|(&p, _)| p)
}

/// Length of the run 1..m covered by the classes.
pub fn cover_length(odd: &[u32], remainders: &[u32]) -> u32 {
    let mut q = 1;
    while minimal_modulus(odd, remainders, q).is_some() {
        q += 1;
    }
    q - 1
}

/// Places primes at successive first-free positions of 1..m, each time the
/// smallest pending prime whose class contains the anchor.
pub fn remainders_to_permutation(remainders: &[u32], m: u32, primes: &PrimeSet) -> Result<Vec<(u32, u32)>> {
    let odd = primes.odd();
    if remainders.len() != odd.len() {
        return Err(Error::InvalidRecord("remainder count does not match n".into()));
    }
    let mut covered = vec![false; m as usize + 2];
    let mut pending: Vec<bool> = vec![true; odd.len()];
    let mut perm = Vec::with_capacity(odd.len());
    let mut q = 1u32;
    while perm.len() < odd.len() {
        let Some(i) = (0..odd.len()).find(|&i| pending[i] && covers(odd[i], remainders[i], q)) else {
            return Err(Error::InvalidRecord(if q <= m {
                format!("position {q} is not covered")
            } else {
                format!("primes left over after covering 1..{m}")
            }));
        };
        pending[i] = false;
        perm.push((odd[i], q));
        let p = odd[i];
        let mut x = remainders[i];
        while x <= m + 1 {
            covered[x as usize] = true;
            x += p;
        }
        while q <= m && covered[q as usize] {
            q += 1;
        }
        if q > m && perm.len() < odd.len() {
            return Err(Error::InvalidRecord(format!(
                "primes left over after covering 1..{m}"
            )));
        }
    }
    if q <= m {
        return Err(Error::InvalidRecord(format!("position {q} is not covered")));
    }
    Ok(perm)
}

/// a_i = q_j mod p_i where π_j = p_i.
pub fn permutation_to_remainders(perm: &[(u32, u32)], primes: &PrimeSet) -> Result<Vec<u32>> {
    let odd = primes.odd();
    let mut out = vec![0u32; odd.len()];
    for &(p, q) in perm {
        let i = odd
            .iter()
            .position(|&x| x == p)
            .ok_or_else(|| Error::InvalidRecord(format!("{p} is not an odd prime of the set")))?;
        if out[i] != 0 {
            return Err(Error::InvalidRecord(format!("prime {p} appears twice")));
        }
        let a = q % p;
        if a == 0 {
            return Err(Error::ZeroResidue { r: 0, p });
        }
        out[i] = a;
    }
    if let Some(i) = out.iter().position(|&a| a == 0) {
        return Err(Error::InvalidRecord(format!("prime {} is missing", odd[i])));
    }
    Ok(out)
}

/// Mirror image of a maximal cover: b_i ≡ m + 1 - a_i (mod p_i).
pub fn reverse_record(rec: &SequenceRecord, primes: &PrimeSet) -> Result<SequenceRecord> {
    let b: Vec<u32> = primes
        .odd()
        .iter()
        .zip(&rec.remainders)
        .map(|(&p, &a)| ((rec.m as u64 + 1 + p as u64 - a as u64) % p as u64) as u32)
        .collect();
    let out = SequenceRecord::from_remainders(primes, &b)?;
    if out.m != rec.m {
        return Err(Error::InvalidRecord(format!(
            "reverse has length {} instead of {}; the input is not maximal",
            out.m, rec.m
        )));
    }
    Ok(out)
}

/// All maximal sequences for one n, in ascending remainder order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceSet {
    pub n: usize,
    pub omega: u32,
    pub records: Vec<SequenceRecord>,
}

impl SequenceSet {
    pub fn from_outcome(primes: &PrimeSet, out: &SearchOutcome) -> Result<Self> {
        let records = out
            .sequences
            .iter()
            .map(|r| SequenceRecord::from_remainders(primes, r))
            .collect::<Result<Vec<_>>>()?;
        if let Some(bad) = records.iter().find(|r| r.m != out.omega) {
            return Err(Error::InvalidRecord(format!(
                "record {:?} covers {} positions, expected {}",
                bad.remainders, bad.m, out.omega
            )));
        }
        Ok(SequenceSet {
            n: out.n,
            omega: out.omega,
            records,
        })
    }

    /// True if the set maps onto itself under reversal.
    pub fn is_reversal_closed(&self, primes: &PrimeSet) -> Result<bool> {
        for r in &self.records {
            let rev = reverse_record(r, primes)?;
            if self.records.binary_search(&rev).is_err() {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportKind {
    Moduli,
    Remainders,
    Permutations,
}

impl ExportKind {
    pub const ALL: [ExportKind; 3] = [ExportKind::Moduli, ExportKind::Remainders, ExportKind::Permutations];

    pub fn file_name(self) -> &'static str {
        match self {
            ExportKind::Moduli => "moduli.txt",
            ExportKind::Remainders => "remainders.txt",
            ExportKind::Permutations => "permutations.txt",
        }
    }
}

impl fmt::Display for ExportKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.file_name())
    }
}

fn join(values: impl IntoIterator<Item = u32>) -> String {
    values
        .into_iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Writes one n-section: a `# n=.. omega=.. count=..` header and one line per record.
pub fn export_records<W: Write>(set: &SequenceSet, kind: ExportKind, mut sink: W) -> Result<()> {
    writeln!(sink, "# n={} omega={} count={}", set.n, set.omega, set.records.len())?;
    for r in &set.records {
        let line = match kind {
            ExportKind::Moduli => join(r.moduli.iter().copied()),
            ExportKind::Remainders => join(r.remainders.iter().copied()),
            ExportKind::Permutations => join(r.permutation_primes()),
        };
        writeln!(sink, "{line}")?;
    }
    Ok(())
}

/// Writes the three files into `dir`, one section per set.
pub fn write_exports(dir: &Path, sets: &[SequenceSet]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for kind in ExportKind::ALL {
        let path = dir.join(kind.file_name());
        let mut buf = Vec::new();
        for set in sets {
            export_records(set, kind, &mut buf)?;
        }
        fs::write(&path, buf)?;
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(n: usize) -> PrimeSet {
        PrimeSet::first(n).unwrap()
    }

    #[test]
    fn example_n6_record() {
        let p = ps(6);
        let r = SequenceRecord::from_remainders(&p, &[1, 3, 2, 5, 6]).unwrap();
        assert_eq!(r.m, 10);
        assert_eq!(r.moduli, vec![3, 7, 5, 3, 11, 13, 3, 5, 7, 3]);
        assert_eq!(r.permutation, vec![(3, 1), (7, 2), (5, 3), (11, 5), (13, 6)]);
        assert_eq!(r.offset(&p), BigUint::from(12227u32));
        for (q, &m) in r.moduli.iter().enumerate() {
            assert_eq!((12227 + q as u32 + 1) % m, 0);
        }
    }

    #[test]
    fn permutation_examples() {
        assert_eq!(remainders_to_permutation(&[1], 1, &ps(2)).unwrap(), vec![(3, 1)]);
        assert_eq!(remainders_to_permutation(&[2, 1], 2, &ps(3)).unwrap(), vec![(5, 1), (3, 2)]);
        assert_eq!(permutation_to_remainders(&[(5, 1), (3, 2)], &ps(3)).unwrap(), vec![2, 1]);
        assert_eq!(permutation_to_remainders(&[(3, 1)], &ps(2)).unwrap(), vec![1]);
        assert_eq!(
            permutation_to_remainders(&[(3, 1), (7, 2), (5, 3), (11, 5), (13, 6)], &ps(6)).unwrap(),
            vec![1, 3, 2, 5, 6]
        );
    }

    #[test]
    fn incomplete_covers_are_rejected() {
        assert!(remainders_to_permutation(&[1, 1], 3, &ps(3)).is_err());
        assert!(permutation_to_remainders(&[(3, 1)], &ps(3)).is_err());
        assert!(permutation_to_remainders(&[(5, 5), (3, 1)], &ps(3)).is_err());
        assert!(SequenceRecord::from_remainders(&ps(3), &[0, 1]).is_err());
    }

    #[test]
    fn reversal_examples() {
        let p = ps(3);
        let r = SequenceRecord::from_remainders(&p, &[1, 2]).unwrap();
        let rev = reverse_record(&r, &p).unwrap();
        assert_eq!(rev.remainders, vec![2, 1]);
        assert_eq!(reverse_record(&rev, &p).unwrap(), r);
        let p6 = ps(6);
        let e = SequenceRecord::from_remainders(&p6, &[1, 3, 2, 5, 6]).unwrap();
        let rev = reverse_record(&e, &p6).unwrap();
        assert_eq!(rev.remainders, vec![1, 3, 2, 6, 5]);
    }

    #[test]
    fn export_layout() {
        let p = ps(3);
        let set = SequenceSet {
            n: 3,
            omega: 2,
            records: vec![
                SequenceRecord::from_remainders(&p, &[1, 2]).unwrap(),
                SequenceRecord::from_remainders(&p, &[2, 1]).unwrap(),
            ],
        };
        let mut buf = Vec::new();
        export_records(&set, ExportKind::Remainders, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "# n=3 omega=2 count=2\n1 2\n2 1\n");
        let empty = SequenceSet { n: 3, omega: 2, records: vec![] };
        let mut buf = Vec::new();
        export_records(&empty, ExportKind::Moduli, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "# n=3 omega=2 count=0\n");
    }
}
