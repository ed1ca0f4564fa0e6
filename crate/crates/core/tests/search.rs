use std::fs::File;
use std::io::BufReader;

use jacobsthal::bounds::PsiMinTable;
use jacobsthal::enumeration::{permutation_to_remainders, write_exports, SequenceSet};
use jacobsthal::parallel::{generate_units, run_units, RunOptions, UnitFile};
use jacobsthal::primes::PrimeSet;
use jacobsthal::search::{search, search_with, Algorithm, DsaConfig, SearchOutcome};

fn ps(n: usize) -> PrimeSet {
    PrimeSet::first(n).unwrap()
}

fn table() -> PsiMinTable {
    PsiMinTable::shipped()
}

fn run(algo: Algorithm, n: usize) -> SearchOutcome {
    search(algo, &ps(n), &table()).unwrap()
}

#[test]
fn optimized_searches_agree_up_to_14() {
    for n in 2..=14 {
        let dsa = run(Algorithm::Dsa, n);
        for algo in [Algorithm::Crpdsa, Algorithm::Gpa] {
            let out = run(algo, n);
            assert_eq!((out.omega, &out.sequences), (dsa.omega, &dsa.sequences), "{algo} n={n}");
        }
        if n <= 12 {
            let rpa = run(Algorithm::Rpa, n);
            assert_eq!((rpa.omega, &rpa.sequences), (dsa.omega, &dsa.sequences), "rpa n={n}");
        }
    }
}

#[test]
fn reduced_permutations_visit_less() {
    for n in 2..=10 {
        assert!(run(Algorithm::Rpa, n).visited <= run(Algorithm::Bpa, n).visited, "n={n}");
    }
}

#[test]
fn any_valid_configuration_gives_the_same_outcome() {
    let primes = ps(8);
    let reference = run(Algorithm::Bsa, 8);
    for algo in [Algorithm::Dsa, Algorithm::Gpa] {
        for k_star in 2..=8 {
            for m0 in [1, 10, 16] {
                let cfg = DsaConfig {
                    k_star,
                    t: (k_star - 1).min(7),
                    m0,
                    ..DsaConfig::default_for(algo, 8)
                };
                let out = search_with(algo, &primes, &cfg, &table()).unwrap();
                assert_eq!(out.sequences, reference.sequences, "{algo} k*={k_star} m0={m0}");
            }
        }
    }
    // a seed above ω falls back to an unseeded run
    let cfg = DsaConfig {
        m0: 40,
        ..DsaConfig::default_for(Algorithm::Dsa, 8)
    };
    assert_eq!(search_with(Algorithm::Dsa, &primes, &cfg, &table()).unwrap().sequences, reference.sequences);
}

#[test]
fn maximal_sequences_round_trip_through_permutations() {
    for n in 2..=12 {
        let primes = ps(n);
        let set = SequenceSet::from_outcome(&primes, &run(Algorithm::Gpa, n)).unwrap();
        for r in &set.records {
            assert_eq!(permutation_to_remainders(&r.permutation, &primes).unwrap(), r.remainders);
            assert_eq!(r.moduli.len(), r.m as usize);
            let a = r.offset(&primes);
            for (q, &p) in r.moduli.iter().enumerate() {
                assert_eq!((&a + q as u32 + 1u32) % p, 0u32.into(), "n={n} q={}", q + 1);
            }
        }
    }
}

#[test]
fn unit_file_survives_disk_and_reruns() {
    let n = 10;
    let primes = ps(n);
    let cfg = DsaConfig::default_for(Algorithm::Dsa, n);
    let units = generate_units(&primes, Algorithm::Dsa, 4, &cfg, &table()).unwrap();
    let file = UnitFile::new(n, Algorithm::Dsa, 4, &cfg, &table(), units);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("units.txt");
    file.write_to(File::create(&path).unwrap()).unwrap();
    let back = UnitFile::read_from(BufReader::new(File::open(&path).unwrap()), &table()).unwrap();
    assert_eq!(back, file);

    // any subset of units can be run on its own and merged later
    let (a, b) = back.units.split_at(back.units.len() / 2);
    let opts = RunOptions::default();
    let left = run_units(&primes, a, &back.cfg, &table(), opts).unwrap();
    let right = run_units(&primes, b, &back.cfg, &table(), opts).unwrap();
    let merged = SearchOutcome::merge(n, [left, right]);
    let direct = run(Algorithm::Dsa, n);
    assert_eq!((merged.omega, &merged.sequences), (direct.omega, &direct.sequences), "{merged:?}");
}

#[test]
fn export_files_hold_one_section_per_n() {
    let sets: Vec<SequenceSet> = (2..=5)
        .map(|n| SequenceSet::from_outcome(&ps(n), &run(Algorithm::Bsa, n)).unwrap())
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let paths = write_exports(dir.path(), &sets).unwrap();
    assert_eq!(paths.len(), 3);
    let remainders = std::fs::read_to_string(dir.path().join("remainders.txt")).unwrap();
    let headers: Vec<&str> = remainders.lines().filter(|l| l.starts_with('#')).collect();
    assert_eq!(
        headers,
        ["# n=2 omega=1 count=1", "# n=3 omega=2 count=2", "# n=4 omega=4 count=2", "# n=5 omega=6 count=2"]
    );
    assert!(remainders.contains("# n=3 omega=2 count=2\n1 2\n2 1\n"));
}
