//! Computation of the primorial Jacobsthal function h(n) through the
//! condensed function ω(n): the longest run of consecutive integers each
//! divisible by one of the odd primes p_2..p_n.
//!
//! ```
//! use jacobsthal::{bounds::PsiMinTable, primes::PrimeSet, search};
//!
//! let ps = PrimeSet::first(6).unwrap();
//! let out = search::dsa(&ps, &search::DsaConfig::default_for(search::Algorithm::Dsa, 6), &PsiMinTable::shipped()).unwrap();
//! assert_eq!(out.omega, 10);
//! assert_eq!(2 * out.omega + 2, 22);
//! ```

pub mod bounds;
pub mod coverage;
pub mod enumeration;
pub mod error;
pub mod golden;
pub mod ilp;
pub mod parallel;
pub mod primes;
pub mod report;
pub mod search;

pub use error::{Error, Result};
