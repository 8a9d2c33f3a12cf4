//! Exact computations for the multispecies PASEP on a ring.
//!
//! Particles labelled `1..=n` (holes carry the label `n+1`) hop on a cyclic
//! lattice; an adjacent pair `ij` swaps to `ji` at rate 1 when `i > j` and at
//! rate `q` when `i < j`. This crate computes the stationary law of that chain
//! two independent ways — by enumerating multiline queues under the q-bully
//! linking rule, and by exactly solving the generator — and evaluates the
//! closed-form two-point correlations together with every intermediate
//! quantity they are assembled from (`T_>`, `T_<`, case weights, η).
//!
//! Everything outside the Gillespie simulator is exact rational arithmetic;
//! there are no tolerances in the identity checks. The crate is `no_std`
//! (with `alloc`); IO, serialization and the command-line front end live in
//! the companion `pasep-cli` crate.
//!
//! ```
//! use pasep_core::formulas::{cq_formula, FormulaVariant};
//! use pasep_core::markov::{build_generator, solve_stationary, two_point};
//! use pasep_core::mlq::SpeciesCount;
//! use pasep_core::QParam;
//!
//! let q = QParam::from_ratio(1, 2).unwrap();
//! // closed form ...
//! let formula = cq_formula(3, 2, 1, &q, FormulaVariant::Corrected).unwrap();
//! // ... equals the exact stationary solve of the 6-state chain
//! let generator = build_generator(&SpeciesCount::iden(3), &q, 1_000).unwrap();
//! let table = two_point(&solve_stationary(&generator).unwrap());
//! assert_eq!(&formula, table.entry(2, 1));
//! assert_eq!(formula.to_string(), "4/27");
//! ```

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod error;
pub mod formulas;
pub mod linalg;
pub mod markov;
pub mod mlq;
pub mod rng;
pub mod scalar;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::{QParam, Rational};
