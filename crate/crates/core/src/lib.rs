//! Finite propagation unitary operators on `l2(Z)` and the integer sequence
//! algebra behind their homotopy groups.
//!
//! * [`seqcoinv`]: exact arithmetic on eventually periodic integer sequences
//!   and the shift-coinvariant quotient `l∞(Z) / Im(1 - S)`.
//! * [`opcore`]: periodic and end-periodic banded operators (storage, products,
//!   adjoints, corners, unitarity checks).
//! * [`gnvw`]: the GNVW index, block-diagonal factorization of index-zero
//!   operators, end-periodic splitting and seeded test-operator synthesis.
//! * [`linalg`]: small dense complex kernels (Haar sampling, polar projection).

pub mod error;
pub mod gnvw;
pub mod linalg;
pub mod opcore;
pub mod seqcoinv;

pub use error::{Error, Result};
pub use gnvw::{DecompositionResult, EndPeriodicSplit, IndexReport};
pub use opcore::{EndPeriodicOperator, Operator, PeriodicBandOperator, StateVector};
pub use seqcoinv::{DivisionWitness, EventuallyPeriodicSeq, Membership};

pub use num_complex::Complex64;
