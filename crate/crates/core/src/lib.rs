//! Finite-section certificates for adjoint-domain criteria.
//!
//! The crate evaluates sufficient conditions under which an operator given
//! by an infinite band matrix on `ℓ²(ℕ)`, or by a first-order differential
//! expression with matrix coefficients, has a closure whose adjoint domain
//! is determined by the operator itself: essential selfadjointness,
//! essential `H`-selfadjointness for a Gram operator `H`, and essential
//! normality.
//!
//! Every infinite object is represented by an entry generator and only ever
//! materialised on finite index windows. Where a product of infinite
//! matrices is needed, at least one factor must be banded so that the window
//! entries are exact. Boundedness of infinite matrices is judged from norm
//! curves over a ladder of growing windows and reported with a three-valued
//! [`Verdict`].
//!
//! Modules:
//! - [`operator`]: entry generators, operator/pairing/diagonal specs, windows,
//!   exact finite sections and products.
//! - [`exprlang`]: the expression language used for user-defined generators.
//! - [`linalg`]: operator norms, Hermitian eigenvalue bounds, pencils,
//!   resolvents, Schur-test certificates.
//! - [`matrix_criteria`]: the band-matrix hypotheses and the
//!   `H`-selfadjointness pipeline.
//! - [`approx_unit`]: approximate units and commutator-norm checks.
//! - [`diffop`]: coefficient checks for first-order differential operators.
//! - [`oracle`]: independent probes used to cross-check conclusions.

pub mod approx_unit;
pub mod diffop;
mod error;
pub mod exprlang;
pub mod linalg;
pub mod matrix;
pub mod matrix_criteria;
pub mod operator;
pub mod oracle;
pub mod parallel;
mod settings;
pub mod trend;
mod verdict;

pub use error::{Error, Result};
pub use matrix::{BandMatrix, DenseMatrix, LinOp, Section};
pub use num_complex::Complex64 as C64;
pub use settings::Settings;
pub use verdict::{Finding, Verdict, Witness};
