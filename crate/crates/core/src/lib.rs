//! Exact arithmetic for truncated Fourier/jet expansions of Jacobi and
//! quasi-Jacobi forms.
//!
//! The crate is organized in layers:
//! - [`scalar`]: elements of a fixed cyclotomic field in the power basis;
//! - [`monomial`] / [`coeffn`]: exponential monomials (`zeta`, `qw`, ...) and
//!   rational coefficient functions with binomial-product denominators;
//! - [`series`]: truncated Puiseux series in `q` with [`coeffn::CoefFn`]
//!   coefficients;
//! - [`jet`]: finite Laurent expansions in the normalized variable `W`
//!   with series coefficients;
//! - [`forms`]: the catalog of special functions (Eisenstein series, theta
//!   functions, Weierstrass-type kernels, Jacobi-Eisenstein series);
//! - [`operators`]: heat-type differential operators and the residue
//!   functional;
//! - [`jacobi`], [`lattice`], [`fermion`]: the Jacobi-form data model,
//!   lattice characters, and the free-fermion Fock algebra;
//! - [`suites`]: the named identity suites run by the `quasijac check`
//!   command line.

pub mod coeffn;
pub mod error;
pub mod fermion;
pub mod forms;
pub mod jacobi;
pub mod jet;
pub mod lattice;
pub mod monomial;
pub mod operators;
pub mod scalar;
pub mod series;
pub mod suites;

pub use error::{Error, Result};
pub use scalar::{CycloOrder, Scalar};
