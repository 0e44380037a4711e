//! Hilbert modules over the compact operators, realized at finite matrix
//! truncation, with numerical Fredholm theory for bounded and regular
//! (unbounded) operators.
//!
//! * [`linalg`]: dense complex decompositions and tolerance-aware rank.
//! * [`module_space`]: the module `E`, its inner product, bases and `dim_K`.
//! * [`bounded_ops`]: adjointable operators, `Θ_{x,y}` and the localization `Ψ`.
//! * [`tower`] and [`regular_ops`]: truncation towers for unbounded
//!   operators and their bounded transform.
//! * [`fredholm`]: Fredholm verdicts, index and index-zero decompositions.
//! * [`gallery`]: built-in operator towers with known answers.

pub mod bounded_ops;
pub mod error;
pub mod fredholm;
pub mod gallery;
pub mod json;
pub mod linalg;
pub mod module_space;
pub mod random;
pub mod regular_ops;
pub mod symbol;
pub mod tower;

pub use error::{Error, Result};
