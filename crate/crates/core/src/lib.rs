//! Numerical toolkit for the spectral theory of unbounded Jacobi matrices.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: parameter specifications and generation of `(a_n, b_n)`;
//! - [`transfer`]: transfer matrices, period windows and limit matrices;
//! - [`stolz`]: finite differences and bounded-variation class diagnostics;
//! - [`levinson`]: diagonalization cascades and asymptotics of solutions;
//! - [`classifier`]: self-adjointness and essential spectrum decisions;
//! - [`section`]: Sturm-bisection eigensolver for finite truncations.

pub mod classifier;
pub mod error;
pub mod levinson;
pub mod mat2;
pub mod model;
pub mod poly;
pub mod section;
pub mod series;
pub mod stolz;
pub mod transfer;

pub use error::{Error, Result};
pub use mat2::{AffineMat2, CMat2, Mat2, Scalar};
pub use model::{JacobiSpec, PeriodicSeq, SequenceGen};
