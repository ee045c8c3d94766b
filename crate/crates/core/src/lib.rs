//! `conelab`: construction and verification of two-ended Allen-Cahn
//! approximate solutions built on the O(m)xO(n)-invariant minimal
//! hypersurface asymptotic to a Lawson cone.

pub mod config;
pub mod error;
pub mod field;
pub mod fit;
pub mod interp;
pub mod io;
pub mod jacobi;
pub mod jt;
pub mod kernels;
pub mod linalg;
pub mod ode;
pub mod pipeline;
pub mod profile;
pub mod quad;
pub mod series;

pub use error::{Error, Result};
