//! Finite-truncation models of operators `T = D_mu + B_w` on a doubly indexed
//! Hilbert space: a diagonal of unimodular numbers plus a backward weighted
//! shift across levels. The crate builds the unimodular sequence together with
//! its nested arc (Cantor) structure, evaluates the eigenvector fields, and
//! ships numerical checks for every identity the construction relies on.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod eigenfields;
pub mod error;
pub mod gaussian;
pub mod hilbert;
pub mod operator;
pub mod report;
pub mod spectrum;
pub mod transference;

mod exact;

pub use error::{Error, Result};
pub use hilbert::{CVec, Grid, WeightFamily};
pub use num_complex::Complex64;
pub use operator::OperatorSpec;
pub use spectrum::{EigenSequence, SequenceMode};
