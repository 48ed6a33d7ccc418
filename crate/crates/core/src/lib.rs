//! Discriminative maximum mean discrepancy (MMD) subspace learning for
//! unsupervised domain adaptation.
//!
//! The class-wise MMD between a labeled source domain and a pseudo-labeled
//! target domain decomposes into a weighted per-class variance term minus a
//! weighted within-class term. Minimizing it therefore also spreads classes
//! apart from themselves. This crate builds those matrices, learns linear
//! projections for objectives that re-balance the two terms, and labels the
//! target domain by graph label propagation.

pub mod classify;
pub mod dataio;
pub mod error;
pub mod laplacian;
pub mod matrixcore;
pub mod objectives;
pub mod pipeline;
pub mod statistics;
pub mod verify;

pub use error::{DomainSide, Error, Result};
