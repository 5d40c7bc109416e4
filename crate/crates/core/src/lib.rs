//! Proportionate and sparsity-aware subband adaptive filtering.
//!
//! - [`filterbank`]: cosine-modulated analysis bank and subband framing.
//! - [`adaptive`]: NSAF, PNSAF and PFBS-PNSAF weight updates.
//! - [`theory`]: transient and steady-state performance model.
//! - [`experiments`]: signal generators, Monte-Carlo runner and metrics.

pub mod adaptive;
mod error;
pub mod experiments;
pub mod filterbank;
pub mod theory;
pub mod vector_io;

pub use error::{Error, Result};
