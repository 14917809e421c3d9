//! Adaptive minimum-risk portfolios and the shadow risk-free rates they
//! imply.
//!
//! The adaptive loops ([`adaptive::amvp_run`], [`adaptive::amcvarp_run`])
//! repeatedly solve a minimum-risk problem, append the optimal portfolio to
//! the universe as a synthetic asset, and stop once the risk stops
//! improving. The expected return of the final portfolio is the adaptive
//! minimum-risk rate (AMRR). Around that sit price ingestion ([`data`]),
//! the optimizers ([`optimize`]), an ARFIMA-FIGARCH/NIG scenario generator
//! ([`scenarios`]), and rate-series diagnostics ([`analysis`]).

// `!(x > 0.0)` is used on purpose so NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adaptive;
pub mod analysis;
pub mod data;
pub mod error;
pub mod optimize;
pub mod scenarios;
pub mod stats;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
