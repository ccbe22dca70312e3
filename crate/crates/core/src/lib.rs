//! Time-neighbor variational autoencoders and neighbor-loss model selection.
//!
//! The crate trains ensembles of standard VAEs and time-neighbor VAEs (which
//! encode `x_t` and decode `x_{t+1}`) on time series, and scores the learned
//! latent representations with the neighbor loss, silhouette, Procrustes
//! encoding distance and per-cluster moments.

pub mod cli;
pub mod data;
pub mod error;
pub mod metrics;
pub mod nn;
pub mod sweep;
pub mod vae;

pub use error::{Error, Result};
