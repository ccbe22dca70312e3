//! Dense numerical core: matrices, MLPs with exact reverse-mode gradients,
//! Adam, diagonal-Gaussian utilities and seeded random streams.

pub mod adam;
pub mod checkpoint;
pub mod gaussian;
pub mod matrix;
pub mod mlp;
pub mod rng;

pub use adam::AdamState;
pub use gaussian::{kl_to_standard_normal, reparameterize, DiagGaussian};
pub use matrix::Matrix;
pub use mlp::{mlp_gradient, Activation, Dense, MlpGrads, MlpNetwork};
pub use rng::{Purpose, RngStream};
