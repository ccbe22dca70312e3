//! Standard and time-neighbor VAEs: objectives, encoding and training.

pub mod hyper;
pub mod loss;
pub mod model;
pub mod train;

pub use hyper::Hyperparams;
pub use loss::{objective, tnvae_loss, vae_loss, LossBreakdown, VaeGrads};
pub use model::{Variant, VaeModel, VaeSpec};
pub use train::{train, EpochLoss, ModelRecord, TrainConfig, TrainOutcome};
