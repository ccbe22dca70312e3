use serde::{Deserialize, Serialize};

use super::model::{Variant, VaeSpec};
use crate::error::{Error, Result};
use crate::nn::Activation;

/// One point of a hyperparameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub variant: Variant,
    /// Hidden layers in the encoder; the decoder mirrors them.
    pub n_layers: usize,
    pub hidden_width: usize,
    pub latent_dim: usize,
    pub beta: f64,
    pub batch_size: usize,
    pub lr: f64,
    pub epochs: usize,
}

pub const LAYER_RANGE: (usize, usize) = (2, 4);
pub const WIDTH_RANGE: (usize, usize) = (50, 400);
pub const BETA_RANGE: (f64, f64) = (1e-4, 1e-3);
pub const LR_RANGE: (f64, f64) = (1e-5, 1e-3);

impl Hyperparams {
    pub fn spec(&self, input_dim: usize) -> VaeSpec {
        VaeSpec {
            input_dim,
            hidden: vec![self.hidden_width; self.n_layers],
            latent_dim: self.latent_dim,
            variant: self.variant,
            beta: self.beta,
            activation: Activation::Tanh,
        }
    }

    /// Checks every field against the grid domain. `axis` names the offender.
    pub fn validate_domain(&self) -> Result<()> {
        let bad = |axis: &str, v: String| Err(Error::Config(format!("{axis} = {v} is out of range")));
        if !(LAYER_RANGE.0..=LAYER_RANGE.1).contains(&self.n_layers) {
            return bad("n_layers", self.n_layers.to_string());
        }
        if !(WIDTH_RANGE.0..=WIDTH_RANGE.1).contains(&self.hidden_width) {
            return bad("hidden_width", self.hidden_width.to_string());
        }
        if self.latent_dim < 2 {
            return bad("latent_dim", self.latent_dim.to_string());
        }
        if !(BETA_RANGE.0..=BETA_RANGE.1).contains(&self.beta) {
            return bad("beta", self.beta.to_string());
        }
        if self.batch_size == 0 {
            return bad("batch_size", "0".into());
        }
        if !(LR_RANGE.0..=LR_RANGE.1).contains(&self.lr) {
            return bad("lr", self.lr.to_string());
        }
        if self.epochs == 0 {
            return bad("epochs", "0".into());
        }
        Ok(())
    }
}
