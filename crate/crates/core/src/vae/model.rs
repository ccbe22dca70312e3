use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::SeriesMatrix;
use crate::error::{Error, Result};
use crate::metrics::EncodingMatrix;
use crate::nn::checkpoint::{read_mlp_from, write_mlp, Lines};
use crate::nn::{Activation, DiagGaussian, Matrix, MlpNetwork, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Reconstructs `x_t` from `z ~ q(z | x_t)`.
    Standard,
    /// Predicts `x_{t+1}` from `z ~ q(z_{t+1} | x_t)`.
    TimeNeighbor,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Standard => "standard",
            Variant::TimeNeighbor => "time_neighbor",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "standard" | "vae" => Some(Variant::Standard),
            "time_neighbor" | "tn" | "tnvae" | "tn-vae" => Some(Variant::TimeNeighbor),
            _ => None,
        }
    }

    /// Time index represented by the encoding of input row `t`.
    pub fn assigned_index(self, t: i64) -> i64 {
        match self {
            Variant::Standard => t,
            Variant::TimeNeighbor => t + 1,
        }
    }
}

/// Architecture of a VAE: mirrored encoder/decoder stacks of equal width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VaeSpec {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub latent_dim: usize,
    pub variant: Variant,
    pub beta: f64,
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VaeModel {
    pub encoder: MlpNetwork,
    pub decoder: MlpNetwork,
    latent_dim: usize,
    pub variant: Variant,
    pub beta: f64,
}

impl VaeModel {
    pub fn new(
        encoder: MlpNetwork,
        decoder: MlpNetwork,
        latent_dim: usize,
        variant: Variant,
        beta: f64,
    ) -> Result<Self> {
        if latent_dim == 0 {
            return Err(Error::Config("latent dimension must be at least 1".into()));
        }
        if encoder.out_dim() != 2 * latent_dim {
            return Err(Error::Shape(format!(
                "encoder emits {} values, expected 2 x {latent_dim}",
                encoder.out_dim()
            )));
        }
        if decoder.in_dim() != latent_dim {
            return Err(Error::Shape(format!(
                "decoder takes {} inputs, latent dimension is {latent_dim}",
                decoder.in_dim()
            )));
        }
        if decoder.out_dim() != encoder.in_dim() {
            return Err(Error::Shape(format!(
                "decoder emits {} features, data has {}",
                decoder.out_dim(),
                encoder.in_dim()
            )));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::Config(format!("beta must be non-negative, got {beta}")));
        }
        Ok(VaeModel {
            encoder,
            decoder,
            latent_dim,
            variant,
            beta,
        })
    }

    pub fn init(spec: &VaeSpec, rng: &mut RngStream) -> Result<Self> {
        let mut enc_dims = vec![spec.input_dim];
        enc_dims.extend(&spec.hidden);
        enc_dims.push(2 * spec.latent_dim);
        let mut dec_dims = vec![spec.latent_dim];
        dec_dims.extend(spec.hidden.iter().rev());
        dec_dims.push(spec.input_dim);
        let encoder = MlpNetwork::init(&enc_dims, spec.activation, Activation::Identity, rng)?;
        let decoder = MlpNetwork::init(&dec_dims, spec.activation, Activation::Identity, rng)?;
        VaeModel::new(encoder, decoder, spec.latent_dim, spec.variant, spec.beta)
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn input_dim(&self) -> usize {
        self.encoder.in_dim()
    }

    /// Posterior for input `x` observed at time `t`, with the time index the
    /// posterior describes.
    pub fn encode(&self, x: &[f64], t: i64) -> Result<(DiagGaussian, i64)> {
        let out = self.encoder.forward(x)?;
        let (mean, log_var) = out.split_at(self.latent_dim);
        Ok((
            DiagGaussian::new(mean.to_vec(), log_var.to_vec())?,
            self.variant.assigned_index(t),
        ))
    }

    /// Posterior means and log-variances for every row of `x`.
    pub fn encode_batch(&self, x: &Matrix) -> Result<(Matrix, Matrix)> {
        let out = self.encoder.forward_batch(x)?;
        let d = self.latent_dim;
        let mut mean = Matrix::zeros(x.rows(), d);
        let mut log_var = Matrix::zeros(x.rows(), d);
        for (i, row) in out.row_iter().enumerate() {
            mean.row_mut(i).copy_from_slice(&row[..d]);
            log_var.row_mut(i).copy_from_slice(&row[d..]);
        }
        Ok((mean, log_var))
    }

    /// Posterior means of rows observed at times `first_index..`.
    pub fn encode_rows(&self, x: &Matrix, first_index: i64) -> Result<EncodingMatrix> {
        let (mean, _) = self.encode_batch(x)?;
        let idx = (0..x.rows() as i64)
            .map(|i| self.variant.assigned_index(first_index + i))
            .collect();
        EncodingMatrix::new(mean, idx, "")
    }

    /// Posterior means for a whole series; input row `t` is observed at `t`.
    pub fn encode_series(&self, series: &SeriesMatrix) -> Result<EncodingMatrix> {
        if series.is_empty() {
            return Err(Error::Usage("cannot encode an empty series".into()));
        }
        self.encode_rows(series.values(), 0)
    }

    pub fn decode_batch(&self, z: &Matrix) -> Result<Matrix> {
        self.decoder.forward_batch(z)
    }

    pub fn to_checkpoint(&self) -> String {
        let mut out = String::from("vae v1\n");
        writeln!(out, "variant {}", self.variant.name()).expect("writing to a String");
        writeln!(out, "latent_dim {}", self.latent_dim).expect("writing to a String");
        writeln!(out, "beta {:e}", self.beta).expect("writing to a String");
        out.push_str("encoder\n");
        write_mlp(&self.encoder, &mut out);
        out.push_str("decoder\n");
        write_mlp(&self.decoder, &mut out);
        out
    }

    pub fn from_checkpoint(text: &str) -> Result<Self> {
        let mut lines = Lines::new(text);
        let (n, head) = lines.next_line()?;
        if head.trim() != "vae v1" {
            return Err(Error::Data(format!("checkpoint line {n}: not a VAE checkpoint")));
        }
        let (n, v) = lines.keyed("variant")?;
        let variant = v
            .first()
            .and_then(|s| Variant::parse(s))
            .ok_or_else(|| Error::Data(format!("checkpoint line {n}: bad variant")))?;
        let (n, v) = lines.keyed("latent_dim")?;
        let latent_dim = v
            .first()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Data(format!("checkpoint line {n}: bad latent_dim")))?;
        let (n, v) = lines.keyed("beta")?;
        let beta = v
            .first()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Data(format!("checkpoint line {n}: bad beta")))?;
        lines.keyed("encoder")?;
        let encoder = read_mlp_from(&mut lines)?;
        lines.keyed("decoder")?;
        let decoder = read_mlp_from(&mut lines)?;
        VaeModel::new(encoder, decoder, latent_dim, variant, beta)
    }
}
