//! The VAE objectives and their gradients.
//!
//! Both variants minimize, averaged over the batch,
//!
//! ```text
//! mean_j (x̂_j − target_j)²  +  β · KL(q(z | x) ‖ N(0, I)),   z = μ + σ ⊙ ε
//! ```
//!
//! i.e. a unit-variance Gaussian decoder with constants dropped and the
//! squared error averaged over features. The standard VAE's target is its
//! own input; the time-neighbor VAE's target is the next row of the series.

use crate::error::{Error, Result};
use crate::nn::gaussian::{clamp_log_var, kl_term, LOG_VAR_MAX, LOG_VAR_MIN};
use crate::nn::{Matrix, MlpGrads, RngStream};

use super::model::{Variant, VaeModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    /// `recon + beta * kl`.
    pub total: f64,
    pub recon: f64,
    /// Batch-mean KL, unweighted.
    pub kl: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VaeGrads {
    pub encoder: MlpGrads,
    pub decoder: MlpGrads,
}

impl VaeGrads {
    /// Tensors in the order of [`VaeModel::params_mut`].
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut t = self.encoder.tensors();
        t.extend(self.decoder.tensors());
        t
    }
}

impl VaeModel {
    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut p = self.encoder.params_mut();
        p.extend(self.decoder.params_mut());
        p
    }

    pub fn param_shapes(&self) -> Vec<usize> {
        self.encoder
            .params()
            .iter()
            .chain(self.decoder.params().iter())
            .map(|t| t.len())
            .collect()
    }
}

/// Standard-normal noise for a batch, drawn row by row.
pub fn draw_noise(rows: usize, latent_dim: usize, rng: &mut RngStream) -> Matrix {
    let mut eps = Matrix::zeros(rows, latent_dim);
    rng.fill_normal(eps.as_mut_slice());
    eps
}

/// Evaluates the objective for explicit inputs, targets and noise, optionally
/// with exact gradients.
pub fn objective(
    model: &VaeModel,
    inputs: &Matrix,
    targets: &Matrix,
    eps: &Matrix,
    with_grads: bool,
) -> Result<(LossBreakdown, Option<VaeGrads>)> {
    let b = inputs.rows();
    let d = model.latent_dim();
    if b == 0 {
        return Err(Error::Usage("empty batch".into()));
    }
    if targets.rows() != b || targets.cols() != model.decoder.out_dim() {
        return Err(Error::Shape(format!(
            "targets are {}x{}, expected {b}x{}",
            targets.rows(),
            targets.cols(),
            model.decoder.out_dim()
        )));
    }
    if eps.rows() != b || eps.cols() != d {
        return Err(Error::Shape(format!(
            "noise is {}x{}, expected {b}x{d}",
            eps.rows(),
            eps.cols()
        )));
    }

    let enc = model.encoder.forward_cached(inputs)?;
    let enc_out = enc.output();
    let mut z = Matrix::zeros(b, d);
    let mut kl_sum = 0.0;
    for i in 0..b {
        let row = enc_out.row(i);
        let e = eps.row(i);
        let zr = z.row_mut(i);
        for k in 0..d {
            let lv = clamp_log_var(row[d + k]);
            zr[k] = row[k] + (0.5 * lv).exp() * e[k];
            kl_sum += kl_term(row[k], lv);
        }
    }
    let dec = model.decoder.forward_cached(&z)?;
    let recon_out = dec.output();
    let n_feat = targets.cols();
    let scale = 1.0 / (b * n_feat) as f64;
    let mut sq = 0.0;
    for (x, t) in recon_out.as_slice().iter().zip(targets.as_slice()) {
        sq += (x - t) * (x - t);
    }
    let recon = sq * scale;
    let kl = kl_sum / b as f64;
    let total = recon + model.beta * kl;
    if !total.is_finite() {
        return Err(Error::Numeric(format!(
            "non-finite loss (recon {recon}, kl {kl})"
        )));
    }
    let loss = LossBreakdown { total, recon, kl };
    if !with_grads {
        return Ok((loss, None));
    }

    let mut d_recon = Matrix::zeros(b, n_feat);
    for ((g, x), t) in d_recon
        .as_mut_slice()
        .iter_mut()
        .zip(recon_out.as_slice())
        .zip(targets.as_slice())
    {
        *g = 2.0 * (x - t) * scale;
    }
    let (dec_grads, dz) = model.decoder.backward(&dec, &d_recon)?;

    let kl_w = model.beta / b as f64;
    let mut d_enc = Matrix::zeros(b, 2 * d);
    for i in 0..b {
        let row = enc_out.row(i);
        let e = eps.row(i);
        let dzr = dz.row(i);
        let g = d_enc.row_mut(i);
        for k in 0..d {
            let mu = row[k];
            let raw_lv = row[d + k];
            let lv = clamp_log_var(raw_lv);
            let sigma = (0.5 * lv).exp();
            g[k] = dzr[k] + kl_w * mu;
            g[d + k] = if (LOG_VAR_MIN..=LOG_VAR_MAX).contains(&raw_lv) {
                dzr[k] * e[k] * 0.5 * sigma + kl_w * 0.5 * (lv.exp() - 1.0)
            } else {
                0.0
            };
        }
    }
    let (enc_grads, _) = model.encoder.backward(&enc, &d_enc)?;
    Ok((
        loss,
        Some(VaeGrads {
            encoder: enc_grads,
            decoder: dec_grads,
        }),
    ))
}

/// Standard VAE objective on a batch of rows, one noise draw per row.
pub fn vae_loss(
    model: &VaeModel,
    batch: &Matrix,
    rng: &mut RngStream,
) -> Result<(LossBreakdown, VaeGrads)> {
    if model.variant != Variant::Standard {
        return Err(Error::Usage("vae_loss needs a standard VAE".into()));
    }
    let eps = draw_noise(batch.rows(), model.latent_dim(), rng);
    let (loss, grads) = objective(model, batch, batch, &eps, true)?;
    Ok((loss, grads.expect("requested")))
}

/// Time-neighbor objective on pairs `(inputs[i], next[i]) = (x_t, x_{t+1})`.
pub fn tnvae_loss(
    model: &VaeModel,
    inputs: &Matrix,
    next: &Matrix,
    rng: &mut RngStream,
) -> Result<(LossBreakdown, VaeGrads)> {
    if model.variant != Variant::TimeNeighbor {
        return Err(Error::Usage("tnvae_loss needs a time-neighbor VAE".into()));
    }
    if inputs.rows() == 0 {
        return Err(Error::Usage("tnvae_loss needs at least one pair".into()));
    }
    let eps = draw_noise(inputs.rows(), model.latent_dim(), rng);
    let (loss, grads) = objective(model, inputs, next, &eps, true)?;
    Ok((loss, grads.expect("requested")))
}
