//! Noisy spiral embedded nonlinearly in a high-dimensional space.
//!
//! Points are spaced uniformly in arc length along the Archimedean spiral
//! `r = θ`, `θ ∈ [0, 2π·turns]`, starting at the centre. The 2-D points (scaled
//! to unit outer radius) go through a fixed random map
//! `A₂ tanh(A₁ p + b₁) + b₂`, whose output columns are then standardized
//! over the clean data. Noise with standard deviation `noise_sigma` (in units
//! of the clean per-coordinate std, i.e. 1) is added on top.

use serde::{Deserialize, Serialize};

use super::series::{SeriesMatrix, SeriesMeta};
use crate::error::{Error, Result};
use crate::nn::{Matrix, Purpose, RngStream};

/// Rows per ground-truth segment label.
pub const SEGMENT_LEN: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpiralConfig {
    pub n_points: usize,
    pub turns: f64,
    pub noise_sigma: f64,
    pub embed_dim: usize,
    /// Seed of the additive noise.
    pub seed: u64,
    /// Seed of the embedding map, kept separate so noise studies share one manifold.
    pub embed_seed: u64,
}

impl Default for SpiralConfig {
    fn default() -> Self {
        SpiralConfig {
            n_points: 5000,
            turns: 2.0,
            noise_sigma: 0.2,
            embed_dim: 31,
            seed: 1,
            embed_seed: 0,
        }
    }
}

impl SpiralConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_points < 2 * SEGMENT_LEN {
            return Err(Error::Config(format!(
                "spiral needs at least {} points, got {}",
                2 * SEGMENT_LEN,
                self.n_points
            )));
        }
        if !(self.turns > 0.0 && self.turns.is_finite()) {
            return Err(Error::Config("spiral turns must be positive".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Config(format!(
                "noise level must be non-negative, got {}",
                self.noise_sigma
            )));
        }
        if self.embed_dim < 2 {
            return Err(Error::Config("embedding dimension must be at least 2".into()));
        }
        Ok(())
    }
}

/// Arc length of `r = θ` from 0 to `theta`.
pub fn arc_length(theta: f64) -> f64 {
    0.5 * (theta * (1.0 + theta * theta).sqrt() + theta.asinh())
}

/// Inverts [`arc_length`] by Newton's method (`ds/dθ = √(1 + θ²)`).
pub fn theta_at_arc_length(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    // s ~ θ²/2 for large θ and s ~ θ for small θ
    let mut theta = (2.0 * s).sqrt().min(s);
    for _ in 0..100 {
        let step = (arc_length(theta) - s) / (1.0 + theta * theta).sqrt();
        theta -= step;
        if step.abs() <= 1e-10 * theta.max(1.0) {
            break;
        }
    }
    theta
}

/// The fixed nonlinear map from the plane into `embed_dim` dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct SpiralEmbedding {
    a1: Matrix,
    b1: Vec<f64>,
    a2: Matrix,
    b2: Vec<f64>,
    center: Vec<f64>,
    scale: Vec<f64>,
}

impl SpiralEmbedding {
    fn draw(embed_dim: usize, seed: u64) -> Self {
        let mut rng = RngStream::new(seed).substream(Purpose::Embedding, 0, 0);
        let mut a1 = Matrix::zeros(embed_dim, 2);
        for v in a1.as_mut_slice() {
            *v = 1.5 * rng.normal();
        }
        let b1 = (0..embed_dim).map(|_| 0.5 * rng.normal()).collect();
        let mut a2 = Matrix::zeros(embed_dim, embed_dim);
        let s = 1.0 / (embed_dim as f64).sqrt();
        for v in a2.as_mut_slice() {
            *v = s * rng.normal();
        }
        let b2 = (0..embed_dim).map(|_| 0.1 * rng.normal()).collect();
        SpiralEmbedding {
            a1,
            b1,
            a2,
            b2,
            center: vec![0.0; embed_dim],
            scale: vec![1.0; embed_dim],
        }
    }

    fn raw(&self, p: [f64; 2]) -> Vec<f64> {
        let h: Vec<f64> = (0..self.a1.rows())
            .map(|i| (self.a1.get(i, 0) * p[0] + self.a1.get(i, 1) * p[1] + self.b1[i]).tanh())
            .collect();
        (0..self.a2.rows())
            .map(|i| {
                self.a2
                    .row(i)
                    .iter()
                    .zip(&h)
                    .fold(self.b2[i], |acc, (w, x)| acc + w * x)
            })
            .collect()
    }

    /// Maps a 2-D spiral coordinate to its clean embedded point.
    pub fn apply(&self, p: [f64; 2]) -> Vec<f64> {
        let mut y = self.raw(p);
        for ((v, c), s) in y.iter_mut().zip(&self.center).zip(&self.scale) {
            *v = (*v - c) / s;
        }
        y
    }
}

#[derive(Debug, Clone)]
pub struct SpiralData {
    pub series: SeriesMatrix,
    /// Hidden 2-D coordinates, one row per time step.
    pub coords: Vec<[f64; 2]>,
    pub embedding: SpiralEmbedding,
}

pub fn spiral_coords(n_points: usize, turns: f64) -> Vec<[f64; 2]> {
    let theta_max = 2.0 * std::f64::consts::PI * turns;
    let total = arc_length(theta_max);
    (0..n_points)
        .map(|i| {
            let s = total * i as f64 / (n_points - 1) as f64;
            let theta = theta_at_arc_length(s);
            let r = theta / theta_max;
            [r * theta.cos(), r * theta.sin()]
        })
        .collect()
}

pub fn gen_spiral(cfg: &SpiralConfig) -> Result<SpiralData> {
    cfg.validate()?;
    let coords = spiral_coords(cfg.n_points, cfg.turns);
    let mut embedding = SpiralEmbedding::draw(cfg.embed_dim, cfg.embed_seed);

    let raw: Vec<Vec<f64>> = coords.iter().map(|&p| embedding.raw(p)).collect();
    let n = raw.len() as f64;
    for j in 0..cfg.embed_dim {
        let mean = raw.iter().map(|r| r[j]).sum::<f64>() / n;
        let var = raw.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
        embedding.center[j] = mean;
        embedding.scale[j] = if var > 0.0 { var.sqrt() } else { 1.0 };
    }

    let mut noise = RngStream::new(cfg.seed).substream(Purpose::Noise, 0, 0);
    let mut values = Matrix::zeros(cfg.n_points, cfg.embed_dim);
    for (t, &p) in coords.iter().enumerate() {
        let clean = embedding.apply(p);
        let row = values.row_mut(t);
        for (v, c) in row.iter_mut().zip(clean) {
            *v = c;
        }
        if cfg.noise_sigma > 0.0 {
            for v in row.iter_mut() {
                *v += cfg.noise_sigma * noise.normal();
            }
        }
    }
    let labels = (0..cfg.n_points).map(|t| (t / SEGMENT_LEN) as i64).collect();
    let series = SeriesMatrix::new(
        values,
        Some(labels),
        SeriesMeta {
            name: "spiral".into(),
            noise_level: cfg.noise_sigma,
            seed: cfg.seed,
        },
    )?;
    Ok(SpiralData {
        series,
        coords,
        embedding,
    })
}
