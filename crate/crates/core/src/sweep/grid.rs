//! Declarative hyperparameter grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vae::{Hyperparams, Variant};

/// Axes of a grid plus the per-run settings shared by every grid point.
///
/// The text form is flat TOML, one `key = [values]` line per axis:
///
/// ```toml
/// variant = ["time_neighbor"]
/// n_layers = [2]
/// hidden_width = [50, 100]
/// latent_dim = [2]
/// beta = [1e-4, 1e-3]
/// batch_size = [128]
/// lr = [1e-4, 1e-3]
/// epochs = 200
/// seeds = [1, 2, 3]
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub variant: Vec<Variant>,
    pub n_layers: Vec<usize>,
    pub hidden_width: Vec<usize>,
    pub latent_dim: Vec<usize>,
    pub beta: Vec<f64>,
    pub batch_size: Vec<usize>,
    pub lr: Vec<f64>,
    pub epochs: usize,
    pub seeds: Vec<u64>,
    #[serde(default = "default_val_fraction")]
    pub val_fraction: f64,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    /// Free-text notes carried into the manifest, e.g. where axis values
    /// were chosen rather than given.
    #[serde(default)]
    pub assumptions: Vec<String>,
}

fn default_val_fraction() -> f64 {
    0.2
}

fn default_test_fraction() -> f64 {
    0.1
}

const RECONSTRUCTED: &str = "per-axis values are a reconstruction: only the ranges \
    (2-4 layers, width 50-400, beta 1e-4..1e-3) and the total run count are known";

impl GridSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("grid spec: {}", e.message())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("grid spec serializes")
    }

    /// Grid points per seed.
    pub fn n_points(&self) -> usize {
        self.variant.len()
            * self.n_layers.len()
            * self.hidden_width.len()
            * self.latent_dim.len()
            * self.beta.len()
            * self.batch_size.len()
            * self.lr.len()
    }

    pub fn n_runs(&self) -> usize {
        self.n_points() * self.seeds.len()
    }

    /// 24-run spiral sweep of one variant: 2 widths × 2 learning rates × 2 β × 3 seeds.
    pub fn desk_spiral(variant: Variant) -> Self {
        GridSpec {
            variant: vec![variant],
            n_layers: vec![2],
            hidden_width: vec![50, 100],
            latent_dim: vec![2],
            beta: vec![1e-4, 1e-3],
            batch_size: vec![128],
            lr: vec![1e-4, 1e-3],
            epochs: 200,
            seeds: vec![1, 2, 3],
            val_fraction: 0.2,
            test_fraction: 0.1,
            assumptions: vec!["desk-scale grid".into()],
        }
    }

    /// Desk-scale HMM sweep: same axes as [`GridSpec::desk_spiral`], fewer
    /// epochs over the longer series.
    pub fn desk_hmm(variant: Variant) -> Self {
        GridSpec {
            batch_size: vec![256],
            epochs: 40,
            ..GridSpec::desk_spiral(variant)
        }
    }

    /// 144 points per variant, both variants, 5 seeds: 1440 runs.
    pub fn full_spiral() -> Self {
        GridSpec {
            variant: vec![Variant::Standard, Variant::TimeNeighbor],
            n_layers: vec![2, 3, 4],
            hidden_width: vec![50, 200, 400],
            latent_dim: vec![2],
            beta: vec![1e-4, 1e-3],
            batch_size: vec![64, 128],
            lr: vec![1e-5, 1e-4, 5e-4, 1e-3],
            epochs: 500,
            seeds: vec![1, 2, 3, 4, 5],
            val_fraction: 0.2,
            test_fraction: 0.1,
            assumptions: vec![RECONSTRUCTED.into()],
        }
    }

    /// 108 points per variant, both variants, 3 seeds: 648 runs.
    pub fn full_hmm() -> Self {
        GridSpec {
            lr: vec![1e-5, 1e-4, 1e-3],
            seeds: vec![1, 2, 3],
            ..GridSpec::full_spiral()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        Ok(match name {
            "desk-spiral" => GridSpec::desk_spiral(Variant::TimeNeighbor),
            "desk-spiral-standard" => GridSpec::desk_spiral(Variant::Standard),
            "desk-hmm" => GridSpec::desk_hmm(Variant::TimeNeighbor),
            "desk-hmm-standard" => GridSpec::desk_hmm(Variant::Standard),
            "full-spiral" => GridSpec::full_spiral(),
            "full-hmm" => GridSpec::full_hmm(),
            other => return Err(Error::Usage(format!("unknown grid preset {other:?}"))),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let axes = [
            ("variant", self.variant.len()),
            ("n_layers", self.n_layers.len()),
            ("hidden_width", self.hidden_width.len()),
            ("latent_dim", self.latent_dim.len()),
            ("beta", self.beta.len()),
            ("batch_size", self.batch_size.len()),
            ("lr", self.lr.len()),
            ("seeds", self.seeds.len()),
        ];
        if let Some((axis, _)) = axes.iter().find(|(_, n)| *n == 0) {
            return Err(Error::Config(format!("axis {axis} is empty")));
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        if seeds.len() != self.seeds.len() {
            return Err(Error::Config("seeds contain duplicates".into()));
        }
        if !(self.val_fraction > 0.0
            && self.test_fraction > 0.0
            && self.val_fraction + self.test_fraction < 1.0)
        {
            return Err(Error::Config(
                "val_fraction and test_fraction must be positive with sum < 1".into(),
            ));
        }
        Ok(())
    }
}

/// Cartesian product of the axes. The last axis varies fastest, axes taken
/// in declaration order: variant, n_layers, hidden_width, latent_dim, beta,
/// batch_size, lr.
pub fn expand_grid(spec: &GridSpec) -> Result<Vec<Hyperparams>> {
    spec.validate()?;
    let mut out = Vec::with_capacity(spec.n_points());
    for &variant in &spec.variant {
        for &n_layers in &spec.n_layers {
            for &hidden_width in &spec.hidden_width {
                for &latent_dim in &spec.latent_dim {
                    for &beta in &spec.beta {
                        for &batch_size in &spec.batch_size {
                            for &lr in &spec.lr {
                                let hp = Hyperparams {
                                    variant,
                                    n_layers,
                                    hidden_width,
                                    latent_dim,
                                    beta,
                                    batch_size,
                                    lr,
                                    epochs: spec.epochs,
                                };
                                hp.validate_domain()?;
                                out.push(hp);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}
