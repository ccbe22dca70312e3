//! Hidden Markov chain with diagonal-Gaussian emissions.

use serde::{Deserialize, Serialize};

use super::series::{SeriesMatrix, SeriesMeta};
use crate::error::{Error, Result};
use crate::nn::{Matrix, Purpose, RngStream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmmConfig {
    pub n_states: usize,
    /// Row-stochastic `n_states × n_states`.
    pub transition: Vec<Vec<f64>>,
    /// `n_states × D`.
    pub means: Vec<Vec<f64>>,
    /// `n_states × D`, strictly positive.
    pub variances: Vec<Vec<f64>>,
    pub n_points: usize,
    pub seed: u64,
}

/// Ratio of the smallest distance between state means to the average
/// within-state standard deviation in [`HmmConfig::sleep_like`].
pub const DEFAULT_SEPARATION: f64 = 3.0;

impl HmmConfig {
    /// Three states loosely shaped like wake, REM and slow-wave sleep.
    ///
    /// Self-transition probabilities are 0.98, 0.95 and 0.98; the remaining
    /// mass is split evenly. Per-dimension variances are drawn in `[0.5, 1.5]`
    /// and the means are drawn once, then rescaled so the closest pair of
    /// means sits [`DEFAULT_SEPARATION`] average standard deviations apart.
    /// `param_seed` fixes the geometry, `seed` the sampled sequence.
    pub fn sleep_like(dim: usize, n_points: usize, param_seed: u64, seed: u64) -> Self {
        let stay = [0.98, 0.95, 0.98];
        let transition = stay
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                (0..3)
                    .map(|j| if i == j { p } else { (1.0 - p) / 2.0 })
                    .collect()
            })
            .collect();
        let mut rng = RngStream::new(param_seed).substream(Purpose::Generator, 0, 0);
        let variances: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..dim).map(|_| 0.5 + rng.uniform()).collect())
            .collect();
        let mut means: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..dim).map(|_| rng.normal()).collect())
            .collect();
        let avg_std = variances
            .iter()
            .flatten()
            .map(|v| v.sqrt())
            .sum::<f64>()
            / (3 * dim) as f64;
        let mut min_dist = f64::INFINITY;
        for i in 0..3 {
            for j in i + 1..3 {
                let d = means[i]
                    .iter()
                    .zip(&means[j])
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                min_dist = min_dist.min(d);
            }
        }
        let k = DEFAULT_SEPARATION * avg_std / min_dist;
        for m in means.iter_mut().flatten() {
            *m *= k;
        }
        HmmConfig {
            n_states: 3,
            transition,
            means,
            variances,
            n_points,
            seed,
        }
    }

    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_states;
        if n == 0 {
            return Err(Error::Config("HMM needs at least one state".into()));
        }
        if self.transition.len() != n || self.means.len() != n || self.variances.len() != n {
            return Err(Error::Config(format!(
                "HMM parameter tables must have {n} rows"
            )));
        }
        for (i, row) in self.transition.iter().enumerate() {
            if row.len() != n || row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(Error::Config(format!("transition row {i} is not a distribution")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::Config(format!("transition row {i} sums to {sum}")));
            }
        }
        let d = self.dim();
        if d == 0 {
            return Err(Error::Config("HMM emissions need at least one dimension".into()));
        }
        for k in 0..n {
            if self.means[k].len() != d || self.variances[k].len() != d {
                return Err(Error::Config(format!("state {k} has ragged emission parameters")));
            }
            if self.variances[k].iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                return Err(Error::Config(format!("state {k} has a non-positive variance")));
            }
            if self.means[k].iter().any(|v| !v.is_finite()) {
                return Err(Error::Config(format!("state {k} has a non-finite mean")));
            }
        }
        if self.n_points < 2 {
            return Err(Error::Config("HMM needs at least 2 points".into()));
        }
        Ok(())
    }
}

pub fn gen_hmm(cfg: &HmmConfig) -> Result<SeriesMatrix> {
    cfg.validate()?;
    let root = RngStream::new(cfg.seed);
    let mut chain = root.substream(Purpose::Generator, 1, 0);
    let mut emit = root.substream(Purpose::Noise, 0, 0);
    let d = cfg.dim();
    let stds: Vec<Vec<f64>> = cfg
        .variances
        .iter()
        .map(|r| r.iter().map(|v| v.sqrt()).collect())
        .collect();

    let mut state = chain.below(cfg.n_states);
    let mut labels = Vec::with_capacity(cfg.n_points);
    let mut values = Matrix::zeros(cfg.n_points, d);
    for t in 0..cfg.n_points {
        if t > 0 {
            let u = chain.uniform();
            let row = &cfg.transition[state];
            let mut acc = 0.0;
            let mut next = cfg.n_states - 1;
            for (j, &p) in row.iter().enumerate() {
                acc += p;
                if u < acc {
                    next = j;
                    break;
                }
            }
            state = next;
        }
        labels.push(state as i64);
        let out = values.row_mut(t);
        for ((v, m), s) in out.iter_mut().zip(&cfg.means[state]).zip(&stds[state]) {
            *v = m + s * emit.normal();
        }
    }
    SeriesMatrix::new(
        values,
        Some(labels),
        SeriesMeta {
            name: "hmm".into(),
            noise_level: 0.0,
            seed: cfg.seed,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_transition_is_absorbing() {
        let mut cfg = HmmConfig::sleep_like(4, 500, 0, 3);
        cfg.transition = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        let s = gen_hmm(&cfg).unwrap();
        let l = s.labels().unwrap();
        assert!(l.iter().all(|&x| x == l[0]));
    }

    #[test]
    fn vanishing_variance_emits_means() {
        let mut cfg = HmmConfig::sleep_like(5, 300, 0, 4);
        for v in cfg.variances.iter_mut().flatten() {
            *v = 1e-12;
        }
        let s = gen_hmm(&cfg).unwrap();
        for t in 0..s.len() {
            let k = s.labels().unwrap()[t] as usize;
            for (x, m) in s.row(t).iter().zip(&cfg.means[k]) {
                assert!((x - m).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn invalid_transition_rejected() {
        let mut cfg = HmmConfig::sleep_like(2, 100, 0, 0);
        cfg.transition[1][1] = 0.9;
        assert!(matches!(gen_hmm(&cfg), Err(Error::Config(_))));
        let mut cfg = HmmConfig::sleep_like(2, 100, 0, 0);
        cfg.variances[0][0] = 0.0;
        assert!(gen_hmm(&cfg).is_err());
    }

    #[test]
    fn default_geometry_separation() {
        let cfg = HmmConfig::sleep_like(31, 10, 0, 0);
        cfg.validate().unwrap();
        let avg_std = cfg.variances.iter().flatten().map(|v| v.sqrt()).sum::<f64>() / 93.0;
        let mut min_d = f64::INFINITY;
        for i in 0..3 {
            for j in i + 1..3 {
                let d: f64 = cfg.means[i]
                    .iter()
                    .zip(&cfg.means[j])
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                min_d = min_d.min(d);
            }
        }
        assert!((min_d / avg_std - DEFAULT_SEPARATION).abs() < 1e-9);
    }
}
