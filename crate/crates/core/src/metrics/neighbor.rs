//! Temporal smoothness of a latent trajectory.

use super::encoding::EncodingMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborLoss {
    /// `Σ ‖z_{t+1} − z_t‖ / z̄` over time-adjacent rows.
    pub total: f64,
    /// `total` divided by the number of adjacent pairs.
    pub per_pair: f64,
    pub pairs: usize,
    /// Mean row norm `z̄`.
    pub mean_norm: f64,
}

fn norm(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum::<f64>().sqrt()
}

/// Sum of Euclidean steps between time-adjacent encodings, normalized by the
/// mean distance of all encodings from the origin.
///
/// Steps are taken over the `N − 1` (or fewer, if indices have gaps) adjacent
/// pairs; `z̄` averages over all `N` rows. The value scales with sequence
/// length; `per_pair` does not.
pub fn neighbor_loss(enc: &EncodingMatrix) -> Result<NeighborLoss> {
    if enc.len() < 2 {
        return Err(Error::Usage("neighbor loss needs at least 2 encodings".into()));
    }
    let z = enc.z();
    let mean_norm = z.row_iter().map(|r| norm(r.iter().copied())).sum::<f64>() / enc.len() as f64;
    if mean_norm == 0.0 {
        return Err(Error::Degenerate("all encodings sit at the origin".into()));
    }
    let mut steps = 0.0;
    let mut pairs = 0usize;
    for (a, b) in enc.adjacent_pairs() {
        steps += norm(z.row(b).iter().zip(z.row(a)).map(|(x, y)| x - y));
        pairs += 1;
    }
    if pairs == 0 {
        return Err(Error::Usage("no time-adjacent encodings".into()));
    }
    let total = steps / mean_norm;
    Ok(NeighborLoss {
        total,
        per_pair: total / pairs as f64,
        pairs,
        mean_norm,
    })
}

/// Log-likelihood of the trajectory under a Gaussian random walk with step
/// scale `sigma`:
///
/// `−(n/2) log 2π − n log σ − (1/2σ) Σ (z_{t+1} − z_t)(z_{t+1} − z_t)ᵀ`
///
/// over the `n` adjacent pairs. The quadratic form is used for every latent
/// dimension. Maximizing it is minimizing the summed squared steps, whereas
/// [`neighbor_loss`] sums unsquared steps.
pub fn random_walk_loglik(enc: &EncodingMatrix, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Usage(format!("sigma must be positive, got {sigma}")));
    }
    if enc.len() < 2 {
        return Err(Error::Usage("random-walk likelihood needs at least 2 encodings".into()));
    }
    let z = enc.z();
    let mut quad = 0.0;
    let mut n = 0usize;
    for (a, b) in enc.adjacent_pairs() {
        quad += z
            .row(b)
            .iter()
            .zip(z.row(a))
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>();
        n += 1;
    }
    if n == 0 {
        return Err(Error::Usage("no time-adjacent encodings".into()));
    }
    let n = n as f64;
    Ok(-(n / 2.0) * (2.0 * std::f64::consts::PI).ln() - n * sigma.ln() - quad / (2.0 * sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Matrix;

    fn enc(rows: &[Vec<f64>]) -> EncodingMatrix {
        EncodingMatrix::sequential(Matrix::from_rows(rows).unwrap()).unwrap()
    }

    #[test]
    fn constant_trajectory_has_zero_loss() {
        let e = enc(&[vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0]]);
        assert_eq!(neighbor_loss(&e).unwrap().total, 0.0);
    }

    #[test]
    fn quarter_turns() {
        let e = enc(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0]]);
        let nl = neighbor_loss(&e).unwrap();
        assert_eq!(nl.mean_norm, 1.0);
        assert!((nl.total - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(nl.pairs, 2);
        assert!((nl.per_pair - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn not_translation_invariant() {
        let a = enc(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0]]);
        let b = enc(&[vec![6.0, 0.0], vec![5.0, 1.0], vec![4.0, 0.0]]);
        let (x, y) = (neighbor_loss(&a).unwrap().total, neighbor_loss(&b).unwrap().total);
        assert!((x - y).abs() > 1e-3);
    }

    #[test]
    fn origin_is_degenerate() {
        let e = enc(&[vec![0.0, 0.0], vec![0.0, 0.0]]);
        assert!(matches!(neighbor_loss(&e), Err(Error::Degenerate(_))));
    }

    #[test]
    fn loglik_constant_trajectory() {
        let e = enc(&vec![vec![0.5, 0.5]; 5]);
        let sigma = 0.7f64;
        let n = 4.0;
        let expect = -(n / 2.0) * (2.0 * std::f64::consts::PI).ln() - n * sigma.ln();
        assert_eq!(random_walk_loglik(&e, sigma).unwrap(), expect);
        assert!(random_walk_loglik(&e, 0.0).is_err());
    }

    #[test]
    fn loglik_prefers_shorter_steps() {
        let long = enc(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![2.0, 0.0]]);
        let short = enc(&[vec![0.0, 0.0], vec![0.5, 0.0], vec![1.0, 0.0]]);
        assert!(random_walk_loglik(&short, 1.0).unwrap() > random_walk_loglik(&long, 1.0).unwrap());
    }
}
