use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::nn::Matrix;

/// Smallest cluster for which moments are computed.
pub const MIN_CLUSTER_SIZE: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterMoment {
    pub label: i64,
    pub size: usize,
    /// Per dimension; empty when `degenerate`.
    pub skew: Vec<f64>,
    pub excess_kurtosis: Vec<f64>,
    /// Some dimension had zero variance; the cluster is left out of the means.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterMoments {
    pub clusters: Vec<ClusterMoment>,
    pub mean_abs_skew: f64,
    pub mean_excess_kurtosis: f64,
    /// At least one cluster was excluded for zero variance.
    pub any_degenerate: bool,
}

/// Standardized third and fourth central moments (population form) of one sample.
pub fn skew_kurtosis(xs: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in xs {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if m2 <= (1e-12 * mean.abs().max(1.0)).powi(2) {
        return None;
    }
    Some((m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0))
}

/// Per-cluster, per-dimension skew and excess kurtosis, aggregated as the mean
/// absolute skew and mean excess kurtosis over dimensions and clusters.
pub fn cluster_moments(points: &Matrix, labels: &[i64]) -> Result<ClusterMoments> {
    if points.rows() != labels.len() {
        return Err(Error::Shape(format!(
            "{} points but {} labels",
            points.rows(),
            labels.len()
        )));
    }
    let mut groups: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        groups.entry(l).or_default().push(i);
    }
    if let Some((l, rows)) = groups.iter().find(|(_, r)| r.len() < MIN_CLUSTER_SIZE) {
        return Err(Error::Usage(format!(
            "cluster {l} has {} points, moments need at least {MIN_CLUSTER_SIZE}",
            rows.len()
        )));
    }
    let mut clusters = Vec::with_capacity(groups.len());
    let (mut skew_sum, mut kurt_sum, mut count) = (0.0, 0.0, 0usize);
    for (label, rows) in groups {
        let mut skew = Vec::with_capacity(points.cols());
        let mut kurt = Vec::with_capacity(points.cols());
        let mut degenerate = false;
        for j in 0..points.cols() {
            let col: Vec<f64> = rows.iter().map(|&i| points.get(i, j)).collect();
            match skew_kurtosis(&col) {
                Some((s, k)) => {
                    skew.push(s);
                    kurt.push(k);
                }
                None => {
                    degenerate = true;
                    break;
                }
            }
        }
        if degenerate {
            skew.clear();
            kurt.clear();
        } else {
            skew_sum += skew.iter().map(|s| s.abs()).sum::<f64>();
            kurt_sum += kurt.iter().sum::<f64>();
            count += skew.len();
        }
        clusters.push(ClusterMoment {
            label,
            size: rows.len(),
            skew,
            excess_kurtosis: kurt,
            degenerate,
        });
    }
    let any_degenerate = clusters.iter().any(|c| c.degenerate);
    let (mean_abs_skew, mean_excess_kurtosis) = if count == 0 {
        (f64::NAN, f64::NAN)
    } else {
        (skew_sum / count as f64, kurt_sum / count as f64)
    };
    Ok(ClusterMoments {
        clusters,
        mean_abs_skew,
        mean_excess_kurtosis,
        any_degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_two_point_mass() {
        let xs: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let (s, k) = skew_kurtosis(&xs).unwrap();
        assert_eq!(s, 0.0);
        assert!((k + 2.0).abs() < 1e-12);
    }

    #[test]
    fn constant_cluster_flagged() {
        let mut rows = vec![vec![1.0, 2.0]; 10];
        rows.extend((0..10).map(|i| vec![i as f64, (i * i) as f64]));
        let p = Matrix::from_rows(&rows).unwrap();
        let labels: Vec<i64> = (0..20).map(|i| (i / 10) as i64).collect();
        let m = cluster_moments(&p, &labels).unwrap();
        assert!(m.any_degenerate);
        assert!(m.clusters[0].degenerate);
        assert!(!m.clusters[1].degenerate);
        assert!(m.mean_abs_skew.is_finite());
    }

    #[test]
    fn small_cluster_rejected() {
        let p = Matrix::zeros(10, 1);
        let labels = [0, 0, 0, 0, 0, 0, 0, 0, 0, 1];
        assert!(cluster_moments(&p, &labels).is_err());
    }
}
