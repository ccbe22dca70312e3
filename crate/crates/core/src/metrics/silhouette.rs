use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::nn::{Matrix, Purpose, RngStream};

/// Row limit above which [`silhouette_limited`] scores a random subsample.
pub const FULL_SILHOUETTE_LIMIT: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SilhouetteResult {
    pub score: f64,
    pub subsampled: bool,
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Per-sample silhouette values `(b − a) / max(a, b)`.
///
/// `a` is the mean distance to the other members of the sample's cluster and
/// `b` the smallest mean distance to another cluster. Members of singleton
/// clusters score 0.
pub fn silhouette_samples(points: &Matrix, labels: &[i64]) -> Result<Vec<f64>> {
    if points.rows() != labels.len() {
        return Err(Error::Shape(format!(
            "{} points but {} labels",
            points.rows(),
            labels.len()
        )));
    }
    let mut ids: BTreeMap<i64, usize> = BTreeMap::new();
    for &l in labels {
        let next = ids.len();
        ids.entry(l).or_insert(next);
    }
    let k = ids.len();
    if k < 2 {
        return Err(Error::Usage("silhouette needs at least two clusters".into()));
    }
    let cluster: Vec<usize> = labels.iter().map(|l| ids[l]).collect();
    let mut sizes = vec![0usize; k];
    for &c in &cluster {
        sizes[c] += 1;
    }
    let n = points.rows();
    // sums[i * k + c]: summed distance from point i to the members of cluster c
    let mut sums = vec![0.0; n * k];
    for i in 0..n {
        let pi = points.row(i);
        for j in i + 1..n {
            // each point still receives its terms in ascending partner order
            let d = dist(pi, points.row(j));
            sums[i * k + cluster[j]] += d;
            sums[j * k + cluster[i]] += d;
        }
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let own = cluster[i];
        if sizes[own] < 2 {
            out.push(0.0);
            continue;
        }
        let row = &sums[i * k..(i + 1) * k];
        let a = row[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own)
            .map(|c| row[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        out.push(if m > 0.0 { (b - a) / m } else { 0.0 });
    }
    Ok(out)
}

/// Mean silhouette over all samples, Euclidean metric.
pub fn silhouette(points: &Matrix, labels: &[i64]) -> Result<f64> {
    let s = silhouette_samples(points, labels)?;
    Ok(s.iter().sum::<f64>() / s.len() as f64)
}

/// [`silhouette`] on at most `limit` rows; larger inputs are subsampled
/// without replacement from `seed`.
pub fn silhouette_limited(
    points: &Matrix,
    labels: &[i64],
    limit: usize,
    seed: u64,
) -> Result<SilhouetteResult> {
    if points.rows() <= limit {
        return Ok(SilhouetteResult {
            score: silhouette(points, labels)?,
            subsampled: false,
        });
    }
    let mut idx: Vec<usize> = (0..points.rows()).collect();
    RngStream::new(seed)
        .substream(Purpose::Subsample, 0, 0)
        .shuffle(&mut idx);
    idx.truncate(limit);
    idx.sort_unstable();
    let sub_labels: Vec<i64> = idx.iter().map(|&i| labels[i]).collect();
    Ok(SilhouetteResult {
        score: silhouette(&points.select_rows(&idx), &sub_labels)?,
        subsampled: true,
    })
}
