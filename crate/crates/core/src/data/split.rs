use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Purpose, RngStream};

/// Train/validation pair sets plus the ordered test segment.
///
/// Pair `t` stands for rows `(t, t + 1)`. Standard VAEs use only row `t` of
/// each pair, so both variants see the same partition for a given seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSplit {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Range<usize>,
}

pub fn split_series(
    n_rows: usize,
    seed: u64,
    val_fraction: f64,
    test_fraction: f64,
) -> Result<SeriesSplit> {
    if !(val_fraction > 0.0 && test_fraction > 0.0 && val_fraction + test_fraction < 1.0) {
        return Err(Error::Usage(format!(
            "split fractions must be positive with sum < 1 (val {val_fraction}, test {test_fraction})"
        )));
    }
    let test_len = (test_fraction * n_rows as f64).ceil() as usize;
    let nontest = n_rows.saturating_sub(test_len);
    let n_pairs = nontest.saturating_sub(1);
    let n_val = (val_fraction * n_pairs as f64).round() as usize;
    if test_len < 2 || n_val == 0 || n_val >= n_pairs {
        return Err(Error::Usage(format!(
            "series of {n_rows} rows is too short for this split"
        )));
    }
    let mut pairs: Vec<usize> = (0..n_pairs).collect();
    RngStream::new(seed)
        .substream(Purpose::Split, 0, 0)
        .shuffle(&mut pairs);
    let mut val = pairs.split_off(n_pairs - n_val);
    let mut train = pairs;
    train.sort_unstable();
    val.sort_unstable();
    Ok(SeriesSplit {
        train,
        val,
        test: nontest..n_rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_is_complete_and_disjoint() {
        let s = split_series(1200, 3, 0.2, 0.1).unwrap();
        assert_eq!(s.test, 1080..1200);
        let mut all: Vec<usize> = s.train.iter().chain(&s.val).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..1079).collect::<Vec<_>>());
        // no pair reaches into the test segment
        assert!(all.iter().all(|&t| t + 1 < s.test.start));
    }

    #[test]
    fn val_count_arithmetic() {
        // 1001 non-test rows -> 1000 pairs
        let s = split_series(1112, 0, 0.2, 0.099).unwrap();
        assert_eq!(s.test.start, 1001);
        assert_eq!(s.val.len(), 200);
        assert_eq!(s.train.len(), 800);
    }

    #[test]
    fn seeds_change_partition_not_test() {
        let a = split_series(500, 1, 0.2, 0.1).unwrap();
        let b = split_series(500, 2, 0.2, 0.1).unwrap();
        assert_ne!(a.val, b.val);
        assert_eq!(a.test, b.test);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(split_series(5, 0, 0.2, 0.1).is_err());
        assert!(split_series(500, 0, 0.6, 0.5).is_err());
        assert!(split_series(500, 0, 0.0, 0.1).is_err());
    }
}
