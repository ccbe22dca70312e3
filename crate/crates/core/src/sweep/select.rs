use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vae::ModelRecord;

/// Model-selection metric. Lower is better for both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    ValLoss,
    NeighborLoss,
}

impl Criterion {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "val_loss" | "val" | "loss" => Some(Criterion::ValLoss),
            "nl" | "neighbor_loss" | "val_nl" => Some(Criterion::NeighborLoss),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Criterion::ValLoss => "val_loss",
            Criterion::NeighborLoss => "val_nl",
        }
    }

    pub fn value(self, r: &ModelRecord) -> Option<f64> {
        match self {
            Criterion::ValLoss => r.final_val_loss,
            Criterion::NeighborLoss => r.val_nl,
        }
    }
}

/// The `k` successful records with the smallest `criterion`, ascending.
/// Ties go to the smaller seed, then the smaller grid index.
pub fn select_model(records: &[ModelRecord], criterion: Criterion, k: usize) -> Result<Vec<&ModelRecord>> {
    let mut keyed = Vec::new();
    for r in records.iter().filter(|r| r.succeeded()) {
        let v = criterion.value(r).filter(|v| v.is_finite()).ok_or_else(|| {
            Error::Data(format!("run {} has no {}", r.run_id, criterion.name()))
        })?;
        keyed.push((v, r));
    }
    if keyed.len() < k {
        return Err(Error::Usage(format!(
            "asked for {k} models but only {} runs succeeded",
            keyed.len()
        )));
    }
    keyed.sort_by(|(va, a), (vb, b)| {
        va.partial_cmp(vb)
            .unwrap_or(Ordering::Equal)
            .then(a.seed.cmp(&b.seed))
            .then(a.grid_index.cmp(&b.grid_index))
    });
    Ok(keyed.into_iter().take(k).map(|(_, r)| r).collect())
}
