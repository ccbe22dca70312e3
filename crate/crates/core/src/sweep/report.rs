//! Per-model and per-combination tables, correlations and plot data.
//!
//! Everything here is a pure function of the finished records, their
//! checkpoints and the dataset, so regenerating a report from the same sweep
//! directory gives byte-identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::manifest::SweepManifest;
use super::select::{select_model, Criterion};
use crate::data::{split_series, SeriesMatrix};
use crate::error::{Error, Result};
use crate::metrics::{
    cluster_moments, correlations, encoding_distance, silhouette_limited, CorrelationReport,
    EncodingMatrix, FULL_SILHOUETTE_LIMIT,
};
use crate::nn::Matrix;
use crate::vae::{Hyperparams, ModelRecord, VaeModel};

/// Rows whose encodings are scored against the ground-truth labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalRows {
    /// Every row of the series.
    All,
    /// Only the held-out test segment.
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOptions {
    pub top_k: usize,
    pub criterion: Criterion,
    pub eval_rows: EvalRows,
    pub silhouette_limit: usize,
    /// Seed of the silhouette subsample, used only above `silhouette_limit` rows.
    pub seed: u64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            top_k: 20,
            criterion: Criterion::NeighborLoss,
            eval_rows: EvalRows::Test,
            silhouette_limit: FULL_SILHOUETTE_LIMIT,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelRow {
    pub run_id: String,
    pub grid_index: usize,
    pub seed: u64,
    pub hyperparams: Hyperparams,
    pub failed: bool,
    pub val_loss: Option<f64>,
    pub val_recon: Option<f64>,
    pub val_kl: Option<f64>,
    pub val_nl: Option<f64>,
    pub silhouette: Option<f64>,
    pub mean_abs_skew: Option<f64>,
    pub mean_excess_kurtosis: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComboRow {
    pub grid_index: usize,
    pub hyperparams: Hyperparams,
    /// Successful runs of this combination.
    pub n_models: usize,
    pub mean_val_loss: f64,
    pub mean_val_nl: f64,
    /// Mean encoding distance over seed pairs; `None` below two models.
    pub mean_encoding_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairRow {
    pub grid_index: usize,
    pub run_a: String,
    pub run_b: String,
    pub distance: f64,
}

/// The four headline correlations; `None` where fewer than three points or a
/// constant column leave it undefined.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Correlations {
    pub val_loss_vs_silhouette: Option<CorrelationReport>,
    pub val_nl_vs_silhouette: Option<CorrelationReport>,
    pub val_loss_vs_distance: Option<CorrelationReport>,
    pub val_nl_vs_distance: Option<CorrelationReport>,
}

#[derive(Debug, Clone)]
pub struct TopEncoding {
    pub rank: usize,
    pub run_id: String,
    pub encoding: EncodingMatrix,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub models: Vec<ModelRow>,
    pub combos: Vec<ComboRow>,
    pub pairs: Vec<PairRow>,
    pub correlations: Correlations,
    /// The dataset has no labels, so silhouette and moment columns are empty.
    pub silhouette_omitted: bool,
    /// Some runs of the sweep are still pending.
    pub partial: bool,
    pub criterion: Criterion,
    pub top: Vec<TopEncoding>,
    /// Labels of the evaluated rows, shared by every entry of `top`.
    pub eval_labels: Option<Vec<i64>>,
    pub warnings: Vec<String>,
}

/// Encoding distances between every pair of `models` on the same rows.
///
/// Row `t` of `rows` is observed at `first_index + t`. Returns the symmetric
/// matrix with a zero diagonal.
pub fn pairwise_encoding_distances(models: &[&VaeModel], rows: &Matrix, first_index: i64) -> Result<Matrix> {
    if let Some(first) = models.first() {
        if let Some(m) = models
            .iter()
            .find(|m| m.latent_dim() != first.latent_dim() || m.variant != first.variant)
        {
            return Err(Error::Usage(format!(
                "models differ in latent size or variant ({} {} vs {} {})",
                first.latent_dim(),
                first.variant.name(),
                m.latent_dim(),
                m.variant.name()
            )));
        }
    }
    let enc: Vec<EncodingMatrix> = models
        .iter()
        .map(|m| m.encode_rows(rows, first_index))
        .collect::<Result<_>>()?;
    let n = models.len();
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let d = encoding_distance(&enc[i], &enc[j])?;
            out.set(i, j, d);
            out.set(j, i, d);
        }
    }
    Ok(out)
}

fn correlation(x: &[f64], y: &[f64]) -> Option<CorrelationReport> {
    correlations(x, y).ok()
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

/// Scores every finished run of `manifest` on `series`.
///
/// Encoding distances and neighbor losses use the ordered test segment;
/// silhouette and cluster moments use `opts.eval_rows`, labelled by each
/// input row's ground-truth label. Failed runs appear in the model table but
/// are excluded from every aggregate.
pub fn correlation_report(manifest: &SweepManifest, series: &SeriesMatrix, opts: &ReportOptions) -> Result<Report> {
    manifest.check_dataset(&series.content_hash())?;
    let records = manifest.load_records()?;
    if records.is_empty() {
        return Err(Error::Usage("sweep has no finished runs".into()));
    }
    let mut warnings = Vec::new();
    let partial = !manifest.is_complete();
    if partial {
        warnings.push(format!(
            "{} of {} runs still pending",
            manifest.pending().len(),
            manifest.tasks().len()
        ));
    }
    let spec = &manifest.spec;
    let test = split_series(series.len(), 0, spec.val_fraction, spec.test_fraction)?.test;
    let test_idx: Vec<usize> = test.clone().collect();
    let test_x = series.values().select_rows(&test_idx);
    let eval_idx: Vec<usize> = match opts.eval_rows {
        EvalRows::All => (0..series.len()).collect(),
        EvalRows::Test => test_idx.clone(),
    };
    let eval_x = series.values().select_rows(&eval_idx);
    let eval_labels: Option<Vec<i64>> = series
        .labels()
        .map(|l| eval_idx.iter().map(|&i| l[i]).collect());
    let silhouette_omitted = eval_labels.is_none();
    if silhouette_omitted {
        warnings.push("dataset has no labels; silhouette columns omitted".into());
    }

    let mut models = Vec::with_capacity(records.len());
    let mut loaded: BTreeMap<String, VaeModel> = BTreeMap::new();
    for r in &records {
        let mut row = ModelRow {
            run_id: r.run_id.clone(),
            grid_index: r.grid_index,
            seed: r.seed,
            hyperparams: r.hyperparams.clone(),
            failed: r.failed,
            val_loss: r.final_val_loss,
            val_recon: r.final_val_recon,
            val_kl: r.final_val_kl,
            val_nl: r.val_nl,
            silhouette: None,
            mean_abs_skew: None,
            mean_excess_kurtosis: None,
        };
        if r.succeeded() {
            let model = manifest.load_model(r)?;
            if let Some(labels) = &eval_labels {
                let enc = model.encode_rows(&eval_x, 0)?;
                match silhouette_limited(enc.z(), labels, opts.silhouette_limit, opts.seed) {
                    Ok(s) => row.silhouette = Some(s.score),
                    Err(e) => warnings.push(format!("{}: silhouette: {e}", r.run_id)),
                }
                if let Ok(m) = cluster_moments(enc.z(), labels) {
                    row.mean_abs_skew = Some(m.mean_abs_skew).filter(|v| v.is_finite());
                    row.mean_excess_kurtosis = Some(m.mean_excess_kurtosis).filter(|v| v.is_finite());
                }
            }
            loaded.insert(r.run_id.clone(), model);
        }
        models.push(row);
    }

    let mut by_combo: BTreeMap<usize, Vec<&ModelRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.succeeded()) {
        by_combo.entry(r.grid_index).or_default().push(r);
    }
    let mut combos = Vec::new();
    let mut pairs = Vec::new();
    for (&g, rs) in &by_combo {
        let ms: Vec<&VaeModel> = rs.iter().map(|r| &loaded[&r.run_id]).collect();
        let dist = pairwise_encoding_distances(&ms, &test_x, test.start as i64)?;
        let mut ds = Vec::new();
        for i in 0..rs.len() {
            for j in i + 1..rs.len() {
                ds.push(dist.get(i, j));
                pairs.push(PairRow {
                    grid_index: g,
                    run_a: rs[i].run_id.clone(),
                    run_b: rs[j].run_id.clone(),
                    distance: dist.get(i, j),
                });
            }
        }
        combos.push(ComboRow {
            grid_index: g,
            hyperparams: rs[0].hyperparams.clone(),
            n_models: rs.len(),
            mean_val_loss: mean(rs.iter().filter_map(|r| r.final_val_loss)),
            mean_val_nl: mean(rs.iter().filter_map(|r| r.val_nl)),
            mean_encoding_distance: (!ds.is_empty()).then(|| mean(ds.iter().copied())),
        });
    }

    let scored: Vec<&ModelRow> = models
        .iter()
        .filter(|m| !m.failed && m.silhouette.is_some())
        .collect();
    let col = |f: fn(&ModelRow) -> Option<f64>| -> Vec<f64> { scored.iter().filter_map(|m| f(m)).collect() };
    let sil = col(|m| m.silhouette);
    let with_dist: Vec<&ComboRow> = combos.iter().filter(|c| c.mean_encoding_distance.is_some()).collect();
    let dist: Vec<f64> = with_dist.iter().filter_map(|c| c.mean_encoding_distance).collect();
    let correlations = Correlations {
        val_loss_vs_silhouette: correlation(&col(|m| m.val_loss), &sil),
        val_nl_vs_silhouette: correlation(&col(|m| m.val_nl), &sil),
        val_loss_vs_distance: correlation(&with_dist.iter().map(|c| c.mean_val_loss).collect::<Vec<_>>(), &dist),
        val_nl_vs_distance: correlation(&with_dist.iter().map(|c| c.mean_val_nl).collect::<Vec<_>>(), &dist),
    };

    let n_ok = records.iter().filter(|r| r.succeeded()).count();
    let k = opts.top_k.min(n_ok);
    if k < opts.top_k {
        warnings.push(format!("only {n_ok} successful runs; emitting top {k}"));
    }
    let top = select_model(&records, opts.criterion, k)?
        .into_iter()
        .enumerate()
        .map(|(rank, r)| {
            let mut encoding = loaded[&r.run_id].encode_rows(&eval_x, 0)?;
            encoding.source_model = r.run_id.clone();
            Ok(TopEncoding {
                rank: rank + 1,
                run_id: r.run_id.clone(),
                encoding,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(Report {
        models,
        combos,
        pairs,
        correlations,
        silhouette_omitted,
        partial,
        criterion: opts.criterion,
        top,
        eval_labels,
        warnings,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn hp_cells(h: &Hyperparams) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        h.variant.name(),
        h.n_layers,
        h.hidden_width,
        h.latent_dim,
        h.beta,
        h.batch_size,
        h.lr,
        h.epochs
    )
}

const HP_HEADER: &str = "variant,n_layers,hidden_width,latent_dim,beta,batch_size,lr,epochs";

impl Report {
    pub fn models_csv(&self) -> String {
        let mut s = format!(
            "run_id,grid_index,seed,{HP_HEADER},failed,val_loss,val_recon,val_kl,val_nl,silhouette,mean_abs_skew,mean_excess_kurtosis\n"
        );
        for m in &self.models {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                m.run_id,
                m.grid_index,
                m.seed,
                hp_cells(&m.hyperparams),
                m.failed,
                opt(m.val_loss),
                opt(m.val_recon),
                opt(m.val_kl),
                opt(m.val_nl),
                opt(m.silhouette),
                opt(m.mean_abs_skew),
                opt(m.mean_excess_kurtosis)
            );
        }
        s
    }

    pub fn combos_csv(&self) -> String {
        let mut s = format!("grid_index,{HP_HEADER},n_models,mean_val_loss,mean_val_nl,mean_encoding_distance\n");
        for c in &self.combos {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                c.grid_index,
                hp_cells(&c.hyperparams),
                c.n_models,
                c.mean_val_loss,
                c.mean_val_nl,
                opt(c.mean_encoding_distance)
            );
        }
        s
    }

    pub fn pairs_csv(&self) -> String {
        let mut s = String::from("grid_index,run_a,run_b,encoding_distance\n");
        for p in &self.pairs {
            let _ = writeln!(s, "{},{},{},{}", p.grid_index, p.run_a, p.run_b, p.distance);
        }
        s
    }

    pub fn correlations_csv(&self) -> String {
        let c = &self.correlations;
        let rows = [
            ("model", "val_loss", "silhouette", c.val_loss_vs_silhouette),
            ("model", "val_nl", "silhouette", c.val_nl_vs_silhouette),
            ("combination", "mean_val_loss", "mean_encoding_distance", c.val_loss_vs_distance),
            ("combination", "mean_val_nl", "mean_encoding_distance", c.val_nl_vs_distance),
        ];
        let mut s = String::from("level,x,y,n,pearson,spearman\n");
        for (level, x, y, r) in rows {
            let _ = writeln!(
                s,
                "{level},{x},{y},{},{},{}",
                r.map_or(String::new(), |r| r.n.to_string()),
                opt(r.map(|r| r.pearson)),
                opt(r.map(|r| r.spearman))
            );
        }
        s
    }

    /// Validation loss against silhouette, coloured by cluster moments.
    pub fn fig2c_csv(&self) -> String {
        let mut s = String::from("run_id,x_val_loss,y_silhouette,color_mean_abs_skew,color_mean_excess_kurtosis\n");
        for m in self.models.iter().filter(|m| !m.failed) {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                m.run_id,
                opt(m.val_loss),
                opt(m.silhouette),
                opt(m.mean_abs_skew),
                opt(m.mean_excess_kurtosis)
            );
        }
        s
    }

    /// Neighbor loss against silhouette, coloured by validation loss.
    pub fn fig3_row_csv(&self) -> String {
        let mut s = String::from("run_id,x_val_nl,y_silhouette,color_val_loss\n");
        for m in self.models.iter().filter(|m| !m.failed) {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                m.run_id,
                opt(m.val_nl),
                opt(m.silhouette),
                opt(m.val_loss)
            );
        }
        s
    }

    /// One row per hyperparameter combination.
    pub fn fig4_csv(&self) -> String {
        let mut s = String::from("grid_index,x_mean_val_loss,x_mean_val_nl,y_mean_encoding_distance,color_n_models\n");
        for c in &self.combos {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                c.grid_index,
                c.mean_val_loss,
                c.mean_val_nl,
                opt(c.mean_encoding_distance),
                c.n_models
            );
        }
        s
    }

    /// Writes every table plus `encodings/top_NN_<run_id>.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let enc_dir = dir.join("encodings");
        fs::create_dir_all(&enc_dir).map_err(|e| Error::io(&enc_dir, e))?;
        let files = [
            ("models.csv", self.models_csv()),
            ("combinations.csv", self.combos_csv()),
            ("pairs.csv", self.pairs_csv()),
            ("correlations.csv", self.correlations_csv()),
            ("fig2c.csv", self.fig2c_csv()),
            ("fig3_row.csv", self.fig3_row_csv()),
            ("fig4.csv", self.fig4_csv()),
        ];
        for (name, text) in files {
            let p = dir.join(name);
            fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        }
        for t in &self.top {
            let p = enc_dir.join(format!("top_{:02}_{}.csv", t.rank, t.run_id));
            let text = t.encoding.to_csv(self.eval_labels.as_deref());
            fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }
}
