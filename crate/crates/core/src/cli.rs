//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error
//! (including an incomplete sweep behind a report), 3 runtime or numeric
//! failure.

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::data::io::{key_value_text, LABEL_COLUMN};
use crate::data::{gen_hmm, gen_spiral, load_csv, split_series, write_csv, HmmConfig, SeriesMatrix, SpiralConfig};
use crate::error::{Error, Result};
use crate::metrics::{
    cluster_moments, encoding_distance, neighbor_loss, random_walk_loglik, silhouette_limited, EncodingMatrix,
    FULL_SILHOUETTE_LIMIT,
};
use crate::sweep::{
    correlation_report, run_sweep, select_model, Criterion, EvalRows, GridSpec, ReportOptions, SweepManifest,
    SweepOptions,
};
use crate::vae::{train, Hyperparams, TrainConfig, VaeModel, Variant};

#[derive(Debug, Parser)]
#[command(name = "tnvae", version, about = "Time-neighbor VAEs and neighbor-loss model selection")]
pub struct Cli {
    /// Parent directory for outputs when a subcommand gets no --out.
    #[arg(long, env = "TNVAE_OUTPUT_ROOT", default_value = "tnvae-out", global = true)]
    pub output_root: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Flat `key = value` config file (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Override one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset.
    Gen(GenArgs),
    /// Train one model.
    Train(TrainArgs),
    /// Train every run of a hyperparameter grid.
    Sweep(SweepArgs),
    /// Encode a series with a trained model.
    Encode(EncodeArgs),
    /// Score an encoding file.
    Metrics(MetricsArgs),
    /// List the best runs of a sweep.
    Select(SelectArgs),
    /// Write report tables and plot data for a sweep.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// `spiral` or `hmm`.
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Dataset CSV; defaults to the one recorded when resuming.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Built-in grid used when no --config is given: desk-spiral,
    /// desk-spiral-standard, desk-hmm, desk-hmm-standard, full-spiral, full-hmm.
    #[arg(long, default_value = "desk-spiral")]
    pub preset: String,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Continue an interrupted sweep in --out.
    #[arg(long)]
    pub resume: bool,
    /// Stop after this many runs.
    #[arg(long, hide = true)]
    pub limit: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// First row to encode.
    #[arg(long, default_value_t = 0)]
    pub start: usize,
    /// One past the last row; defaults to the series length.
    #[arg(long)]
    pub end: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub encodings: PathBuf,
    /// Second encoding file for the encoding distance.
    #[arg(long)]
    pub other: Option<PathBuf>,
    /// Step scale of the random-walk likelihood.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long)]
    pub sweep: PathBuf,
    /// `val_loss` or `nl`.
    #[arg(long, default_value = "nl")]
    pub criterion: String,
    #[arg(long, default_value_t = 1)]
    pub top_k: usize,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub sweep: PathBuf,
    /// Dataset CSV; defaults to the sweep's.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub top_k: usize,
    #[arg(long, default_value = "nl")]
    pub criterion: String,
    /// Rows scored by silhouette: `all` or `test`.
    #[arg(long, default_value = "test")]
    pub eval_rows: String,
    /// Defaults to `<sweep>/report`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Dataset generator settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenConfig {
    pub kind: String,
    pub n_points: usize,
    /// Spiral only.
    pub noise_sigma: f64,
    /// Spiral only.
    pub turns: f64,
    pub dim: usize,
    pub seed: u64,
    /// Seed of the spiral embedding map or the HMM state geometry.
    pub param_seed: u64,
    /// Emit rows in a seeded random order.
    pub shuffle: bool,
    pub shuffle_seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        let s = SpiralConfig::default();
        GenConfig {
            kind: "spiral".into(),
            n_points: s.n_points,
            noise_sigma: s.noise_sigma,
            turns: s.turns,
            dim: s.embed_dim,
            seed: s.seed,
            param_seed: s.embed_seed,
            shuffle: false,
            shuffle_seed: 0,
        }
    }
}

/// Single-run training settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainFileConfig {
    pub variant: Variant,
    pub n_layers: usize,
    pub hidden_width: usize,
    pub latent_dim: usize,
    pub beta: f64,
    pub batch_size: usize,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    pub val_fraction: f64,
    pub test_fraction: f64,
}

impl Default for TrainFileConfig {
    fn default() -> Self {
        TrainFileConfig {
            variant: Variant::TimeNeighbor,
            n_layers: 2,
            hidden_width: 100,
            latent_dim: 2,
            beta: 1e-3,
            batch_size: 128,
            lr: 1e-3,
            epochs: 500,
            seed: 1,
            val_fraction: 0.2,
            test_fraction: 0.1,
        }
    }
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// `base`, then the config file, then `--set` overrides, then `extra`
/// (values from dedicated flags). Keys must already exist in `base`.
fn resolve<T: Serialize + DeserializeOwned>(
    base: &T,
    args: &ConfigArgs,
    extra: Vec<(&str, toml::Value)>,
) -> Result<T> {
    let mut table = toml::Table::try_from(base).map_err(|e| Error::Config(e.to_string()))?;
    let known: Vec<String> = table.keys().cloned().collect();
    let check = |key: &str| -> Result<()> {
        if known.iter().any(|k| k == key) {
            Ok(())
        } else {
            Err(Error::Usage(format!(
                "unknown config key {key:?}; expected one of {}",
                known.join(", ")
            )))
        }
    };
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: toml::Table =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))?;
        for (k, v) in file {
            check(&k)?;
            table.insert(k, v);
        }
    }
    for item in &args.set {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("--set expects KEY=VALUE, got {item:?}")))?;
        let k = k.trim();
        check(k)?;
        table.insert(k.to_string(), parse_value(v.trim()));
    }
    for (k, v) in extra {
        table.insert(k.to_string(), v);
    }
    table.try_into().map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))
}

/// Loads a dataset CSV, reading a trailing `label` column when present.
pub fn load_series(path: &Path) -> Result<SeriesMatrix> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut header = String::new();
    BufReader::new(f)
        .read_line(&mut header)
        .map_err(|e| Error::io(path, e))?;
    let has_labels = header.trim_end().rsplit(',').next().map(str::trim) == Some(LABEL_COLUMN);
    load_csv(path, has_labels)
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn out_dir(out: &Option<PathBuf>, root: &Path, sub: &str) -> PathBuf {
    out.clone().unwrap_or_else(|| root.join(sub))
}

fn parse_criterion(s: &str) -> Result<Criterion> {
    Criterion::parse(s).ok_or_else(|| Error::Usage(format!("unknown criterion {s:?}; use val_loss or nl")))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.6}"))
}

fn cmd_gen(args: &GenArgs, root: &Path) -> Result<()> {
    let mut extra = Vec::new();
    if let Some(k) = &args.kind {
        extra.push(("kind", toml::Value::String(k.clone())));
    }
    if let Some(n) = args.n {
        extra.push(("n_points", toml::Value::Integer(n as i64)));
    }
    if let Some(s) = args.noise {
        extra.push(("noise_sigma", toml::Value::Float(s)));
    }
    if let Some(s) = args.seed {
        extra.push(("seed", toml::Value::Integer(s as i64)));
    }
    let cfg: GenConfig = resolve(&GenConfig::default(), &args.config, extra)?;
    let (series, truth_header, truth): (SeriesMatrix, &str, Vec<String>) = match cfg.kind.as_str() {
        "spiral" => {
            let d = gen_spiral(&SpiralConfig {
                n_points: cfg.n_points,
                turns: cfg.turns,
                noise_sigma: cfg.noise_sigma,
                embed_dim: cfg.dim,
                seed: cfg.seed,
                embed_seed: cfg.param_seed,
            })?;
            let rows = d.coords.iter().map(|p| format!("{},{}", p[0], p[1])).collect();
            (d.series, "x,y", rows)
        }
        "hmm" => {
            let hmm = HmmConfig::sleep_like(cfg.dim, cfg.n_points, cfg.param_seed, cfg.seed);
            let s = gen_hmm(&hmm)?;
            let rows = s.labels().unwrap_or_default().iter().map(|l| l.to_string()).collect();
            (s, "state", rows)
        }
        other => return Err(Error::Config(format!("unknown dataset kind {other:?}; use spiral or hmm"))),
    };
    let (series, order) = if cfg.shuffle {
        let order = series.shuffle_order(cfg.shuffle_seed);
        (series.shuffled(cfg.shuffle_seed), order)
    } else {
        let order = (0..series.len()).collect();
        (series, order)
    };
    let dir = out_dir(&args.out, root, "gen");
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    write_csv(&series, &dir.join("data.csv"))?;
    let mut truth_csv = format!("t,{truth_header}\n");
    for &src in &order {
        truth_csv.push_str(&format!("{src},{}\n", truth[src]));
    }
    write(&dir.join("truth.csv"), &truth_csv)?;
    let config = toml::to_string(&cfg).map_err(|e| Error::Config(e.to_string()))?;
    let mut manifest = key_value_text(&[
        ("name", format!("{:?}", series.meta.name)),
        ("rows", series.len().to_string()),
        ("dim", series.dim().to_string()),
        ("hash", format!("{:?}", series.content_hash())),
    ]);
    manifest.push_str(&config);
    write(&dir.join("dataset.txt"), &manifest)?;
    println!(
        "wrote {} rows x {} features to {}",
        series.len(),
        series.dim(),
        dir.join("data.csv").display()
    );
    Ok(())
}

fn cmd_train(args: &TrainArgs, root: &Path) -> Result<i32> {
    let mut extra = Vec::new();
    if let Some(s) = args.seed {
        extra.push(("seed", toml::Value::Integer(s as i64)));
    }
    let cfg: TrainFileConfig = resolve(&TrainFileConfig::default(), &args.config, extra)?;
    let hp = Hyperparams {
        variant: cfg.variant,
        n_layers: cfg.n_layers,
        hidden_width: cfg.hidden_width,
        latent_dim: cfg.latent_dim,
        beta: cfg.beta,
        batch_size: cfg.batch_size,
        lr: cfg.lr,
        epochs: cfg.epochs,
    };
    hp.validate_domain()?;
    let series = load_series(&args.data)?;
    let split = split_series(series.len(), cfg.seed, cfg.val_fraction, cfg.test_fraction)?;
    let tc = TrainConfig::from_hyperparams(&hp, cfg.seed, cfg.val_fraction, cfg.test_fraction);
    let mut out = train(&hp, &series, &split, &tc)?;
    let dir = out_dir(&args.out, root, "train");
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let rec = &mut out.record;
    rec.run_id = crate::sweep::run_id(&series.content_hash(), &hp, cfg.seed);
    if !rec.failed {
        rec.checkpoint_ref = "model.ckpt".into();
        write(&dir.join("model.ckpt"), &out.model.to_checkpoint())?;
    }
    let json = serde_json::to_string_pretty(rec).expect("record serializes");
    write(&dir.join("record.json"), &json)?;
    if let Some(msg) = &rec.failure {
        eprintln!("run failed: {msg}");
        return Ok(3);
    }
    println!(
        "val_loss {} val_nl {} -> {}",
        fmt_opt(rec.final_val_loss),
        fmt_opt(rec.val_nl),
        dir.display()
    );
    Ok(0)
}

fn cmd_sweep(args: &SweepArgs, root: &Path) -> Result<i32> {
    let dir = out_dir(&args.out, root, "sweep");
    let (mut manifest, series) = if args.resume {
        let m = SweepManifest::open(&dir)?;
        let data = args.data.clone().unwrap_or_else(|| PathBuf::from(&m.dataset_ref));
        let series = load_series(&data)?;
        (m, series)
    } else {
        let data = args
            .data
            .as_ref()
            .ok_or_else(|| Error::Usage("sweep needs --data".into()))?;
        let series = load_series(data)?;
        let base = match &args.config.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                GridSpec::from_toml(&text)?
            }
            None => GridSpec::preset(&args.preset)?,
        };
        let spec: GridSpec = resolve(
            &base,
            &ConfigArgs {
                config: None,
                set: args.config.set.clone(),
            },
            Vec::new(),
        )?;
        let data_ref = fs::canonicalize(data).unwrap_or_else(|_| data.clone());
        let m = SweepManifest::create(&dir, spec, &data_ref.to_string_lossy(), &series.content_hash())?;
        (m, series)
    };
    let total = manifest.tasks().len();
    let mut done = total - manifest.pending().len();
    let opts = SweepOptions {
        jobs: args.jobs,
        limit: args.limit,
    };
    let summary = run_sweep(&mut manifest, &series, &opts, |r| {
        done += 1;
        match &r.failure {
            None => println!(
                "[{done}/{total}] grid {} seed {} val_loss {} val_nl {}",
                r.grid_index,
                r.seed,
                fmt_opt(r.final_val_loss),
                fmt_opt(r.val_nl)
            ),
            Some(msg) => println!("[{done}/{total}] grid {} seed {} failed: {msg}", r.grid_index, r.seed),
        }
    })?;
    println!(
        "{} completed, {} failed, {} pending of {} runs in {}",
        summary.completed,
        summary.failed,
        summary.pending,
        summary.total,
        dir.display()
    );
    if summary.sweep_failed {
        eprintln!("sweep failed: more than a quarter of the runs failed");
        return Ok(3);
    }
    Ok(0)
}

fn cmd_encode(args: &EncodeArgs, root: &Path) -> Result<()> {
    let text = fs::read_to_string(&args.model).map_err(|e| Error::io(&args.model, e))?;
    let model = VaeModel::from_checkpoint(&text)?;
    let series = load_series(&args.data)?;
    let end = args.end.unwrap_or(series.len());
    if args.start >= end || end > series.len() {
        return Err(Error::Usage(format!(
            "row range {}..{end} is invalid for {} rows",
            args.start,
            series.len()
        )));
    }
    let seg = series.segment(args.start..end)?;
    let enc = model.encode_rows(seg.values(), args.start as i64)?;
    let path = args.out.clone().unwrap_or_else(|| root.join("encode").join("encodings.csv"));
    write(&path, &enc.to_csv(seg.labels()))?;
    println!("wrote {} encodings to {}", enc.len(), path.display());
    Ok(())
}

fn cmd_metrics(args: &MetricsArgs) -> Result<()> {
    let (enc, labels) = EncodingMatrix::read_csv(&args.encodings)?;
    let nl = neighbor_loss(&enc)?;
    let mut lines = vec![
        ("rows", enc.len().to_string()),
        ("dim", enc.dim().to_string()),
        ("neighbor_loss", nl.total.to_string()),
        ("neighbor_loss_per_pair", nl.per_pair.to_string()),
        ("random_walk_loglik", random_walk_loglik(&enc, args.sigma)?.to_string()),
    ];
    let clusters = labels.as_ref().map_or(0, |l| l.iter().collect::<std::collections::BTreeSet<_>>().len());
    if labels.is_some() && clusters < 2 {
        eprintln!("warning: the rows hold a single label, so silhouette and moments are skipped");
    }
    if let Some(labels) = labels.as_ref().filter(|_| clusters >= 2) {
        let s = silhouette_limited(enc.z(), labels, FULL_SILHOUETTE_LIMIT, 0)?;
        lines.push(("silhouette", s.score.to_string()));
        lines.push(("silhouette_subsampled", s.subsampled.to_string()));
        let m = cluster_moments(enc.z(), labels)?;
        lines.push(("mean_abs_skew", m.mean_abs_skew.to_string()));
        lines.push(("mean_excess_kurtosis", m.mean_excess_kurtosis.to_string()));
    }
    if let Some(other) = &args.other {
        let (b, _) = EncodingMatrix::read_csv(other)?;
        lines.push(("encoding_distance", encoding_distance(&enc, &b)?.to_string()));
    }
    print!("{}", key_value_text(&lines));
    Ok(())
}

fn cmd_select(args: &SelectArgs) -> Result<()> {
    let criterion = parse_criterion(&args.criterion)?;
    let manifest = SweepManifest::open(&args.sweep)?;
    let records = manifest.load_records()?;
    println!("rank,run_id,grid_index,seed,val_loss,val_nl");
    for (i, r) in select_model(&records, criterion, args.top_k)?.iter().enumerate() {
        println!(
            "{},{},{},{},{},{}",
            i + 1,
            r.run_id,
            r.grid_index,
            r.seed,
            fmt_opt(r.final_val_loss),
            fmt_opt(r.val_nl)
        );
    }
    Ok(())
}

fn cmd_report(args: &ReportArgs) -> Result<i32> {
    let manifest = SweepManifest::open(&args.sweep)?;
    let data = args.data.clone().unwrap_or_else(|| PathBuf::from(&manifest.dataset_ref));
    let series = load_series(&data)?;
    let eval_rows = match args.eval_rows.as_str() {
        "all" => EvalRows::All,
        "test" => EvalRows::Test,
        other => return Err(Error::Usage(format!("--eval-rows must be all or test, got {other:?}"))),
    };
    let opts = ReportOptions {
        top_k: args.top_k,
        criterion: parse_criterion(&args.criterion)?,
        eval_rows,
        ..ReportOptions::default()
    };
    let report = correlation_report(&manifest, &series, &opts)?;
    let dir = args.out.clone().unwrap_or_else(|| args.sweep.join("report"));
    report.write(&dir)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    print!("{}", report.correlations_csv());
    println!("wrote report to {}", dir.display());
    Ok(if report.partial { 2 } else { 0 })
}

/// Runs one invocation and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let root = cli.output_root.as_path();
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(a, root).map(|_| 0),
        Command::Train(a) => cmd_train(a, root),
        Command::Sweep(a) => cmd_sweep(a, root),
        Command::Encode(a) => cmd_encode(a, root).map(|_| 0),
        Command::Metrics(a) => cmd_metrics(a).map(|_| 0),
        Command::Select(a) => cmd_select(a).map(|_| 0),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_overrides_known_keys_only() {
        let args = ConfigArgs {
            config: None,
            set: vec!["noise_sigma=0.4".into(), "kind = hmm".into()],
        };
        let cfg: GenConfig = resolve(&GenConfig::default(), &args, Vec::new()).unwrap();
        assert_eq!(cfg.noise_sigma, 0.4);
        assert_eq!(cfg.kind, "hmm");
        let bad = ConfigArgs {
            config: None,
            set: vec!["nois=0.4".into()],
        };
        let err = resolve(&GenConfig::default(), &bad, Vec::new()).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn array_override() {
        let args = ConfigArgs {
            config: None,
            set: vec!["seeds=[7, 8]".into(), "epochs=3".into()],
        };
        let g: GridSpec = resolve(&GridSpec::desk_spiral(Variant::Standard), &args, Vec::new()).unwrap();
        assert_eq!((g.seeds, g.epochs), (vec![7, 8], 3));
    }

    #[test]
    fn integer_accepted_for_real_key() {
        let args = ConfigArgs {
            config: None,
            set: vec!["noise_sigma=1".into()],
        };
        let cfg: GenConfig = resolve(&GenConfig::default(), &args, Vec::new()).unwrap();
        assert_eq!(cfg.noise_sigma, 1.0);
    }
}
