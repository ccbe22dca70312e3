use std::fs;
use std::path::Path;

use tnvae::data::{gen_spiral, SeriesMatrix, SeriesMeta, SpiralConfig};
use tnvae::nn::{Activation, Matrix, RngStream};
use tnvae::sweep::{
    correlation_report, pairwise_encoding_distances, run_sweep, GridSpec, ReportOptions, RunStatus, SweepManifest,
    SweepOptions,
};
use tnvae::vae::{Variant, VaeModel, VaeSpec};

fn tiny_grid() -> GridSpec {
    GridSpec {
        variant: vec![Variant::TimeNeighbor],
        n_layers: vec![2],
        hidden_width: vec![50],
        latent_dim: vec![2],
        beta: vec![1e-4, 1e-3],
        batch_size: vec![64],
        lr: vec![1e-4, 1e-3],
        epochs: 2,
        seeds: vec![1, 2, 3],
        val_fraction: 0.2,
        test_fraction: 0.1,
        assumptions: vec![],
    }
}

fn series() -> SeriesMatrix {
    gen_spiral(&SpiralConfig {
        n_points: 600,
        embed_dim: 8,
        ..Default::default()
    })
    .unwrap()
    .series
}

fn sweep_into(dir: &Path, series: &SeriesMatrix, jobs: usize, limit: Option<usize>) -> SweepManifest {
    let mut m = match SweepManifest::open(dir) {
        Ok(m) => m,
        Err(_) => SweepManifest::create(dir, tiny_grid(), "spiral", &series.content_hash()).unwrap(),
    };
    run_sweep(&mut m, series, &SweepOptions { jobs, limit }, |_| {}).unwrap();
    m
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let s = series();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let one = sweep_into(a.path(), &s, 1, None).load_records().unwrap();
    let four = sweep_into(b.path(), &s, 4, None).load_records().unwrap();
    assert_eq!(one.len(), 12);
    assert_eq!(one, four);
    for r in &one {
        let ckpt = |d: &Path| fs::read(d.join(&r.checkpoint_ref)).unwrap();
        assert_eq!(ckpt(a.path()), ckpt(b.path()));
    }
}

#[test]
fn resume_trains_only_what_is_missing() {
    let s = series();
    let dir = tempfile::tempdir().unwrap();
    let m = sweep_into(dir.path(), &s, 1, Some(5));
    assert_eq!(m.count(RunStatus::Completed), 5);
    assert_eq!(m.pending().len(), 7);
    let first = m.load_records().unwrap();
    let stamp = |id: &str| fs::metadata(dir.path().join("runs").join(format!("{id}.ckpt"))).unwrap().modified().unwrap();
    let before: Vec<_> = first.iter().map(|r| stamp(&r.run_id)).collect();

    let partial = correlation_report(&m, &s, &ReportOptions::default()).unwrap();
    assert!(partial.partial);

    let mut reopened = SweepManifest::open(dir.path()).unwrap();
    let summary = run_sweep(&mut reopened, &s, &SweepOptions { jobs: 2, limit: None }, |_| {}).unwrap();
    assert_eq!((summary.executed, summary.completed, summary.pending), (7, 12, 0));
    let after: Vec<_> = first.iter().map(|r| stamp(&r.run_id)).collect();
    assert_eq!(before, after);

    let fresh = tempfile::tempdir().unwrap();
    assert_eq!(reopened.load_records().unwrap(), sweep_into(fresh.path(), &s, 1, None).load_records().unwrap());
}

#[test]
fn torn_log_tail_is_ignored_and_rerun() {
    let s = series();
    let dir = tempfile::tempdir().unwrap();
    sweep_into(dir.path(), &s, 1, Some(3));
    let log = dir.path().join("manifest.jsonl");
    let mut text = fs::read_to_string(&log).unwrap();
    text.push_str("{\"run_id\": \"abc");
    fs::write(&log, text).unwrap();
    let mut m = SweepManifest::open(dir.path()).unwrap();
    assert_eq!(m.count(RunStatus::Completed), 3);
    run_sweep(&mut m, &s, &SweepOptions::default(), |_| {}).unwrap();
    assert!(m.is_complete());
    assert_eq!(SweepManifest::open(dir.path()).unwrap().load_records().unwrap().len(), 12);
}

#[test]
fn resume_refuses_another_dataset() {
    let s = series();
    let dir = tempfile::tempdir().unwrap();
    let mut m = sweep_into(dir.path(), &s, 1, Some(1));
    let other = gen_spiral(&SpiralConfig { n_points: 600, embed_dim: 8, seed: 9, ..Default::default() })
        .unwrap()
        .series;
    assert!(run_sweep(&mut m, &other, &SweepOptions::default(), |_| {}).is_err());
    assert!(SweepManifest::create(dir.path(), tiny_grid(), "spiral", &s.content_hash()).is_err());
}

#[test]
fn report_tables_are_complete_and_reproducible() {
    let s = series();
    let dir = tempfile::tempdir().unwrap();
    let m = sweep_into(dir.path(), &s, 2, None);
    let opts = ReportOptions { top_k: 5, ..Default::default() };
    let report = correlation_report(&m, &s, &opts).unwrap();
    assert!(!report.partial);
    assert_eq!(report.models.len(), 12);
    assert_eq!(report.combos.len(), 4);
    assert_eq!(report.fig4_csv().lines().count(), 1 + 4);
    // three seeds per combination give three pairs each
    assert_eq!(report.pairs.len(), 12);
    assert!(report.combos.iter().all(|c| c.n_models == 3 && c.mean_encoding_distance.is_some()));

    assert_eq!(report.top.len(), 5);
    let nl_of = |id: &str| report.models.iter().find(|r| r.run_id == id).unwrap().val_nl.unwrap();
    for w in report.top.windows(2) {
        assert!(nl_of(&w[0].run_id) <= nl_of(&w[1].run_id));
    }
    let test_rows = s.len() - (0.1 * s.len() as f64).ceil() as usize;
    assert!(report.top.iter().all(|t| t.encoding.len() == s.len() - test_rows));

    let (a, b) = (dir.path().join("r1"), dir.path().join("r2"));
    report.write(&a).unwrap();
    correlation_report(&m, &s, &opts).unwrap().write(&b).unwrap();
    for entry in fs::read_dir(&a).unwrap().chain(fs::read_dir(a.join("encodings")).unwrap()) {
        let p = entry.unwrap().path();
        if p.is_file() {
            let rel = p.strip_prefix(&a).unwrap();
            assert_eq!(fs::read(&p).unwrap(), fs::read(b.join(rel)).unwrap(), "{}", rel.display());
        }
    }
    assert_eq!(fs::read_dir(a.join("encodings")).unwrap().count(), 5);
}

#[test]
fn report_on_an_empty_sweep_is_an_error() {
    let s = series();
    let dir = tempfile::tempdir().unwrap();
    let m = SweepManifest::create(dir.path(), tiny_grid(), "spiral", &s.content_hash()).unwrap();
    assert!(correlation_report(&m, &s, &ReportOptions::default()).is_err());
}

#[test]
fn diverging_runs_mark_the_sweep_failed() {
    let base = series();
    let huge: Vec<f64> = base.values().as_slice().iter().map(|v| v * 1e160).collect();
    let mut values = Matrix::zeros(base.len(), base.dim());
    values.as_mut_slice().copy_from_slice(&huge);
    let s = SeriesMatrix::new(values, base.labels().map(<[i64]>::to_vec), SeriesMeta::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut m = SweepManifest::create(dir.path(), tiny_grid(), "huge", &s.content_hash()).unwrap();
    let summary = run_sweep(&mut m, &s, &SweepOptions::default(), |_| {}).unwrap();
    assert!(summary.failed * 4 > summary.total, "{summary:?}");
    assert!(summary.sweep_failed);
    let records = m.load_records().unwrap();
    assert!(records.iter().filter(|r| r.failed).all(|r| r.failure.is_some()));
}

fn untrained(seed: u64) -> VaeModel {
    let spec = VaeSpec {
        input_dim: 4,
        hidden: vec![6, 6],
        latent_dim: 2,
        variant: Variant::TimeNeighbor,
        beta: 1e-3,
        activation: Activation::Tanh,
    };
    VaeModel::init(&spec, &mut RngStream::new(seed)).unwrap()
}

#[test]
fn pairwise_distance_matrix_shape() {
    let mut rows = Matrix::zeros(50, 4);
    RngStream::new(3).fill_normal(rows.as_mut_slice());
    let (a, b, c) = (untrained(1), untrained(2), untrained(3));

    let single = pairwise_encoding_distances(&[&a], &rows, 0).unwrap();
    assert_eq!((single.rows(), single.cols()), (1, 1));
    assert_eq!(single.get(0, 0), 0.0);

    let d = pairwise_encoding_distances(&[&a, &b, &c, &a], &rows, 0).unwrap();
    for i in 0..4 {
        assert_eq!(d.get(i, i), 0.0);
        for j in 0..4 {
            assert_eq!(d.get(i, j), d.get(j, i));
        }
    }
    assert_eq!(d.get(0, 3), 0.0);
    assert!(d.get(0, 1) > 0.0);
}
