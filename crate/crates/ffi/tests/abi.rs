use std::ffi::CString;
use std::ptr;

use tnvae_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0u8; 256];
    let n = unsafe { tnvae_last_error(buf.as_mut_ptr().cast(), buf.len()) };
    buf.truncate(n.min(255));
    String::from_utf8(buf).unwrap()
}

fn series(data: &[f64], rows: usize, cols: usize, labels: Option<&[i64]>) -> *mut TnvaeSeries {
    let mut out = ptr::null_mut();
    let labels = labels.map_or(ptr::null(), |l| l.as_ptr());
    let st = unsafe { tnvae_series_new(data.as_ptr(), rows, cols, labels, &mut out) };
    assert_eq!(st, TnvaeStatus::Ok, "{}", last_error());
    out
}

#[test]
fn series_round_trip() {
    let data: Vec<f64> = (0..12).map(f64::from).collect();
    let labels = [0i64, 0, 1, 1];
    let s = series(&data, 4, 3, Some(&labels));
    unsafe {
        assert_eq!(tnvae_series_rows(s), 4);
        assert_eq!(tnvae_series_cols(s), 3);
        let mut back = vec![0.0; 12];
        assert_eq!(tnvae_series_values(s, back.as_mut_ptr()), TnvaeStatus::Ok);
        assert_eq!(back, data);
        let mut l = [9i64; 4];
        assert_eq!(tnvae_series_labels(s, l.as_mut_ptr()), TnvaeStatus::Ok);
        assert_eq!(l, labels);
        tnvae_series_free(s);
    }
}

#[test]
fn unlabelled_series_reports_data_error() {
    let s = series(&[0.0, 1.0, 2.0, 3.0], 2, 2, None);
    let mut l = [0i64; 2];
    assert_eq!(unsafe { tnvae_series_labels(s, l.as_mut_ptr()) }, TnvaeStatus::Data);
    assert!(last_error().contains("no labels"));
    unsafe { tnvae_series_free(s) };
}

#[test]
fn null_pointers_are_rejected() {
    let mut out = 0.0;
    let st = unsafe { tnvae_neighbor_loss(ptr::null(), 3, 2, &mut out) };
    assert_eq!(st, TnvaeStatus::NullPointer);
    assert_eq!(last_error(), "data is null");
    unsafe {
        tnvae_series_free(ptr::null_mut());
        tnvae_model_free(ptr::null_mut());
        assert_eq!(tnvae_series_rows(ptr::null()), 0);
    }
}

#[test]
fn error_message_length_is_reported_when_truncated() {
    let mut out = 0.0;
    let z = [1.0, 2.0];
    assert_eq!(unsafe { tnvae_random_walk_loglik(z.as_ptr(), 2, 1, -1.0, &mut out) }, TnvaeStatus::InvalidArgument);
    let full = unsafe { tnvae_last_error(ptr::null_mut(), 0) };
    let mut small = [0xffu8; 4];
    let n = unsafe { tnvae_last_error(small.as_mut_ptr().cast(), small.len()) };
    assert_eq!(n, full);
    assert!(n > 3);
    assert_eq!(small[3], 0);
}

#[test]
fn metrics_match_hand_values() {
    let z = [1.0, 0.0, 1.0, 1.0, 0.0, 1.0];
    let mut v = 0.0;
    unsafe {
        assert_eq!(tnvae_neighbor_loss(z.as_ptr(), 3, 2, &mut v), TnvaeStatus::Ok);
        assert!((v - 6.0 / (2.0 + 2f64.sqrt())).abs() < 1e-12);

        let pts = [0.0, 1.0, 5.0, 7.0];
        let labels = [0i64, 0, 1, 1];
        assert_eq!(tnvae_silhouette(pts.as_ptr(), 4, 1, labels.as_ptr(), &mut v), TnvaeStatus::Ok);
        let expected = (5.0 / 6.0 + 4.0 / 5.0 + 5.0 / 9.0 + 9.0 / 13.0) / 4.0;
        assert!((v - expected).abs() < 1e-12);

        let a = [0.0, 0.0, 1.0, 0.0, 0.0, 2.0, 3.0, 1.0];
        let b: Vec<f64> = a.iter().map(|x| 4.0 * x - 1.0).collect();
        assert_eq!(tnvae_procrustes_distance(a.as_ptr(), b.as_ptr(), 4, 2, &mut v), TnvaeStatus::Ok);
        assert!(v < 1e-12);

        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [40.0, 30.0, 20.0, 10.0];
        assert_eq!(tnvae_spearman(x.as_ptr(), y.as_ptr(), 4, &mut v), TnvaeStatus::Ok);
        assert_eq!(v, -1.0);
    }
}

#[test]
fn degenerate_input_has_its_own_code() {
    let a = [1.0; 8];
    let b = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0];
    let mut v = 0.0;
    let st = unsafe { tnvae_procrustes_distance(a.as_ptr(), b.as_ptr(), 4, 2, &mut v) };
    assert_eq!(st, TnvaeStatus::Degenerate);
}

#[test]
fn train_encode_save_load() {
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(tnvae_series_spiral(400, 0.2, 3, &mut s), TnvaeStatus::Ok);
        let rows = tnvae_series_rows(s);
        let cols = tnvae_series_cols(s);
        let hp = TnvaeHyperparams {
            variant: TnvaeVariant::TimeNeighbor,
            n_layers: 2,
            hidden_width: 50,
            latent_dim: 2,
            beta: 1e-3,
            batch_size: 64,
            lr: 1e-3,
            epochs: 2,
        };
        let mut m = ptr::null_mut();
        assert_eq!(tnvae_model_train(s, &hp, 1, 0.2, 0.1, &mut m), TnvaeStatus::Ok, "{}", last_error());
        assert_eq!(tnvae_model_latent_dim(m), 2);
        assert_eq!(tnvae_model_input_dim(m), cols);

        let mut x = vec![0.0; rows * cols];
        tnvae_series_values(s, x.as_mut_ptr());
        let mut mean = vec![0.0; rows * 2];
        let mut log_var = vec![0.0; rows * 2];
        let st = tnvae_model_encode(m, x.as_ptr(), rows, cols, mean.as_mut_ptr(), log_var.as_mut_ptr());
        assert_eq!(st, TnvaeStatus::Ok);
        assert!(mean.iter().chain(&log_var).all(|v| v.is_finite()));

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("m.ckpt").to_str().unwrap()).unwrap();
        assert_eq!(tnvae_model_save(m, path.as_ptr()), TnvaeStatus::Ok);
        let mut m2 = ptr::null_mut();
        assert_eq!(tnvae_model_load(path.as_ptr(), &mut m2), TnvaeStatus::Ok);
        let mut mean2 = vec![0.0; rows * 2];
        tnvae_model_encode(m2, x.as_ptr(), rows, cols, mean2.as_mut_ptr(), ptr::null_mut());
        assert_eq!(mean, mean2);

        let mut bad = hp;
        bad.hidden_width = 7;
        let mut m3 = ptr::null_mut();
        assert_eq!(tnvae_model_train(s, &bad, 1, 0.2, 0.1, &mut m3), TnvaeStatus::InvalidArgument);
        assert!(m3.is_null());

        tnvae_model_free(m);
        tnvae_model_free(m2);
        tnvae_series_free(s);
    }
}

#[test]
fn missing_checkpoint_is_io() {
    let path = CString::new("/nonexistent/dir/model.ckpt").unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { tnvae_model_load(path.as_ptr(), &mut m) }, TnvaeStatus::Io);
}

#[test]
fn header_declares_the_api_and_compiles_as_c() {
    let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include/tnvae.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["tnvae_series_new", "tnvae_model_encode", "tnvae_silhouette", "TNVAE_STATUS_NULL_POINTER"] {
        assert!(text.contains(name), "header lacks {name}");
    }
    // compile check only where a C compiler is around
    if let Ok(out) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"])
        .arg(&header)
        .output()
    {
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}
