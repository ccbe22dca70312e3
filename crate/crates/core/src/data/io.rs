//! CSV ingestion and the dataset side files.
//!
//! A dataset CSV has a header row, one row per time step, feature columns
//! first and an optional trailing integer `label` column. Values are written
//! in shortest round-trip form, so a reload is bitwise identical.

use std::fs;
use std::path::Path;

use super::series::{SeriesMatrix, SeriesMeta};
use crate::error::{Error, Result};
use crate::nn::Matrix;

pub const LABEL_COLUMN: &str = "label";

pub fn series_to_csv(series: &SeriesMatrix) -> String {
    let mut out = String::new();
    let header: Vec<String> = (0..series.dim()).map(|j| format!("f{j}")).collect();
    out.push_str(&header.join(","));
    if series.labels().is_some() {
        out.push(',');
        out.push_str(LABEL_COLUMN);
    }
    out.push('\n');
    for t in 0..series.len() {
        let row: Vec<String> = series.row(t).iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        if let Some(l) = series.labels() {
            out.push(',');
            out.push_str(&l[t].to_string());
        }
        out.push('\n');
    }
    out
}

pub fn write_csv(series: &SeriesMatrix, path: &Path) -> Result<()> {
    fs::write(path, series_to_csv(series)).map_err(|e| Error::io(path, e))
}

/// Loads a series. With `has_labels` the last column is read as integer labels.
pub fn load_csv(path: &Path, has_labels: bool) -> Result<SeriesMatrix> {
    let ingest = |line: usize, msg: String| Error::Ingest {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => ingest(0, format!("{other:?}")),
        })?;
    let width = reader
        .headers()
        .map_err(|e| ingest(1, e.to_string()))?
        .len();
    let n_features = if has_labels { width.saturating_sub(1) } else { width };
    if n_features == 0 {
        return Err(ingest(1, "no feature columns".into()));
    }

    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut rows = 0usize;
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            ingest(line, e.to_string())
        })?;
        let line = rec.position().map_or(rows + 2, |p| p.line() as usize);
        if rec.len() != width {
            return Err(ingest(
                line,
                format!("ragged row: {} fields, header has {width}", rec.len()),
            ));
        }
        for (j, cell) in rec.iter().take(n_features).enumerate() {
            let v: f64 = cell
                .parse()
                .map_err(|_| ingest(line, format!("column {j}: `{cell}` is not a number")))?;
            if !v.is_finite() {
                return Err(ingest(line, format!("column {j}: non-finite value `{cell}`")));
            }
            data.push(v);
        }
        if has_labels {
            let cell = &rec[width - 1];
            let l: i64 = cell
                .parse()
                .map_err(|_| ingest(line, format!("label `{cell}` is not an integer")))?;
            labels.push(l);
        }
        rows += 1;
    }
    if rows < 2 {
        return Err(ingest(rows + 1, format!("need at least 2 rows, found {rows}")));
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    SeriesMatrix::new(
        Matrix::from_vec(rows, n_features, data)?,
        has_labels.then_some(labels),
        SeriesMeta {
            name,
            ..Default::default()
        },
    )
}

/// `key = value` lines, in the given order.
pub fn key_value_text(pairs: &[(&str, String)]) -> String {
    pairs
        .iter()
        .map(|(k, v)| format!("{k} = {v}\n"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::hmm::{gen_hmm, HmmConfig};

    #[test]
    fn round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let s = gen_hmm(&HmmConfig::sleep_like(31, 300, 0, 8)).unwrap();
        let p = dir.path().join("hmm.csv");
        write_csv(&s, &p).unwrap();
        let back = load_csv(&p, true).unwrap();
        assert_eq!(back.dim(), 31);
        assert_eq!(back.labels(), s.labels());
        let a: Vec<u64> = s.values().as_slice().iter().map(|v| v.to_bits()).collect();
        let b: Vec<u64> = back.values().as_slice().iter().map(|v| v.to_bits()).collect();
        assert_eq!(a, b);
    }

    fn load_text(text: &str, labels: bool) -> Result<SeriesMatrix> {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        fs::write(&p, text).unwrap();
        load_csv(&p, labels)
    }

    #[test]
    fn nan_cell_names_the_row() {
        let err = load_text("a,b\n1,2\n3,NaN\n5,6\n", false).unwrap_err();
        match err {
            Error::Ingest { line, msg, .. } => {
                assert_eq!(line, 3);
                assert!(msg.contains("non-finite"));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn ragged_and_non_numeric() {
        assert!(matches!(
            load_text("a,b\n1,2\n3\n", false),
            Err(Error::Ingest { line: 3, .. })
        ));
        assert!(matches!(
            load_text("a,b\n1,2\n3,x\n", false),
            Err(Error::Ingest { line: 3, .. })
        ));
        assert!(matches!(load_text("a,b\n1,2\n", false), Err(Error::Ingest { .. })));
    }

    #[test]
    fn label_column_optional() {
        let s = load_text("a,b,label\n1,2,0\n3,4,1\n", true).unwrap();
        assert_eq!(s.dim(), 2);
        assert_eq!(s.labels(), Some(&[0, 1][..]));
        let s = load_text("a,b,label\n1,2,0\n3,4,1\n", false).unwrap();
        assert_eq!(s.dim(), 3);
        assert!(s.labels().is_none());
    }
}
