//! Dataset CSV I/O and atomic file writes.
//!
//! CSV contract: header `f0,f1,...,f{d-1}[,label]`, comma-separated,
//! `.`-decimal, no quoting. Values are written in shortest round-trip form,
//! so `load_csv(save_csv(ds))` reproduces every value bit-exactly and
//! labels exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::{Dataset, Error, Result, Sample};

/// Write bytes via a temp file in the same directory plus rename, so an
/// interrupted run never leaves a truncated file behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(match path.extension() {
        Some(ext) => format!("{}.tmp", ext.to_string_lossy()),
        None => "tmp".to_string(),
    });
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Serialize `value` as pretty JSON and write it atomically.
pub fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut buf = serde_json::to_vec_pretty(value)?;
    buf.push(b'\n');
    write_atomic(path, &buf)
}

pub fn save_csv(ds: &Dataset, path: &Path) -> Result<()> {
    write_atomic(path, csv_string(ds).as_bytes())
}

/// Render a dataset in the CSV contract format.
pub fn csv_string(ds: &Dataset) -> String {
    let labeled = ds.is_labeled();
    let mut out = String::new();
    for d in 0..ds.dim() {
        if d > 0 {
            out.push(',');
        }
        let _ = write!(out, "f{d}");
    }
    if labeled {
        out.push_str(",label");
    }
    out.push('\n');
    for s in ds.iter() {
        for (d, v) in s.values().iter().enumerate() {
            if d > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        if let Some(label) = s.label() {
            let _ = write!(out, ",{label}");
        }
        out.push('\n');
    }
    out
}

pub fn load_csv(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, path)
}

fn parse_csv(text: &str, path: &Path) -> Result<Dataset> {
    let err = |line: usize, message: String| Error::CsvFormat {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| err(1, "missing header".into()))?;
    let header = header.trim_end_matches('\r');
    let mut cols: Vec<&str> = header.split(',').collect();
    let labeled = cols.last() == Some(&"label");
    if labeled {
        cols.pop();
    }
    if cols.is_empty() {
        return Err(err(1, "missing header".into()));
    }
    for (i, c) in cols.iter().enumerate() {
        let expected = format!("f{i}");
        if *c != expected {
            return Err(err(
                1,
                format!("expected header column `{expected}`, found `{c}`"),
            ));
        }
    }
    let dim = cols.len();
    let arity = dim + usize::from(labeled);

    let mut ds = Dataset::empty(dim)?;
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let row = raw.trim_end_matches('\r');
        if row.is_empty() {
            continue;
        }
        let cells: Vec<&str> = row.split(',').collect();
        if cells.len() != arity {
            return Err(err(
                line_no,
                format!("expected {arity} columns, found {}", cells.len()),
            ));
        }
        let mut values = Vec::with_capacity(dim);
        for (d, cell) in cells[..dim].iter().enumerate() {
            let v: f64 = cell
                .parse()
                .map_err(|_| err(line_no, format!("column f{d}: non-numeric cell `{cell}`")))?;
            if !v.is_finite() {
                return Err(err(line_no, format!("column f{d}: non-finite value `{cell}`")));
            }
            values.push(v);
        }
        let label = if labeled {
            let cell = cells[dim];
            Some(cell.parse::<u32>().map_err(|_| {
                err(
                    line_no,
                    format!("label column: expected a non-negative integer, found `{cell}`"),
                )
            })?)
        } else {
            None
        };
        ds.push(Sample::with_label(values, label)?)?;
    }
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{gen_gaussian, GaussianSpec};
    use crate::Seed;

    fn tmp_path(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("oodlr-io-tests");
        fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let spec = GaussianSpec::isotropic(3, 0.0, 1.0).unwrap();
        let ds = gen_gaussian(&spec, 500, Seed(21)).unwrap();
        let path = tmp_path("roundtrip.csv");
        save_csv(&ds, &path).unwrap();
        let back = load_csv(&path).unwrap();
        assert_eq!(ds.len(), back.len());
        for (a, b) in ds.iter().zip(back.iter()) {
            for (&va, &vb) in a.values().iter().zip(b.values()) {
                assert_eq!(va.to_bits(), vb.to_bits());
            }
        }
    }

    #[test]
    fn labels_survive_round_trip() {
        let mut ds = Dataset::empty(2).unwrap();
        ds.push(Sample::with_label(vec![0.5, -1.25], Some(3)).unwrap())
            .unwrap();
        ds.push(Sample::with_label(vec![1e-300, 42.0], Some(0)).unwrap())
            .unwrap();
        let path = tmp_path("labels.csv");
        save_csv(&ds, &path).unwrap();
        let back = load_csv(&path).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn header_only_gives_empty_dataset_with_dim() {
        let ds = parse_csv("f0,f1,f2\n", Path::new("mem")).unwrap();
        assert_eq!(ds.dim(), 3);
        assert!(ds.is_empty());
    }

    #[test]
    fn wrong_arity_names_the_line() {
        let e = parse_csv("f0,f1\n1.0,2.0\n3.0\n", Path::new("mem")).unwrap_err();
        match e {
            Error::CsvFormat { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn non_numeric_cell_is_rejected() {
        let e = parse_csv("f0\nx\n", Path::new("mem")).unwrap_err();
        assert!(matches!(e, Error::CsvFormat { line: 2, .. }));
    }

    #[test]
    fn missing_header_is_rejected() {
        assert!(parse_csv("", Path::new("mem")).is_err());
        assert!(parse_csv("a,b\n", Path::new("mem")).is_err());
    }
}
