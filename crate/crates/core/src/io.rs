//! Plain-text file formats: basis matrices, numeric CSV and LIBSVM output.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::data::LabeledDataset;
use crate::error::{NgcaError, Result};
use crate::numerics::DataMatrix;

/// Shortest exact-enough rendering: 17 significant digits round-trip any f64.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// `d` lines of `m` space-separated values.
pub fn format_basis(basis: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for row in basis.row_iter() {
        let line: Vec<String> = row.iter().map(|&v| format_f64(v)).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_basis(path: &Path, basis: &DMatrix<f64>) -> Result<()> {
    fs::write(path, format_basis(basis)).map_err(|e| NgcaError::io(path, e))
}

pub fn read_basis(path: &Path) -> Result<DMatrix<f64>> {
    let text = fs::read_to_string(path).map_err(|e| NgcaError::io(path, e))?;
    let rows = parse_rows(&text, path, |l| l.split_whitespace().collect())?;
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 {
        return Err(NgcaError::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "empty basis file".into(),
        });
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

fn parse_rows(text: &str, path: &Path, split: impl Fn(&str) -> Vec<&str>) -> Result<Vec<Vec<f64>>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| NgcaError::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            message,
        };
        let row = split(line)
            .into_iter()
            .map(|t| {
                let t = t.trim();
                t.parse::<f64>().map_err(|_| err(format!("invalid number '{t}'")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(err(format!("expected {} fields, got {}", first.len(), row.len())));
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Writes a header line followed by one comma-separated row per sample.
pub fn write_csv(path: &Path, header: &[String], x: &DataMatrix) -> Result<()> {
    if header.len() != x.d() {
        return Err(NgcaError::DimensionMismatch {
            expected: x.d(),
            got: header.len(),
        });
    }
    let mut out = header.join(",");
    out.push('\n');
    for row in x.as_matrix().row_iter() {
        let line: Vec<String> = row.iter().map(|&v| format_f64(v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| NgcaError::io(path, e))
}

/// Reads a numeric CSV. A first line that does not parse as numbers is
/// treated as a header and returned separately.
pub fn read_csv(path: &Path) -> Result<(Option<Vec<String>>, DataMatrix)> {
    let text = fs::read_to_string(path).map_err(|e| NgcaError::io(path, e))?;
    let mut lines = text.lines();
    let first = lines.next().unwrap_or("");
    let is_numeric = first.split(',').all(|t| t.trim().parse::<f64>().is_ok());
    let (header, body) = if is_numeric {
        (None, text.as_str())
    } else {
        let header: Vec<String> = first.split(',').map(|s| s.trim().to_string()).collect();
        (Some(header), text.split_once('\n').map_or("", |(_, rest)| rest))
    };
    let rows = parse_rows(body, path, |l| l.split(',').collect())?;
    if let (Some(h), Some(r)) = (&header, rows.first()) {
        if h.len() != r.len() {
            return Err(NgcaError::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: format!("header has {} fields, rows have {}", h.len(), r.len()),
            });
        }
    }
    Ok((header, DataMatrix::from_rows(&rows)?))
}

/// LIBSVM text with every feature written (dense), 1-based indices.
pub fn format_libsvm(features: &DMatrix<f64>, labels: &[i8]) -> Result<String> {
    if features.nrows() != labels.len() {
        return Err(NgcaError::DimensionMismatch {
            expected: features.nrows(),
            got: labels.len(),
        });
    }
    let mut out = String::new();
    for (row, &label) in features.row_iter().zip(labels) {
        out.push_str(if label > 0 { "+1" } else { "-1" });
        for (j, v) in row.iter().enumerate() {
            write!(out, " {}:{}", j + 1, format_f64(*v)).expect("writing to a String");
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_libsvm(path: &Path, features: &DMatrix<f64>, ds: &LabeledDataset) -> Result<()> {
    let text = format_libsvm(features, &ds.labels)?;
    fs::write(path, text).map_err(|e| NgcaError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{load_libsvm, Relabel};

    #[test]
    fn basis_round_trip_is_exact() {
        let b = DMatrix::from_row_slice(3, 2, &[0.1, -1.0 / 3.0, std::f64::consts::PI, 0.0, -2.5e-300, 1.0]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("basis.txt");
        write_basis(&path, &b).unwrap();
        assert_eq!(read_basis(&path).unwrap(), b);
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert_eq!(text.lines().next().unwrap().split(' ').count(), 2);
    }

    #[test]
    fn csv_round_trip_with_header() {
        let x = DataMatrix::from_rows(&[vec![1.0, 2.5], vec![-3.0, 1e-9]]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        write_csv(&path, &["a".into(), "b".into()], &x).unwrap();
        let (header, back) = read_csv(&path).unwrap();
        assert_eq!(header.unwrap(), vec!["a", "b"]);
        assert_eq!(back, x);
        fs::write(&path, "1,2\n3,4\n").unwrap();
        assert!(read_csv(&path).unwrap().0.is_none());
        fs::write(&path, "1,2\n3\n").unwrap();
        assert!(read_csv(&path).is_err());
    }

    #[test]
    fn libsvm_output_reloads() {
        let f = DMatrix::from_row_slice(2, 2, &[0.5, -1.0, 0.0, 2.0]);
        let ds = LabeledDataset::new(DataMatrix::new(f.clone()).unwrap(), vec![1, -1]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.libsvm");
        write_libsvm(&path, &f, &ds).unwrap();
        let back = load_libsvm(&[path.as_path()], None, Relabel::None).unwrap();
        assert_eq!(back, ds);
    }
}
