use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use ndarray::Array2;

use super::Dataset;
use crate::error::{Error, Result};

/// Reads a LIBSVM text file (`<label> <index>:<value> ...`, 1-based indices).
pub fn load_libsvm(path: impl AsRef<Path>) -> Result<Dataset> {
    load_libsvm_inner(path.as_ref(), None)
}

/// Like [`load_libsvm`], but pads every row to `dim` columns. Indices beyond
/// `dim` are an error. Used to read held-out files against a trained model.
pub fn load_libsvm_with_dim(path: impl AsRef<Path>, dim: usize) -> Result<Dataset> {
    load_libsvm_inner(path.as_ref(), Some(dim))
}

fn load_libsvm_inner(path: &Path, dim: Option<usize>) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_libsvm(BufReader::new(file), path, dim)
}

/// Parses LIBSVM-formatted text. `source` only labels error messages.
pub fn parse_libsvm<R: BufRead>(reader: R, source: &Path, dim: Option<usize>) -> Result<Dataset> {
    let mut raw_labels = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut max_index = 0usize;

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(source, e))?;
        let parse_err = |message: String| Error::Parse {
            path: source.to_path_buf(),
            line: lineno,
            message,
        };
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label_tok = tokens.next().expect("non-empty line has a token");
        let label: f64 = label_tok
            .parse()
            .map_err(|_| parse_err(format!("invalid label `{label_tok}`")))?;

        let mut row = Vec::new();
        let mut last = 0usize;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(format!("expected index:value, found `{tok}`")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_err(format!("invalid feature index `{idx}`")))?;
            if idx == 0 {
                return Err(parse_err("feature indices are 1-based".into()));
            }
            if idx <= last {
                return Err(parse_err(format!(
                    "feature indices must be strictly increasing ({idx} after {last})"
                )));
            }
            let val: f64 = val
                .parse()
                .map_err(|_| parse_err(format!("invalid feature value `{val}`")))?;
            if !val.is_finite() {
                return Err(parse_err(format!("non-finite feature value `{val}`")));
            }
            if let Some(d) = dim {
                if idx > d {
                    return Err(parse_err(format!("feature index {idx} exceeds dimension {d}")));
                }
            }
            last = idx;
            row.push((idx - 1, val));
        }
        max_index = max_index.max(last);
        raw_labels.push(label);
        rows.push(row);
    }

    if rows.is_empty() {
        return Err(Error::EmptyFile {
            path: source.to_path_buf(),
        });
    }
    let d = dim.unwrap_or(max_index);
    if d == 0 {
        return Err(Error::InvalidDataset(format!(
            "{}: no feature carries a value",
            source.display()
        )));
    }
    let mut features = Array2::zeros((rows.len(), d));
    for (i, row) in rows.iter().enumerate() {
        for &(j, v) in row {
            features[[i, j]] = v;
        }
    }
    Dataset::from_raw_labels(features, &raw_labels)
}

/// Writes every feature explicitly so the dimension survives a round trip.
pub fn write_libsvm<W: Write>(data: &Dataset, mut out: W) -> std::io::Result<()> {
    for (row, &label) in data.features().rows().into_iter().zip(data.labels()) {
        write!(out, "{}", if label > 0.0 { "+1" } else { "-1" })?;
        for (j, v) in row.iter().enumerate() {
            write!(out, " {}:{}", j + 1, v)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

fn read_numeric_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(rows.len() + 1, |p| p.line() as usize);
        let row = record
            .iter()
            .enumerate()
            .map(|(col, cell)| {
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        path: path.to_path_buf(),
                        line,
                        message: format!("column {}: non-numeric cell `{cell}`", col + 1),
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile {
            path: path.to_path_buf(),
        });
    }
    Ok(rows)
}

fn csv_error(path: &Path, err: csv::Error) -> Error {
    let line = err.position().map_or(0, |p| p.line() as usize);
    match err.into_kind() {
        csv::ErrorKind::Io(e) => Error::io(path, e),
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("ragged row: {len} fields, expected {expected_len}"),
        },
        other => Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{other:?}"),
        },
    }
}

/// Reads a headerless numeric CSV whose `label_column` (0-based) holds the
/// binary labels; remaining columns are features.
pub fn load_csv(path: impl AsRef<Path>, label_column: usize) -> Result<Dataset> {
    let path = path.as_ref();
    let rows = read_numeric_csv(path)?;
    let width = rows[0].len();
    if label_column >= width {
        return Err(Error::InvalidParameter(format!(
            "label column {label_column} out of range for {width} columns"
        )));
    }
    let d = width - 1;
    let mut features = Array2::zeros((rows.len(), d));
    let mut labels = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        labels.push(row[label_column]);
        let feats = row
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != label_column)
            .map(|(_, &v)| v);
        for (j, v) in feats.enumerate() {
            features[[i, j]] = v;
        }
    }
    Dataset::from_raw_labels(features, &labels)
}

/// Reads a headerless numeric CSV where every column is a feature.
pub fn load_csv_unlabeled(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let rows = read_numeric_csv(path)?;
    let (n, d) = (rows.len(), rows[0].len());
    Ok(Array2::from_shape_vec((n, d), rows.into_iter().flatten().collect()).expect("rectangular rows"))
}
