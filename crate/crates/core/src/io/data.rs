//! Dataset readers for the libsvm sparse text format and numeric CSV.
//!
//! Both readers are total: any byte stream yields a dataset or an error
//! carrying the offending line or row number.

use std::io::Read;

use crate::error::{Error, Result};
use crate::model::Dataset;

/// Largest feature index accepted by the libsvm reader.
pub const MAX_FEATURE_INDEX: usize = 1 << 20;
/// Largest number of dense cells (`L · n`) either reader will allocate.
pub const MAX_DENSE_CELLS: usize = 1 << 26;

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn parse_number(token: &str) -> Option<f64> {
    // accept the typographic minus sign as well as ASCII '-'
    let v: f64 =
        if token.contains('\u{2212}') { token.replace('\u{2212}', "-").parse().ok()? } else { token.parse().ok()? };
    v.is_finite().then_some(v)
}

fn parse_label(token: &str, remap01: bool) -> std::result::Result<f64, String> {
    let v = parse_number(token).ok_or_else(|| format!("label `{token}` is not a number"))?;
    match v {
        1.0 => Ok(1.0),
        -1.0 => Ok(-1.0),
        0.0 if remap01 => Ok(-1.0),
        _ if remap01 => Err(format!("invalid label {token}: expected -1, +1, 0 or 1")),
        _ => Err(format!("invalid label {token}: expected -1 or +1")),
    }
}

fn read_all<R: Read>(mut reader: R) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    reader.read_to_end(&mut buf).map_err(|e| Error::Io(e.to_string()))?;
    Ok(buf)
}

fn check_size(rows: usize, cols: usize) -> Result<()> {
    if rows.saturating_mul(cols) > MAX_DENSE_CELLS {
        return Err(Error::Config(format!("{rows} x {cols} dataset is too large for dense storage")));
    }
    Ok(())
}

/// Reads `label index:value ...` lines with 1-based, strictly ascending
/// indices. Text after `#` is ignored, as are blank lines. Missing indices
/// are zero and the dimension is the largest index seen. With `remap01`,
/// labels 0/1 become -1/+1.
pub fn parse_libsvm<R: Read>(reader: R, remap01: bool) -> Result<Dataset> {
    let bytes = read_all(reader)?;
    let mut rows: Vec<(f64, Vec<(usize, f64)>)> = Vec::new();
    let mut n = 0;
    for (i, raw) in bytes.split(|&b| b == b'\n').enumerate() {
        let line_no = i + 1;
        let line = std::str::from_utf8(raw).map_err(|_| parse_err(line_no, "invalid UTF-8"))?;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label = parse_label(tokens.next().unwrap_or(""), remap01).map_err(|m| parse_err(line_no, m))?;
        let mut entries = Vec::new();
        let mut last = 0;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(line_no, format!("malformed entry `{tok}`: expected index:value")))?;
            let idx: usize = idx.parse().map_err(|_| parse_err(line_no, format!("malformed index `{idx}`")))?;
            if idx == 0 {
                return Err(parse_err(line_no, "indices are 1-based"));
            }
            if idx > MAX_FEATURE_INDEX {
                return Err(parse_err(line_no, format!("index {idx} exceeds {MAX_FEATURE_INDEX}")));
            }
            if idx <= last {
                return Err(parse_err(line_no, format!("non-ascending index {idx} after {last}")));
            }
            let val = parse_number(val).ok_or_else(|| parse_err(line_no, format!("malformed value `{val}`")))?;
            last = idx;
            entries.push((idx - 1, val));
        }
        n = n.max(last);
        rows.push((label, entries));
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if n == 0 {
        return Err(parse_err(1, "no feature values in any line"));
    }
    check_size(rows.len(), n)?;
    let mut samples = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    for (label, entries) in rows {
        let mut x = vec![0.0; n];
        for (k, v) in entries {
            x[k] = v;
        }
        samples.push(x);
        labels.push(label);
    }
    Dataset::new(samples, labels)
}

/// Reads a numeric CSV with one sample per row; `label_column` (0-based)
/// holds the label and the remaining columns are features in order.
pub fn parse_csv<R: Read>(reader: R, label_column: usize, has_header: bool, remap01: bool) -> Result<Dataset> {
    let bytes = read_all(reader)?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());
    let mut samples = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    for record in rdr.byte_records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match width {
            None => {
                if label_column >= record.len() {
                    return Err(parse_err(
                        line,
                        format!("label column {label_column} out of range for {} columns", record.len()),
                    ));
                }
                if record.len() < 2 {
                    return Err(parse_err(line, "need a label and at least one feature"));
                }
                width = Some(record.len());
            }
            Some(w) if w != record.len() => {
                return Err(parse_err(line, format!("ragged row: {} columns, expected {w}", record.len())));
            }
            Some(_) => {}
        }
        check_size(samples.len() + 1, record.len())?;
        let mut x = Vec::with_capacity(record.len() - 1);
        let mut label = 0.0;
        for (c, cell) in record.iter().enumerate() {
            let text = std::str::from_utf8(cell).map_err(|_| parse_err(line, "invalid UTF-8"))?;
            if c == label_column {
                label = parse_label(text, remap01).map_err(|m| parse_err(line, m))?;
            } else {
                let v = parse_number(text)
                    .ok_or_else(|| parse_err(line, format!("non-numeric cell `{text}` in column {c}")))?;
                x.push(v);
            }
        }
        samples.push(x);
        labels.push(label);
    }
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Dataset::new(samples, labels)
}
