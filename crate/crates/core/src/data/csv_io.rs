use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::dataset::{Dataset, DenseMatrix, Features, Target};
use crate::error::{AidError, Result};

/// How the target column is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    /// Real-valued response.
    Response,
    /// Labels in {-1, +1}.
    Labels,
    /// Labels in {-1, +1}; a blank cell (CSV) or `0` (svmlight) marks an unlabeled entry.
    Partial,
}

#[derive(Debug, Clone)]
pub struct CsvOptions {
    /// Header name of the target column; the last column when `None`.
    pub target_column: Option<String>,
    pub kind: TargetKind,
}

impl CsvOptions {
    pub fn new(kind: TargetKind) -> Self {
        CsvOptions { target_column: None, kind }
    }
}

pub fn load_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    read_csv(File::open(path)?, &path.display().to_string(), opts)
}

pub fn read_csv<R: Read>(reader: R, source_name: &str, opts: &CsvOptions) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| csv_error(source_name, e))?
        .clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(AidError::parse(source_name, 1, "missing header row"));
    }
    let target = match &opts.target_column {
        Some(name) => headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| AidError::parse(source_name, 1, format!("no column named {name:?} in header")))?,
        None => headers.len() - 1,
    };
    let m = headers.len() - 1;

    let mut data = Vec::new();
    let mut response = Vec::new();
    let mut partial = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(source_name, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        for (c, cell) in rec.iter().enumerate() {
            let cell = cell.trim();
            if c == target {
                match opts.kind {
                    TargetKind::Response => response.push(parse_number(source_name, line, cell, c + 1)?),
                    TargetKind::Labels => response.push(parse_label(source_name, line, cell)?),
                    TargetKind::Partial => {
                        partial.push(if cell.is_empty() { None } else { Some(parse_label(source_name, line, cell)?) })
                    }
                }
            } else {
                data.push(parse_number(source_name, line, cell, c + 1)?);
            }
        }
    }
    let n = response.len().max(partial.len());
    let features = Features::Dense(DenseMatrix::new(n, m, data)?);
    let target = match opts.kind {
        TargetKind::Response => Target::Response(response),
        TargetKind::Labels => Target::Labels(response),
        TargetKind::Partial => Target::Partial(partial),
    };
    Dataset::new(features, target)
}

fn csv_error(source_name: &str, e: csv::Error) -> AidError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    let message = match e.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            format!("ragged row: expected {expected_len} fields, found {len}")
        }
        csv::ErrorKind::Utf8 { .. } => "invalid UTF-8".to_string(),
        _ => e.to_string(),
    };
    AidError::parse(source_name, line, message)
}

fn parse_number(source_name: &str, line: usize, cell: &str, column: usize) -> Result<f64> {
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(AidError::parse(source_name, line, format!("column {column}: not a finite number: {cell:?}"))),
    }
}

pub(crate) fn parse_label(source_name: &str, line: usize, cell: &str) -> Result<f64> {
    match cell {
        "1" | "+1" | "1.0" | "+1.0" => Ok(1.0),
        "-1" | "-1.0" => Ok(-1.0),
        _ => Err(AidError::parse(source_name, line, format!("label must be -1 or +1, found {cell:?}"))),
    }
}

/// Write a dense CSV with header `x1,…,xm,y`. Unlabeled entries get a blank target cell.
pub fn save_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut f = File::create(path)?;
    write_csv(dataset, &mut f)
}

pub fn write_csv<W: Write>(dataset: &Dataset, out: &mut W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let m = dataset.m();
    let mut header: Vec<String> = (1..=m).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    w.write_record(&header).map_err(|e| AidError::Io(e.into()))?;
    for i in 0..dataset.n() {
        let mut rec: Vec<String> = dataset.features.dense_row(i).iter().map(|v| v.to_string()).collect();
        rec.push(match &dataset.target {
            Target::Response(y) => y[i].to_string(),
            Target::Labels(y) => label_text(y[i]),
            Target::Partial(y) => y[i].map_or(String::new(), label_text),
        });
        w.write_record(&rec).map_err(|e| AidError::Io(e.into()))?;
    }
    w.flush()?;
    Ok(())
}

fn label_text(v: f64) -> String {
    if v > 0.0 { "1".into() } else { "-1".into() }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str, kind: TargetKind) -> Result<Dataset> {
        read_csv(text.as_bytes(), "t.csv", &CsvOptions::new(kind))
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let text = "x1,x2,y\n1,2.5,3\n-0.125,4,5\n6,7,-8.75\n";
        let d = read(text, TargetKind::Response).unwrap();
        let mut out = Vec::new();
        write_csv(&d, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);
    }

    #[test]
    fn blank_label_is_unlabeled() {
        let d = read("a,y\n1,1\n2,\n3,-1\n", TargetKind::Partial).unwrap();
        assert_eq!(d.partial_labels().unwrap(), &[Some(1.0), None, Some(-1.0)]);
    }

    #[test]
    fn bad_label_reports_line() {
        let e = read("a,y\n1,1\n2,+2\n", TargetKind::Labels).unwrap_err();
        match e {
            AidError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn named_target_column() {
        let opts = CsvOptions { target_column: Some("t".into()), kind: TargetKind::Response };
        let d = read_csv("t,a,b\n9,1,2\n".as_bytes(), "t.csv", &opts).unwrap();
        assert_eq!(d.response().unwrap(), &[9.0]);
        assert_eq!(d.features.dense_row(0), vec![1.0, 2.0]);
    }
}
