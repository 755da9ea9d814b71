use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::csv_io::{parse_label, TargetKind};
use super::dataset::{Dataset, Features, SparseMatrix, Target};
use crate::error::{AidError, Result};

pub fn load_svmlight(path: impl AsRef<Path>, kind: TargetKind) -> Result<Dataset> {
    let path = path.as_ref();
    read_svmlight(BufReader::new(File::open(path)?), &path.display().to_string(), kind)
}

/// Parse `label idx:val idx:val …` lines with 1-based, strictly increasing indices.
/// `#` starts a comment; `qid:` tokens are ignored.
pub fn read_svmlight<R: BufRead>(reader: R, source_name: &str, kind: TargetKind) -> Result<Dataset> {
    let mut indptr = vec![0];
    let mut indices = Vec::new();
    let mut values = Vec::new();
    let mut response = Vec::new();
    let mut partial = Vec::new();
    let mut cols = 0;

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| AidError::parse(source_name, lineno, e.to_string()))?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label = tokens.next().unwrap();
        match kind {
            TargetKind::Response => response.push(
                label
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| AidError::parse(source_name, lineno, format!("bad response {label:?}")))?,
            ),
            TargetKind::Labels => response.push(parse_label(source_name, lineno, label)?),
            TargetKind::Partial => partial.push(if label == "0" {
                None
            } else {
                Some(parse_label(source_name, lineno, label)?)
            }),
        }
        let mut last = 0usize;
        for tok in tokens {
            if tok.starts_with("qid:") {
                continue;
            }
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| AidError::parse(source_name, lineno, format!("expected index:value, found {tok:?}")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| AidError::parse(source_name, lineno, format!("bad feature index {idx:?}")))?;
            if idx == 0 {
                return Err(AidError::parse(source_name, lineno, "feature indices are 1-based; found 0"));
            }
            if idx <= last {
                return Err(AidError::parse(
                    source_name,
                    lineno,
                    format!("feature indices must be strictly increasing ({idx} after {last})"),
                ));
            }
            let val: f64 = val
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| AidError::parse(source_name, lineno, format!("bad feature value {val:?}")))?;
            last = idx;
            cols = cols.max(idx);
            indices.push(idx - 1);
            values.push(val);
        }
        indptr.push(indices.len());
    }
    let features = Features::Sparse(SparseMatrix::new(cols, indptr, indices, values)?);
    let target = match kind {
        TargetKind::Response => Target::Response(response),
        TargetKind::Labels => Target::Labels(response),
        TargetKind::Partial => Target::Partial(partial),
    };
    Dataset::new(features, target)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str) -> Result<Dataset> {
        read_svmlight(text.as_bytes(), "t.svm", TargetKind::Labels)
    }

    #[test]
    fn single_nonzero() {
        let d = read("-1 3:0.5\n").unwrap();
        assert_eq!(d.m(), 3);
        assert_eq!(d.features.dense_row(0), vec![0.0, 0.0, 0.5]);
        assert_eq!(d.labels().unwrap(), &[-1.0]);
    }

    #[test]
    fn empty_feature_list_is_zero_row() {
        let d = read("+1 2:1\n-1\n").unwrap();
        assert_eq!(d.features.dense_row(1), vec![0.0, 0.0]);
    }

    #[test]
    fn index_zero_is_rejected() {
        let e = read("1 1:1\n-1 0:2\n").unwrap_err();
        assert!(matches!(e, AidError::Parse { line: 2, .. }), "{e}");
    }
}
