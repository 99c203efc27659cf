//! Dataset files: one sample per line as a JSON object with fixed field
//! order, reals printed with 17 significant digits so every f64 round-trips
//! bit for bit. Writing is hand-formatted to keep the bytes stable;
//! reading goes through serde.

use crate::windgen::{Split, WindingSample};
use serde::Deserialize;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed record: {source}")]
    Parse { line: usize, source: serde_json::Error },
    #[error("line {line}: {msg}")]
    Invalid { line: usize, msg: String },
    #[error("dataset {0} is empty")]
    Empty(String),
}

/// One stored sample. `pattern` holds the per-segment directions ±1; class
/// labels for the probe are `n_w + 5`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct DatasetRecord {
    pub id: u64,
    pub split: Split,
    pub n_s: usize,
    pub pattern: Vec<i8>,
    pub n_w: i64,
    pub seed_used: u64,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl DatasetRecord {
    pub fn from_sample(id: u64, split: Split, s: &WindingSample) -> Self {
        DatasetRecord {
            id,
            split,
            n_s: s.pattern.n_segments(),
            pattern: s.pattern.directions().to_vec(),
            n_w: s.label_nw,
            seed_used: s.seed_used,
            re: s.re.clone(),
            im: s.im.clone(),
        }
    }

    /// Sites per configuration.
    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    /// The record as its canonical line (no trailing newline).
    pub fn to_line(&self) -> String {
        let mut s = String::with_capacity(64 + 25 * (self.re.len() + self.im.len()));
        let split = match self.split {
            Split::Train => "train",
            Split::Test => "test",
        };
        write!(
            s,
            "{{\"id\":{},\"split\":\"{}\",\"n_s\":{},\"pattern\":[",
            self.id, split, self.n_s
        )
        .unwrap();
        for (i, &p) in self.pattern.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            write!(s, "{p}").unwrap();
        }
        write!(s, "],\"n_w\":{},\"seed_used\":{},\"re\":[", self.n_w, self.seed_used).unwrap();
        push_reals(&mut s, &self.re);
        s.push_str("],\"im\":[");
        push_reals(&mut s, &self.im);
        s.push_str("]}");
        s
    }

    fn validate(&self, line: usize) -> Result<(), DatasetError> {
        if self.re.len() != self.im.len() {
            return Err(DatasetError::Invalid {
                line,
                msg: format!("re has {} sites, im has {}", self.re.len(), self.im.len()),
            });
        }
        if self.pattern.len() != self.n_s {
            return Err(DatasetError::Invalid {
                line,
                msg: format!("n_s {} but pattern has {} entries", self.n_s, self.pattern.len()),
            });
        }
        if self.pattern.iter().any(|&p| p != 1 && p != -1) {
            return Err(DatasetError::Invalid {
                line,
                msg: "pattern entries must be +1 or -1".into(),
            });
        }
        let sum: i64 = self.pattern.iter().map(|&p| p as i64).sum();
        if sum != self.n_w {
            return Err(DatasetError::Invalid {
                line,
                msg: format!("label n_w {} but pattern sums to {sum}", self.n_w),
            });
        }
        Ok(())
    }
}

/// 17 significant digits: enough to reproduce any f64 exactly.
fn push_reals(s: &mut String, xs: &[f64]) {
    for (i, &x) in xs.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        write!(s, "{x:.16e}").unwrap();
    }
}

/// Writes records as one JSON object per line.
pub fn write_records<'a>(
    path: &Path,
    records: impl IntoIterator<Item = &'a DatasetRecord>,
) -> Result<(), DatasetError> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in records {
        w.write_all(r.to_line().as_bytes())?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads and validates a dataset file; errors carry 1-based line numbers.
pub fn read_records(path: &Path) -> Result<Vec<DatasetRecord>, DatasetError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let text = line?;
        if text.trim().is_empty() {
            continue;
        }
        let rec: DatasetRecord = serde_json::from_str(&text)
            .map_err(|source| DatasetError::Parse { line: line_no, source })?;
        rec.validate(line_no)?;
        out.push(rec);
    }
    if out.is_empty() {
        return Err(DatasetError::Empty(path.display().to_string()));
    }
    Ok(out)
}

/// CSV export: header then one row per record, re/im flattened into 2L
/// columns. Pattern strings are comma-free by construction.
pub fn write_csv<'a>(
    path: &Path,
    records: impl IntoIterator<Item = &'a DatasetRecord>,
) -> Result<(), DatasetError> {
    let mut w = BufWriter::new(File::create(path)?);
    let mut records = records.into_iter().peekable();
    let l = records.peek().map(|r| r.len()).unwrap_or(0);
    let mut header = String::from("id,split,n_s,pattern,n_w,seed_used");
    for i in 1..=l {
        write!(header, ",re_{i}").unwrap();
    }
    for i in 1..=l {
        write!(header, ",im_{i}").unwrap();
    }
    writeln!(w, "{header}")?;
    for r in records {
        let split = match r.split {
            Split::Train => "train",
            Split::Test => "test",
        };
        let pattern: String = std::iter::once('(')
            .chain(r.pattern.iter().map(|&p| if p > 0 { '+' } else { '-' }))
            .chain(std::iter::once(')'))
            .collect();
        let mut row = format!(
            "{},{},{},{},{},{}",
            r.id, split, r.n_s, pattern, r.n_w, r.seed_used
        );
        for &x in &r.re {
            write!(row, ",{x:.16e}").unwrap();
        }
        for &x in &r.im {
            write!(row, ",{x:.16e}").unwrap();
        }
        writeln!(w, "{row}")?;
    }
    w.flush()?;
    Ok(())
}
