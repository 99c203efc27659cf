//! Emitted artifacts: training-loss logs, feature-map files, and the three
//! plot-ready tables (pattern-averaged features, rank rates per filter
//! count, loss curves). Every writer produces deterministic bytes: reals
//! carry 17 significant digits and wall-clock fields never reach disk. Every
//! format reads back through its own reader bit-exactly.

use crate::ae::{FeatureMap, TrainLogRecord, DEEP_FILTERS};
use crate::probe::{SweepRow, CLASSES};
use serde::Deserialize;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Invalid { line: usize, msg: String },
    #[error("{0}")]
    Schema(String),
    #[error("{0} is empty")]
    Empty(String),
}

fn invalid(line: usize, msg: impl Into<String>) -> ReportError {
    ReportError::Invalid { line, msg: msg.into() }
}

/// Loss curve as NDJSON, one evaluation per line. Elapsed-time fields are
/// deliberately absent: rerunning a command must reproduce the file
/// byte-for-byte.
pub fn write_loss_log(path: &Path, log: &[TrainLogRecord]) -> Result<(), ReportError> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in log {
        writeln!(
            w,
            "{{\"epoch\":{},\"train_loss\":{:.16e},\"test_loss\":{:.16e}}}",
            r.epoch, r.train_loss, r.test_loss
        )?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct LossLine {
    epoch: usize,
    train_loss: f64,
    test_loss: f64,
}

/// Reads a loss log; `wall_time` is not stored, so it comes back as 0.
pub fn read_loss_log(path: &Path) -> Result<Vec<TrainLogRecord>, ReportError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out: Vec<TrainLogRecord> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let text = line?;
        if text.trim().is_empty() {
            continue;
        }
        let rec: LossLine = serde_json::from_str(&text)
            .map_err(|e| invalid(line_no, e.to_string()))?;
        if let Some(prev) = out.last() {
            if rec.epoch <= prev.epoch {
                return Err(invalid(
                    line_no,
                    format!("epoch {} does not increase past {}", rec.epoch, prev.epoch),
                ));
            }
        }
        out.push(TrainLogRecord {
            epoch: rec.epoch,
            train_loss: rec.train_loss,
            test_loss: rec.test_loss,
            wall_time: 0.0,
        });
    }
    Ok(out)
}

/// Feature maps as NDJSON: id, pattern string, label, and the 4 × (L/8)
/// values flattened filter-major.
pub fn write_features(path: &Path, maps: &[FeatureMap]) -> Result<(), ReportError> {
    let mut w = BufWriter::new(File::create(path)?);
    for m in maps {
        let mut s = String::with_capacity(48 + 25 * m.values.len());
        write!(
            s,
            "{{\"id\":{},\"pattern\":\"{}\",\"n_w\":{},\"values\":[",
            m.sample_id, m.pattern, m.label_nw
        )
        .unwrap();
        for (i, &v) in m.values.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            write!(s, "{v:.16e}").unwrap();
        }
        s.push_str("]}");
        writeln!(w, "{s}")?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct FeatureLine {
    id: u64,
    pattern: String,
    n_w: i64,
    values: Vec<f64>,
}

pub fn read_features(path: &Path) -> Result<Vec<FeatureMap>, ReportError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let text = line?;
        if text.trim().is_empty() {
            continue;
        }
        let rec: FeatureLine = serde_json::from_str(&text)
            .map_err(|e| invalid(line_no, e.to_string()))?;
        if rec.values.is_empty() || !rec.values.len().is_multiple_of(DEEP_FILTERS) {
            return Err(invalid(
                line_no,
                format!(
                    "feature map holds {} values, not a positive multiple of {DEEP_FILTERS}",
                    rec.values.len()
                ),
            ));
        }
        out.push(FeatureMap {
            sample_id: rec.id,
            pattern: rec.pattern,
            label_nw: rec.n_w,
            values: rec.values,
        });
    }
    if out.is_empty() {
        return Err(ReportError::Empty(path.display().to_string()));
    }
    Ok(out)
}

/// Pattern-averaged feature table: one row per (pattern, filter, site).
pub fn write_fig3_csv(
    path: &Path,
    averages: &[(String, Vec<f64>)],
) -> Result<(), ReportError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "pattern,filter,site,mean_value")?;
    for (pattern, values) in averages {
        if values.is_empty() || values.len() % DEEP_FILTERS != 0 {
            return Err(ReportError::Schema(format!(
                "pattern {pattern}: {} values, not a positive multiple of {DEEP_FILTERS}",
                values.len()
            )));
        }
        let sites = values.len() / DEEP_FILTERS;
        for f in 0..DEEP_FILTERS {
            for s in 0..sites {
                writeln!(w, "{pattern},{f},{s},{:.16e}", values[f * sites + s])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Rows of the pattern-averaged feature table.
pub type Fig3Row = (String, usize, usize, f64);

pub fn read_fig3_csv(path: &Path) -> Result<Vec<Fig3Row>, ReportError> {
    let mut lines = BufReader::new(File::open(path)?).lines().enumerate();
    expect_header(&mut lines, "pattern,filter,site,mean_value")?;
    let mut out = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let text = line?;
        let cols: Vec<&str> = text.split(',').collect();
        if cols.len() != 4 {
            return Err(invalid(line_no, format!("{} columns, expected 4", cols.len())));
        }
        out.push((
            cols[0].to_string(),
            parse_col(cols[1], line_no, "filter")?,
            parse_col(cols[2], line_no, "site")?,
            parse_col(cols[3], line_no, "mean_value")?,
        ));
    }
    Ok(out)
}

/// Rank-rate table behind the filter sweep: rates for every filter count
/// must form a distribution over ranks 1..=11.
pub fn write_fig5_csv(path: &Path, rows: &[SweepRow]) -> Result<(), ReportError> {
    for k in rows.iter().map(|r| r.filters_used).collect::<std::collections::BTreeSet<_>>() {
        let sum: f64 = rows.iter().filter(|r| r.filters_used == k).map(|r| r.rate).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(ReportError::Schema(format!(
                "rates for filters_used={k} sum to {sum}, expected 1"
            )));
        }
    }
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "filters_used,rank,rate")?;
    for r in rows {
        writeln!(w, "{},{},{:.16e}", r.filters_used, r.rank, r.rate)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_fig5_csv(path: &Path) -> Result<Vec<SweepRow>, ReportError> {
    let mut lines = BufReader::new(File::open(path)?).lines().enumerate();
    expect_header(&mut lines, "filters_used,rank,rate")?;
    let mut out = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let text = line?;
        let cols: Vec<&str> = text.split(',').collect();
        if cols.len() != 3 {
            return Err(invalid(line_no, format!("{} columns, expected 3", cols.len())));
        }
        let row = SweepRow {
            filters_used: parse_col(cols[0], line_no, "filters_used")?,
            rank: parse_col(cols[1], line_no, "rank")?,
            rate: parse_col(cols[2], line_no, "rate")?,
        };
        if row.rank == 0 || row.rank > CLASSES {
            return Err(invalid(line_no, format!("rank {} outside 1..={CLASSES}", row.rank)));
        }
        out.push(row);
    }
    Ok(out)
}

/// Loss-curve table; epochs must strictly increase.
pub fn write_fig7_csv(path: &Path, log: &[TrainLogRecord]) -> Result<(), ReportError> {
    for pair in log.windows(2) {
        if pair[1].epoch <= pair[0].epoch {
            return Err(ReportError::Schema(format!(
                "epoch {} does not increase past {}",
                pair[1].epoch, pair[0].epoch
            )));
        }
    }
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "epoch,train_loss,test_loss")?;
    for r in log {
        writeln!(w, "{},{:.16e},{:.16e}", r.epoch, r.train_loss, r.test_loss)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_fig7_csv(path: &Path) -> Result<Vec<TrainLogRecord>, ReportError> {
    let mut lines = BufReader::new(File::open(path)?).lines().enumerate();
    expect_header(&mut lines, "epoch,train_loss,test_loss")?;
    let mut out: Vec<TrainLogRecord> = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let text = line?;
        let cols: Vec<&str> = text.split(',').collect();
        if cols.len() != 3 {
            return Err(invalid(line_no, format!("{} columns, expected 3", cols.len())));
        }
        let rec = TrainLogRecord {
            epoch: parse_col(cols[0], line_no, "epoch")?,
            train_loss: parse_col(cols[1], line_no, "train_loss")?,
            test_loss: parse_col(cols[2], line_no, "test_loss")?,
            wall_time: 0.0,
        };
        if let Some(prev) = out.last() {
            if rec.epoch <= prev.epoch {
                return Err(invalid(
                    line_no,
                    format!("epoch {} does not increase past {}", rec.epoch, prev.epoch),
                ));
            }
        }
        out.push(rec);
    }
    Ok(out)
}

/// Names of required input files that do not exist, for error messages that
/// list everything missing at once.
pub fn missing_inputs(inputs: &[(&str, &Path)]) -> Vec<String> {
    inputs
        .iter()
        .filter(|(_, p)| !p.exists())
        .map(|(name, p)| format!("{name} ({})", p.display()))
        .collect()
}

fn expect_header(
    lines: &mut impl Iterator<Item = (usize, std::io::Result<String>)>,
    want: &str,
) -> Result<(), ReportError> {
    match lines.next() {
        Some((_, line)) => {
            let text = line?;
            if text != want {
                return Err(invalid(1, format!("header {text:?}, expected {want:?}")));
            }
            Ok(())
        }
        None => Err(invalid(1, format!("missing header {want:?}"))),
    }
}

fn parse_col<T: std::str::FromStr>(
    raw: &str,
    line: usize,
    name: &str,
) -> Result<T, ReportError> {
    raw.parse()
        .map_err(|_| invalid(line, format!("cannot parse {name} from {raw:?}")))
}
