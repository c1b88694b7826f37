//! Per-epoch training log rows and their CSV form.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "epoch,iter,stage,loss_total,loss_detail,loss_laplacian,lr,wallclock_ms";

/// One epoch summary. Losses are means over the epoch's mini-batches; for
/// single-objective stages `loss_detail` holds the loss and
/// `loss_laplacian` is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub epoch: usize,
    pub iter: usize,
    pub stage: String,
    pub loss_total: f64,
    pub loss_detail: f64,
    pub loss_laplacian: f64,
    pub lr: f64,
    pub wallclock_ms: u128,
}

impl LogRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{:.9e},{:.9e},{:.9e},{:e},{}",
            self.epoch,
            self.iter,
            self.stage,
            self.loss_total,
            self.loss_detail,
            self.loss_laplacian,
            self.lr,
            self.wallclock_ms
        )
    }

    pub fn parse_csv_line(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 8 {
            return Err(Error::Data(format!("log row has {} fields: {line:?}", f.len())));
        }
        let bad = |what: &str| Error::Data(format!("log row: bad {what} in {line:?}"));
        Ok(Self {
            epoch: f[0].parse().map_err(|_| bad("epoch"))?,
            iter: f[1].parse().map_err(|_| bad("iter"))?,
            stage: f[2].to_string(),
            loss_total: f[3].parse().map_err(|_| bad("loss_total"))?,
            loss_detail: f[4].parse().map_err(|_| bad("loss_detail"))?,
            loss_laplacian: f[5].parse().map_err(|_| bad("loss_laplacian"))?,
            lr: f[6].parse().map_err(|_| bad("lr"))?,
            wallclock_ms: f[7].parse().map_err(|_| bad("wallclock_ms"))?,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub rows: Vec<LogRow>,
}

impl TrainLog {
    pub fn push(&mut self, row: LogRow) {
        self.rows.push(row);
    }

    pub fn extend(&mut self, other: TrainLog) {
        self.rows.extend(other.rows);
    }

    pub fn last(&self) -> Option<&LogRow> {
        self.rows.last()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            writeln!(s, "{}", r.to_csv_line()).expect("string write");
        }
        s
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == CSV_HEADER => {}
            other => return Err(Error::Data(format!("unexpected log header {other:?}"))),
        }
        let rows = lines
            .filter(|l| !l.trim().is_empty())
            .map(LogRow::parse_csv_line)
            .collect::<Result<_>>()?;
        Ok(Self { rows })
    }

    /// Appends rows to a CSV file, writing the header if the file is new.
    pub fn append_to(&self, path: impl AsRef<Path>) -> Result<()> {
        use std::io::Write;
        let path = path.as_ref();
        let fresh = !path.exists();
        let mut f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        let mut s = String::new();
        if fresh {
            s.push_str(CSV_HEADER);
            s.push('\n');
        }
        for r in &self.rows {
            writeln!(s, "{}", r.to_csv_line()).expect("string write");
        }
        f.write_all(s.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let mut log = TrainLog::default();
        log.push(LogRow {
            epoch: 3,
            iter: 400,
            stage: "3".into(),
            loss_total: 0.125,
            loss_detail: 0.1,
            loss_laplacian: 0.025,
            lr: 1e-5,
            wallclock_ms: 17,
        });
        let csv = log.to_csv();
        assert!(csv.starts_with(CSV_HEADER));
        assert_eq!(TrainLog::parse_csv(&csv).unwrap(), log);
        assert!(TrainLog::parse_csv("nope\n").is_err());
    }
}
