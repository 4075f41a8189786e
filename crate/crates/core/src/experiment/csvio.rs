//! Result rows and their CSV form.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// One grid cell's outcome. Empty optional fields are empty CSV cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub mode: String,
    pub signal_kind: String,
    pub k_or_coeffs: String,
    pub sigma2: Option<f64>,
    pub model: String,
    pub lambda: Option<f64>,
    pub n_train: usize,
    pub num_runs: usize,
    pub err_train_mean: Option<f64>,
    pub err_test_mean: Option<f64>,
    pub opt_raw: Option<f64>,
    pub opt_scaled: Option<f64>,
    /// Standard error of `opt_scaled` when present, else of `opt_raw`.
    pub stderr: Option<f64>,
    pub theory_value: Option<f64>,
    pub theory_stderr: Option<f64>,
    pub seed: u64,
    /// `ok`, or `error: …` for a failed cell.
    pub status: String,
    /// `opt_raw / n_train`.
    pub opt_per_n: Option<f64>,
}

pub const HEADER: [&str; 18] = [
    "mode", "signal_kind", "k_or_coeffs", "sigma2", "model", "lambda", "n_train", "num_runs", "err_train_mean",
    "err_test_mean", "opt_raw", "opt_scaled", "stderr", "theory_value", "theory_stderr", "seed", "status",
    "opt_per_n",
];

impl ResultRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    fn fields(&self) -> Vec<String> {
        let f = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
        vec![
            self.mode.clone(),
            self.signal_kind.clone(),
            self.k_or_coeffs.clone(),
            f(self.sigma2),
            self.model.clone(),
            f(self.lambda),
            self.n_train.to_string(),
            self.num_runs.to_string(),
            f(self.err_train_mean),
            f(self.err_test_mean),
            f(self.opt_raw),
            f(self.opt_scaled),
            f(self.stderr),
            f(self.theory_value),
            f(self.theory_stderr),
            self.seed.to_string(),
            self.status.clone(),
            f(self.opt_per_n),
        ]
    }

    fn from_fields(rec: &csv::StringRecord, line: usize) -> Result<Self> {
        if rec.len() != HEADER.len() {
            return Err(Error::IoFailure(format!("line {line}: expected {} fields, found {}", HEADER.len(), rec.len())));
        }
        let bad = |col: usize| Error::NonNumericCell { row: line, col: HEADER[col].to_string() };
        let opt = |col: usize| -> Result<Option<f64>> {
            let s = &rec[col];
            if s.is_empty() { Ok(None) } else { s.parse().map(Some).map_err(|_| bad(col)) }
        };
        let int = |col: usize| rec[col].parse::<u64>().map_err(|_| bad(col));
        Ok(Self {
            mode: rec[0].to_string(),
            signal_kind: rec[1].to_string(),
            k_or_coeffs: rec[2].to_string(),
            sigma2: opt(3)?,
            model: rec[4].to_string(),
            lambda: opt(5)?,
            n_train: int(6)? as usize,
            num_runs: int(7)? as usize,
            err_train_mean: opt(8)?,
            err_test_mean: opt(9)?,
            opt_raw: opt(10)?,
            opt_scaled: opt(11)?,
            stderr: opt(12)?,
            theory_value: opt(13)?,
            theory_stderr: opt(14)?,
            seed: int(15)?,
            status: rec[16].to_string(),
            opt_per_n: opt(17)?,
        })
    }
}

fn io(e: impl std::fmt::Display) -> Error {
    Error::IoFailure(e.to_string())
}

/// Header plus one LF-terminated line per row.
pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(HEADER).map_err(io)?;
    for r in rows {
        w.write_record(r.fields()).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn csv_string(rows: &[ResultRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    String::from_utf8(buf).map_err(io)
}

pub fn emit_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| io(format!("{}: {e}", path.display())))?;
    write_csv(rows, std::io::BufWriter::new(file))
}

pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = r.headers().map_err(io)?.clone();
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(Error::IoFailure("unexpected CSV header".into()));
    }
    r.records().enumerate().map(|(i, rec)| ResultRow::from_fields(&rec.map_err(io)?, i + 2)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn row(v: f64) -> ResultRow {
        ResultRow {
            mode: "simulate".into(),
            signal_kind: "fk".into(),
            k_or_coeffs: "0.25".into(),
            sigma2: Some(0.05),
            model: "ols".into(),
            lambda: None,
            n_train: 1000,
            num_runs: 2000,
            err_train_mean: Some(v),
            err_test_mean: Some(v * 1.5),
            opt_raw: Some(v * 0.5),
            opt_scaled: Some(v * 7.0),
            stderr: Some(1e-3),
            theory_value: None,
            theory_stderr: None,
            seed: u64::MAX,
            status: "error: comma, and \"quotes\"".into(),
            opt_per_n: Some(v / 1000.0),
        }
    }

    #[test]
    fn empty_is_header_only() {
        let s = csv_string(&[]).unwrap();
        assert_eq!(s, HEADER.join(",") + "\n");
    }

    #[test]
    fn two_rows_three_lines() {
        let s = csv_string(&[row(0.1), row(0.2)]).unwrap();
        assert_eq!(s.lines().count(), 3);
        assert!(!s.contains('\r'));
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(v in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
            let rows = vec![row(v), row(-v)];
            let back = parse_csv(&csv_string(&rows).unwrap()).unwrap();
            for (a, b) in rows.iter().zip(&back) {
                prop_assert_eq!(a.err_train_mean.map(f64::to_bits), b.err_train_mean.map(f64::to_bits));
                prop_assert_eq!(a.opt_per_n.map(f64::to_bits), b.opt_per_n.map(f64::to_bits));
            }
            prop_assert_eq!(back, rows);
        }
    }
}
