use std::path::Path;

use crate::error::{Error, Result};
use crate::numcore::{mean_stderr, DenseMatrix};
use crate::signals::Dataset;

/// Reads a headed CSV of numbers. Every column except `target` becomes a
/// feature, standardized to zero mean and unit sample variance; constant
/// columns are only centred. Rows are numbered from 1 after the header.
pub fn load_dataset_csv(path: &Path, target: &str) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::IoFailure(format!("{}: {e}", path.display())))?;
    parse_dataset(&text, target)
}

pub fn parse_dataset(text: &str, target: &str) -> Result<Dataset> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> = match r.headers() {
        Ok(h) if !h.is_empty() && !(h.len() == 1 && h[0].is_empty()) => h.iter().map(str::to_string).collect(),
        _ => return Err(Error::EmptyFile),
    };
    let t = header.iter().position(|h| h == target).ok_or_else(|| Error::MissingColumn(target.to_string()))?;
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
    for (i, rec) in r.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::IoFailure(e.to_string()))?;
        for (j, name) in header.iter().enumerate() {
            let cell = rec.get(j).unwrap_or("");
            let v: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::NonNumericCell { row, col: name.clone() })?;
            cols[j].push(v);
        }
    }
    let n = cols[t].len();
    if n == 0 {
        return Err(Error::EmptyFile);
    }
    let y = cols[t].clone();
    let feats: Vec<Vec<f64>> = cols
        .into_iter()
        .enumerate()
        .filter(|(j, _)| *j != t)
        .map(|(_, c)| standardize(c))
        .collect();
    if feats.is_empty() {
        return Err(Error::MissingColumn("<feature>".into()));
    }
    let x = DenseMatrix::from_fn(n, feats.len(), |i, j| feats[j][i])?;
    Dataset::new(x, y, None)
}

fn standardize(mut c: Vec<f64>) -> Vec<f64> {
    let (m, se) = mean_stderr(&c);
    let sd = se * (c.len() as f64).sqrt();
    let sd = if sd > 0.0 && sd.is_finite() { sd } else { 1.0 };
    c.iter_mut().for_each(|v| *v = (*v - m) / sd);
    c
}
