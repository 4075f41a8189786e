use std::fmt::Write;

use crate::error::{Error, Result};

use super::csvio::ResultRow;

/// Pivot of scaled optimism: one line per signal parameter, one column per
/// model and penalty, first-seen order. Theory rows show the theory value.
pub fn report_summary(rows: &[ResultRow]) -> Result<String> {
    if rows.iter().any(|r| r.mode != rows[0].mode) {
        return Err(Error::MixedModes);
    }
    let col_of = |r: &ResultRow| match r.lambda {
        Some(l) => format!("{} λ={l}", r.model),
        None => r.model.clone(),
    };
    let row_of = |r: &ResultRow| match r.sigma2 {
        Some(s) => format!("{} {} σ²={s}", r.signal_kind, r.k_or_coeffs),
        None => format!("{} {}", r.signal_kind, r.k_or_coeffs),
    };
    let mut cols: Vec<String> = Vec::new();
    let mut lines: Vec<String> = Vec::new();
    for r in rows {
        for (list, key) in [(&mut cols, col_of(r)), (&mut lines, row_of(r))] {
            if !list.contains(&key) {
                list.push(key);
            }
        }
    }
    let value = |r: &ResultRow| {
        let v = if r.mode == "theory" { r.theory_value } else { r.opt_scaled.or(r.opt_raw) };
        match v {
            Some(v) if r.is_ok() => format!("{v:.6}"),
            _ if !r.is_ok() => "failed".to_string(),
            _ => "-".to_string(),
        }
    };
    let mut grid = vec![vec!["-".to_string(); cols.len()]; lines.len()];
    for r in rows {
        let i = lines.iter().position(|l| *l == row_of(r)).expect("seen");
        let j = cols.iter().position(|c| *c == col_of(r)).expect("seen");
        grid[i][j] = value(r);
    }
    let w0 = lines.iter().map(|l| l.chars().count()).max().unwrap_or(0).max(6);
    let widths: Vec<usize> = cols
        .iter()
        .enumerate()
        .map(|(j, c)| grid.iter().map(|g| g[j].len()).max().unwrap_or(0).max(c.chars().count()))
        .collect();
    let mut out = String::new();
    let pad = |s: &str, w: usize| format!("{s}{}", " ".repeat(w.saturating_sub(s.chars().count())));
    let _ = write!(out, "{}", pad("signal", w0));
    for (c, w) in cols.iter().zip(&widths) {
        let _ = write!(out, "  {}", pad(c, *w));
    }
    out.push('\n');
    for (l, g) in lines.iter().zip(&grid) {
        let _ = write!(out, "{}", pad(l, w0));
        for (v, w) in g.iter().zip(&widths) {
            let _ = write!(out, "  {}", pad(v, *w));
        }
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(k: &str, lambda: f64, v: f64) -> ResultRow {
        ResultRow {
            mode: "simulate".into(),
            signal_kind: "fk".into(),
            k_or_coeffs: k.into(),
            sigma2: Some(0.01),
            model: "ridge".into(),
            lambda: Some(lambda),
            n_train: 10,
            num_runs: 2,
            err_train_mean: Some(0.0),
            err_test_mean: Some(v),
            opt_raw: Some(v),
            opt_scaled: Some(v),
            stderr: Some(0.0),
            theory_value: None,
            theory_stderr: None,
            seed: 1,
            status: "ok".into(),
            opt_per_n: Some(v / 10.0),
        }
    }

    #[test]
    fn pivot_shape() {
        let rows: Vec<ResultRow> = ["0", "0.5", "1"]
            .iter()
            .flat_map(|k| [0.0, 1.0].map(|l| r(k, l, l + 1.0)))
            .collect();
        let t = report_summary(&rows).unwrap();
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].contains("ridge λ=0") && lines[0].contains("ridge λ=1"));
        assert!(lines[2].starts_with("fk 0.5") && lines[2].contains("1.000000") && lines[2].contains("2.000000"));
    }

    #[test]
    fn single_row_and_mixed_modes() {
        let t = report_summary(&[r("0", 0.0, 3.25)]).unwrap();
        assert_eq!(t.lines().count(), 2);
        assert!(t.contains("3.250000"));
        let mut other = r("0", 1.0, 1.0);
        other.mode = "theory".into();
        assert_eq!(report_summary(&[r("0", 0.0, 1.0), other]), Err(Error::MixedModes));
    }
}
