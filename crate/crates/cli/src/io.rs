//! Prediction-file and heatmap-file formats.
//!
//! Prediction CSV: UTF-8, header `y,p1,...,pm`, one sample per row; `y` is
//! a 1-based integer class and every probability row must lie on the
//! simplex within 1e-6. Reals round-trip through 17 significant digits.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use taumax_core::simplex::{validate_simplex, SimplexPoint};
use taumax_core::tuning::HeatmapRow;

use crate::errors::CliError;

/// Parses a prediction file; returns predictions, labels, and the class
/// count m inferred from the header. Errors carry the offending data row
/// number (first row after the header is row 1).
pub fn read_predictions(
    path: &Path,
) -> Result<(Vec<SimplexPoint<f64>>, Vec<usize>, usize), CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Input(format!("{}: empty file", path.display())))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() < 3 || cols[0] != "y" {
        return Err(CliError::Input(format!(
            "{}: expected header y,p1,...,pm with m >= 2, got {header:?}",
            path.display()
        )));
    }
    let m = cols.len() - 1;
    for (j, col) in cols[1..].iter().enumerate() {
        let want = format!("p{}", j + 1);
        if *col != want {
            return Err(CliError::Input(format!(
                "{}: header column {} is {col:?}, expected {want:?}",
                path.display(),
                j + 2
            )));
        }
    }

    let mut preds = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != m + 1 {
            return Err(CliError::Input(format!(
                "{}: row {row}: {} fields, expected {}",
                path.display(),
                fields.len(),
                m + 1
            )));
        }
        let y: usize = fields[0].parse().map_err(|_| {
            CliError::Input(format!(
                "{}: row {row}: cannot parse label {:?} as a positive integer",
                path.display(),
                fields[0]
            ))
        })?;
        if y < 1 || y > m {
            return Err(CliError::Input(format!(
                "{}: row {row}: label {y} outside [1, {m}]",
                path.display()
            )));
        }
        let mut coords = Vec::with_capacity(m);
        for f in &fields[1..] {
            let v: f64 = f.parse().map_err(|_| {
                CliError::Input(format!(
                    "{}: row {row}: cannot parse probability {f:?}",
                    path.display()
                ))
            })?;
            coords.push(v);
        }
        let p = validate_simplex(coords, 1e-6).map_err(|e| {
            CliError::Input(format!("{}: row {row}: {e}", path.display()))
        })?;
        preds.push(p);
        labels.push(y);
    }
    if preds.is_empty() {
        return Err(CliError::Input(format!(
            "{}: no data rows",
            path.display()
        )));
    }
    Ok((preds, labels, m))
}

/// Writes a prediction file in the interchange format (17 significant
/// digits, so re-reading reproduces identical values).
pub fn write_predictions(
    path: &Path,
    preds: &[SimplexPoint<f64>],
    labels: &[usize],
) -> Result<(), CliError> {
    let io_err = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let m = preds.first().map(|p| p.dim()).unwrap_or(0);
    let mut out = Vec::new();
    write!(out, "y").map_err(io_err)?;
    for j in 1..=m {
        write!(out, ",p{j}").map_err(io_err)?;
    }
    writeln!(out).map_err(io_err)?;
    for (p, &y) in preds.iter().zip(labels) {
        write!(out, "{y}").map_err(io_err)?;
        for v in p.coords() {
            write!(out, ",{v:.16e}").map_err(io_err)?;
        }
        writeln!(out).map_err(io_err)?;
    }
    fs::write(path, out).map_err(io_err)
}

/// Writes a heatmap CSV: header `t1,t2,t3,score`, one row per candidate in
/// ascending lexicographic threshold order, then a trailing comment block
/// flagging the argmax (barycenter) row and the best row by 1-based data
/// row number.
pub fn write_heatmap(path: &Path, rows: &[HeatmapRow<f64>]) -> Result<(), CliError> {
    let io_err = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };

    let mut sorted: Vec<&HeatmapRow<f64>> = rows.iter().collect();
    sorted.sort_by(|a, b| {
        a.tau
            .partial_cmp(&b.tau)
            .expect("thresholds are finite by construction")
    });

    let barycenter = [1.0 / 3.0; 3];
    let mut argmax_row = None;
    let mut best_row = 0usize;
    for (i, row) in sorted.iter().enumerate() {
        if row.tau == barycenter {
            argmax_row = Some(i);
        }
        if row.score > sorted[best_row].score {
            best_row = i;
        }
    }

    let mut out = Vec::new();
    writeln!(out, "t1,t2,t3,score").map_err(io_err)?;
    for row in &sorted {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            row.tau[0], row.tau[1], row.tau[2], row.score
        )
        .map_err(io_err)?;
    }
    let describe = |i: usize| {
        let r = &sorted[i];
        format!(
            "row {} (t = {:.4}, {:.4}, {:.4}), score {:.6}",
            i + 1,
            r.tau[0],
            r.tau[1],
            r.tau[2],
            r.score
        )
    };
    match argmax_row {
        Some(i) => writeln!(out, "# argmax: {}", describe(i)).map_err(io_err)?,
        None => writeln!(out, "# argmax: barycenter row missing").map_err(io_err)?,
    }
    writeln!(out, "# best: {}", describe(best_row)).map_err(io_err)?;
    fs::write(path, out).map_err(io_err)
}
