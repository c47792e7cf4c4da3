//! Per-entity price CSVs to a standardized log-return table.
//!
//! Each file holds one entity (named after the file stem) with a header row,
//! a `date` column and one column per feature. All files must list the same
//! dates in the same order.

use std::path::Path;

use log::warn;
use serde::Serialize;

use magl_core::Matrix;

use crate::error::{MaglError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSeriesTable {
    pub entities: Vec<String>,
    pub features: Vec<String>,
    /// Date of each return row, i.e. the later day of each pair.
    pub dates: Vec<String>,
    /// `T × (p·m)`, column `i·m + ℓ` holding feature `ℓ` of entity `i`.
    #[serde(skip)]
    pub values: Matrix,
    /// Price rows dropped for gaps or nonpositive values.
    pub dropped_rows: usize,
    /// Columns left unscaled because their variance was zero.
    pub zero_variance_columns: Vec<usize>,
}

impl TimeSeriesTable {
    pub fn p(&self) -> usize {
        self.entities.len()
    }

    pub fn m(&self) -> usize {
        self.features.len()
    }

    pub fn n(&self) -> usize {
        self.values.rows()
    }
}

/// `ln(z(t)/z(t−1))` for consecutive entries.
pub fn log_returns(prices: &[f64]) -> Vec<f64> {
    prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect()
}

/// Centers every column and scales it to unit sample variance (n − 1
/// denominator). Returns the columns with zero variance, which are only
/// centered.
pub fn standardize(x: &mut Matrix) -> Vec<usize> {
    let (rows, cols) = (x.rows(), x.cols());
    let mut flat = Vec::new();
    if rows == 0 {
        return flat;
    }
    for j in 0..cols {
        let mean = (0..rows).map(|i| x[(i, j)]).sum::<f64>() / rows as f64;
        for i in 0..rows {
            x[(i, j)] -= mean;
        }
        let ss: f64 = (0..rows).map(|i| x[(i, j)] * x[(i, j)]).sum();
        let sd = if rows > 1 { (ss / (rows - 1) as f64).sqrt() } else { 0.0 };
        if sd > 0.0 && sd.is_finite() {
            for i in 0..rows {
                x[(i, j)] /= sd;
            }
        } else {
            flat.push(j);
        }
    }
    flat
}

struct EntityFile {
    name: String,
    dates: Vec<String>,
    /// `None` marks a missing or unparseable cell.
    rows: Vec<Vec<Option<f64>>>,
}

fn read_entity(path: &Path, features: &[String]) -> Result<EntityFile> {
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| MaglError::Data(format!("{}: bad file name", path.display())))?
        .to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| MaglError::Data(format!("{}: {e}", path.display())))?;
    let headers = rdr.headers()?.clone();
    let find = |want: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(want));
    let date_col = find("date").ok_or_else(|| MaglError::Data(format!("{}: no date column", path.display())))?;
    let cols: Vec<usize> = features
        .iter()
        .map(|f| find(f).ok_or_else(|| MaglError::Data(format!("{}: no column `{f}`", path.display()))))
        .collect::<Result<_>>()?;
    let mut dates = Vec::new();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        dates.push(rec.get(date_col).unwrap_or("").to_string());
        rows.push(cols.iter().map(|&c| rec.get(c).and_then(|s| s.parse::<f64>().ok())).collect());
    }
    Ok(EntityFile { name, dates, rows })
}

/// Reads one CSV per entity, keeps the named feature columns, drops dates
/// with a missing or nonpositive value in any entity, takes log-returns and
/// standardizes each column.
pub fn ingest_csv<P: AsRef<Path>>(paths: &[P], feature_names: &[String]) -> Result<TimeSeriesTable> {
    if paths.is_empty() || feature_names.is_empty() {
        return Err(MaglError::Usage("ingestion needs at least one file and one feature".into()));
    }
    let files: Vec<EntityFile> = paths.iter().map(|p| read_entity(p.as_ref(), feature_names)).collect::<Result<_>>()?;
    let dates = &files[0].dates;
    for f in &files[1..] {
        if &f.dates != dates {
            return Err(MaglError::Data(format!("dates of `{}` do not align with `{}`", f.name, files[0].name)));
        }
    }
    let (p, m) = (files.len(), feature_names.len());
    let mut kept_dates = Vec::new();
    let mut prices: Vec<Vec<f64>> = Vec::new();
    let mut dropped = 0;
    for (t, date) in dates.iter().enumerate() {
        let row: Option<Vec<f64>> = files
            .iter()
            .flat_map(|f| f.rows[t].iter())
            .map(|v| v.filter(|x| *x > 0.0 && x.is_finite()))
            .collect();
        match row {
            Some(r) => {
                kept_dates.push(date.clone());
                prices.push(r);
            }
            None => dropped += 1,
        }
    }
    if dropped > 0 {
        warn!("dropped {dropped} of {} rows with missing or nonpositive values", dates.len());
    }
    if prices.len() < 2 {
        return Err(MaglError::Data("fewer than two usable rows".into()));
    }
    let cols = p * m;
    let mut values = Matrix::zeros(prices.len() - 1, cols);
    for j in 0..cols {
        let series: Vec<f64> = prices.iter().map(|r| r[j]).collect();
        for (i, r) in log_returns(&series).into_iter().enumerate() {
            values[(i, j)] = r;
        }
    }
    let flat = standardize(&mut values);
    if !flat.is_empty() {
        warn!("{} columns have zero variance and were left unscaled", flat.len());
    }
    Ok(TimeSeriesTable {
        entities: files.into_iter().map(|f| f.name).collect(),
        features: feature_names.to_vec(),
        dates: kept_dates[1..].to_vec(),
        values,
        dropped_rows: dropped,
        zero_variance_columns: flat,
    })
}
