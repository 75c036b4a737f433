use std::path::Path;

use hdvar::model::RegressionSample;
use nalgebra::{DMatrix, DVector};

use crate::exit::{CliError, CliResult};

/// Reads a CSV with a header row. The column named `response` is `y`; every
/// other column is a predictor, in file order.
pub fn read_dataset(path: &Path, response: &str) -> CliResult<(RegressionSample, Vec<String>)> {
    let input = |m: String| CliError::Input(format!("{}: {m}", path.display()));
    let mut reader =
        csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| input(e.to_string()))?;
    let headers: Vec<String> = reader.headers().map_err(|e| input(e.to_string()))?.iter().map(str::to_string).collect();
    let y_col = headers
        .iter()
        .position(|h| h == response)
        .ok_or_else(|| input(format!("no column named `{response}` in header {headers:?}")))?;
    let predictors: Vec<String> =
        headers.iter().enumerate().filter(|(j, _)| *j != y_col).map(|(_, h)| h.clone()).collect();
    if predictors.is_empty() {
        return Err(input("no predictor columns".into()));
    }
    let d = predictors.len();
    let mut y = Vec::new();
    let mut x = Vec::new();
    for (i, record) in reader.records().enumerate() {
        // data rows are numbered from 1, after the header
        let row = i + 1;
        let record = record.map_err(|e| input(format!("row {row}: {e}")))?;
        if record.len() != headers.len() {
            return Err(input(format!("row {row} has {} fields, expected {}", record.len(), headers.len())));
        }
        for (j, cell) in record.iter().enumerate() {
            let v: f64 =
                cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                    input(format!("row {row}, column `{}`: `{cell}` is not a finite number", headers[j]))
                })?;
            if j == y_col {
                y.push(v);
            } else {
                x.push(v);
            }
        }
    }
    if y.is_empty() {
        return Err(input("no data rows".into()));
    }
    let n = y.len();
    let sample = RegressionSample::new(DVector::from_vec(y), DMatrix::from_row_slice(n, d, &x))?;
    Ok((sample, predictors))
}

/// Writes `sample` as a CSV with columns `y, x1, .., xd`.
pub fn write_dataset(path: &Path, sample: &RegressionSample) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Internal(e.to_string()))?;
    let mut header = vec!["y".to_string()];
    header.extend((1..=sample.d()).map(|j| format!("x{j}")));
    w.write_record(&header).map_err(|e| CliError::Internal(e.to_string()))?;
    for i in 0..sample.n() {
        let mut rec = vec![sample.y()[i].to_string()];
        rec.extend(sample.x().row(i).iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(|e| CliError::Internal(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
