//! Synthetic data, CSV ingestion and the `γ₀` helper.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{input_err, Result, ScgError};
use crate::model::Dataset;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub d: usize,
    pub n: usize,
    /// Correlation `ρ` in `Σ_ij = ρ^|i−j|`.
    pub rho: f64,
    pub snr: f64,
    pub k0: usize,
    pub seed: u64,
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 {
            return input_err("n and d must be positive");
        }
        if self.k0 > self.d {
            return input_err(format!("k0 = {} exceeds d = {}", self.k0, self.d));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return input_err(format!("rho = {} outside [0, 1)", self.rho));
        }
        if !(self.snr > 0.0 && self.snr.is_finite()) {
            return input_err("snr must be positive and finite");
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticData {
    pub dataset: Dataset,
    pub beta_star: Vec<f64>,
}

/// One row of `N(0, Σ)` with `Σ_ij = ρ^|i−j|`.
///
/// The Cholesky factor of this covariance is the AR(1) recursion
/// `x_1 = e_1`, `x_j = ρ·x_{j−1} + √(1−ρ²)·e_j`.
fn ar1_row(rng: &mut ChaCha8Rng, d: usize, rho: f64, out: &mut [f64]) {
    let scale = (1.0 - rho * rho).sqrt();
    let mut prev = 0.0;
    for (j, slot) in out.iter_mut().enumerate().take(d) {
        let e: f64 = rng.sample(StandardNormal);
        prev = if j == 0 { e } else { rho * prev + scale * e };
        *slot = prev;
    }
}

/// Noise standard deviation `√(‖Xβ*‖² / (n·SNR²))`.
pub fn noise_sd(x: &DMatrix<f64>, beta_star: &DVector<f64>, snr: f64) -> f64 {
    let signal = x * beta_star;
    (signal.norm_squared() / (x.nrows() as f64 * snr * snr)).sqrt()
}

pub fn generate_synthetic(cfg: &GenConfig) -> Result<SyntheticData> {
    cfg.validate()?;
    if cfg.rho == 0.0 {
        log::warn!("rho = 0 gives independent features");
    }
    let (n, d) = (cfg.n, cfg.d);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut x = DMatrix::zeros(n, d);
    let mut row = vec![0.0; d];
    for r in 0..n {
        ar1_row(&mut rng, d, cfg.rho, &mut row);
        for (c, v) in row.iter().enumerate() {
            x[(r, c)] = *v;
        }
    }
    let mut beta = vec![0.0; d];
    let mut positions = sample(&mut rng, d, cfg.k0).into_vec();
    positions.sort_unstable();
    for p in positions {
        beta[p] = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    }
    let beta_v = DVector::from_column_slice(&beta);
    let sd = noise_sd(&x, &beta_v, cfg.snr);
    let mut y = &x * &beta_v;
    for v in y.iter_mut() {
        let e: f64 = rng.sample(StandardNormal);
        *v += sd * e;
    }
    Ok(SyntheticData {
        dataset: Dataset::new(x, y)?,
        beta_star: beta,
    })
}

/// `γ₀ = d / (k · max_j ‖x_j‖²)` over the rows `x_j` of `X`.
pub fn compute_gamma0(x: &DMatrix<f64>, k: usize) -> Result<f64> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return input_err("empty design matrix");
    }
    if k == 0 {
        return input_err("k must be positive");
    }
    let max_row = x.row_iter().map(|r| r.norm_squared()).fold(0.0, f64::max);
    if max_row == 0.0 {
        return input_err("all rows of X are zero");
    }
    Ok(x.ncols() as f64 / (k as f64 * max_row))
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> ScgError {
    ScgError::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Numeric rows of a CSV file with their 1-based line numbers. A first row
/// containing any non-numeric cell is taken as a header and skipped.
fn read_numeric_rows(path: &Path) -> Result<Vec<(usize, Vec<f64>)>> {
    let file = File::open(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(path, line, e.to_string())
        })?;
        let line = record.position().map_or(i + 1, |p| p.line() as usize);
        if record.iter().all(|c| c.is_empty()) {
            continue;
        }
        let parsed: Vec<Option<f64>> = record.iter().map(|c| c.parse::<f64>().ok()).collect();
        if parsed.iter().any(Option::is_none) {
            if rows.is_empty() && i == 0 {
                continue;
            }
            let col = parsed.iter().position(Option::is_none).unwrap_or(0);
            return Err(parse_err(
                path,
                line,
                format!("non-numeric cell '{}' in column {}", &record[col], col + 1),
            ));
        }
        let values: Vec<f64> = parsed.into_iter().flatten().collect();
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(parse_err(path, line, format!("non-finite value in column {}", bad + 1)));
        }
        rows.push((line, values));
    }
    Ok(rows)
}

/// Reads `X` (n rows × d columns) and `Y` (n rows, one column).
pub fn load_csv(x_path: &Path, y_path: &Path) -> Result<Dataset> {
    let x_rows = read_numeric_rows(x_path)?;
    let y_rows = read_numeric_rows(y_path)?;
    let Some((_, first)) = x_rows.first() else {
        return Err(parse_err(x_path, 1, "no data rows"));
    };
    let d = first.len();
    for (line, row) in &x_rows {
        if row.len() != d {
            return Err(parse_err(
                x_path,
                *line,
                format!("expected {d} columns, found {}", row.len()),
            ));
        }
    }
    for (line, row) in &y_rows {
        if row.len() != 1 {
            return Err(parse_err(
                y_path,
                *line,
                format!("expected 1 column, found {}", row.len()),
            ));
        }
    }
    if x_rows.len() != y_rows.len() {
        let line = y_rows.last().map_or(1, |r| r.0 + 1);
        return Err(parse_err(
            y_path,
            line,
            format!("{} responses for {} samples", y_rows.len(), x_rows.len()),
        ));
    }
    let n = x_rows.len();
    let x = DMatrix::from_fn(n, d, |r, c| x_rows[r].1[c]);
    let y = DVector::from_fn(n, |r, _| y_rows[r].1[0]);
    Dataset::new(x, y)
}

pub fn write_matrix_csv(path: &Path, x: &DMatrix<f64>) -> Result<()> {
    let mut out = String::new();
    for r in 0..x.nrows() {
        let row: Vec<String> = (0..x.ncols()).map(|c| x[(r, c)].to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    File::create(path)?.write_all(out.as_bytes())?;
    Ok(())
}

pub fn write_vector_csv(path: &Path, v: &[f64]) -> Result<()> {
    let mut out = String::new();
    for x in v {
        out.push_str(&x.to_string());
        out.push('\n');
    }
    File::create(path)?.write_all(out.as_bytes())?;
    Ok(())
}
