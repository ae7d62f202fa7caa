//! Simulated Example 1 data and CSV ingestion.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::glm::{logistic, Dataset, Family};
use crate::rng::stream_rng;

pub const EXAMPLE1_BETA: [f64; 15] = [0.48, 8.72, 1.76, 1.87, 0.0, 0.0, 0.0, 0.0, 4.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];

/// SHA-256 of the canonical 47×16 U.S. crime CSV (MASS `UScrime` column
/// order `M,So,Ed,Po1,Po2,LF,M.F,Pop,NW,U1,U2,GDP,Ineq,Prob,Time,y`).
pub const CRIME_SHA256: &str = "28a072570c33434212abb9e779736e6e328734bee00bec277982a36c2bebc1e4";
pub const CRIME_COLUMNS: [&str; 16] =
    ["M", "So", "Ed", "Po1", "Po2", "LF", "M.F", "Pop", "NW", "U1", "U2", "GDP", "Ineq", "Prob", "Time", "y"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Gaussian,
    Logistic,
    Both,
}

#[derive(Debug, Clone)]
pub struct Example1Spec {
    pub n: usize,
    pub seed: u64,
    pub beta_base: Vec<f64>,
    pub correlation: DMatrix<f64>,
    pub target: Target,
}

impl Example1Spec {
    pub fn new(n: usize, seed: u64) -> Self {
        Example1Spec {
            n,
            seed,
            beta_base: EXAMPLE1_BETA.to_vec(),
            correlation: default_correlation(EXAMPLE1_BETA.len()),
            target: Target::Both,
        }
    }

    /// `β* = β / √(n/100)`.
    pub fn beta_star(&self) -> Vec<f64> {
        let s = (self.n as f64 / 100.0).sqrt();
        self.beta_base.iter().map(|b| b / s).collect()
    }
}

/// Unit diagonal, 0.2 off the diagonal, and 0.99 between x2 and x9.
pub fn default_correlation(p: usize) -> DMatrix<f64> {
    let mut c = DMatrix::from_element(p, p, 0.2);
    c.fill_diagonal(1.0);
    if p >= 9 {
        c[(1, 8)] = 0.99;
        c[(8, 1)] = 0.99;
    }
    c
}

/// Parses a whitespace- or comma-separated square matrix.
pub fn parse_correlation(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .enumerate()
            .map(|(j, s)| {
                s.parse::<f64>().map_err(|e| Error::Parse {
                    location: format!("correlation line {}, entry {}", i + 1, j + 1),
                    detail: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let p = rows.len();
    if p == 0 || rows.iter().any(|r| r.len() != p) {
        return Err(Error::invalid("correlation matrix must be square and nonempty"));
    }
    Ok(DMatrix::from_fn(p, p, |i, j| rows[i][j]))
}

pub fn load_correlation(path: &Path) -> Result<DMatrix<f64>> {
    parse_correlation(&fs::read_to_string(path)?)
}

fn validate_correlation(c: &DMatrix<f64>) -> Result<()> {
    let p = c.nrows();
    for i in 0..p {
        if (c[(i, i)] - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("correlation diagonal entry {} is {}, not 1", i + 1, c[(i, i)])));
        }
        for j in 0..i {
            if (c[(i, j)] - c[(j, i)]).abs() > 1e-12 {
                return Err(Error::invalid(format!("correlation is not symmetric at ({}, {})", i + 1, j + 1)));
            }
        }
    }
    let eig = SymmetricEigen::new(c.clone());
    if let Some((k, &ev)) = eig.eigenvalues.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)) {
        if !(ev > 1e-12) {
            return Err(Error::invalid(format!(
                "correlation matrix is not positive definite: eigenvalue {ev:.6e} (index {k})"
            )));
        }
    }
    Ok(())
}

/// Simulated pair sharing one design.
#[derive(Debug, Clone)]
pub struct Example1Data {
    /// Row-major `n × p` covariates.
    pub x: Vec<f64>,
    pub p: usize,
    pub y_gaussian: Vec<f64>,
    pub y_logistic: Vec<f64>,
}

impl Example1Data {
    pub fn gaussian(&self) -> Result<Dataset> {
        Dataset::with_intercept(&self.x, self.p, self.y_gaussian.clone(), Family::GaussianIdentity)?
            .with_covariate_names(covariate_names(self.p))
    }

    pub fn logistic(&self) -> Result<Dataset> {
        Dataset::with_intercept(&self.x, self.p, self.y_logistic.clone(), Family::BernoulliLogit)?
            .with_covariate_names(covariate_names(self.p))
    }

    /// Writes `x1..xp,y` to `path`.
    pub fn write_csv(&self, path: &Path, response: Target) -> Result<()> {
        let y = match response {
            Target::Logistic => &self.y_logistic,
            _ => &self.y_gaussian,
        };
        let mut out = std::io::BufWriter::new(fs::File::create(path)?);
        let mut header = covariate_names(self.p);
        header.push("y".into());
        writeln!(out, "{}", header.join(","))?;
        let mut line = String::new();
        for (i, yi) in y.iter().enumerate() {
            line.clear();
            for v in &self.x[i * self.p..(i + 1) * self.p] {
                line.push_str(&format!("{v},"));
            }
            line.push_str(&format!("{yi}"));
            writeln!(out, "{line}")?;
        }
        out.flush()?;
        Ok(())
    }
}

fn covariate_names(p: usize) -> Vec<String> {
    (1..=p).map(|j| format!("x{j}")).collect()
}

/// Draws `x ~ N(0, C)`, `y ~ N(xβ*, 1)` and `y* ~ Bernoulli(logistic(y − ȳ))`.
pub fn gen_example1(spec: &Example1Spec) -> Result<Example1Data> {
    let p = spec.beta_base.len();
    if spec.n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    if spec.correlation.nrows() != p || spec.correlation.ncols() != p {
        return Err(Error::invalid(format!("correlation must be {p} × {p}")));
    }
    validate_correlation(&spec.correlation)?;
    let l = spec.correlation.clone().cholesky().ok_or_else(|| Error::invalid("Cholesky of the correlation failed"))?.l();
    let beta = spec.beta_star();
    let mut rng = stream_rng(spec.seed, 0);
    let mut x = Vec::with_capacity(spec.n * p);
    let mut y = Vec::with_capacity(spec.n);
    let mut z = vec![0.0; p];
    for _ in 0..spec.n {
        z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        let start = x.len();
        for r in 0..p {
            let mut s = 0.0;
            for c in 0..=r {
                s += l[(r, c)] * z[c];
            }
            x.push(s);
        }
        let eta: f64 = x[start..].iter().zip(&beta).map(|(a, b)| a * b).sum();
        let eps: f64 = rng.sample(StandardNormal);
        y.push(eta + eps);
    }
    let ybar = y.iter().sum::<f64>() / spec.n as f64;
    let mut rng_b = stream_rng(spec.seed, 1);
    let y_logistic = y
        .iter()
        .map(|&v| if rng_b.random::<f64>() < logistic(v - ybar) { 1.0 } else { 0.0 })
        .collect();
    Ok(Example1Data { x, p, y_gaussian: y, y_logistic })
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    pub response: String,
    /// Take natural logs of every column except these names.
    pub log_except: Option<Vec<String>>,
}

/// Reads a numeric CSV with a header row. The response column is pulled out
/// and an intercept is prepended to the remaining columns.
pub fn load_csv(path: &Path, response: &str, family: Family) -> Result<Dataset> {
    load_csv_with(path, family, &LoadOptions { response: response.into(), log_except: None })
}

pub fn load_csv_with(path: &Path, family: Family, opts: &LoadOptions) -> Result<Dataset> {
    let file = fs::File::open(path).map_err(|e| Error::Load(format!("cannot open {}: {e}", path.display())))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let resp = header
        .iter()
        .position(|h| h == &opts.response)
        .ok_or_else(|| Error::Load(format!("response column '{}' not found in {}", opts.response, path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = r + 2;
        if rec.len() != header.len() {
            return Err(Error::Load(format!("row {line} has {} fields, header has {}", rec.len(), header.len())));
        }
        let mut row = Vec::with_capacity(rec.len());
        for (c, field) in rec.iter().enumerate() {
            if field.is_empty() || field.eq_ignore_ascii_case("na") || field.eq_ignore_ascii_case("nan") {
                return Err(Error::Load(format!("missing value at row {line}, column '{}'", header[c])));
            }
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                location: format!("row {line}, column '{}'", header[c]),
                detail: format!("'{field}' is not numeric"),
            })?;
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Load(format!("{} has no data rows", path.display())));
    }
    if let Some(except) = &opts.log_except {
        for (c, name) in header.iter().enumerate() {
            if except.iter().any(|e| e == name) {
                continue;
            }
            for (r, row) in rows.iter_mut().enumerate() {
                if !(row[c] > 0.0) {
                    return Err(Error::Load(format!(
                        "cannot take the log of {} at row {}, column '{name}'",
                        row[c],
                        r + 2
                    )));
                }
                row[c] = row[c].ln();
            }
        }
    }
    let p = header.len() - 1;
    let mut x = Vec::with_capacity(rows.len() * p);
    let mut y = Vec::with_capacity(rows.len());
    for row in &rows {
        for (c, v) in row.iter().enumerate() {
            if c == resp {
                y.push(*v);
            } else {
                x.push(*v);
            }
        }
    }
    let names = header.iter().enumerate().filter(|(c, _)| *c != resp).map(|(_, h)| h.clone()).collect();
    Dataset::with_intercept(&x, p, y, family)?.with_covariate_names(names)
}

/// Hex SHA-256 of a file.
pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path)?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_scaling() {
        assert_eq!(Example1Spec::new(100, 1).beta_star(), EXAMPLE1_BETA.to_vec());
        let b = Example1Spec::new(10_000, 1).beta_star();
        assert!((b[1] - 0.872).abs() < 1e-12);
    }

    #[test]
    fn non_pd_rejected() {
        let mut spec = Example1Spec::new(50, 1);
        spec.correlation[(0, 1)] = 0.999;
        spec.correlation[(1, 0)] = 0.999;
        spec.correlation[(0, 8)] = -0.9;
        spec.correlation[(8, 0)] = -0.9;
        let err = gen_example1(&spec).unwrap_err().to_string();
        assert!(err.contains("eigenvalue"), "{err}");
    }

    #[test]
    fn shipped_file_matches_default() {
        let m = parse_correlation(include_str!("../../data/example1_correlation.txt")).unwrap();
        assert_eq!(m, default_correlation(15));
    }

    #[test]
    fn default_matrix_is_valid() {
        validate_correlation(&default_correlation(15)).unwrap();
    }
}
