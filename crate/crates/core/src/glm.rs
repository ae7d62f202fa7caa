//! Exponential-family GLM primitives for the Gaussian-identity and
//! Bernoulli-logit families.
//!
//! The design matrix is stored row-major with an all-ones intercept in
//! column 0. Optimizers touch a handful of rows at a time, so row access is
//! the hot path.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bernoulli means are clamped to `[MU_CLAMP, 1 - MU_CLAMP]`.
pub const MU_CLAMP: f64 = 1e-12;
/// Lower bound on the profiled Gaussian dispersion.
pub const SIGMA2_FLOOR: f64 = 1e-12;
/// Lower bound on `|dμ/dη|` and on IRLS weights.
pub const XI_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    GaussianIdentity,
    BernoulliLogit,
}

impl Family {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" | "gaussian-identity" => Ok(Family::GaussianIdentity),
            "binomial" | "bernoulli" | "logistic" | "bernoulli-logit" => Ok(Family::BernoulliLogit),
            other => Err(Error::invalid(format!("unknown family '{other}'"))),
        }
    }

    #[inline]
    pub fn mean(self, eta: f64) -> f64 {
        match self {
            Family::GaussianIdentity => eta,
            Family::BernoulliLogit => logistic(eta).clamp(MU_CLAMP, 1.0 - MU_CLAMP),
        }
    }

    #[inline]
    pub fn link(self, mu: f64) -> f64 {
        match self {
            Family::GaussianIdentity => mu,
            Family::BernoulliLogit => {
                let mu = mu.clamp(MU_CLAMP, 1.0 - MU_CLAMP);
                (mu / (1.0 - mu)).ln()
            }
        }
    }

    /// dμ/dη expressed through μ.
    #[inline]
    pub fn mu_eta(self, mu: f64) -> f64 {
        match self {
            Family::GaussianIdentity => 1.0,
            Family::BernoulliLogit => mu * (1.0 - mu),
        }
    }

    /// Variance function V(μ), unit dispersion.
    #[inline]
    pub fn variance(self, mu: f64) -> f64 {
        match self {
            Family::GaussianIdentity => 1.0,
            Family::BernoulliLogit => mu * (1.0 - mu),
        }
    }

    /// Starting mean used by IRLS-type fitters.
    #[inline]
    pub fn initial_mean(self, y: f64) -> f64 {
        match self {
            Family::GaussianIdentity => y,
            Family::BernoulliLogit => (y + 0.5) / 2.0,
        }
    }

    /// Per-observation deviance contribution at linear predictor `eta`.
    #[inline]
    pub(crate) fn unit_deviance(self, y: f64, eta: f64) -> f64 {
        match self {
            Family::GaussianIdentity => {
                let r = y - eta;
                r * r
            }
            Family::BernoulliLogit => -2.0 * (y * eta - softplus(eta)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::GaussianIdentity => "gaussian",
            Family::BernoulliLogit => "binomial",
        }
    }
}

#[inline]
pub fn logistic(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^x) without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// GLM regression coefficients, intercept first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficients(Vec<f64>);

impl Coefficients {
    pub fn new(beta: Vec<f64>) -> Result<Self> {
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::invalid("coefficients must be finite"));
        }
        Ok(Coefficients(beta))
    }

    pub fn zeros(m: usize) -> Self {
        Coefficients(vec![0.0; m])
    }

    pub(crate) fn from_vec_unchecked(beta: Vec<f64>) -> Self {
        Coefficients(beta)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|b| b.is_finite())
    }
}

impl std::ops::Deref for Coefficients {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Design matrix, response and family. Immutable after construction.
#[derive(Debug, Clone)]
pub struct Dataset {
    x: Vec<f64>,
    y: Vec<f64>,
    n: usize,
    m: usize,
    family: Family,
    names: Vec<String>,
}

impl Dataset {
    /// `x` is row-major `n × m` and must carry the intercept in column 0.
    pub fn new(x: Vec<f64>, y: Vec<f64>, m: usize, family: Family) -> Result<Self> {
        let n = y.len();
        if m == 0 {
            return Err(Error::invalid("design matrix needs at least the intercept column"));
        }
        if x.len() != n * m {
            return Err(Error::invalid(format!(
                "design has {} entries, expected {n} x {m}",
                x.len()
            )));
        }
        if n < m {
            return Err(Error::invalid(format!("n = {n} is smaller than m = {m}")));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("design or response contains non-finite values"));
        }
        if (0..n).any(|i| x[i * m] != 1.0) {
            return Err(Error::invalid("column 0 must be the all-ones intercept"));
        }
        if family == Family::BernoulliLogit && y.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::invalid("Bernoulli responses must be exactly 0 or 1"));
        }
        let mut names = Vec::with_capacity(m);
        names.push("(Intercept)".to_string());
        names.extend((1..m).map(|j| format!("x{j}")));
        Ok(Dataset { x, y, n, m, family, names })
    }

    /// Builds a dataset from row-major covariates (`n × p`, no intercept).
    pub fn with_intercept(covariates: &[f64], p: usize, y: Vec<f64>, family: Family) -> Result<Self> {
        let n = y.len();
        if covariates.len() != n * p {
            return Err(Error::invalid(format!(
                "covariates have {} entries, expected {n} x {p}",
                covariates.len()
            )));
        }
        let m = p + 1;
        let mut x = Vec::with_capacity(n * m);
        for i in 0..n {
            x.push(1.0);
            x.extend_from_slice(&covariates[i * p..(i + 1) * p]);
        }
        Dataset::new(x, y, m, family)
    }

    /// Replaces the covariate names (intercept excluded).
    pub fn with_covariate_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.m - 1 {
            return Err(Error::invalid(format!(
                "{} names supplied for {} covariates",
                names.len(),
                self.m - 1
            )));
        }
        self.names.truncate(1);
        self.names.extend(names);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of design columns, intercept included.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of candidate covariates.
    pub fn p(&self) -> usize {
        self.m - 1
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.names[1..]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.m..(i + 1) * self.m]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.x[i * self.m + j]).collect()
    }

    /// Copies the given design columns (column 0 must be among them, first).
    pub fn select_columns(&self, cols: &[usize]) -> Result<Dataset> {
        if cols.first() != Some(&0) {
            return Err(Error::invalid("selected columns must start with the intercept"));
        }
        if let Some(&bad) = cols.iter().find(|&&c| c >= self.m) {
            return Err(Error::invalid(format!("column {bad} out of range")));
        }
        let k = cols.len();
        let mut x = Vec::with_capacity(self.n * k);
        for i in 0..self.n {
            let row = self.row(i);
            x.extend(cols.iter().map(|&c| row[c]));
        }
        Ok(Dataset {
            x,
            y: self.y.clone(),
            n: self.n,
            m: k,
            family: self.family,
            names: cols.iter().map(|&c| self.names[c].clone()).collect(),
        })
    }

    /// Same design with a different response (e.g. the logistic companion).
    pub fn with_response(&self, y: Vec<f64>, family: Family) -> Result<Dataset> {
        let mut d = Dataset::new(self.x.clone(), y, self.m, family)?;
        d.names = self.names.clone();
        Ok(d)
    }

    #[inline]
    pub(crate) fn eta(&self, i: usize, beta: &[f64]) -> f64 {
        dot(self.row(i), beta)
    }

    fn check_beta(&self, beta: &[f64]) -> Result<()> {
        if beta.len() != self.m {
            return Err(Error::invalid(format!(
                "beta has length {}, design has {} columns",
                beta.len(),
                self.m
            )));
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// IRLS working quantities for a set of rows.
#[derive(Debug, Clone, PartialEq)]
pub struct GlmState {
    pub eta: Vec<f64>,
    pub mu: Vec<f64>,
    pub xi: Vec<f64>,
    pub var_mu: Vec<f64>,
    pub w: Vec<f64>,
    pub z: Vec<f64>,
}

/// IRLS weight form. `Fisher` is `ξ²/V(μ)`; `SquareRoot` is its square root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum WeightVariant {
    #[default]
    Fisher,
    SquareRoot,
}

impl WeightVariant {
    #[inline]
    pub(crate) fn weight(self, xi: f64, var_mu: f64) -> f64 {
        let w = xi * xi / var_mu;
        let w = match self {
            WeightVariant::Fisher => w,
            WeightVariant::SquareRoot => w.sqrt(),
        };
        w.max(XI_FLOOR)
    }
}

impl GlmState {
    /// Working quantities from linear predictors and matching responses.
    pub(crate) fn from_eta(family: Family, eta: Vec<f64>, y: impl Iterator<Item = f64>, variant: WeightVariant) -> Self {
        let k = eta.len();
        let mut st = GlmState {
            mu: Vec::with_capacity(k),
            xi: Vec::with_capacity(k),
            var_mu: Vec::with_capacity(k),
            w: Vec::with_capacity(k),
            z: Vec::with_capacity(k),
            eta,
        };
        for (&e, yi) in st.eta.iter().zip(y) {
            let mu = family.mean(e);
            let xi = family.mu_eta(mu).max(XI_FLOOR);
            let var = family.variance(mu).max(XI_FLOOR);
            st.mu.push(mu);
            st.xi.push(xi);
            st.var_mu.push(var);
            st.w.push(variant.weight(xi, var));
            st.z.push(e + (yi - mu) / xi);
        }
        st
    }
}

/// Elementwise inverse link.
pub fn link_inverse(family: Family, eta: &[f64]) -> Result<Vec<f64>> {
    if eta.iter().any(|e| !e.is_finite()) {
        return Err(Error::invalid("linear predictor contains non-finite values"));
    }
    Ok(eta.iter().map(|&e| family.mean(e)).collect())
}

fn rss(data: &Dataset, beta: &[f64]) -> f64 {
    (0..data.n)
        .map(|i| {
            let r = data.y[i] - data.eta(i, beta);
            r * r
        })
        .sum()
}

fn profiled_sigma2(data: &Dataset, rss: f64) -> f64 {
    (rss / data.n as f64).max(SIGMA2_FLOOR)
}

/// Log-likelihood. Gaussian uses the profiled dispersion `RSS/n`.
pub fn log_likelihood(data: &Dataset, beta: &[f64]) -> Result<f64> {
    data.check_beta(beta)?;
    Ok(log_likelihood_unchecked(data, beta))
}

pub(crate) fn log_likelihood_unchecked(data: &Dataset, beta: &[f64]) -> f64 {
    match data.family {
        Family::GaussianIdentity => {
            let rss = rss(data, beta);
            gaussian_profiled_loglik(data.n, rss)
        }
        Family::BernoulliLogit => (0..data.n)
            .map(|i| {
                let eta = data.eta(i, beta);
                data.y[i] * eta - softplus(eta)
            })
            .sum(),
    }
}

/// Log-likelihood implied by a full-data deviance.
pub(crate) fn log_likelihood_from_deviance(data: &Dataset, deviance: f64) -> f64 {
    match data.family {
        Family::GaussianIdentity => gaussian_profiled_loglik(data.n, deviance),
        Family::BernoulliLogit => -0.5 * deviance,
    }
}

/// `-n/2 ln(2π s²) - RSS/(2 s²)` with `s² = max(RSS/n, floor)`.
pub(crate) fn gaussian_profiled_loglik(n: usize, rss: f64) -> f64 {
    let nf = n as f64;
    let s2 = (rss / nf).max(SIGMA2_FLOOR);
    -0.5 * nf * (2.0 * std::f64::consts::PI * s2).ln() - rss / (2.0 * s2)
}

/// Gradient of [`log_likelihood`]: `Xᵀ D V⁻¹ (y − μ)`.
///
/// For the Gaussian family `V` carries the profiled dispersion, so this is
/// `Xᵀ(y − μ)/σ̂²`; for Bernoulli-logit it is `Xᵀ(y − μ)`.
pub fn score(data: &Dataset, beta: &[f64]) -> Result<Vec<f64>> {
    data.check_beta(beta)?;
    let mut g = vec![0.0; data.m];
    let mut rss = 0.0;
    for i in 0..data.n {
        let row = data.row(i);
        let mu = data.family.mean(dot(row, beta));
        let r = data.y[i] - mu;
        rss += r * r;
        for (gj, xj) in g.iter_mut().zip(row) {
            *gj += xj * r;
        }
    }
    if data.family == Family::GaussianIdentity {
        let s2 = profiled_sigma2(data, rss);
        g.iter_mut().for_each(|v| *v /= s2);
    }
    Ok(g)
}

/// `(μ, softplus(η))` for the logit link from one exponential; matches
/// [`Family::mean`] and [`softplus`] bit for bit.
#[inline]
fn logit_mean_softplus(eta: f64) -> (f64, f64) {
    let e = (-eta.abs()).exp();
    let mu = if eta >= 0.0 { 1.0 / (1.0 + e) } else { e / (1.0 + e) };
    (mu.clamp(MU_CLAMP, 1.0 - MU_CLAMP), eta.max(0.0) + e.ln_1p())
}

/// Unit-dispersion score `Σ_{i∈rows} x_i (y_i − μ_i)` and the matching
/// deviance contribution, accumulated in row order. With `with_deviance`
/// false the returned deviance is 0.
pub(crate) fn unit_score_rows_opt(
    data: &Dataset,
    beta: &[f64],
    rows: &[usize],
    grad: &mut [f64],
    with_deviance: bool,
) -> f64 {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut dev = 0.0;
    for &i in rows {
        let row = data.row(i);
        let eta = dot(row, beta);
        let y = data.y[i];
        let r = match data.family {
            Family::GaussianIdentity => {
                let r = y - eta;
                if with_deviance {
                    dev += r * r;
                }
                r
            }
            Family::BernoulliLogit => {
                if with_deviance {
                    let (mu, sp) = logit_mean_softplus(eta);
                    dev += -2.0 * (y * eta - sp);
                    y - mu
                } else {
                    y - Family::BernoulliLogit.mean(eta)
                }
            }
        };
        for (gj, xj) in grad.iter_mut().zip(row) {
            *gj += xj * r;
        }
    }
    dev
}

pub(crate) fn unit_score_rows(data: &Dataset, beta: &[f64], rows: &[usize], grad: &mut [f64]) -> f64 {
    unit_score_rows_opt(data, beta, rows, grad, true)
}

/// Unit-dispersion score over all rows (canonical-link form `Xᵀ(y − μ)`).
pub fn unit_score(data: &Dataset, beta: &[f64]) -> Result<Vec<f64>> {
    data.check_beta(beta)?;
    let rows: Vec<usize> = (0..data.n).collect();
    let mut g = vec![0.0; data.m];
    unit_score_rows(data, beta, &rows, &mut g);
    Ok(g)
}

/// Deviance: RSS for Gaussian, `−2 ℓ` for Bernoulli.
pub fn deviance(data: &Dataset, beta: &[f64]) -> Result<f64> {
    data.check_beta(beta)?;
    Ok(deviance_unchecked(data, beta))
}

pub(crate) fn deviance_unchecked(data: &Dataset, beta: &[f64]) -> f64 {
    (0..data.n)
        .map(|i| data.family.unit_deviance(data.y[i], data.eta(i, beta)))
        .sum()
}

pub(crate) fn deviance_rows(data: &Dataset, beta: &[f64], rows: &[usize]) -> f64 {
    rows.iter()
        .map(|&i| data.family.unit_deviance(data.y[i], data.eta(i, beta)))
        .sum()
}

/// Working quantities on all rows at `beta`.
pub fn working_quantities(data: &Dataset, beta: &[f64], variant: WeightVariant) -> Result<GlmState> {
    let rows: Vec<usize> = (0..data.n).collect();
    working_quantities_rows(data, &rows, beta, variant)
}

/// Working quantities on a row subset at `beta`.
pub fn working_quantities_rows(
    data: &Dataset,
    rows: &[usize],
    beta: &[f64],
    variant: WeightVariant,
) -> Result<GlmState> {
    data.check_beta(beta)?;
    if rows.is_empty() {
        return Err(Error::invalid("working quantities need a nonempty subset"));
    }
    if let Some(&bad) = rows.iter().find(|&&i| i >= data.n) {
        return Err(Error::invalid(format!("row {bad} out of range")));
    }
    let eta: Vec<f64> = rows.iter().map(|&i| data.eta(i, beta)).collect();
    Ok(GlmState::from_eta(data.family, eta, rows.iter().map(|&i| data.y[i]), variant))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn bern8() -> Dataset {
        let cov: Vec<f64> = (0..8).map(|i| i as f64 * 0.3 - 1.0).collect();
        let y = vec![0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0];
        Dataset::with_intercept(&cov, 1, y, Family::BernoulliLogit).unwrap()
    }

    #[test]
    fn inverse_link_values() {
        assert_eq!(link_inverse(Family::BernoulliLogit, &[0.0]).unwrap(), vec![0.5]);
        assert_eq!(
            link_inverse(Family::GaussianIdentity, &[-3.2, 7.0]).unwrap(),
            vec![-3.2, 7.0]
        );
        let mu = link_inverse(Family::BernoulliLogit, &[3f64.ln()]).unwrap();
        assert_abs_diff_eq!(mu[0], 0.75, epsilon = 1e-15);
        assert!(link_inverse(Family::BernoulliLogit, &[f64::NAN]).is_err());
    }

    #[test]
    fn link_round_trip() {
        // Beyond |η| ≈ 27.6 the mean sits on the clamp.
        for k in -250..=250 {
            let eta = k as f64 * 0.1;
            let back = Family::BernoulliLogit.link(Family::BernoulliLogit.mean(eta));
            // 1 − μ keeps only about ε·e^{|η|} relative precision.
            let tol = 4.0 * f64::EPSILON * (1.0 + eta.abs().exp());
            assert!((back - eta).abs() < tol, "eta {eta} -> {back}");
        }
    }

    #[test]
    fn null_bernoulli_loglik_and_deviance() {
        let d = bern8();
        let ll = log_likelihood(&d, &[0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(ll, 8.0 * 0.5f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(ll, -5.5452, epsilon = 1e-4);
        let dev = deviance(&d, &[0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(dev, 11.0904, epsilon = 1e-4);
    }

    #[test]
    fn canonical_score_at_zero() {
        let d = bern8();
        let g = score(&d, &[0.0, 0.0]).unwrap();
        let mut expect = [0.0; 2];
        for i in 0..8 {
            let r = d.y()[i] - 0.5;
            expect[0] += r;
            expect[1] += d.row(i)[1] * r;
        }
        assert_abs_diff_eq!(g[0], expect[0], epsilon = 1e-14);
        assert_abs_diff_eq!(g[1], expect[1], epsilon = 1e-14);
    }

    #[test]
    fn perfect_gaussian_fit_is_finite() {
        let cov = [1.0, 2.0, 3.0, 4.0];
        let y = vec![3.0, 5.0, 7.0, 9.0];
        let d = Dataset::with_intercept(&cov, 1, y, Family::GaussianIdentity).unwrap();
        let ll = log_likelihood(&d, &[1.0, 2.0]).unwrap();
        assert!(ll.is_finite() && ll > 20.0);
        assert_eq!(deviance(&d, &[1.0, 2.0]).unwrap(), 0.0);
    }

    #[test]
    fn working_quantities_gaussian_and_logit() {
        let cov = [0.5, -1.0, 2.0];
        let y = vec![1.0, 0.0, 1.0];
        let g = Dataset::with_intercept(&cov, 1, y.clone(), Family::GaussianIdentity).unwrap();
        let st = working_quantities(&g, &[0.3, -0.2], WeightVariant::Fisher).unwrap();
        assert_eq!(st.w, vec![1.0; 3]);
        assert_eq!(st.z, y);

        let b = Dataset::with_intercept(&cov, 1, y.clone(), Family::BernoulliLogit).unwrap();
        let st = working_quantities(&b, &[0.0, 0.0], WeightVariant::Fisher).unwrap();
        for i in 0..3 {
            assert_eq!(st.xi[i], 0.25);
            assert_eq!(st.var_mu[i], 0.25);
            assert_eq!(st.w[i], 0.25);
            assert_abs_diff_eq!(st.z[i], 4.0 * (y[i] - 0.5), epsilon = 1e-15);
        }
        let st = working_quantities(&b, &[0.0, 0.0], WeightVariant::SquareRoot).unwrap();
        assert_eq!(st.w, vec![0.5; 3]);
    }

    #[test]
    fn saturated_mean_stays_finite() {
        let cov = [1.0, -1.0];
        let b = Dataset::with_intercept(&cov, 1, vec![1.0, 0.0], Family::BernoulliLogit).unwrap();
        let st = working_quantities(&b, &[0.0, 80.0], WeightVariant::Fisher).unwrap();
        assert_eq!(st.mu[0], 1.0 - MU_CLAMP);
        for v in st.mu.iter().chain(&st.xi).chain(&st.w).chain(&st.z) {
            assert!(v.is_finite());
        }
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::with_intercept(&[1.0], 1, vec![0.5], Family::BernoulliLogit).is_err());
        assert!(Dataset::new(vec![2.0, 1.0], vec![1.0], 2, Family::GaussianIdentity).is_err());
        assert!(Dataset::with_intercept(&[f64::INFINITY, 1.0], 1, vec![1.0, 2.0], Family::GaussianIdentity).is_err());
        let d = bern8();
        assert!(log_likelihood(&d, &[0.0]).is_err());
    }
}
