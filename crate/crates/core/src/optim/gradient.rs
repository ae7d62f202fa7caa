use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{max_abs_diff, OptimResult, StepSchedule};
use crate::error::{Error, Result};
use crate::glm::{self, Dataset};

/// `β ← β + (α/n)·scale·g` where `g` is a row-sum score.
#[inline]
fn ascent_step(beta: &mut [f64], g: &[f64], alpha: f64, n: f64, scale: f64) {
    let a = alpha / n;
    for (b, gj) in beta.iter_mut().zip(g) {
        *b += a * (scale * gj);
    }
}

fn check_start(data: &Dataset, beta0: &[f64]) -> Result<()> {
    if beta0.len() != data.m() {
        return Err(Error::invalid(format!(
            "start has length {}, design has {} columns",
            beta0.len(),
            data.m()
        )));
    }
    Ok(())
}

/// Full-batch gradient ascent on the mean log-likelihood. Stops once the
/// largest coefficient change is at most `tol`.
pub fn gd(data: &Dataset, beta0: &[f64], schedule: StepSchedule, tol: f64, max_iter: usize) -> Result<OptimResult> {
    gd_impl(data, beta0, schedule, tol, max_iter, None)
}

/// [`gd`] that also returns every iterate, starting with `beta0`.
pub fn gd_path(
    data: &Dataset,
    beta0: &[f64],
    schedule: StepSchedule,
    tol: f64,
    max_iter: usize,
) -> Result<(OptimResult, Vec<Vec<f64>>)> {
    let mut path = Vec::new();
    let r = gd_impl(data, beta0, schedule, tol, max_iter, Some(&mut path))?;
    Ok((r, path))
}

fn gd_impl(
    data: &Dataset,
    beta0: &[f64],
    schedule: StepSchedule,
    tol: f64,
    max_iter: usize,
    mut path: Option<&mut Vec<Vec<f64>>>,
) -> Result<OptimResult> {
    check_start(data, beta0)?;
    schedule.validate()?;
    let n = data.n() as f64;
    let rows: Vec<usize> = (0..data.n()).collect();
    let mut beta = beta0.to_vec();
    let mut g = vec![0.0; data.m()];
    let mut trace = Vec::with_capacity(max_iter.min(1 << 16));
    let mut converged = false;
    if let Some(p) = path.as_deref_mut() {
        p.push(beta.clone());
    }
    for t in 0..max_iter {
        let dev = glm::unit_score_rows(data, &beta, &rows, &mut g);
        if !dev.is_finite() {
            return Err(Error::Divergence { iteration: t, last_finite: beta });
        }
        trace.push(dev);
        let prev = beta.clone();
        ascent_step(&mut beta, &g, schedule.alpha(t), n, 1.0);
        if !beta.iter().all(|b| b.is_finite()) {
            return Err(Error::Divergence { iteration: t + 1, last_finite: prev });
        }
        if let Some(p) = path.as_deref_mut() {
            p.push(beta.clone());
        }
        if max_abs_diff(&beta, &prev) <= tol {
            converged = true;
            break;
        }
    }
    Ok(OptimResult::finish(data, beta, trace, converged))
}

/// Batch SGD: each iteration draws `batch_size` rows uniformly without
/// replacement and steps along the batch score scaled by `n/batch_size`.
pub fn bsgd(
    data: &Dataset,
    beta0: &[f64],
    batch_size: usize,
    schedule: StepSchedule,
    iterations: usize,
    rng_seed: u64,
) -> Result<OptimResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let (beta, trace) = bsgd_core(data, beta0.to_vec(), batch_size, schedule, iterations, 0, &mut rng, None, true)?;
    Ok(OptimResult::finish(data, beta, trace, false))
}

/// [`bsgd`] that also returns every iterate, starting with `beta0`.
pub fn bsgd_path(
    data: &Dataset,
    beta0: &[f64],
    batch_size: usize,
    schedule: StepSchedule,
    iterations: usize,
    rng_seed: u64,
) -> Result<(OptimResult, Vec<Vec<f64>>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut path = Vec::new();
    let (beta, trace) =
        bsgd_core(data, beta0.to_vec(), batch_size, schedule, iterations, 0, &mut rng, Some(&mut path), true)?;
    Ok((OptimResult::finish(data, beta, trace, false), path))
}

/// Runs `iterations` BSGD steps with step indices `t_offset..`. The trace
/// holds the batch deviance scaled to the full sample.
#[allow(clippy::too_many_arguments)]
pub(crate) fn bsgd_core<R: Rng + ?Sized>(
    data: &Dataset,
    mut beta: Vec<f64>,
    batch_size: usize,
    schedule: StepSchedule,
    iterations: usize,
    t_offset: usize,
    rng: &mut R,
    mut path: Option<&mut Vec<Vec<f64>>>,
    record_trace: bool,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_start(data, &beta)?;
    schedule.validate()?;
    let n = data.n();
    if batch_size == 0 || batch_size > n {
        return Err(Error::invalid(format!("batch size {batch_size} outside 1..={n}")));
    }
    let scale = n as f64 / batch_size as f64;
    let nf = n as f64;
    let mut g = vec![0.0; data.m()];
    let mut trace = Vec::with_capacity(iterations);
    if let Some(p) = path.as_deref_mut() {
        p.push(beta.clone());
    }
    let mut sampler = BatchSampler::new(n);
    let mut rows = Vec::with_capacity(batch_size);
    for s in 0..iterations {
        sampler.draw(rng, batch_size, &mut rows);
        let dev = glm::unit_score_rows_opt(data, &beta, &rows, &mut g, record_trace);
        if !dev.is_finite() || !g.iter().all(|v| v.is_finite()) {
            return Err(Error::Divergence { iteration: s, last_finite: beta });
        }
        if record_trace {
            trace.push(dev * scale);
        }
        let prev = beta.clone();
        ascent_step(&mut beta, &g, schedule.alpha(t_offset + s), nf, scale);
        if !beta.iter().all(|b| b.is_finite()) {
            return Err(Error::Divergence { iteration: s + 1, last_finite: prev });
        }
        if let Some(p) = path.as_deref_mut() {
            p.push(beta.clone());
        }
    }
    Ok((beta, trace))
}

/// Uniform batches without replacement, returned in increasing row order.
/// A partial Fisher-Yates pass over a persistent permutation picks the rows
/// and a mask scan sorts them, so a draw costs `O(b + n/64)`-ish without
/// allocating.
struct BatchSampler {
    perm: Vec<usize>,
    mask: Vec<bool>,
}

impl BatchSampler {
    fn new(n: usize) -> Self {
        BatchSampler { perm: (0..n).collect(), mask: vec![false; n] }
    }

    fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R, b: usize, out: &mut Vec<usize>) {
        let n = self.perm.len();
        out.clear();
        if b == n {
            out.extend(0..n);
            return;
        }
        for k in 0..b {
            let j = rng.random_range(k..n);
            self.perm.swap(k, j);
            self.mask[self.perm[k]] = true;
        }
        if b * 16 < n {
            out.extend_from_slice(&self.perm[..b]);
            out.sort_unstable();
            for &i in out.iter() {
                self.mask[i] = false;
            }
        } else {
            for (i, m) in self.mask.iter_mut().enumerate() {
                if *m {
                    out.push(i);
                    *m = false;
                }
            }
        }
    }
}

/// Scaled batch score `(n/b) Σ_{i∈rows} x_i (y_i − μ_i)`.
pub fn scaled_batch_score(data: &Dataset, beta: &[f64], rows: &[usize]) -> Result<Vec<f64>> {
    check_start(data, beta)?;
    if rows.is_empty() || rows.iter().any(|&i| i >= data.n()) {
        return Err(Error::invalid("batch rows must be nonempty and in range"));
    }
    let mut g = vec![0.0; data.m()];
    glm::unit_score_rows(data, beta, rows, &mut g);
    let scale = data.n() as f64 / rows.len() as f64;
    g.iter_mut().for_each(|v| *v *= scale);
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glm::Family;

    fn line() -> Dataset {
        let cov = [-1.0, -0.5, 0.0, 0.5, 1.0];
        let y = vec![-1.9, -1.2, 0.1, 0.8, 2.2];
        Dataset::with_intercept(&cov, 1, y, Family::GaussianIdentity).unwrap()
    }

    #[test]
    fn monotone_deviance_small_step() {
        let d = line();
        let r = gd(&d, &[0.0, 0.0], StepSchedule::new(0.1, 1.0).unwrap(), 1e-12, 200).unwrap();
        for w in r.deviance_trace.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn bsgd_is_seeded() {
        let d = line();
        let s = StepSchedule::new(0.1, 0.99).unwrap();
        let a = bsgd(&d, &[0.0, 0.0], 2, s, 50, 9).unwrap();
        let b = bsgd(&d, &[0.0, 0.0], 2, s, 50, 9).unwrap();
        assert_eq!(a, b);
    }
}
