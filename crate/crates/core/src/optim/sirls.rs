use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{max_abs_diff, model_label, CoolingSchedule, OptimResult};
use crate::error::{Error, Result};
use crate::glm::{self, Dataset, GlmState, WeightVariant};
use crate::linalg::wls_solve;

#[derive(Debug, Clone, PartialEq)]
pub struct SirlsConfig {
    pub n_s: usize,
    pub iterations: usize,
    pub cooling: CoolingSchedule,
    pub delta_expl: f64,
    pub eps_w: f64,
    pub variant: WeightVariant,
}

impl SirlsConfig {
    pub fn new(n_s: usize, iterations: usize) -> Self {
        SirlsConfig {
            n_s,
            iterations,
            cooling: CoolingSchedule::default(),
            delta_expl: 0.5,
            eps_w: 1e-3,
            variant: WeightVariant::Fisher,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.n_s == 0 || self.n_s > n {
            return Err(Error::invalid(format!("subsample size {} outside 1..={n}", self.n_s)));
        }
        if !(self.delta_expl > 0.0) {
            return Err(Error::invalid("delta_expl must be positive"));
        }
        if !(self.eps_w > 0.0) {
            return Err(Error::invalid("eps_w must be positive"));
        }
        self.cooling.validate()
    }
}

/// Source of S-IRLS subsamples. Returned index sets must be sorted.
pub trait Subsampler {
    fn initial(&mut self, n: usize, n_s: usize) -> Vec<usize>;
    /// Draws `n_s` rows without replacement with probability ∝ `w_i + eps_w`.
    fn resample(&mut self, weights: &mut SamplingWeights, n_s: usize) -> Vec<usize>;
}

pub struct RandomSubsampler<'a, R: Rng + ?Sized>(pub &'a mut R);

impl<R: Rng + ?Sized> Subsampler for RandomSubsampler<'_, R> {
    fn initial(&mut self, n: usize, n_s: usize) -> Vec<usize> {
        let mut s = rand::seq::index::sample(self.0, n, n_s).into_vec();
        s.sort_unstable();
        s
    }

    fn resample(&mut self, weights: &mut SamplingWeights, n_s: usize) -> Vec<usize> {
        weights.draw(self.0, n_s)
    }
}

/// Per-row sampling weights `w_i + eps_w` in a Fenwick tree, so a weight
/// update and a draw both cost `O(log n)`.
#[derive(Debug, Clone)]
pub struct SamplingWeights {
    tree: Vec<f64>,
    value: Vec<f64>,
    eps_w: f64,
}

impl SamplingWeights {
    /// All rows start at weight `w0`.
    pub fn new(n: usize, w0: f64, eps_w: f64) -> Self {
        let value = vec![w0 + eps_w; n];
        let mut tree = vec![0.0; n + 1];
        for i in 1..=n {
            tree[i] += value[i - 1];
            let parent = i + (i & i.wrapping_neg());
            if parent <= n {
                tree[parent] += tree[i];
            }
        }
        SamplingWeights { tree, value, eps_w }
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    /// Weight of row `i` without the regulariser.
    pub fn get(&self, i: usize) -> f64 {
        self.value[i] - self.eps_w
    }

    pub fn set(&mut self, i: usize, w: f64) {
        self.add(i, w + self.eps_w - self.value[i]);
    }

    fn add(&mut self, i: usize, delta: f64) {
        self.value[i] += delta;
        let mut k = i + 1;
        while k < self.tree.len() {
            self.tree[k] += delta;
            k += k & k.wrapping_neg();
        }
    }

    fn total(&self) -> f64 {
        let mut k = self.value.len();
        let mut s = 0.0;
        while k > 0 {
            s += self.tree[k];
            k -= k & k.wrapping_neg();
        }
        s
    }

    /// Smallest index whose inclusive prefix sum exceeds `u`.
    fn find(&self, mut u: f64) -> usize {
        let n = self.value.len();
        let mut pos = 0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= u {
                u -= self.tree[next];
                pos = next;
            }
            step >>= 1;
        }
        pos.min(n - 1)
    }

    /// Successive sampling of `n_s` distinct rows, returned sorted. Small
    /// draws walk the tree; large ones use exponential keys `E_i / v_i` and
    /// keep the `n_s` smallest, which has the same distribution.
    pub fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R, n_s: usize) -> Vec<usize> {
        let n = self.value.len();
        assert!(n_s <= n, "cannot draw {n_s} of {n} rows");
        if n_s == n {
            return (0..n).collect();
        }
        let mut s: Vec<usize> = if n_s * 64 < n {
            let mut taken: Vec<(usize, f64)> = Vec::with_capacity(n_s);
            let mut total = self.total();
            while taken.len() < n_s {
                let i = self.find(rng.random::<f64>() * total);
                let v = self.value[i];
                if v > 0.0 {
                    self.add(i, -v);
                    total -= v;
                    taken.push((i, v));
                }
            }
            for &(i, v) in &taken {
                self.add(i, v - self.value[i]);
            }
            taken.into_iter().map(|(i, _)| i).collect()
        } else {
            let mut keys: Vec<(f64, usize)> = self
                .value
                .iter()
                .enumerate()
                .map(|(i, &v)| (-(1.0 - rng.random::<f64>()).ln() / v, i))
                .collect();
            keys.select_nth_unstable_by(n_s - 1, |a, b| a.0.total_cmp(&b.0));
            keys.truncate(n_s);
            keys.into_iter().map(|(_, i)| i).collect()
        };
        s.sort_unstable();
        s
    }
}

/// Full record of an S-IRLS run.
#[derive(Debug, Clone)]
pub struct SirlsRun {
    pub result: OptimResult,
    /// Effective temperature used at iterations 1..=T.
    pub taus: Vec<f64>,
    /// `β_0, β_1, ..., β_T`.
    pub betas: Vec<Vec<f64>>,
    /// Iterations at which the exploding-deviance rollback fired.
    pub backtracks: Vec<usize>,
}

pub fn s_irls(data: &Dataset, config: &SirlsConfig, rng_seed: u64) -> Result<OptimResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let run = s_irls_with(data, config, None, &mut RandomSubsampler(&mut rng))?;
    Ok(run.result)
}

/// S-IRLS with an explicit subsample source and optional start. Without a
/// start the first working response comes from the family's starting mean.
pub fn s_irls_with<S: Subsampler>(
    data: &Dataset,
    config: &SirlsConfig,
    start: Option<&[f64]>,
    sampler: &mut S,
) -> Result<SirlsRun> {
    let run = s_irls_core(data, config, start, sampler)?;
    let beta = run.betas.last().cloned().unwrap_or_default();
    let converged = run.betas.len() >= 2
        && max_abs_diff(&run.betas[run.betas.len() - 1], &run.betas[run.betas.len() - 2])
            < 1e-8 * (1.0 + beta.iter().fold(0.0f64, |m, b| m.max(b.abs())));
    let result = OptimResult::finish(data, beta, run.trace, converged);
    Ok(SirlsRun { result, taus: run.taus, betas: run.betas, backtracks: run.backtracks })
}

pub(crate) struct SirlsCore {
    pub betas: Vec<Vec<f64>>,
    pub trace: Vec<f64>,
    pub taus: Vec<f64>,
    pub backtracks: Vec<usize>,
}

fn eta_on(data: &Dataset, rows: &[usize], beta: &[f64]) -> Vec<f64> {
    rows.iter().map(|&i| data.eta(i, beta)).collect()
}

pub(crate) fn s_irls_core<S: Subsampler>(
    data: &Dataset,
    cfg: &SirlsConfig,
    start: Option<&[f64]>,
    sampler: &mut S,
) -> Result<SirlsCore> {
    let n = data.n();
    let m = data.m();
    cfg.validate(n)?;
    if let Some(s) = start {
        if s.len() != m {
            return Err(Error::invalid("start has the wrong length"));
        }
    }
    let family = data.family();
    let y = data.y();
    let scale = n as f64 / cfg.n_s as f64;
    let mut w_full = SamplingWeights::new(n, 1.0, cfg.eps_w);
    let mut subset = sampler.initial(n, cfg.n_s);
    let mut eta = match start {
        Some(b) => eta_on(data, &subset, b),
        None => subset.iter().map(|&i| family.link(family.initial_mean(y[i]))).collect(),
    };
    let mut betas = vec![start.map_or_else(|| vec![0.0; m], |b| b.to_vec())];
    let mut trace = Vec::with_capacity(cfg.iterations);
    let mut taus = Vec::with_capacity(cfg.iterations);
    let mut backtracks = Vec::new();
    let mut temp = 1.0;

    for t in 1..=cfg.iterations {
        let tau = cfg.cooling.tau(t) * temp;
        taus.push(tau);
        let mut st = GlmState::from_eta(family, eta, subset.iter().map(|&i| y[i]), cfg.variant);
        for (j, &i) in subset.iter().enumerate() {
            w_full.set(i, st.w[j]);
        }
        let beta_star = match wls_solve(data, &subset, &st.w, &st.z, None) {
            Some(b) => b,
            None => {
                subset = sampler.resample(&mut w_full, cfg.n_s);
                let e = eta_on(data, &subset, &betas[t - 1]);
                st = GlmState::from_eta(family, e, subset.iter().map(|&i| y[i]), cfg.variant);
                for (j, &i) in subset.iter().enumerate() {
                    w_full.set(i, st.w[j]);
                }
                wls_solve(data, &subset, &st.w, &st.z, None).ok_or_else(|| Error::RankDeficient {
                    model: model_label(data),
                    detail: format!("subsample WLS singular twice in a row at iteration {t}"),
                })?
            }
        };
        let prev = &betas[t - 1];
        let mut beta: Vec<f64> = beta_star
            .iter()
            .zip(prev)
            .map(|(bs, bp)| tau * bs + (1.0 - tau) * bp)
            .collect();
        if !beta.iter().all(|b| b.is_finite()) {
            return Err(Error::Divergence { iteration: t, last_finite: prev.clone() });
        }

        subset = sampler.resample(&mut w_full, cfg.n_s);
        eta = eta_on(data, &subset, &beta);
        let mut dev = scale * glm::deviance_rows(data, &beta, &subset);

        if t > 1 {
            let d_prev = trace[t - 2];
            if (dev - d_prev) / f64::abs(d_prev).max(f64::MIN_POSITIVE) > cfg.delta_expl {
                beta = betas[t - 2].clone();
                temp *= 0.5;
                eta = eta_on(data, &subset, &beta);
                dev = scale * glm::deviance_rows(data, &beta, &subset);
                backtracks.push(t);
            }
        }
        trace.push(dev);
        betas.push(beta);
    }
    Ok(SirlsCore { betas, trace, taus, backtracks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glm::Family;

    #[test]
    fn weighted_draws_follow_weights() {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut w = SamplingWeights::new(4, 0.0, 1e-9);
        w.set(0, 1.0);
        w.set(2, 3.0);
        let mut counts = [0usize; 4];
        let mut sampler = RandomSubsampler(&mut rng);
        for _ in 0..20_000 {
            let s = sampler.resample(&mut w, 1);
            counts[s[0]] += 1;
        }
        assert_eq!(counts[1] + counts[3], 0);
        let frac = counts[2] as f64 / 20_000.0;
        assert!((frac - 0.75).abs() < 0.015, "{frac}");
        assert!((w.get(2) - 3.0).abs() < 1e-12);
        assert_eq!(sampler.resample(&mut w, 4), vec![0, 1, 2, 3]);
        let mut flat = SamplingWeights::new(50, 1.0, 1e-3);
        let s = sampler.resample(&mut flat, 10);
        assert_eq!(s.len(), 10);
        assert!(s.windows(2).all(|p| p[0] < p[1]));
        // The key-based path: row 0 carries half the mass of 4 rows.
        let mut big = SamplingWeights::new(4, 1.0, 0.0);
        big.set(0, 3.0);
        let mut hits = 0;
        for _ in 0..20_000 {
            let s = sampler.resample(&mut big, 1.min(4));
            hits += usize::from(s[0] == 0);
        }
        assert!((hits as f64 / 20_000.0 - 0.5).abs() < 0.015);
        // The tree path.
        let mut sparse = SamplingWeights::new(1000, 0.0, 0.0);
        sparse.set(5, 1.0);
        sparse.set(7, 2.0);
        sparse.set(900, 1.0);
        let mut first = 0;
        for _ in 0..4000 {
            let s = sampler.resample(&mut sparse, 3);
            assert_eq!(s, vec![5, 7, 900]);
            let s = sampler.resample(&mut sparse, 1);
            first += usize::from(s[0] == 7);
        }
        assert!((first as f64 / 4000.0 - 0.5).abs() < 0.03);
    }

    #[test]
    fn config_validation() {
        assert!(SirlsConfig::new(0, 5).validate(10).is_err());
        assert!(SirlsConfig::new(11, 5).validate(10).is_err());
        assert!(SirlsConfig::new(10, 5).validate(10).is_ok());
    }

    #[test]
    fn logistic_runs_and_is_seeded() {
        let cov: Vec<f64> = (0..200).map(|i| ((i * 37) % 101) as f64 / 50.0 - 1.0).collect();
        let y: Vec<f64> = cov.iter().enumerate().map(|(i, &x)| if x + ((i * 13) % 7) as f64 / 7.0 - 0.5 > 0.0 { 1.0 } else { 0.0 }).collect();
        let d = Dataset::with_intercept(&cov, 1, y, Family::BernoulliLogit).unwrap();
        let cfg = SirlsConfig::new(50, 20);
        let a = s_irls(&d, &cfg, 3).unwrap();
        let b = s_irls(&d, &cfg, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.iterations, 20);
        assert!(a.full_data_deviance.is_finite());
    }
}
