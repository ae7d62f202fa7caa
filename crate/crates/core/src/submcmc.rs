//! Model-space MCMC with subsampled MLE estimation.
//!
//! Each proposed model is fitted (S-IRLS-SGD by default), optionally
//! perturbed around the estimate, scored on the full data and max-cached.
//! The acceptance ratio uses the cached best evidence on both sides, so the
//! chain targets a posterior that sharpens as the cache improves.

use std::collections::HashSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evidence::{evidence_selected, fit_selected, EvidenceSpec, Fitter};
use crate::glm::Dataset;
use crate::harness::metrics::mean_abs_error;
use crate::mjmcmc::{mh_accept, propose, random_model, DesignCache, KernelMix};
use crate::model_space::{
    mc_estimates, rm_estimates, McAccumulator, Model, ModelPrior, PosteriorEstimates, VisitedModelStore,
};
use crate::optim::WarmStart;
use crate::par::{map_indexed, Execution};
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Restart {
    /// Every visit refits from scratch.
    #[default]
    Fresh,
    /// A revisit resumes from the stored coefficients and step schedule.
    Warm,
}

impl Restart {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "fresh" => Ok(Restart::Fresh),
            "warm" => Ok(Restart::Warm),
            other => Err(Error::invalid(format!("unknown restart mode '{other}' (fresh|warm)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Algo3Config {
    pub fitter: Fitter,
    pub evidence: EvidenceSpec,
    pub prior: ModelPrior,
    pub p_rand: f64,
    pub sigma_rand: f64,
    pub restart: Restart,
    pub mix: KernelMix,
    pub iterations: usize,
    pub seed: u64,
    /// Estimates are snapshotted every this many iterations and at the end.
    pub checkpoint_every: usize,
    pub initial: Option<Model>,
}

impl Algo3Config {
    pub fn new(fitter: Fitter, iterations: usize, seed: u64) -> Self {
        Algo3Config {
            fitter,
            evidence: EvidenceSpec::LaplaceBic,
            prior: ModelPrior::default(),
            p_rand: 0.01,
            sigma_rand: 0.01,
            restart: Restart::Fresh,
            mix: KernelMix::default(),
            iterations,
            seed,
            checkpoint_every: 1000,
            initial: None,
        }
    }

    pub fn validate(&self, data: &Dataset) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_rand) {
            return Err(Error::invalid("p_rand must lie in [0, 1]"));
        }
        if !(self.sigma_rand > 0.0 && self.sigma_rand.is_finite()) {
            return Err(Error::invalid("sigma_rand must be positive"));
        }
        if self.restart == Restart::Fresh && !self.fitter.is_deterministic() && self.p_rand == 0.0 {
            return Err(Error::invalid("fresh restarts with a stochastic fitter need p_rand > 0"));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("iterations must be at least 1"));
        }
        if self.checkpoint_every == 0 {
            return Err(Error::invalid("checkpoint_every must be at least 1"));
        }
        if let Some(m) = self.initial {
            if m.p() != data.p() {
                return Err(Error::invalid("initial model has the wrong p"));
            }
        }
        self.mix.validate(data.p())?;
        self.evidence.validate(data.family())
    }
}

/// Fitting side of the chain: everything that touches the data.
struct Fitting<'a> {
    cfg: &'a Algo3Config,
    designs: DesignCache<'a>,
    store: VisitedModelStore,
    failed_now: HashSet<Model>,
    rng: ChaCha8Rng,
    jitter: Normal<f64>,
}

impl Fitting<'_> {
    /// Fits, perturbs, scores on the full data and max-updates the store.
    /// Returns false if the fit failed (store untouched).
    fn fit_and_record(&mut self, m: Model) -> bool {
        let cfg = self.cfg;
        let warm = match cfg.restart {
            Restart::Warm => self.store.get(&m).and_then(|e| {
                e.last_beta.as_ref().map(|b| WarmStart { beta: b.clone(), sgd_position: e.sgd_position })
            }),
            Restart::Fresh => None,
        };
        let rng = &mut self.rng;
        let jitter = self.jitter;
        let out = self.designs.with(m, |sub| -> Result<(f64, Vec<f64>, usize)> {
            let (mut beta, pos) = fit_selected(sub, &cfg.evidence, &cfg.fitter, warm.as_ref(), rng)?;
            if cfg.p_rand > 0.0 && rng.random::<f64>() < cfg.p_rand {
                for b in beta.iter_mut() {
                    *b += jitter.sample(rng);
                }
            }
            let v = evidence_selected(sub, m.size(), &cfg.evidence, &beta)?;
            Ok((v, beta, pos))
        });
        match out.and_then(|r| r) {
            Ok((v, beta, pos)) => {
                self.store.record_visit(m, v, Some(&beta)).expect("finite evidence");
                self.store.set_sgd_position(&m, pos);
                true
            }
            Err(_) => false,
        }
    }

    fn log_post(&self, m: Model) -> f64 {
        self.store.best(&m).map_or(f64::NEG_INFINITY, |v| v + self.cfg.prior.log_prior(m))
    }

    /// Cached value, or fit and record.
    fn cached_or_fit(&mut self, m: Model) -> f64 {
        if self.store.best(&m).is_none() && !self.failed_now.contains(&m) && !self.fit_and_record(m) {
            self.failed_now.insert(m);
        }
        self.log_post(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Checkpoint {
    pub iteration: usize,
    pub rm_inclusion: Vec<f64>,
    pub mc_inclusion: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub iteration: usize,
    pub rm_error: f64,
    pub mc_error: f64,
}

#[derive(Debug, Clone)]
pub struct Algo3Output {
    pub trace: Vec<Model>,
    pub store: VisitedModelStore,
    pub rm: PosteriorEstimates,
    pub mc: PosteriorEstimates,
    pub checkpoints: Vec<Checkpoint>,
    /// Mean absolute inclusion error against `truth` at each checkpoint.
    pub rmse_curve: Option<Vec<CurvePoint>>,
    pub accepted: usize,
}

/// Runs the subsampling chain for `cfg.iterations` steps.
pub fn run_algo3(data: &Dataset, cfg: &Algo3Config, truth: Option<&[f64]>) -> Result<Algo3Output> {
    cfg.validate(data)?;
    let p = data.p();
    if let Some(t) = truth {
        if t.len() != p {
            return Err(Error::invalid(format!("truth has {} entries, expected {p}", t.len())));
        }
    }
    let mut rng = stream_rng(cfg.seed, 0);
    let mut fit = Fitting {
        cfg,
        designs: DesignCache::new(data),
        store: VisitedModelStore::new(p),
        failed_now: HashSet::new(),
        rng: stream_rng(cfg.seed, 1),
        jitter: Normal::new(0.0, cfg.sigma_rand).map_err(|e| Error::invalid(e.to_string()))?,
    };

    let mut current = cfg.initial.unwrap_or_else(|| random_model(p, &mut rng));
    fit.fit_and_record(current);
    let mut trace = Vec::with_capacity(cfg.iterations);
    let mut mc = McAccumulator::new(p);
    let mut checkpoints = Vec::new();
    let mut accepted = 0;

    for s in 1..=cfg.iterations {
        fit.failed_now.clear();
        let prop = {
            let mut oracle = |m: Model| fit.cached_or_fit(m);
            propose(current, &cfg.mix, &mut oracle, &mut rng)
        };
        let ok = fit.fit_and_record(prop.proposed);
        if ok {
            let cur = fit.log_post(current);
            let new = fit.log_post(prop.proposed);
            if mh_accept(cur, new, prop.log_q_ratio, &mut rng) {
                if prop.proposed != current {
                    accepted += 1;
                }
                current = prop.proposed;
            }
        }
        trace.push(current);
        mc.push(current);
        if s % cfg.checkpoint_every == 0 || s == cfg.iterations {
            let rm = rm_estimates(&fit.store, &cfg.prior)?;
            checkpoints.push(Checkpoint { iteration: s, rm_inclusion: rm.inclusion_probs, mc_inclusion: mc.inclusion() });
        }
    }

    let rm = rm_estimates(&fit.store, &cfg.prior)?;
    let mc_est = mc_estimates(&trace)?;
    let rmse_curve = truth.map(|t| {
        checkpoints
            .iter()
            .map(|c| CurvePoint {
                iteration: c.iteration,
                rm_error: mean_abs_error(&c.rm_inclusion, t),
                mc_error: mean_abs_error(&c.mc_inclusion, t),
            })
            .collect()
    });
    Ok(Algo3Output { trace, store: fit.store, rm, mc: mc_est, checkpoints, rmse_curve, accepted })
}

/// Independent chains, one per seed.
pub fn run_algo3_multi(
    data: &Dataset,
    cfg: &Algo3Config,
    seeds: &[u64],
    exec: Execution,
    truth: Option<&[f64]>,
) -> Result<Vec<Algo3Output>> {
    map_indexed(exec, seeds.len(), |i| {
        let c = Algo3Config { seed: seeds[i], ..cfg.clone() };
        run_algo3(data, &c, truth)
    })
    .into_iter()
    .collect()
}
