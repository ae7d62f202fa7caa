use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::gradient::bsgd_core;
use super::sirls::{s_irls_core, RandomSubsampler};
use super::{OptimResult, SirlsConfig, StepSchedule};
use crate::error::{Error, Result};
use crate::glm::{Dataset, Family};

/// Which step-size preset the SGD phase uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SgdPhase {
    /// α₀ 0.05, decay 0.99.
    #[default]
    Sgd,
    /// α₀ 0.20, decay 0.99995.
    Bsgd,
}

impl SgdPhase {
    pub fn schedule(self) -> StepSchedule {
        match self {
            SgdPhase::Sgd => StepSchedule::sgd_default(),
            SgdPhase::Bsgd => StepSchedule::bsgd_default(),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(SgdPhase::Sgd),
            "bsgd" => Ok(SgdPhase::Bsgd),
            other => Err(Error::invalid(format!("unknown SGD phase '{other}' (sgd|bsgd)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SirlsSgdConfig {
    pub n_init: usize,
    pub sirls: SirlsConfig,
    pub sgd_batch: usize,
    pub sgd_sched: StepSchedule,
    pub sgd_iters: usize,
}

impl SirlsSgdConfig {
    /// Defaults for a subsample fraction of `n`: 20 + 250 iterations for
    /// Gaussian models, 75 + 500 for logistic ones. The S-IRLS subsample and
    /// the SGD batch share the same size.
    pub fn for_fraction(n: usize, family: Family, fraction: f64, phase: SgdPhase) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::invalid(format!("subsample fraction {fraction} outside (0, 1]")));
        }
        let size = ((fraction * n as f64).ceil() as usize).clamp(1, n);
        let (n_init, sgd_iters) = match family {
            Family::GaussianIdentity => (20, 250),
            Family::BernoulliLogit => (75, 500),
        };
        Ok(SirlsSgdConfig {
            n_init,
            sirls: SirlsConfig::new(size, n_init),
            sgd_batch: size,
            sgd_sched: phase.schedule(),
            sgd_iters,
        })
    }
}

/// Resume point for a model revisited under warm restarts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarmStart {
    pub beta: Vec<f64>,
    pub sgd_position: usize,
}

pub fn s_irls_sgd(
    data: &Dataset,
    n_init: usize,
    sirls: &SirlsConfig,
    sgd_batch: usize,
    sgd_sched: StepSchedule,
    sgd_iters: usize,
    rng_seed: u64,
) -> Result<OptimResult> {
    let cfg = SirlsSgdConfig { n_init, sirls: sirls.clone(), sgd_batch, sgd_sched, sgd_iters };
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    Ok(s_irls_sgd_with(data, &cfg, None, &mut rng)?.0)
}

/// Runs S-IRLS (or a standard-normal start) then BSGD, and evaluates the
/// result on the full data. A warm start skips the initialisation and
/// continues the step schedule where it stopped. Returns the result and the
/// schedule position reached.
pub fn s_irls_sgd_with<R: Rng + ?Sized>(
    data: &Dataset,
    cfg: &SirlsSgdConfig,
    warm: Option<&WarmStart>,
    rng: &mut R,
) -> Result<(OptimResult, usize)> {
    let (beta, trace, pos) = run(data, cfg, warm, rng, true)?;
    Ok((OptimResult::finish(data, beta, trace, false), pos))
}

/// Coefficients and schedule position only: no deviance trace and no
/// full-data pass.
pub(crate) fn s_irls_sgd_coefficients<R: Rng + ?Sized>(
    data: &Dataset,
    cfg: &SirlsSgdConfig,
    warm: Option<&WarmStart>,
    rng: &mut R,
) -> Result<(Vec<f64>, usize)> {
    let (beta, _, pos) = run(data, cfg, warm, rng, false)?;
    Ok((beta, pos))
}

fn run<R: Rng + ?Sized>(
    data: &Dataset,
    cfg: &SirlsSgdConfig,
    warm: Option<&WarmStart>,
    rng: &mut R,
    record: bool,
) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    let m = data.m();
    let mut trace = Vec::new();
    let (start, t_offset) = match warm {
        Some(w) => {
            if w.beta.len() != m {
                return Err(Error::invalid("warm-start coefficients have the wrong length"));
            }
            (w.beta.clone(), w.sgd_position)
        }
        None if cfg.n_init > 0 => {
            let sc = SirlsConfig { iterations: cfg.n_init, ..cfg.sirls.clone() };
            let core = s_irls_core(data, &sc, None, &mut RandomSubsampler(&mut *rng))?;
            if record {
                trace.extend_from_slice(&core.trace);
            }
            (core.betas.last().cloned().unwrap_or_else(|| vec![0.0; m]), 0)
        }
        None => ((0..m).map(|_| rng.sample(StandardNormal)).collect(), 0),
    };
    let (beta, sgd_trace) =
        bsgd_core(data, start, cfg.sgd_batch, cfg.sgd_sched, cfg.sgd_iters, t_offset, rng, None, record)?;
    trace.extend_from_slice(&sgd_trace);
    Ok((beta, trace, t_offset + cfg.sgd_iters))
}
