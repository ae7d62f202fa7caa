//! Mode jumping MCMC over the model space.
//!
//! A step either draws a plain swap kernel (flip one or two random bits) or,
//! with probability `mode_jump_prob`, a mode jump: flip a large random set of
//! bits, climb greedily to a local optimum, then randomize each bit with
//! probability `rho`. The acceptance ratio of a mode jump only involves the
//! randomization densities; the greedy climb is deterministic, so its point
//! masses cancel.

use std::collections::{HashMap, HashSet};

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evidence::{evaluate_selected, EvidenceSpec, Fitter};
use crate::glm::Dataset;
use crate::model_space::{Model, ModelPrior, VisitedModelStore};
use crate::par::{map_indexed, Execution};
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwapKernel {
    /// Number of distinct bits flipped.
    pub flips: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelMix {
    pub mode_jump_prob: f64,
    pub swap_kernels: Vec<SwapKernel>,
    pub rho: f64,
    /// Jump fraction is drawn uniformly from this interval.
    pub jump_fraction: (f64, f64),
    /// Evaluations allowed per greedy climb; `None` means `20·p`.
    pub local_budget: Option<usize>,
}

impl Default for KernelMix {
    fn default() -> Self {
        KernelMix {
            mode_jump_prob: 0.05,
            swap_kernels: vec![SwapKernel { flips: 1, weight: 0.75 }, SwapKernel { flips: 2, weight: 0.25 }],
            rho: 0.1,
            jump_fraction: (0.2, 0.5),
            local_budget: None,
        }
    }
}

impl KernelMix {
    pub fn validate(&self, p: usize) -> Result<()> {
        if !(0.0..=1.0).contains(&self.mode_jump_prob) {
            return Err(Error::invalid("mode_jump_prob must lie in [0, 1]"));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::invalid("rho must lie in (0, 1)"));
        }
        let (lo, hi) = self.jump_fraction;
        if !(lo > 0.0 && lo <= hi && hi < 1.0) {
            return Err(Error::invalid("jump fraction range must lie within (0, 1)"));
        }
        if self.mode_jump_prob < 1.0 {
            if self.swap_kernels.is_empty() {
                return Err(Error::invalid("at least one swap kernel is needed"));
            }
            let total: f64 = self.swap_kernels.iter().map(|k| k.weight).sum();
            if (total - 1.0).abs() > 1e-9 || self.swap_kernels.iter().any(|k| !(k.weight >= 0.0)) {
                return Err(Error::invalid("swap kernel weights must be nonnegative and sum to 1"));
            }
            if self.swap_kernels.iter().any(|k| k.flips == 0 || k.flips > p) {
                return Err(Error::invalid(format!("swap kernels must flip between 1 and p = {p} bits")));
            }
        }
        if p == 0 {
            return Err(Error::invalid("model space needs p ≥ 1"));
        }
        Ok(())
    }

    pub fn budget(&self, p: usize) -> usize {
        self.local_budget.unwrap_or(20 * p)
    }
}

/// `⌈fraction·p⌉`, at least 1 and at most `p`.
pub fn jump_size(p: usize, fraction: f64) -> usize {
    ((fraction * p as f64).ceil() as usize).clamp(1, p)
}

/// Flips `⌈fraction·p⌉` distinct uniformly chosen bits. Returns the new
/// model and the flip set.
pub fn large_jump<R: Rng + ?Sized>(model: Model, fraction: f64, rng: &mut R) -> (Model, Vec<usize>) {
    let k = jump_size(model.p(), fraction);
    let idx = sample(rng, model.p(), k).into_vec();
    (model.flip_set(&idx), idx)
}

/// Greedy one-flip ascent. Scans neighbours in index order and moves to the
/// best strict improvement (lowest index wins ties), until no neighbour
/// improves or `budget` neighbour evaluations are spent.
pub fn local_opt(start: Model, score: &mut dyn FnMut(Model) -> f64, budget: usize) -> Model {
    if budget == 0 {
        return start;
    }
    let p = start.p();
    let mut cur = start;
    let mut cur_s = score(cur);
    let mut used = 0;
    loop {
        let mut best: Option<(Model, f64)> = None;
        for j in 0..p {
            if used == budget {
                break;
            }
            let cand = cur.flip(j);
            let s = score(cand);
            used += 1;
            if s > best.map_or(cur_s, |b| b.1) {
                best = Some((cand, s));
            }
        }
        match best {
            Some((m, s)) => {
                cur = m;
                cur_s = s;
            }
            None => return cur,
        }
        if used == budget {
            return cur;
        }
    }
}

/// Log density of reaching `to` from `from` when each bit flips
/// independently with probability `rho`.
pub fn randomisation_log_density(from: Model, to: Model, rho: f64) -> f64 {
    let d = from.hamming(to) as f64;
    let p = from.p() as f64;
    d * rho.ln() + (p - d) * (1.0 - rho).ln()
}

pub fn small_randomisation<R: Rng + ?Sized>(model: Model, rho: f64, rng: &mut R) -> (Model, f64) {
    let mut out = model;
    for j in 0..model.p() {
        if rng.random::<f64>() < rho {
            out = out.flip(j);
        }
    }
    (out, randomisation_log_density(model, out, rho))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProposalRecord {
    pub proposed: Model,
    pub log_q_forward: f64,
    pub log_q_backward: f64,
    pub flip_set: Vec<usize>,
    pub m0_star: Model,
    pub m1_star: Model,
    pub m0: Model,
    pub m1: Model,
}

/// Forward path m → m₀* → m₁* → m* and reverse path m* → m₀ → m₁ with a
/// shared flip set.
pub fn mode_jump_proposal<R: Rng + ?Sized>(
    current: Model,
    mix: &KernelMix,
    score: &mut dyn FnMut(Model) -> f64,
    rng: &mut R,
) -> ProposalRecord {
    let p = current.p();
    let (lo, hi) = mix.jump_fraction;
    let fraction = if hi > lo { rng.random_range(lo..hi) } else { lo };
    let (m0_star, flip_set) = large_jump(current, fraction, rng);
    let budget = mix.budget(p);
    let m1_star = local_opt(m0_star, score, budget);
    let (proposed, log_q_forward) = small_randomisation(m1_star, mix.rho, rng);
    let m0 = proposed.flip_set(&flip_set);
    let m1 = local_opt(m0, score, budget);
    let log_q_backward = randomisation_log_density(m1, current, mix.rho);
    ProposalRecord { proposed, log_q_forward, log_q_backward, flip_set, m0_star, m1_star, m0, m1 }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub proposed: Model,
    /// `ln q(m|m*) − ln q(m*|m)` as it enters the acceptance ratio.
    pub log_q_ratio: f64,
    pub mode_jump: Option<ProposalRecord>,
}

/// Draws from the kernel mixture.
pub fn propose<R: Rng + ?Sized>(
    current: Model,
    mix: &KernelMix,
    score: &mut dyn FnMut(Model) -> f64,
    rng: &mut R,
) -> Proposal {
    if mix.mode_jump_prob > 0.0 && rng.random::<f64>() < mix.mode_jump_prob {
        let rec = mode_jump_proposal(current, mix, score, rng);
        return Proposal {
            proposed: rec.proposed,
            log_q_ratio: rec.log_q_backward - rec.log_q_forward,
            mode_jump: Some(rec),
        };
    }
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut flips = mix.swap_kernels.last().map_or(1, |k| k.flips);
    for k in &mix.swap_kernels {
        acc += k.weight;
        if u < acc {
            flips = k.flips;
            break;
        }
    }
    let idx = sample(rng, current.p(), flips.min(current.p())).into_vec();
    Proposal { proposed: current.flip_set(&idx), log_q_ratio: 0.0, mode_jump: None }
}

/// Metropolis-Hastings decision on log scale. A `-∞` proposal is never
/// accepted; a `-∞` current state always moves to a finite proposal.
pub fn mh_accept<R: Rng + ?Sized>(log_pi_current: f64, log_pi_proposed: f64, log_q_ratio: f64, rng: &mut R) -> bool {
    if log_pi_proposed == f64::NEG_INFINITY || log_pi_proposed.is_nan() {
        return false;
    }
    if log_pi_current == f64::NEG_INFINITY {
        return true;
    }
    let log_r = log_pi_proposed - log_pi_current + log_q_ratio;
    log_r >= 0.0 || rng.random::<f64>().ln() < log_r
}

/// One MH step with `score` returning the log posterior (evidence + prior).
pub fn mh_step<R: Rng + ?Sized>(
    current: Model,
    mix: &KernelMix,
    score: &mut dyn FnMut(Model) -> f64,
    rng: &mut R,
) -> Model {
    let prop = propose(current, mix, score, rng);
    let cur = score(current);
    let new = score(prop.proposed);
    if mh_accept(cur, new, prop.log_q_ratio, rng) {
        prop.proposed
    } else {
        current
    }
}

/// Per-chain model designs kept around so repeated fits do not copy the
/// data again.
pub(crate) struct DesignCache<'a> {
    data: &'a Dataset,
    cache: HashMap<Model, Dataset>,
    cells: usize,
}

const DESIGN_CACHE_CELLS: usize = 1 << 25;

impl<'a> DesignCache<'a> {
    pub fn new(data: &'a Dataset) -> Self {
        DesignCache { data, cache: HashMap::new(), cells: 0 }
    }

    pub fn with<T>(&mut self, model: Model, f: impl FnOnce(&Dataset) -> T) -> Result<T> {
        if let Some(d) = self.cache.get(&model) {
            return Ok(f(d));
        }
        let sub = self.data.select_columns(&model.active_columns())?;
        let size = sub.n() * sub.m();
        if self.cells + size <= DESIGN_CACHE_CELLS {
            self.cells += size;
            let out = f(&sub);
            self.cache.insert(model, sub);
            Ok(out)
        } else {
            Ok(f(&sub))
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChainConfig {
    pub prior: ModelPrior,
    pub evidence: EvidenceSpec,
    pub fitter: Fitter,
    pub mix: KernelMix,
    pub iterations: usize,
    pub seed: u64,
    /// Starting model; random when absent.
    pub initial: Option<Model>,
}

impl ChainConfig {
    pub fn new(evidence: EvidenceSpec, iterations: usize, seed: u64) -> Self {
        ChainConfig {
            prior: ModelPrior::default(),
            evidence,
            fitter: Fitter::irls(),
            mix: KernelMix::default(),
            iterations,
            seed,
            initial: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChainOutput {
    /// State after each step.
    pub trace: Vec<Model>,
    pub store: VisitedModelStore,
    pub accepted: usize,
    /// Models whose fit failed.
    pub failed: HashSet<Model>,
}

/// Random starting model.
pub(crate) fn random_model<R: Rng + ?Sized>(p: usize, rng: &mut R) -> Model {
    let bits = if p == 64 { rng.random::<u64>() } else { rng.random::<u64>() & ((1u64 << p) - 1) };
    Model::from_bits(bits, p).expect("masked to p bits")
}

/// Runs an exact-evidence MJMCMC chain. Deterministic evaluators are
/// memoized through the store; stochastic ones refit on every request and
/// max-update.
pub fn run_chain(data: &Dataset, cfg: &ChainConfig) -> Result<ChainOutput> {
    let p = data.p();
    cfg.mix.validate(p)?;
    cfg.evidence.validate(data.family())?;
    if cfg.iterations == 0 {
        return Err(Error::invalid("iterations must be at least 1"));
    }
    if let Some(m) = cfg.initial {
        if m.p() != p {
            return Err(Error::invalid("initial model has the wrong p"));
        }
    }
    let mut rng = stream_rng(cfg.seed, 0);
    let mut fit_rng = stream_rng(cfg.seed, 1);
    let deterministic = cfg.fitter.is_deterministic();
    let mut store = VisitedModelStore::new(p);
    let mut failed = HashSet::new();
    let mut designs = DesignCache::new(data);
    let prior = cfg.prior;

    let mut score = |m: Model| -> f64 {
        if failed.contains(&m) {
            return f64::NEG_INFINITY;
        }
        if deterministic {
            if let Some(v) = store.best(&m) {
                store.bump_visits(&m);
                return v + prior.log_prior(m);
            }
        }
        let eval = designs
            .with(m, |sub| evaluate_selected(sub, &m, &cfg.evidence, &cfg.fitter, None, &mut fit_rng))
            .and_then(|r| r);
        match eval {
            Ok(e) => {
                store.record_visit(m, e.log_evidence, Some(&e.beta)).expect("finite evidence");
                store.best(&m).expect("just recorded") + prior.log_prior(m)
            }
            Err(_) => {
                failed.insert(m);
                f64::NEG_INFINITY
            }
        }
    };

    let mut current = cfg.initial.unwrap_or_else(|| random_model(p, &mut rng));
    let mut cur_score = score(current);
    let mut trace = Vec::with_capacity(cfg.iterations);
    let mut accepted = 0;
    for _ in 0..cfg.iterations {
        let prop = propose(current, &cfg.mix, &mut score, &mut rng);
        if !deterministic {
            cur_score = score(current).max(cur_score);
        }
        let new = score(prop.proposed);
        if mh_accept(cur_score, new, prop.log_q_ratio, &mut rng) {
            if prop.proposed != current {
                accepted += 1;
            }
            current = prop.proposed;
            cur_score = new;
        }
        trace.push(current);
    }
    drop(score);
    Ok(ChainOutput { trace, store, accepted, failed })
}

/// Independent chains, one per seed.
pub fn run_chains(data: &Dataset, cfg: &ChainConfig, seeds: &[u64], exec: Execution) -> Result<Vec<ChainOutput>> {
    map_indexed(exec, seeds.len(), |i| {
        let c = ChainConfig { seed: seeds[i], ..cfg.clone() };
        run_chain(data, &c)
    })
    .into_iter()
    .collect()
}

/// Max-merge of per-chain stores.
pub fn merge_stores<'a>(p: usize, stores: impl IntoIterator<Item = &'a VisitedModelStore>) -> VisitedModelStore {
    let mut out = VisitedModelStore::new(p);
    for s in stores {
        out.merge(s);
    }
    out
}

/// One hex mask per line.
pub fn trace_to_string(trace: &[Model]) -> String {
    let mut s = String::with_capacity(trace.len() * 5);
    for m in trace {
        s.push_str(&m.to_hex());
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn jump_size_ceiling() {
        assert_eq!(jump_size(15, 0.33), 5);
        assert_eq!(jump_size(10, 0.999), 10);
        assert_eq!(jump_size(5, 0.01), 1);
    }

    #[test]
    fn full_jump_complements() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = Model::from_gamma_str("10110").unwrap();
        let (j, idx) = large_jump(m, 0.999, &mut rng);
        assert_eq!(j, Model::from_gamma_str("01001").unwrap());
        assert_eq!(j.flip_set(&idx), m);
    }

    #[test]
    fn local_opt_fixed_point_and_budget() {
        let target = Model::from_gamma_str("101100").unwrap();
        let mut score = |m: Model| -(m.hamming(target) as f64);
        assert_eq!(local_opt(target, &mut score, 100), target);
        let start = Model::empty(6).unwrap();
        assert_eq!(local_opt(start, &mut score, 0), start);
        assert_eq!(local_opt(start, &mut score, 36), target);
    }

    #[test]
    fn randomisation_density() {
        let m = Model::from_bits(0x155, 10).unwrap();
        assert!((randomisation_log_density(m, m, 0.1) - 10.0 * 0.9f64.ln()).abs() < 1e-14);
        let o = Model::from_bits(0x0f0, 10).unwrap();
        assert_eq!(randomisation_log_density(m, o, 0.1), randomisation_log_density(o, m, 0.1));
    }

    #[test]
    fn equal_proposal_accepted() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert!(mh_accept(-5.0, -5.0, 0.0, &mut rng));
            assert!(mh_accept(-5.0, -4.0, 0.0, &mut rng));
            assert!(!mh_accept(-5.0, f64::NEG_INFINITY, 0.0, &mut rng));
        }
    }
}
