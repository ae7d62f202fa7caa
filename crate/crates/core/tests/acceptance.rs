//! End-to-end checks, one PASS/FAIL line each. Run a subset with
//! `cargo test --test acceptance -- 4 5 9`.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use subsample_bms::evidence::{log_mlik_bic, EvidenceSpec, Fitter};
use subsample_bms::glm::{log_likelihood, score, unit_score, Dataset, Family};
use subsample_bms::harness::data::{sha256_file, CRIME_SHA256};
use subsample_bms::harness::metrics::{median, rmse};
use subsample_bms::mjmcmc::{run_chains, ChainConfig};
use subsample_bms::model_space::{
    enumerate_all, enumerate_log_evidence, estimates_from_log_evidence, mc_estimates, rm_estimates, EnumerateOptions,
    Model, ModelPrior, VisitedModelStore,
};
use subsample_bms::optim::{
    bsgd_path, gd_path, irls, s_irls_with, scaled_batch_score, CoolingSchedule, RandomSubsampler, SgdPhase,
    SirlsConfig, SirlsSgdConfig, StepSchedule,
};
use subsample_bms::par::Execution;
use subsample_bms::submcmc::{run_algo3, Algo3Config};

const CRIME_TRUTH: [f64; 15] =
    [0.34, 0.57, 0.39, 0.30, 0.23, 0.33, 0.29, 0.16, 0.23, 0.77, 0.59, 0.22, 0.16, 0.19, 0.82];

type Outcome = (bool, String);

fn fmt(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3}")).collect();
    format!("[{}]", parts.join(" "))
}

fn crime_enumeration() -> (Vec<f64>, f64) {
    let data = common::crime();
    let t0 = Instant::now();
    let e = enumerate_all(
        &data,
        &ModelPrior::default(),
        &EvidenceSpec::GPriorGaussian { g: 47.0 },
        &Fitter::irls(),
        &EnumerateOptions::default(),
    )
    .unwrap();
    assert_eq!(e.failures, 0);
    (e.estimates.inclusion_probs, t0.elapsed().as_secs_f64())
}

fn criterion_1() -> Outcome {
    const TOL: f64 = 0.005;
    const MAX_SECONDS: f64 = 60.0;
    let hash = sha256_file(&common::crime_path()).unwrap();
    assert_eq!(hash, CRIME_SHA256, "crime fixture is not the canonical file");
    let (inc, secs) = crime_enumeration();
    let worst = inc.iter().zip(&CRIME_TRUTH).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    (
        worst <= TOL && secs < MAX_SECONDS,
        format!("max |PMP - table| = {worst:.3} (tol {TOL}), {secs:.2}s for 32768 fits; got {}", fmt(&inc)),
    )
}

fn criterion_2() -> Outcome {
    const MAX_MEAN_RMSE_X100: f64 = 10.0;
    const MIN_RM_WINS: usize = 12;
    let data = common::crime();
    let (truth, _) = crime_enumeration();
    let cfg = ChainConfig::new(EvidenceSpec::GPriorGaussian { g: 47.0 }, 10_000, 0);
    let seeds: Vec<u64> = (1..=20).collect();
    let t0 = Instant::now();
    let runs = run_chains(&data, &cfg, &seeds, Execution::Parallel).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let prior = ModelPrior::default();
    let rm: Vec<Vec<f64>> = runs.iter().map(|r| rm_estimates(&r.store, &prior).unwrap().inclusion_probs).collect();
    let mc: Vec<Vec<f64>> = runs.iter().map(|r| mc_estimates(&r.trace).unwrap().inclusion_probs).collect();
    let rm_r = rmse(&rm, &truth).unwrap();
    let mc_r = rmse(&mc, &truth).unwrap();
    let wins = rm_r.per_covariate.iter().zip(&mc_r.per_covariate).filter(|(a, b)| a <= b).count();
    let vs_table = rmse(&rm, &CRIME_TRUTH).unwrap().mean * 100.0;
    (
        rm_r.mean * 100.0 <= MAX_MEAN_RMSE_X100 && wins >= MIN_RM_WINS,
        format!(
            "RM mean RMSE x100 = {:.2} (max {MAX_MEAN_RMSE_X100}), MC {:.2}, RM <= MC on {wins}/15 (min {MIN_RM_WINS}); \
             RM vs printed table {vs_table:.2}; {secs:.1}s",
            rm_r.mean * 100.0,
            mc_r.mean * 100.0
        ),
    )
}

fn criterion_3() -> Outcome {
    const TOL: f64 = 0.01;
    let data = common::p5_logistic(500, 3);
    let spec = EvidenceSpec::Aic;
    let prior = ModelPrior::default();
    let truth = enumerate_all(&data, &prior, &spec, &Fitter::irls(), &EnumerateOptions::default())
        .unwrap()
        .estimates
        .inclusion_probs;
    let out = run_chains(&data, &ChainConfig::new(spec, 50_000, 7), &[7], Execution::Sequential).unwrap();
    let rm = rm_estimates(&out[0].store, &prior).unwrap().inclusion_probs;
    let r = rmse(&[rm.clone()], &truth).unwrap();
    let worst = r.per_covariate.iter().copied().fold(0.0, f64::max);
    (
        worst < TOL,
        format!("max per-covariate RMSE {worst:.2e} (tol {TOL}); truth {} RM {}", fmt(&truth), fmt(&rm)),
    )
}

/// Random size and width, then the shared generator.
fn random_dataset(rng: &mut ChaCha8Rng, family: Family) -> Dataset {
    let n = rng.random_range(20..200);
    let p = rng.random_range(0..6);
    common::random_dataset(rng, n, p, family)
}

fn criterion_4() -> Outcome {
    const TOL: f64 = 1e-5;
    const H: f64 = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let family = if k % 2 == 0 { Family::GaussianIdentity } else { Family::BernoulliLogit };
        let d = random_dataset(&mut rng, family);
        let beta: Vec<f64> = (0..d.m()).map(|_| 0.7 * rng.sample::<f64, _>(StandardNormal)).collect();
        let g = score(&d, &beta).unwrap();
        for j in 0..d.m() {
            let mut up = beta.clone();
            let mut dn = beta.clone();
            up[j] += H;
            dn[j] -= H;
            let fd = (log_likelihood(&d, &up).unwrap() - log_likelihood(&d, &dn).unwrap()) / (2.0 * H);
            worst = worst.max((g[j] - fd).abs() / g[j].abs().max(1.0));
        }
    }
    (worst < TOL, format!("max relative error {worst:.2e} over 100 instances (tol {TOL:e})"))
}

fn criterion_5() -> Outcome {
    const TOL: f64 = 1e-8;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut sets: Vec<Dataset> = (0..20).map(|_| random_dataset(&mut rng, Family::GaussianIdentity)).collect();
    sets.push(subsample_bms::harness::data::gen_example1(&subsample_bms::harness::data::Example1Spec::new(10_000, 5))
        .unwrap()
        .gaussian()
        .unwrap());
    sets.push(common::crime());
    let mut most = 0;
    let mut all_converged = true;
    for d in &sets {
        let r = irls(d, TOL, 100).unwrap();
        all_converged &= r.converged;
        most = most.max(r.iterations);
    }
    (
        all_converged && most <= 2,
        format!("{} Gaussian datasets, max iterations {most} (max 2), all converged: {all_converged}", sets.len()),
    )
}

fn criterion_6() -> Outcome {
    let mut runner = TestRunner::new(Config { cases: 10_000, failure_persistence: None, ..Config::default() });
    let ops = prop::collection::vec((0u64..8, -50.0f64..50.0), 1..64);
    let result = runner.run(&ops, |ops| {
        let mut store = VisitedModelStore::new(3);
        let mut best = [f64::NEG_INFINITY; 8];
        let mut visits = [0u64; 8];
        for (bits, v) in ops {
            let m = Model::from_bits(bits, 3).unwrap();
            let before = store.best(&m).unwrap_or(f64::NEG_INFINITY);
            store.record_visit(m, v, None).unwrap();
            let after = store.best(&m).unwrap();
            best[bits as usize] = best[bits as usize].max(v);
            visits[bits as usize] += 1;
            if after < before || after != best[bits as usize] || store.get(&m).unwrap().visits != visits[bits as usize] {
                return Err(TestCaseError::fail(format!("model {bits}: {before} -> {after}")));
            }
        }
        Ok(())
    });
    match result {
        Ok(()) => (true, "10000 random interleavings, stored best never decreased".into()),
        Err(e) => (false, format!("counterexample: {e}")),
    }
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let sets = [
        common::example1_logistic(1_000, 7),
        subsample_bms::harness::data::gen_example1(&subsample_bms::harness::data::Example1Spec::new(1_000, 7))
            .unwrap()
            .gaussian()
            .unwrap(),
    ];
    let mut trials = 0;
    let mut violations = 0;
    let mut smallest_gap = f64::INFINITY;
    for k in 0..50 {
        let data = &sets[k % 2];
        let model = Model::from_bits(rng.random_range(0..1u64 << 15), 15).unwrap();
        let sub = data.select_columns(&model.active_columns()).unwrap();
        let fit = irls(&sub, 1e-10, 200).unwrap();
        let hat = fit.beta.as_slice();
        let at_hat = log_mlik_bic(data, &model, hat).unwrap().value;
        for _ in 0..20 {
            let scale = 10f64.powf(rng.random_range(-3.0..-0.3));
            let noise = Normal::new(0.0, scale).unwrap();
            let tilde: Vec<f64> = hat.iter().map(|b| b + noise.sample(&mut rng)).collect();
            let v = log_mlik_bic(data, &model, &tilde).unwrap().value;
            trials += 1;
            smallest_gap = smallest_gap.min(at_hat - v);
            if !(v < at_hat) {
                violations += 1;
            }
        }
    }
    (
        violations == 0 && trials == 1000,
        format!("{violations} violations in {trials} perturbations over 50 models, smallest gap {smallest_gap:.2e}"),
    )
}

fn criterion_8() -> Outcome {
    const TOL: f64 = 1e-12;
    let cov = [0.3, -1.2, 0.8, 2.0, -0.5, 1.1];
    let y = vec![1.0, 0.0, 1.0, 1.0, 0.0, 0.0];
    let d = Dataset::with_intercept(&cov, 1, y, Family::BernoulliLogit).unwrap();
    let beta = [0.2, -0.4];
    let full = unit_score(&d, &beta).unwrap();
    let mut avg = vec![0.0; 2];
    let mut batches = 0;
    for a in 0..6 {
        for b in a + 1..6 {
            let g = scaled_batch_score(&d, &beta, &[a, b]).unwrap();
            avg.iter_mut().zip(&g).for_each(|(s, v)| *s += v);
            batches += 1;
        }
    }
    avg.iter_mut().for_each(|v| *v /= batches as f64);
    let err = avg.iter().zip(&full).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    (batches == 15 && err <= TOL, format!("{batches} batches, max |mean - full| = {err:.2e} (tol {TOL:e})"))
}

fn criterion_9() -> Outcome {
    let d = common::example1_logistic(500, 9);
    let start = vec![0.0; d.m()];
    let sched = StepSchedule::new(0.5, 1.0).unwrap();
    let (_, gd_p) = gd_path(&d, &start, sched, 0.0, 300).unwrap();
    let (_, sgd_p) = bsgd_path(&d, &start, d.n(), sched, 300, 11).unwrap();
    let bits = |p: &Vec<Vec<f64>>| -> Vec<Vec<u64>> { p.iter().map(|b| b.iter().map(|v| v.to_bits()).collect()).collect() };
    let gd_same = gd_p.len() == 301 && bits(&gd_p) == bits(&sgd_p);

    let g = subsample_bms::harness::data::gen_example1(&subsample_bms::harness::data::Example1Spec::new(2_000, 9))
        .unwrap()
        .gaussian()
        .unwrap();
    let full = irls(&g, 1e-8, 100).unwrap();
    let cfg = SirlsConfig { cooling: CoolingSchedule::constant(1_000), ..SirlsConfig::new(g.n(), 10) };
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let run = s_irls_with(&g, &cfg, None, &mut RandomSubsampler(&mut rng)).unwrap();
    let target: Vec<u64> = full.beta.as_slice().iter().map(|v| v.to_bits()).collect();
    let sirls_same = run.betas.len() == 11
        && run.betas[1..].iter().all(|b| b.iter().map(|v| v.to_bits()).collect::<Vec<_>>() == target);
    (
        gd_same && sirls_same,
        format!("bsgd(b = n) == gd over 300 steps: {gd_same}; s-irls(n_s = n, tau = 1) == irls at iterations 1..10: {sirls_same}"),
    )
}

fn criterion_10() -> Outcome {
    const FRACTIONS: [f64; 4] = [0.0025, 0.01, 0.05, 0.20];
    const RUNS: usize = 20;
    let data = common::example1_logistic(10_000, 10);
    let p = data.p();
    let prior = ModelPrior::default();
    let spec = EvidenceSpec::LaplaceBic;
    let t0 = Instant::now();
    let truth = enumerate_all(&data, &prior, &spec, &Fitter::irls(), &EnumerateOptions::default())
        .unwrap()
        .estimates
        .inclusion_probs;
    let err_of = |log_ev: &[f64]| -> f64 {
        let inc = estimates_from_log_evidence(p, log_ev, &prior).unwrap().inclusion_probs;
        let abs: Vec<f64> = inc.iter().zip(&truth).map(|(a, b)| (a - b).abs()).collect();
        median(&abs)
    };
    let run = |fraction: f64, r: usize| -> Vec<f64> {
        let cfg = SirlsSgdConfig::for_fraction(data.n(), Family::BernoulliLogit, fraction, SgdPhase::Sgd).unwrap();
        let opts = EnumerateOptions { seed: 1_000 + r as u64, ..EnumerateOptions::default() };
        enumerate_log_evidence(&data, &spec, &Fitter::SirlsSgd(cfg), &opts).unwrap()
    };

    let smallest: Vec<Vec<f64>> = (0..RUNS).map(|r| run(FRACTIONS[0], r)).collect();
    let mut by_fraction = vec![err_of(&smallest[0])];
    for &f in &FRACTIONS[1..] {
        by_fraction.push(err_of(&run(f, 0)));
    }
    let best_of = |k: usize| -> f64 {
        let mut best = smallest[0].clone();
        for r in &smallest[1..k] {
            best.iter_mut().zip(r).for_each(|(b, v)| *b = b.max(*v));
        }
        err_of(&best)
    };
    let by_runs = vec![by_fraction[0], best_of(5), best_of(10), best_of(20)];
    let non_increasing = |v: &[f64]| v.windows(2).all(|w| w[1] <= w[0]);
    (
        non_increasing(&by_fraction) && non_increasing(&by_runs[1..]),
        format!(
            "median |PMP error| at 0.25/1/5/20%: {}; best of 1/5/10/20 runs at 0.25%: {}; {:.0}s",
            fmt4(&by_fraction),
            fmt4(&by_runs),
            t0.elapsed().as_secs_f64()
        ),
    )
}

fn fmt4(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", parts.join(" "))
}

fn criterion_11() -> Outcome {
    const RM_TOL: f64 = 0.02;
    const MC_TOL: f64 = 0.05;
    let data = common::p5_logistic(10_000, 11);
    let prior = ModelPrior::default();
    let spec = EvidenceSpec::LaplaceBic;
    let truth = enumerate_all(&data, &prior, &spec, &Fitter::irls(), &EnumerateOptions::default())
        .unwrap()
        .estimates
        .inclusion_probs;
    let fit = SirlsSgdConfig::for_fraction(data.n(), Family::BernoulliLogit, 0.005, SgdPhase::Sgd).unwrap();
    let mut cfg = Algo3Config::new(Fitter::SirlsSgd(fit), 200_000, 11);
    cfg.checkpoint_every = 200_000;
    let t0 = Instant::now();
    let out = run_algo3(&data, &cfg, None).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let rm = rmse(&[out.rm.inclusion_probs.clone()], &truth).unwrap();
    let mc = rmse(&[out.mc.inclusion_probs.clone()], &truth).unwrap();
    let rm_worst = rm.per_covariate.iter().copied().fold(0.0, f64::max);
    let mc_worst = mc.per_covariate.iter().copied().fold(0.0, f64::max);
    (
        rm_worst <= RM_TOL && mc_worst <= MC_TOL,
        format!(
            "RM max RMSE {rm_worst:.4} (tol {RM_TOL}), MC {mc_worst:.4} (tol {MC_TOL}); truth {} RM {} MC {}; {secs:.0}s",
            fmt(&truth),
            fmt(&out.rm.inclusion_probs),
            fmt(&out.mc.inclusion_probs)
        ),
    )
}

fn main() {
    let all: [(usize, fn() -> Outcome); 11] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
        (11, criterion_11),
    ];
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (id, f) in all {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let (pass, detail) = match catch_unwind(AssertUnwindSafe(f)) {
            Ok(o) => o,
            Err(e) => {
                let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
                (false, format!("panicked: {}", msg.unwrap_or_default()))
            }
        };
        println!("criterion {id}: {} {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
