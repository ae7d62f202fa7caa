use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use subsample_bms::evidence::{evaluate_model, EvidenceSpec, Fitter};
use subsample_bms::glm::{self, Dataset, Family};
use subsample_bms::harness::bench::{benchmark_optimizers, find_setting, table1_settings};
use subsample_bms::harness::config::{load_config, splice_config};
use subsample_bms::harness::data::{gen_example1, load_correlation, load_csv_with, Example1Spec, LoadOptions, Target};
use subsample_bms::harness::metrics::rmse;
use subsample_bms::harness::report::{
    enumeration_csv, estimates_csv, inclusion_csv, inclusion_from_rows, parse_truth, read_estimates, RunInclusion,
    RunReport, StoreSummary,
};
use subsample_bms::mjmcmc::{merge_stores, run_chains, trace_to_string, ChainConfig, KernelMix};
use subsample_bms::model_space::{enumerate_all, mc_estimates, rm_estimates, EnumerateOptions, Model, ModelPrior};
use subsample_bms::optim::{irls_with, s_irls_sgd_with, SgdPhase, SirlsSgdConfig};
use subsample_bms::par::{init_threads_from_env, Execution};
use subsample_bms::submcmc::{run_algo3_multi, Algo3Config, Restart};
use subsample_bms::Error;

#[derive(Parser, Debug)]
#[command(name = "subbms", version, about = "Bayesian model selection for GLMs with subsampling MLE and mode-jumping MCMC")]
#[command(args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Simulate the Example 1 Gaussian/logistic pair.
    GenData(GenDataArgs),
    /// Fit one model and report coefficients and evidence as JSON.
    Fit(FitArgs),
    /// Evaluate every model.
    Enumerate(EnumerateArgs),
    /// Mode-jumping MCMC with exact (full-data) evidence.
    Mjmcmc(MjmcmcArgs),
    /// Mode-jumping MCMC with subsampled MLE estimation.
    Submcmc(SubmcmcArgs),
    /// Optimizer comparison on a set of models.
    Benchmark(BenchmarkArgs),
    /// RMSE of inclusion estimates against a truth vector.
    Rmse(RmseArgs),
}

#[derive(Args, Debug, Serialize)]
struct Common {
    /// `key = value` file of flags for this subcommand.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Run on the calling thread only.
    #[arg(long)]
    sequential: bool,
}

impl Common {
    fn exec(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }

    fn out_file(&self, name: &str) -> Result<PathBuf, Error> {
        fs::create_dir_all(&self.out)?;
        Ok(self.out.join(name))
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
enum FamilyArg {
    Gaussian,
    Logistic,
}

#[derive(Args, Debug, Serialize)]
struct DataArgs {
    /// CSV with a header row.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "y")]
    response: String,
    #[arg(long, value_enum, default_value = "gaussian")]
    family: FamilyArg,
    /// Take logs of every column.
    #[arg(long)]
    log: bool,
    /// Take logs of every column except these (comma separated).
    #[arg(long, value_delimiter = ',')]
    log_except: Option<Vec<String>>,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset, Error> {
        let family = match self.family {
            FamilyArg::Gaussian => Family::GaussianIdentity,
            FamilyArg::Logistic => Family::BernoulliLogit,
        };
        let log_except = match (&self.log_except, self.log) {
            (Some(v), _) => Some(v.clone()),
            (None, true) => Some(Vec::new()),
            (None, false) => None,
        };
        load_csv_with(&self.data, family, &LoadOptions { response: self.response.clone(), log_except })
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
enum EvidenceArg {
    Bic,
    Laplace,
    Gprior,
    Aic,
}

#[derive(Args, Debug, Serialize)]
struct EvidenceArgs {
    #[arg(long, value_enum, default_value = "bic")]
    evidence: EvidenceArg,
    /// g for the g-prior (defaults to n).
    #[arg(long)]
    g: Option<f64>,
    /// Coefficient prior standard deviation for the full Laplace evidence.
    #[arg(long, default_value_t = 10.0)]
    prior_sd: f64,
    /// Prior inclusion probability of each covariate.
    #[arg(long, default_value_t = 0.5)]
    q: f64,
}

impl EvidenceArgs {
    fn spec(&self, n: usize) -> EvidenceSpec {
        match self.evidence {
            EvidenceArg::Bic => EvidenceSpec::LaplaceBic,
            EvidenceArg::Laplace => EvidenceSpec::LaplaceFull { prior_sd: self.prior_sd },
            EvidenceArg::Gprior => EvidenceSpec::GPriorGaussian { g: self.g.unwrap_or(n as f64) },
            EvidenceArg::Aic => EvidenceSpec::Aic,
        }
    }

    fn prior(&self) -> Result<ModelPrior, Error> {
        ModelPrior::new(self.q)
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, PartialEq)]
enum OptimizerArg {
    Irls,
    SIrlsSgd,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
enum PhaseArg {
    Sgd,
    Bsgd,
}

#[derive(Args, Debug, Serialize)]
struct FitterArgs {
    #[arg(long, value_enum, default_value = "irls")]
    optimizer: OptimizerArg,
    /// Subsample fraction for S-IRLS-SGD.
    #[arg(long, default_value_t = 0.01)]
    fraction: f64,
    #[arg(long, value_enum, default_value = "sgd")]
    sgd_phase: PhaseArg,
    /// Overrides the family default S-IRLS iteration count.
    #[arg(long)]
    n_init: Option<usize>,
    /// Overrides the family default SGD iteration count.
    #[arg(long)]
    sgd_iters: Option<usize>,
}

impl FitterArgs {
    fn fitter(&self, data: &Dataset) -> Result<Fitter, Error> {
        match self.optimizer {
            OptimizerArg::Irls => Ok(Fitter::irls()),
            OptimizerArg::SIrlsSgd => {
                let phase = match self.sgd_phase {
                    PhaseArg::Sgd => SgdPhase::Sgd,
                    PhaseArg::Bsgd => SgdPhase::Bsgd,
                };
                let mut cfg = SirlsSgdConfig::for_fraction(data.n(), data.family(), self.fraction, phase)?;
                if let Some(k) = self.n_init {
                    cfg.n_init = k;
                    cfg.sirls.iterations = k;
                }
                if let Some(k) = self.sgd_iters {
                    cfg.sgd_iters = k;
                }
                Ok(Fitter::SirlsSgd(cfg))
            }
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct ChainArgs {
    #[arg(long, default_value_t = 10_000)]
    iterations: usize,
    /// Independent chains with seeds seed, seed+1, ...
    #[arg(long, default_value_t = 1)]
    chains: usize,
    #[arg(long, default_value_t = 0.05)]
    mode_jump_prob: f64,
    #[arg(long, default_value_t = 0.1)]
    rho: f64,
    /// Starting model as a hex bitmask.
    #[arg(long)]
    initial: Option<String>,
    /// Truth inclusion probabilities for RMSE curves.
    #[arg(long)]
    truth: Option<PathBuf>,
}

impl ChainArgs {
    fn mix(&self) -> KernelMix {
        KernelMix { mode_jump_prob: self.mode_jump_prob, rho: self.rho, ..KernelMix::default() }
    }

    fn seeds(&self, seed: u64) -> Result<Vec<u64>, Error> {
        if self.chains == 0 {
            return Err(invalid("chains must be at least 1"));
        }
        Ok((0..self.chains as u64).map(|k| seed.wrapping_add(k)).collect())
    }

    fn initial(&self, p: usize) -> Result<Option<Model>, Error> {
        self.initial.as_deref().map(|h| Model::from_hex(h, p)).transpose()
    }

    fn truth(&self, p: usize) -> Result<Option<Vec<f64>>, Error> {
        let Some(path) = &self.truth else { return Ok(None) };
        let t = parse_truth(&fs::read_to_string(path)?)?;
        if t.len() != p {
            return Err(invalid(format!("truth has {} values, data has p = {p}", t.len())));
        }
        Ok(Some(t))
    }
}

#[derive(Args, Debug, Serialize)]
struct GenDataArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    /// Correlation matrix file (whitespace separated rows).
    #[arg(long)]
    correlation: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct FitArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    evidence: EvidenceArgs,
    #[command(flatten)]
    fitter: FitterArgs,
    /// Inclusion string such as 1011 (first character is covariate 1).
    #[arg(long, conflicts_with = "model_hex")]
    model: Option<String>,
    #[arg(long)]
    model_hex: Option<String>,
}

#[derive(Args, Debug, Serialize)]
struct EnumerateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    evidence: EvidenceArgs,
    #[command(flatten)]
    fitter: FitterArgs,
    /// Enumerate above the 25-covariate guard.
    #[arg(long)]
    allow_large: bool,
}

#[derive(Args, Debug, Serialize)]
struct MjmcmcArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    evidence: EvidenceArgs,
    #[command(flatten)]
    chain: ChainArgs,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
enum RestartArg {
    Fresh,
    Warm,
}

#[derive(Args, Debug, Serialize)]
struct SubmcmcArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    evidence: EvidenceArgs,
    #[command(flatten)]
    fitter: SubFitterArgs,
    #[command(flatten)]
    chain: ChainArgs,
    #[arg(long, default_value_t = 0.01)]
    p_rand: f64,
    #[arg(long, default_value_t = 0.01)]
    sigma_rand: f64,
    #[arg(long, value_enum, default_value = "fresh")]
    restart: RestartArg,
    #[arg(long, default_value_t = 1000)]
    checkpoint_every: usize,
}

/// Same knobs as [`FitterArgs`] with S-IRLS-SGD as the default optimizer.
#[derive(Args, Debug, Serialize)]
struct SubFitterArgs {
    #[arg(long, value_enum, default_value = "s-irls-sgd")]
    optimizer: OptimizerArg,
    #[arg(long, default_value_t = 0.01)]
    fraction: f64,
    #[arg(long, value_enum, default_value = "sgd")]
    sgd_phase: PhaseArg,
    #[arg(long)]
    n_init: Option<usize>,
    #[arg(long)]
    sgd_iters: Option<usize>,
}

impl SubFitterArgs {
    fn fitter(&self, data: &Dataset) -> Result<Fitter, Error> {
        FitterArgs {
            optimizer: self.optimizer,
            fraction: self.fraction,
            sgd_phase: self.sgd_phase,
            n_init: self.n_init,
            sgd_iters: self.sgd_iters,
        }
        .fitter(data)
    }
}

#[derive(Args, Debug, Serialize)]
struct BenchmarkArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    evidence: EvidenceArgs,
    /// File with one model hex per line; otherwise the top models of a full
    /// IRLS enumeration are used.
    #[arg(long)]
    models: Option<PathBuf>,
    #[arg(long, default_value_t = 128)]
    top: usize,
    #[arg(long, default_value_t = 20)]
    repeats: usize,
    /// Comma-separated setting names (default: every row of the table).
    #[arg(long, value_delimiter = ',')]
    optimizers: Option<Vec<String>>,
}

#[derive(Args, Debug, Serialize)]
struct RmseArgs {
    #[command(flatten)]
    common: Common,
    /// Estimates files, one per run.
    #[arg(long, value_delimiter = ',', required = true)]
    estimates: Vec<PathBuf>,
    #[arg(long)]
    truth: PathBuf,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text)?;
    Ok(())
}

fn config_echo<T: Serialize>(args: &T) -> serde_json::Value {
    serde_json::to_value(args).unwrap_or(serde_json::Value::Null)
}

fn gen_data(a: &GenDataArgs) -> Result<(), Error> {
    let mut spec = Example1Spec::new(a.n, a.common.seed);
    if let Some(path) = &a.correlation {
        spec.correlation = load_correlation(path)?;
    }
    spec.target = Target::Both;
    let d = gen_example1(&spec)?;
    d.write_csv(&a.common.out_file("gaussian.csv")?, Target::Gaussian)?;
    d.write_csv(&a.common.out_file("logistic.csv")?, Target::Logistic)?;
    Ok(())
}

#[derive(Serialize)]
struct FitReport {
    model_hex: String,
    covariates: Vec<String>,
    family: &'static str,
    coefficients: Vec<f64>,
    log_evidence: f64,
    deviance: f64,
    log_likelihood: f64,
    iterations: usize,
    converged: bool,
    deviance_trace: Vec<f64>,
}

fn fit(a: &FitArgs) -> Result<(), Error> {
    let data = a.data.load()?;
    let p = data.p();
    let model = match (&a.model, &a.model_hex) {
        (Some(g), _) => Model::from_gamma_str(g)?,
        (None, Some(h)) => Model::from_hex(h, p)?,
        (None, None) => Model::full(p)?,
    };
    if model.p() != p {
        return Err(invalid(format!("model has {} covariates, data has {p}", model.p())));
    }
    let spec = a.evidence.spec(data.n());
    let fitter = a.fitter.fitter(&data)?;
    let sub = data.select_columns(&model.active_columns())?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.common.seed);
    let run = match &fitter {
        Fitter::Irls(o) => irls_with(&sub, o)?,
        Fitter::SirlsSgd(cfg) => s_irls_sgd_with(&sub, cfg, None, &mut rng)?.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(a.common.seed);
    let ev = evaluate_model(&data, &model, &spec, &fitter, None, &mut rng)?;
    let report = FitReport {
        model_hex: model.to_hex(),
        covariates: sub.names().to_vec(),
        family: data.family().name(),
        log_evidence: ev.log_evidence,
        deviance: glm::deviance(&sub, &ev.beta)?,
        log_likelihood: glm::log_likelihood(&sub, &ev.beta)?,
        coefficients: ev.beta,
        iterations: run.iterations,
        converged: run.converged,
        deviance_trace: run.deviance_trace,
    };
    write(&a.common.out_file("fit.json")?, &(serde_json::to_string_pretty(&report)? + "\n"))
}

fn enumerate(a: &EnumerateArgs) -> Result<(), Error> {
    let data = a.data.load()?;
    let spec = a.evidence.spec(data.n());
    let fitter = a.fitter.fitter(&data)?;
    let opts = EnumerateOptions { allow_large: a.allow_large, exec: a.common.exec(), seed: a.common.seed };
    let e = enumerate_all(&data, &a.evidence.prior()?, &spec, &fitter, &opts)?;
    if e.failures > 0 {
        eprintln!("warning: {} model fits failed and were given zero mass", e.failures);
    }
    write(&a.common.out_file("estimates.csv")?, &enumeration_csv(data.p(), &e.log_evidence, &e.estimates))?;
    write(&a.common.out_file("inclusion.csv")?, &inclusion_csv(data.covariate_names(), &e.estimates.inclusion_probs, None))
}

fn write_traces(common: &Common, traces: &[&[Model]]) -> Result<(), Error> {
    if traces.len() == 1 {
        write(&common.out_file("trace.txt")?, &trace_to_string(traces[0]))
    } else {
        for (k, t) in traces.iter().enumerate() {
            write(&common.out_file(&format!("trace_{k}.txt"))?, &trace_to_string(t))?;
        }
        Ok(())
    }
}

fn mjmcmc(a: &MjmcmcArgs) -> Result<(), Error> {
    let data = a.data.load()?;
    let p = data.p();
    let mut cfg = ChainConfig::new(a.evidence.spec(data.n()), a.chain.iterations, a.common.seed);
    cfg.prior = a.evidence.prior()?;
    cfg.mix = a.chain.mix();
    cfg.initial = a.chain.initial(p)?;
    let truth = a.chain.truth(p)?;
    let t0 = Instant::now();
    let outs = run_chains(&data, &cfg, &a.chain.seeds(a.common.seed)?, a.common.exec())?;
    let total = t0.elapsed().as_secs_f64();

    let store = merge_stores(p, outs.iter().map(|o| &o.store));
    let all_trace: Vec<Model> = outs.iter().flat_map(|o| o.trace.iter().copied()).collect();
    let rm = rm_estimates(&store, &cfg.prior)?;
    let mc = mc_estimates(&all_trace)?;
    let mut runs = Vec::new();
    for (o, seed) in outs.iter().zip(a.chain.seeds(a.common.seed)?) {
        runs.push(RunInclusion {
            seed,
            rm: rm_estimates(&o.store, &cfg.prior)?.inclusion_probs,
            mc: mc_estimates(&o.trace)?.inclusion_probs,
            seconds: total / outs.len() as f64,
        });
    }
    let curves = truth.as_ref().map(|_| Vec::new());
    if let Some(t) = &truth {
        let rep = rmse(&runs.iter().map(|r| r.rm.clone()).collect::<Vec<_>>(), t)?;
        eprintln!("RM mean RMSE {:.6}", rep.mean);
    }
    write_traces(&a.common, &outs.iter().map(|o| o.trace.as_slice()).collect::<Vec<_>>())?;
    store.write_snapshot(&a.common.out_file("store.tsv")?)?;
    write(&a.common.out_file("estimates.csv")?, &estimates_csv(&store, &rm, Some(&mc)))?;
    write(
        &a.common.out_file("inclusion.csv")?,
        &inclusion_csv(data.covariate_names(), &rm.inclusion_probs, Some(&mc.inclusion_probs)),
    )?;
    RunReport { config: config_echo(a), runs, rmse_curves: curves, total_seconds: total, store: StoreSummary::of(&store) }
        .write_json(&a.common.out_file("report.json")?)
}

fn submcmc(a: &SubmcmcArgs) -> Result<(), Error> {
    let data = a.data.load()?;
    let p = data.p();
    let mut cfg = Algo3Config::new(a.fitter.fitter(&data)?, a.chain.iterations, a.common.seed);
    cfg.evidence = a.evidence.spec(data.n());
    cfg.prior = a.evidence.prior()?;
    cfg.p_rand = a.p_rand;
    cfg.sigma_rand = a.sigma_rand;
    cfg.restart = match a.restart {
        RestartArg::Fresh => Restart::Fresh,
        RestartArg::Warm => Restart::Warm,
    };
    cfg.mix = a.chain.mix();
    cfg.checkpoint_every = a.checkpoint_every;
    cfg.initial = a.chain.initial(p)?;
    let truth = a.chain.truth(p)?;
    let seeds = a.chain.seeds(a.common.seed)?;
    let t0 = Instant::now();
    let outs = run_algo3_multi(&data, &cfg, &seeds, a.common.exec(), truth.as_deref())?;
    let total = t0.elapsed().as_secs_f64();

    let store = merge_stores(p, outs.iter().map(|o| &o.store));
    let all_trace: Vec<Model> = outs.iter().flat_map(|o| o.trace.iter().copied()).collect();
    let rm = rm_estimates(&store, &cfg.prior)?;
    let mc = mc_estimates(&all_trace)?;
    let runs = outs
        .iter()
        .zip(&seeds)
        .map(|(o, &seed)| RunInclusion {
            seed,
            rm: o.rm.inclusion_probs.clone(),
            mc: o.mc.inclusion_probs.clone(),
            seconds: total / outs.len() as f64,
        })
        .collect();
    let curves: Option<Vec<_>> = truth.as_ref().map(|_| outs.iter().filter_map(|o| o.rmse_curve.clone()).collect());
    if let Some(curves) = &curves {
        let mut s = String::from("run,iteration,estimator,error\n");
        for (k, c) in curves.iter().enumerate() {
            for pt in c {
                s.push_str(&format!("{k},{},rm,{}\n{k},{},mc,{}\n", pt.iteration, pt.rm_error, pt.iteration, pt.mc_error));
            }
        }
        write(&a.common.out_file("rmse_curve.csv")?, &s)?;
    }
    write_traces(&a.common, &outs.iter().map(|o| o.trace.as_slice()).collect::<Vec<_>>())?;
    store.write_snapshot(&a.common.out_file("store.tsv")?)?;
    write(&a.common.out_file("estimates.csv")?, &estimates_csv(&store, &rm, Some(&mc)))?;
    write(
        &a.common.out_file("inclusion.csv")?,
        &inclusion_csv(data.covariate_names(), &rm.inclusion_probs, Some(&mc.inclusion_probs)),
    )?;
    RunReport { config: config_echo(a), runs, rmse_curves: curves, total_seconds: total, store: StoreSummary::of(&store) }
        .write_json(&a.common.out_file("report.json")?)
}

fn benchmark(a: &BenchmarkArgs) -> Result<(), Error> {
    let data = a.data.load()?;
    let p = data.p();
    let models: Vec<Model> = match &a.models {
        Some(path) => fs::read_to_string(path)?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| Model::from_hex(l, p))
            .collect::<Result<_, _>>()?,
        None => {
            let opts = EnumerateOptions { allow_large: false, exec: a.common.exec(), seed: a.common.seed };
            let e = enumerate_all(&data, &a.evidence.prior()?, &a.evidence.spec(data.n()), &Fitter::irls(), &opts)?;
            let mut ranked: Vec<(Model, f64)> = e.estimates.model_probs.iter().map(|(m, w)| (*m, *w)).collect();
            ranked.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
            ranked.into_iter().take(a.top).map(|(m, _)| m).collect()
        }
    };
    let table = match &a.optimizers {
        Some(names) => names.iter().map(|n| find_setting(n)).collect::<Result<Vec<_>, _>>()?,
        None => table1_settings(),
    };
    let report = benchmark_optimizers(&data, &models, &table, a.repeats, a.common.seed, a.common.exec())?;
    write(&a.common.out_file("benchmark.csv")?, &report.to_csv())
}

fn rmse_cmd(a: &RmseArgs) -> Result<(), Error> {
    let truth = parse_truth(&fs::read_to_string(&a.truth)?)?;
    let p = truth.len();
    let mut rm_runs = Vec::new();
    let mut mc_runs = Vec::new();
    for path in &a.estimates {
        let rows = read_estimates(path, p)?;
        rm_runs.push(inclusion_from_rows(p, &rows.iter().map(|r| (r.0, r.1)).collect::<Vec<_>>()));
        mc_runs.push(inclusion_from_rows(p, &rows.iter().map(|r| (r.0, r.2)).collect::<Vec<_>>()));
    }
    let rm = rmse(&rm_runs, &truth)?;
    let mc = rmse(&mc_runs, &truth)?;
    let mut s = String::from("covariate,estimator,rmse\n");
    for (j, (r, m)) in rm.per_covariate.iter().zip(&mc.per_covariate).enumerate() {
        s.push_str(&format!("{},rm,{r}\n{},mc,{m}\n", j + 1, j + 1));
    }
    s.push_str(&format!("mean,rm,{}\nmean,mc,{}\n", rm.mean, mc.mean));
    write(&a.common.out_file("rmse.csv")?, &s)
}

/// Expands `--config FILE` into flags placed before the command-line ones.
fn expand_config(argv: Vec<String>) -> Result<Vec<String>, Error> {
    let Some(sub_pos) = argv.iter().skip(1).position(|a| !a.starts_with('-')).map(|i| i + 1) else {
        return Ok(argv);
    };
    let mut path = None;
    for (i, a) in argv.iter().enumerate().skip(sub_pos + 1) {
        if a == "--config" {
            path = argv.get(i + 1).cloned();
        } else if let Some(v) = a.strip_prefix("--config=") {
            path = Some(v.to_string());
        }
    }
    match path {
        Some(p) => Ok(splice_config(&argv, &load_config(Path::new(&p))?, sub_pos)),
        None => Ok(argv),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match &cli.cmd {
        Cmd::GenData(a) => gen_data(a),
        Cmd::Fit(a) => fit(a),
        Cmd::Enumerate(a) => enumerate(a),
        Cmd::Mjmcmc(a) => mjmcmc(a),
        Cmd::Submcmc(a) => submcmc(a),
        Cmd::Benchmark(a) => benchmark(a),
        Cmd::Rmse(a) => rmse_cmd(a),
    }
}

fn main() -> ExitCode {
    init_threads_from_env();
    let argv = match expand_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
