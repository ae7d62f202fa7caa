//! Optimizer comparison over a fixed set of models.

use std::fmt::Write as _;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::glm::Dataset;
use crate::model_space::Model;
use crate::optim::{irls, s_irls_sgd_with, SirlsConfig, SirlsSgdConfig, StepSchedule};
use crate::par::{map_indexed, Execution};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum OptimizerKind {
    Irls { tol: f64, max_iter: usize },
    /// S-IRLS for `n_init` steps (or a standard-normal start when zero),
    /// then `sgd_iters` batch steps.
    Subsampled { fraction: f64, n_init: usize, sgd_iters: usize, schedule: StepSchedule },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizerSetting {
    pub name: String,
    pub kind: OptimizerKind,
}

impl OptimizerSetting {
    fn sub(name: &str, n_init: usize, sgd_iters: usize, schedule: StepSchedule) -> Self {
        OptimizerSetting {
            name: name.into(),
            kind: OptimizerKind::Subsampled { fraction: 0.001, n_init, sgd_iters, schedule },
        }
    }
}

/// IRLS, BSGD at 500 to 20K iterations, S-IRLS alone, SGD alone and
/// S-IRLS-SGD, all subsampled at 0.1% of n.
pub fn table1_settings() -> Vec<OptimizerSetting> {
    let bsgd = StepSchedule::bsgd_default();
    let sgd = StepSchedule::sgd_default();
    let mut v = vec![OptimizerSetting { name: "IRLS".into(), kind: OptimizerKind::Irls { tol: 1e-8, max_iter: 100 } }];
    for (label, iters) in [("500", 500), ("1K", 1000), ("5K", 5000), ("10K", 10_000), ("20K", 20_000)] {
        v.push(OptimizerSetting::sub(&format!("BSGD {label}"), 0, iters, bsgd));
    }
    v.push(OptimizerSetting::sub("S-IRLS", 75, 0, sgd));
    v.push(OptimizerSetting::sub("SGD", 0, 500, sgd));
    v.push(OptimizerSetting::sub("S-IRLS-SGD", 75, 500, sgd));
    v
}

pub fn find_setting(name: &str) -> Result<OptimizerSetting> {
    table1_settings()
        .into_iter()
        .find(|s| s.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::invalid(format!("unknown optimizer setting '{name}'")))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub model_hex: String,
    pub optimizer: String,
    pub repeat: usize,
    pub deviance: f64,
    /// Deviance minus the full-IRLS deviance of the same model.
    pub deviance_error: f64,
    pub seconds: f64,
    pub status: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    /// Long-format CSV, one row per (model, optimizer, repeat).
    pub fn to_csv(&self) -> String {
        let mut s = String::from("model_hex,optimizer,repeat,deviance,deviance_error,seconds,status\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{:.12e},{:.12e},{:.6e},{}",
                r.model_hex, r.optimizer, r.repeat, r.deviance, r.deviance_error, r.seconds, r.status
            );
        }
        s
    }

    /// Median |deviance error| of each optimizer over successful cells.
    pub fn median_abs_error(&self, optimizer: &str) -> f64 {
        let errs: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.optimizer == optimizer && r.status == "ok")
            .map(|r| r.deviance_error.abs())
            .collect();
        super::metrics::median(&errs)
    }
}

fn run_setting(sub: &Dataset, setting: &OptimizerSetting, seed: u64) -> Result<f64> {
    match &setting.kind {
        OptimizerKind::Irls { tol, max_iter } => Ok(irls(sub, *tol, *max_iter)?.full_data_deviance),
        OptimizerKind::Subsampled { fraction, n_init, sgd_iters, schedule } => {
            let n = sub.n();
            let size = ((fraction * n as f64).ceil() as usize).clamp(1, n);
            let cfg = SirlsSgdConfig {
                n_init: *n_init,
                sirls: SirlsConfig::new(size, *n_init),
                sgd_batch: size,
                sgd_sched: *schedule,
                sgd_iters: *sgd_iters,
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok(s_irls_sgd_with(sub, &cfg, None, &mut rng)?.0.full_data_deviance)
        }
    }
}

/// Runs every setting `repeats` times on every model. Cells whose fit fails
/// are reported with status `failed: ...` and NaN values.
pub fn benchmark_optimizers(
    data: &Dataset,
    models: &[Model],
    table: &[OptimizerSetting],
    repeats: usize,
    seed: u64,
    exec: Execution,
) -> Result<BenchReport> {
    if repeats == 0 {
        return Err(Error::invalid("repeats must be at least 1"));
    }
    if let Some(m) = models.iter().find(|m| m.p() != data.p()) {
        return Err(Error::invalid(format!("model {m} does not match p = {}", data.p())));
    }
    let per_model = map_indexed(exec, models.len(), |mi| -> Vec<BenchRow> {
        let model = models[mi];
        let mut rows = Vec::new();
        let sub = match data.select_columns(&model.active_columns()) {
            Ok(s) => s,
            Err(e) => {
                for s in table {
                    for r in 0..repeats {
                        rows.push(failed_row(model, &s.name, r, &e));
                    }
                }
                return rows;
            }
        };
        let reference = irls(&sub, 1e-8, 100).map(|r| r.full_data_deviance);
        for (si, s) in table.iter().enumerate() {
            for r in 0..repeats {
                let cell_seed = seed ^ (model.bits().wrapping_mul(0x9E37_79B9_7F4A_7C15)) ^ ((si as u64) << 48) ^ r as u64;
                let t0 = Instant::now();
                let out = run_setting(&sub, s, cell_seed);
                let secs = t0.elapsed().as_secs_f64();
                rows.push(match (&out, &reference) {
                    (Ok(d), Ok(reference)) => BenchRow {
                        model_hex: model.to_hex(),
                        optimizer: s.name.clone(),
                        repeat: r,
                        deviance: *d,
                        deviance_error: d - reference,
                        seconds: secs,
                        status: "ok".into(),
                    },
                    (Err(e), _) | (_, Err(e)) => failed_row(model, &s.name, r, e),
                });
            }
        }
        rows
    });
    Ok(BenchReport { rows: per_model.into_iter().flatten().collect() })
}

fn failed_row(model: Model, name: &str, repeat: usize, e: &Error) -> BenchRow {
    BenchRow {
        model_hex: model.to_hex(),
        optimizer: name.into(),
        repeat,
        deviance: f64::NAN,
        deviance_error: f64::NAN,
        seconds: 0.0,
        status: format!("failed: {}", e.to_string().replace(',', ";")),
    }
}
