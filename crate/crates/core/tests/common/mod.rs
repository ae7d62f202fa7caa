#![allow(dead_code)]

use std::path::PathBuf;

use subsample_bms::glm::{Dataset, Family};
use subsample_bms::harness::data::{default_correlation, gen_example1, load_csv_with, Example1Spec, LoadOptions};

pub const CRIME_NAMES: [&str; 15] =
    ["M", "So", "Ed", "Po1", "Po2", "LF", "M.F", "Pop", "NW", "U1", "U2", "GDP", "Ineq", "Prob", "Time"];

pub fn crime_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/uscrime.csv")
}

/// Crime data with every column logged except the `So` indicator.
pub fn crime() -> Dataset {
    let opts = LoadOptions { response: "y".into(), log_except: Some(vec!["So".into()]) };
    load_csv_with(&crime_path(), Family::GaussianIdentity, &opts).expect("crime fixture loads")
}

/// Five correlated covariates, two of them null, one weak.
pub fn p5_logistic(n: usize, seed: u64) -> Dataset {
    let spec = Example1Spec {
        n,
        seed,
        beta_base: vec![2.0, 0.0, 1.0, 0.3, 0.0],
        correlation: default_correlation(5),
        target: subsample_bms::harness::data::Target::Logistic,
    };
    gen_example1(&spec).unwrap().logistic().unwrap()
}

pub fn example1_logistic(n: usize, seed: u64) -> Dataset {
    gen_example1(&Example1Spec::new(n, seed)).unwrap().logistic().unwrap()
}

/// Dense solve by Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let k = b.len();
    for c in 0..k {
        let piv = (c..k).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..k {
            let f = a[r][c] / a[c][c];
            for j in c..k {
                a[r][j] -= f * a[c][j];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; k];
    for r in (0..k).rev() {
        let s: f64 = (r + 1..k).map(|j| a[r][j] * x[j]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// OLS through the normal equations.
pub fn ols(d: &Dataset) -> Vec<f64> {
    let m = d.m();
    let mut a = vec![vec![0.0; m]; m];
    let mut b = vec![0.0; m];
    for i in 0..d.n() {
        let x = d.row(i);
        for r in 0..m {
            b[r] += x[r] * d.y()[i];
            for c in 0..m {
                a[r][c] += x[r] * x[c];
            }
        }
    }
    solve(a, b)
}

/// Plain Newton-Raphson for logistic regression.
pub fn newton_logistic(d: &Dataset) -> Vec<f64> {
    let m = d.m();
    let mut beta = vec![0.0; m];
    for _ in 0..100 {
        let mut h = vec![vec![0.0; m]; m];
        let mut g = vec![0.0; m];
        for i in 0..d.n() {
            let x = d.row(i);
            let eta: f64 = x.iter().zip(&beta).map(|(a, b)| a * b).sum();
            let mu = 1.0 / (1.0 + (-eta).exp());
            for r in 0..m {
                g[r] += x[r] * (d.y()[i] - mu);
                for c in 0..m {
                    h[r][c] += mu * (1.0 - mu) * x[r] * x[c];
                }
            }
        }
        let step = solve(h, g);
        beta.iter_mut().zip(&step).for_each(|(b, s)| *b += s);
        if step.iter().all(|s| s.abs() < 1e-14) {
            break;
        }
    }
    beta
}

/// Term-by-term Bernoulli log-likelihood.
pub fn bernoulli_loglik(d: &Dataset, beta: &[f64]) -> f64 {
    (0..d.n())
        .map(|i| {
            let eta: f64 = d.row(i).iter().zip(beta).map(|(a, b)| a * b).sum();
            let mu = 1.0 / (1.0 + (-eta).exp());
            if d.y()[i] == 1.0 { mu.ln() } else { (1.0 - mu).ln() }
        })
        .sum()
}

pub fn random_dataset(rng: &mut impl rand::Rng, n: usize, p: usize, family: Family) -> Dataset {
    use rand_distr::StandardNormal;
    let cov: Vec<f64> = (0..n * p).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let beta: Vec<f64> = (0..=p).map(|_| 0.6 * rng.sample::<f64, _>(StandardNormal)).collect();
    let y = (0..n)
        .map(|i| {
            let eta = beta[0] + (0..p).map(|j| cov[i * p + j] * beta[j + 1]).sum::<f64>();
            match family {
                Family::GaussianIdentity => eta + rng.sample::<f64, _>(StandardNormal),
                Family::BernoulliLogit => (rng.random::<f64>() < 1.0 / (1.0 + (-eta).exp())) as u8 as f64,
            }
        })
        .collect();
    Dataset::with_intercept(&cov, p, y, family).unwrap()
}
