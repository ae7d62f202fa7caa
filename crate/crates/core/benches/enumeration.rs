use std::hint::black_box;
use std::path::PathBuf;

use criterion::{criterion_group, criterion_main, Criterion};

use subsample_bms::evidence::{EvidenceSpec, Fitter};
use subsample_bms::glm::{Dataset, Family};
use subsample_bms::harness::data::{gen_example1, load_csv_with, Example1Spec, LoadOptions};
use subsample_bms::model_space::{enumerate_all, EnumerateOptions, ModelPrior};
use subsample_bms::par::Execution;

fn crime() -> Dataset {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/uscrime.csv");
    let opts = LoadOptions { response: "y".into(), log_except: Some(vec!["So".into()]) };
    load_csv_with(&path, Family::GaussianIdentity, &opts).unwrap()
}

fn run(c: &mut Criterion, name: &str, data: &Dataset, spec: EvidenceSpec) {
    let mut g = c.benchmark_group(name);
    g.sample_size(10);
    for (label, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        let opts = EnumerateOptions { exec, ..EnumerateOptions::default() };
        g.bench_function(label, |b| {
            b.iter(|| enumerate_all(black_box(data), &ModelPrior::default(), &spec, &Fitter::irls(), &opts).unwrap())
        });
    }
    g.finish();
}

fn enumeration(c: &mut Criterion) {
    run(c, "crime_gprior_2^15", &crime(), EvidenceSpec::GPriorGaussian { g: 47.0 });
    let logit = gen_example1(&Example1Spec::new(2_000, 1)).unwrap().logistic().unwrap();
    let logit = logit.select_columns(&(0..=10).collect::<Vec<_>>()).unwrap();
    run(c, "logistic_bic_2^10", &logit, EvidenceSpec::LaplaceBic);
}

criterion_group!(benches, enumeration);
criterion_main!(benches);
