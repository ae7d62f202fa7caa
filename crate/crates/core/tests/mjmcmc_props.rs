mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use subsample_bms::evidence::EvidenceSpec;
use subsample_bms::mjmcmc::{
    large_jump, local_opt, propose, randomisation_log_density, run_chain, small_randomisation, ChainConfig, KernelMix,
    SwapKernel,
};
use subsample_bms::model_space::Model;

#[test]
fn flip_frequency_matches_rho() {
    let (p, rho, draws) = (10, 0.1, 100_000);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let m = Model::from_bits(0b1010011010, p).unwrap();
    let flips: usize = (0..draws).map(|_| small_randomisation(m, rho, &mut rng).0.hamming(m)).sum();
    let trials = (draws * p) as f64;
    let freq = flips as f64 / trials;
    let sd = (rho * (1.0 - rho) / trials).sqrt();
    assert!((freq - rho).abs() < 3.0 * sd, "{freq}");
}

#[test]
fn randomisation_kernel_rows_sum_to_one() {
    let p = 5;
    for from in 0..32u64 {
        let f = Model::from_bits(from, p).unwrap();
        let s: f64 = (0..32u64).map(|to| randomisation_log_density(f, Model::from_bits(to, p).unwrap(), 0.3).exp()).sum();
        assert!((s - 1.0).abs() < 1e-9);
    }
}

#[test]
fn greedy_climb_solves_separable_scores() {
    let p = 6;
    let w = [1.5, -0.7, 2.0, -0.1, 0.4, -3.0];
    let mut calls = 0;
    let mut score = |m: Model| {
        calls += 1;
        (0..p).filter(|&j| m.includes(j)).map(|j| w[j]).sum::<f64>()
    };
    let best = local_opt(Model::from_bits(0b101010, p).unwrap(), &mut score, p * p);
    assert_eq!(best.gamma(), vec![true, false, true, false, true, false]);
    assert!(calls <= p * p + 1);
}

#[test]
fn flat_posterior_gives_unit_ratio() {
    let mix = KernelMix { mode_jump_prob: 1.0, ..KernelMix::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut flat = |_: Model| 0.0;
    for b in 0..200u64 {
        let prop = propose(Model::from_bits(b * 37 % 4096, 12).unwrap(), &mix, &mut flat, &mut rng);
        assert!(prop.mode_jump.is_some());
        assert!(prop.log_q_ratio.abs() < 1e-12, "{}", prop.log_q_ratio);
    }
}

#[test]
fn kernel_weights_are_checked() {
    let bad = KernelMix { swap_kernels: vec![SwapKernel { flips: 1, weight: 0.5 }], ..KernelMix::default() };
    assert!(bad.validate(5).is_err());
    assert!(KernelMix::default().validate(5).is_ok());
}

#[test]
fn single_iteration_trace() {
    let d = common::crime();
    let out = run_chain(&d, &ChainConfig::new(EvidenceSpec::GPriorGaussian { g: 47.0 }, 1, 3)).unwrap();
    assert_eq!(out.trace.len(), 1);
    let again = run_chain(&d, &ChainConfig::new(EvidenceSpec::GPriorGaussian { g: 47.0 }, 1, 3)).unwrap();
    assert_eq!(out.trace, again.trace);
}

proptest! {
    #[test]
    fn large_jump_is_an_involution(bits in 0u64..1 << 15, fraction in 0.05f64..0.95, seed in any::<u64>()) {
        let m = Model::from_bits(bits, 15).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (j, idx) = large_jump(m, fraction, &mut rng);
        prop_assert_eq!(j.hamming(m), (fraction * 15.0).ceil() as usize);
        prop_assert_eq!(j.flip_set(&idx), m);
    }

    #[test]
    fn randomisation_density_is_symmetric(a in 0u64..1 << 10, b in 0u64..1 << 10, rho in 0.01f64..0.99) {
        let (a, b) = (Model::from_bits(a, 10).unwrap(), Model::from_bits(b, 10).unwrap());
        prop_assert_eq!(randomisation_log_density(a, b, rho), randomisation_log_density(b, a, rho));
    }
}
