//! Fast-path vs brute-force enumeration: every message-passing or
//! transfer-matrix computation is checked against exhaustive summation at
//! small volume.

use rand::Rng;
use treegibbs::chain::{chain_conditional_magnetization, ChainEnvironment};
use treegibbs::gibbs::{partition_function, root_marginal, Sampler};
use treegibbs::oracle::{
    enumerate_gibbs, enumerate_image, oracle_chain, oracle_conditional_magnetization,
};
use treegibbs::renorm::{conditional_image_magnetization, image_zero_marginal_under};
use treegibbs::rng::{derive_seed, rng_from_seed};
use treegibbs::{BoundaryCondition, ModelParams};

const BCS: [BoundaryCondition; 3] = [
    BoundaryCondition::Plus,
    BoundaryCondition::Minus,
    BoundaryCondition::Free,
];

#[test]
fn partition_function_matches_enumeration() {
    for r in 1..=3usize {
        for bc in &BCS {
            for beta in [0.0, 0.3, 0.7, 1.2] {
                let params = ModelParams::new(beta).unwrap();
                let z = partition_function(r, bc, &params).unwrap();
                let dist = enumerate_gibbs(r, bc, &params).unwrap();
                let rel = (z - dist.normalizer).abs() / dist.normalizer;
                assert!(
                    rel <= 1e-12,
                    "R = {r}, {bc:?}, beta = {beta}: {z} vs {}",
                    dist.normalizer
                );
            }
        }
    }
}

#[test]
fn root_marginal_matches_enumeration() {
    for r in 1..=3usize {
        for bc in &BCS {
            for beta in [0.2, 0.9] {
                let params = ModelParams::new(beta).unwrap();
                let fast = root_marginal(r, bc, &params).unwrap();
                let exact = enumerate_gibbs(r, bc, &params)
                    .unwrap()
                    .probability(|s| s.get(0, 0) == 1);
                assert!(
                    (fast - exact).abs() <= 1e-12,
                    "R = {r}, {bc:?}, beta = {beta}: {fast} vs {exact}"
                );
            }
        }
    }
}

#[test]
fn plus_and_minus_root_marginals_are_complementary() {
    for r in 1..=3usize {
        for beta in [0.4, 1.0] {
            let params = ModelParams::new(beta).unwrap();
            let p = root_marginal(r, &BoundaryCondition::Plus, &params).unwrap();
            let m = root_marginal(r, &BoundaryCondition::Minus, &params).unwrap();
            assert!((p + m - 1.0).abs() <= 1e-12);
        }
    }
}

#[test]
fn plus_marginal_grows_with_beta() {
    let mut prev = 0.5;
    let mut beta = 0.05;
    while beta <= 2.0 {
        let params = ModelParams::new(beta).unwrap();
        let p = root_marginal(6, &BoundaryCondition::Plus, &params).unwrap();
        assert!(p >= prev - 1e-12, "marginal dropped at beta = {beta}");
        prev = p;
        beta += 0.05;
    }
}

#[test]
fn image_distribution_mass_and_zero_marginal() {
    for beta in [0.0, 0.5, 1.0] {
        let params = ModelParams::new(beta).unwrap();
        for bc in &BCS {
            let dist = enumerate_image(2, bc, &params).unwrap();
            let mass: f64 = dist.weights.iter().sum();
            assert!((mass - 1.0).abs() <= 1e-12);
            let p0 = dist.probability(|im| im.get(0, 0) == Some(0));
            let fast = image_zero_marginal_under(&params, 3, bc).unwrap();
            assert!(
                (p0 - fast).abs() <= 1e-12,
                "{bc:?}, beta = {beta}: {p0} vs {fast}"
            );
        }
    }
}

#[test]
fn conditional_magnetization_negates_under_flip() {
    let params = ModelParams::new(0.7).unwrap();
    let mut rng = rng_from_seed(1001);
    for _ in 0..30 {
        // random feasible conditioning built by pushing a random spin field
        // through the majority rule
        let values: Vec<i8> = (0..treegibbs::tree::ball_size(3))
            .map(|_| if rng.gen::<bool>() { 1 } else { -1 })
            .collect();
        let sigma = treegibbs::SpinField::new(3, values).unwrap();
        let eta = treegibbs::renorm::majority_image(&sigma)
            .unwrap()
            .restricted(2)
            .unwrap();
        let m = conditional_image_magnetization(&eta, &BoundaryCondition::Free, 3, &params)
            .unwrap();
        let mf =
            conditional_image_magnetization(&eta.flipped(), &BoundaryCondition::Free, 3, &params)
                .unwrap();
        assert!((m + mf).abs() <= 1e-12, "{m} vs {mf}");
    }
}

#[test]
fn conditional_magnetization_matches_oracle_on_random_feasible_cases() {
    // exhaustive agreement is the R = 2 acceptance gate; this spot-checks a
    // sampled mix of depths and temperatures
    let mut rng = rng_from_seed(2002);
    for _ in 0..25 {
        let beta = 0.2 + 1.0 * rng.gen::<f64>();
        let params = ModelParams::new(beta).unwrap();
        let r = 1 + (rng.gen::<u64>() % 2) as usize;
        let big_d = (r + 1) + (rng.gen::<u64>() as usize % (3 - r));
        let values: Vec<i8> = (0..treegibbs::tree::ball_size(r + 1))
            .map(|_| if rng.gen::<bool>() { 1 } else { -1 })
            .collect();
        let sigma = treegibbs::SpinField::new(r + 1, values).unwrap();
        let eta = treegibbs::renorm::majority_image(&sigma)
            .unwrap()
            .restricted(r)
            .unwrap();
        let bc = BCS[(rng.gen::<u64>() % 3) as usize].clone();
        let fast = conditional_image_magnetization(&eta, &bc, big_d, &params).unwrap();
        let exact = oracle_conditional_magnetization(&eta, &bc, big_d, &params).unwrap();
        assert!(
            (fast - exact).abs() <= 1e-12,
            "R = {r}, D = {big_d}, beta = {beta}, {bc:?}: {fast} vs {exact}"
        );
    }
}

#[test]
fn chain_magnetization_matches_oracle_on_random_cases() {
    let mut rng = rng_from_seed(3003);
    for case in 0..100 {
        let r = 2 + (rng.gen::<u64>() % 9) as usize;
        let beta = 0.1 + 1.4 * rng.gen::<f64>();
        let fields: Vec<i8> = (0..r)
            .map(|_| if rng.gen::<bool>() { 1 } else { -1 })
            .collect();
        let top = if rng.gen::<bool>() { 1 } else { -1 };
        let env = ChainEnvironment::new(top, fields).unwrap();
        let (op, om) = oracle_chain(&env, r, beta).unwrap();
        let fp = chain_conditional_magnetization(&env, 1, r, beta).unwrap();
        let fm = chain_conditional_magnetization(&env, -1, r, beta).unwrap();
        assert!(
            (fp - op).abs() <= 1e-12 && (fm - om).abs() <= 1e-12,
            "case {case}: R = {r}, beta = {beta}, env {env:?}: ({fp},{fm}) vs ({op},{om})"
        );
    }
}

#[test]
fn sampler_frequencies_match_enumeration_chi_squared() {
    // depth-1 ball has 8 configurations; compare sampled counts to the exact
    // law with a chi-squared statistic, 7 dof, 99.9% quantile 24.32
    let beta = 0.6;
    let params = ModelParams::new(beta).unwrap();
    let bc = BoundaryCondition::Plus;
    let dist = enumerate_gibbs(1, &bc, &params).unwrap();
    let sampler = Sampler::new(1, &bc, &params).unwrap();
    let n = 200_000u64;
    let mut counts = [0u64; 8];
    for i in 0..n {
        let s = sampler.sample(derive_seed(7, i));
        let code = s
            .values()
            .iter()
            .enumerate()
            .fold(0usize, |acc, (k, &v)| acc | (((v == 1) as usize) << k));
        counts[code] += 1;
    }
    let mut chi2 = 0.0;
    for (sigma, &w) in dist.support.iter().zip(&dist.weights) {
        let code = sigma
            .values()
            .iter()
            .enumerate()
            .fold(0usize, |acc, (k, &v)| acc | (((v == 1) as usize) << k));
        let expected = w * n as f64;
        chi2 += (counts[code] as f64 - expected).powi(2) / expected;
    }
    assert!(chi2 < 24.32, "chi-squared = {chi2}");
}
