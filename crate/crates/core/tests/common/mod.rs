#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use xcghmc::{
    builtin_target, chain_rng, LegSpec, NoiseSource, PhaseState, TargetModel, TargetParams,
};

pub fn rng(seed: u64) -> ChaCha20Rng {
    chain_rng(seed, 99)
}

pub fn normals(rng: &mut ChaCha20Rng, d: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    rng.fill_standard_normal(&mut v);
    v
}

/// A built-in target with random dimension, paired with a leg that keeps
/// typical orbits stable but has visible energy error.
pub fn random_target(rng: &mut ChaCha20Rng) -> (TargetModel, LegSpec) {
    let steps = rng.random_range(1..=6);
    match rng.random_range(0..3) {
        0 => {
            let d = rng.random_range(1..=4);
            let variances = (0..d).map(|_| rng.random_range(0.5..2.0)).collect();
            let params = TargetParams {
                variances: Some(variances),
                ..TargetParams::dims(d)
            };
            (
                builtin_target("gaussian", &params).unwrap(),
                LegSpec::new(0.6, steps).unwrap(),
            )
        }
        1 => {
            let d = rng.random_range(1..=3);
            (
                builtin_target("double_well", &TargetParams::dims(d)).unwrap(),
                LegSpec::new(0.12, steps).unwrap(),
            )
        }
        _ => {
            let d = rng.random_range(2..=4);
            let params = TargetParams {
                curvature: Some(rng.random_range(0.2..1.0)),
                ..TargetParams::dims(d)
            };
            (
                builtin_target("banana", &params).unwrap(),
                LegSpec::new(0.2, steps).unwrap(),
            )
        }
    }
}

/// Standard normal momentum at a random position near the target's bulk.
pub fn random_state(rng: &mut ChaCha20Rng, model: &TargetModel) -> PhaseState {
    let d = model.dim();
    let reference = model.reference_point();
    let x = normals(rng, d)
        .into_iter()
        .zip(reference)
        .map(|(n, r)| r + 0.7 * n)
        .collect();
    PhaseState::new(x, normals(rng, d)).unwrap()
}
