mod common;

use std::sync::Arc;

use xcghmc::phase::FreeParticle;
use xcghmc::xchmc::{forward_log_densities, lahmc_probabilities, sigma_sequence};
use xcghmc::{
    builtin_target, check_main_identity, extra_chance_step, Error, LegSpec, PhaseState,
    RefreshAngle, SamplerConfig, ScriptedNoise, TargetModel, TargetParams,
};

#[test]
fn running_maximum_equals_lahmc_accumulation() {
    let mut rng = common::rng(10);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (model, leg) = common::random_target(&mut rng);
        let z = common::random_state(&mut rng, &model);
        for k in [1, 2, 3, 5] {
            let sd = sigma_sequence(&model, &leg, &z, k).unwrap();
            let la = lahmc_probabilities(&model, &leg, &z, k).unwrap();
            for (s, c) in sd.sigma().iter().zip(&la.cumulative) {
                worst = worst.max((s - c).abs());
            }
        }
    }
    assert!(worst <= 1e-12, "max |Σ − S| = {worst}");
}

#[test]
fn missed_chances_have_zero_probability() {
    let mut rng = common::rng(11);
    let mut seen = 0;
    for _ in 0..1000 {
        let (model, leg) = common::random_target(&mut rng);
        let z = common::random_state(&mut rng, &model);
        let kk = 4;
        let ell = forward_log_densities(&model, &leg, &z, kk + 1).unwrap();
        let sd = sigma_sequence(&model, &leg, &z, kk).unwrap();
        for k in 2..=kk + 1 {
            let best_before = ell[1..k].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if ell[k] <= best_before {
                seen += 1;
                assert_eq!(sd.slot_probability(k), 0.0, "slot {k} of {ell:?}");
            }
        }
    }
    assert!(seen > 100, "too few missed chances exercised: {seen}");
}

#[test]
fn any_uphill_candidate_rules_out_the_flip() {
    let mut rng = common::rng(12);
    let mut seen = 0;
    for _ in 0..1000 {
        let (model, leg) = common::random_target(&mut rng);
        let z = common::random_state(&mut rng, &model);
        let kk = 3;
        let ell = forward_log_densities(&model, &leg, &z, kk + 1).unwrap();
        let sd = sigma_sequence(&model, &leg, &z, kk).unwrap();
        if ell[1..].iter().any(|&l| l > ell[0]) {
            seen += 1;
            assert_eq!(sd.sigma()[kk], 1.0);
            assert_eq!(sd.flip_probability(), 0.0);
        }
    }
    assert!(seen > 100, "too few uphill orbits: {seen}");
}

#[test]
fn lazy_operator_agrees_with_eager_analysis() {
    let mut rng = common::rng(13);
    for trial in 0..10_000 {
        let (model, leg) = common::random_target(&mut rng);
        let z = common::random_state(&mut rng, &model);
        let k = trial % 5;
        let cfg = SamplerConfig::new(leg, RefreshAngle::full()).with_extra_chances(k);
        let sd = sigma_sequence(&model, &leg, &z, k).unwrap();
        let u: f64 = rand::Rng::random(&mut rng);
        let mut noise = ScriptedNoise::new();
        noise.push_acceptance(u);
        let out = extra_chance_step(&model, &cfg, &z, &mut noise).unwrap();
        assert_eq!(out.slot, sd.slot_for(u), "u = {u}, Σ = {:?}", sd.sigma());
        assert_eq!(out.candidates_computed, out.slot.min(k + 1));
        assert_eq!(
            out.force_evals,
            out.candidates_computed as u64 * leg.force_evals()
        );
    }
}

#[test]
fn main_identity_gaussian_examples() {
    let model = builtin_target("gaussian", &TargetParams::dims(2)).unwrap();
    let leg = LegSpec::new(0.2, 5).unwrap();
    let mut rng = common::rng(14);
    for _ in 0..100 {
        let z = common::random_state(&mut rng, &model);
        for k in 1..=3 {
            let d = check_main_identity(&model, &leg, &z, k).unwrap();
            assert!(d <= 1e-10, "k = {k}: {d}");
        }
    }
}

#[test]
fn main_identity_conserving_flow() {
    let model = TargetModel::new(Arc::new(FreeParticle::new(2)));
    let leg = LegSpec::new(0.5, 3).unwrap();
    let z = PhaseState::new(vec![0.2, -1.0], vec![1.0, 0.5]).unwrap();
    let sides = xcghmc::diagnostics::main_identity_sides(&model, &leg, &z, 1).unwrap();
    assert_eq!((sides.lhs, sides.rhs), (1.0, 1.0));
    for k in 2..=4 {
        let sides = xcghmc::diagnostics::main_identity_sides(&model, &leg, &z, k).unwrap();
        assert_eq!((sides.lhs, sides.rhs), (0.0, 0.0));
    }
}

#[test]
fn main_identity_large_step_double_well() {
    let model = builtin_target("double_well", &TargetParams::dims(1)).unwrap();
    let leg = LegSpec::new(0.4, 3).unwrap();
    let mut rng = common::rng(15);
    let mut checked = 0;
    for _ in 0..200 {
        let z = common::random_state(&mut rng, &model);
        for k in 1..=4 {
            match check_main_identity(&model, &leg, &z, k) {
                Ok(d) => {
                    checked += 1;
                    assert!(d <= 1e-8, "k = {k}: {d}");
                }
                Err(Error::Diverged(_)) => {}
                Err(e) => panic!("{e}"),
            }
        }
    }
    assert!(checked > 400, "only {checked} non-diverged checks");
}

#[test]
fn main_identity_random_triples() {
    let mut rng = common::rng(16);
    let mut worst = 0.0f64;
    for n in 0..1000 {
        let (model, leg) = common::random_target(&mut rng);
        let z = common::random_state(&mut rng, &model);
        let k = 1 + n % 4;
        worst = worst.max(check_main_identity(&model, &leg, &z, k).unwrap());
    }
    assert!(worst <= 1e-8, "worst discrepancy {worst}");
}
