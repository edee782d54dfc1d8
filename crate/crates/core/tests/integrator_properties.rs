mod common;

use xcghmc::integrator::{check_reversibility, check_volume_preservation, relative_distance};
use xcghmc::{builtin_target, verlet_leg, LegSpec, TargetParams};

#[test]
fn reversibility_on_random_points() {
    let mut rng = common::rng(1);
    for _ in 0..300 {
        let (model, leg) = common::random_target(&mut rng);
        let leg = leg.with_dt(leg.dt() * 0.5).unwrap();
        let z = common::random_state(&mut rng, &model);
        let err = check_reversibility(&model, &leg, &z).unwrap();
        assert!(err <= 1e-10, "reversibility error {err}");
    }
}

#[test]
fn volume_preservation_examples() {
    let mut rng = common::rng(2);
    let gaussian = builtin_target("gaussian", &TargetParams::dims(1)).unwrap();
    let well = builtin_target("double_well", &TargetParams::dims(2)).unwrap();
    for _ in 0..20 {
        let z = common::random_state(&mut rng, &gaussian);
        let e = check_volume_preservation(&gaussian, &LegSpec::new(0.1, 3).unwrap(), &z).unwrap();
        assert!(e <= 1e-6, "gaussian |det J - 1| = {e}");
        let z = common::random_state(&mut rng, &well);
        let e = check_volume_preservation(&well, &LegSpec::new(0.05, 5).unwrap(), &z).unwrap();
        assert!(e <= 1e-5, "double well |det J - 1| = {e}");
    }
}

#[test]
fn iterated_legs_equal_one_long_leg() {
    let mut rng = common::rng(3);
    for _ in 0..100 {
        let (model, leg) = common::random_target(&mut rng);
        let leg = leg.with_dt(leg.dt() * 0.5).unwrap();
        let z = common::random_state(&mut rng, &model);
        let k = 4;
        let mut iterated = z.clone();
        for _ in 0..k {
            iterated = verlet_leg(&model, &leg, &iterated).unwrap().state;
        }
        let long = LegSpec::new(leg.dt(), k * leg.steps()).unwrap();
        let once = verlet_leg(&model, &long, &z).unwrap().state;
        assert!(relative_distance(&iterated, &once) <= 1e-12);
    }
}
