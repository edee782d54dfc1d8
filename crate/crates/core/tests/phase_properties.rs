use std::sync::Arc;

use proptest::prelude::*;
use xcghmc::phase::{Banana, DoubleWell, Gaussian};
use xcghmc::{flip, MassMatrix, PhaseState, Potential, TargetModel};

fn vector(d: usize, scale: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-scale..scale, d)
}

fn state(d: usize) -> impl Strategy<Value = PhaseState> {
    (vector(d, 3.0), vector(d, 3.0)).prop_map(|(x, y)| PhaseState::new(x, y).unwrap())
}

fn potentials() -> Vec<(&'static str, Arc<dyn Potential>)> {
    vec![
        (
            "gaussian",
            Arc::new(Gaussian::new(vec![0.5, 1.0, 2.0]).unwrap()),
        ),
        ("double_well", Arc::new(DoubleWell::new(3).unwrap())),
        ("banana", Arc::new(Banana::new(3, 0.8).unwrap())),
    ]
}

fn gradient_gap(pot: &dyn Potential, x: &[f64]) -> f64 {
    let mut grad = vec![0.0; x.len()];
    pot.gradient(x, &mut grad);
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let h = 1e-5 * x[i].abs().max(1.0);
        let mut plus = x.to_vec();
        let mut minus = x.to_vec();
        plus[i] += h;
        minus[i] -= h;
        let fd = (pot.value(&plus) - pot.value(&minus)) / (2.0 * h);
        worst = worst.max((grad[i] - fd).abs());
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn flip_is_an_involution(z in state(3)) {
        prop_assert_eq!(flip(&flip(&z)), z.clone());
        let f = flip(&z);
        prop_assert_eq!(f.x(), z.x());
    }

    #[test]
    fn flip_preserves_log_rho(z in state(3)) {
        for (_, pot) in potentials() {
            let model = TargetModel::new(pot);
            prop_assert_eq!(model.log_rho(&flip(&z)).unwrap(), model.log_rho(&z).unwrap());
        }
    }

    #[test]
    fn gradients_match_finite_differences(x in vector(3, 2.5)) {
        for (name, pot) in potentials() {
            let gap = gradient_gap(pot.as_ref(), &x);
            prop_assert!(gap <= 1e-5, "{} gradient off by {}", name, gap);
        }
    }

    #[test]
    fn mass_inverse_round_trip(v in vector(3, 10.0), diag in prop::collection::vec(0.1f64..5.0, 3)) {
        let dense = MassMatrix::dense(&[
            vec![2.0, 0.3, 0.1],
            vec![0.3, 1.5, -0.2],
            vec![0.1, -0.2, 1.0],
        ]).unwrap();
        let masses = [MassMatrix::identity(3), MassMatrix::diagonal(diag).unwrap(), dense];
        let norm = v.iter().fold(0.0f64, |m, a| m.max(a.abs())).max(1e-300);
        for m in &masses {
            let back = m.apply_inverse(&m.apply(&v));
            let err = back.iter().zip(&v).fold(0.0f64, |e, (a, b)| e.max((a - b).abs()));
            prop_assert!(err <= 1e-12 * norm.max(1.0), "round trip error {}", err);
        }
    }

    #[test]
    fn gaussian_log_rho_matches_exact_density(z1 in state(3), z2 in state(3)) {
        let variances = [0.5, 1.0, 2.0];
        let model = TargetModel::new(Arc::new(Gaussian::new(variances.to_vec()).unwrap()));
        // log N(0,Σ)⊗N(0,I) including its normalizer
        let exact = |z: &PhaseState| -> f64 {
            let mut s = 0.0;
            for i in 0..3 {
                s -= 0.5 * z.x()[i].powi(2) / variances[i] + 0.5 * (2.0 * std::f64::consts::PI * variances[i]).ln();
                s -= 0.5 * z.y()[i].powi(2) + 0.5 * (2.0 * std::f64::consts::PI).ln();
            }
            s
        };
        let a = model.log_rho(&z1).unwrap() - exact(&z1);
        let b = model.log_rho(&z2).unwrap() - exact(&z2);
        prop_assert!((a - b).abs() <= 1e-12, "offset drift {}", (a - b).abs());
    }
}

#[test]
fn hundred_points_per_target_gradient_check() {
    let mut rng = xcghmc::chain_rng(11, 3);
    for (name, pot) in potentials() {
        for _ in 0..100 {
            let mut x = vec![0.0; 3];
            xcghmc::NoiseSource::fill_standard_normal(&mut rng, &mut x);
            x.iter_mut().for_each(|v| *v *= 1.5);
            let gap = gradient_gap(pot.as_ref(), &x);
            assert!(gap <= 1e-5, "{name}: {gap} at {x:?}");
        }
    }
}
