mod common;

use xcghmc::ess_initial_monotone;

fn ar1(phi: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = common::rng(seed);
    let noise = common::normals(&mut rng, n);
    let mut out = Vec::with_capacity(n);
    let mut x = noise[0] / (1.0 - phi * phi).sqrt();
    out.push(x);
    for e in &noise[1..] {
        x = phi * x + e;
        out.push(x);
    }
    out
}

#[test]
fn autoregressive_relative_ess() {
    for (phi, seed) in [(0.3, 1), (0.5, 2), (0.9, 3)] {
        let rel = ess_initial_monotone(&ar1(phi, 100_000, seed))
            .unwrap()
            .relative();
        let expected = (1.0 - phi) / (1.0 + phi);
        assert!(
            (rel / expected - 1.0).abs() <= 0.10,
            "φ = {phi}: {rel} vs {expected}"
        );
    }
}

#[test]
fn doubling_length_is_stable() {
    let long = ar1(0.5, 200_000, 4);
    let a = ess_initial_monotone(&long[..100_000]).unwrap().relative();
    let b = ess_initial_monotone(&long).unwrap().relative();
    assert!((a / b - 1.0).abs() < 0.05, "{a} vs {b}");
}

#[test]
fn ess_never_exceeds_length() {
    for seed in 0..20 {
        let s = ar1(-0.7, 500, 100 + seed);
        let e = ess_initial_monotone(&s).unwrap();
        assert!(e.ess > 0.0 && e.ess <= 500.0);
    }
}
