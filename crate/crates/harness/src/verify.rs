//! Batteries of invariant checks behind `xcghmc verify`.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use xcghmc::integrator::{check_reversibility, check_volume_preservation};
use xcghmc::xchmc::{couple_noise, lahmc_probabilities, run_palindromic_chain, sigma_sequence};
use xcghmc::{
    builtin_target, chain_rng, check_main_identity, run_chain_with, Budget, Error, LegSpec,
    NoiseSource, PhaseState, RecordingNoise, RefreshAngle, SamplerConfig, ScriptedNoise,
    TargetModel, TargetParams,
};

/// Default master seed of every suite.
pub const VERIFY_SEED: u64 = 20_240_101;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Reversibility,
    Volume,
    MainIdentity,
    LahmcEquivalence,
    PalindromicCoupling,
    All,
}

impl Suite {
    pub const EACH: [Suite; 5] = [
        Suite::Reversibility,
        Suite::Volume,
        Suite::MainIdentity,
        Suite::LahmcEquivalence,
        Suite::PalindromicCoupling,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Reversibility => "reversibility",
            Self::Volume => "volume",
            Self::MainIdentity => "main_identity",
            Self::LahmcEquivalence => "lahmc_equivalence",
            Self::PalindromicCoupling => "palindromic_coupling",
            Self::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::EACH
            .iter()
            .chain([&Suite::All])
            .find(|x| x.name() == s)
            .copied()
            .ok_or_else(|| format!("unknown suite `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub suite: &'static str,
    pub name: String,
    /// Cases evaluated.
    pub samples: usize,
    /// Cases skipped because a leg diverged.
    pub skipped: usize,
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{} {}/{}: worst {:.3e} (tol {:.0e}) over {} cases{}, {:.2}s",
                if c.passed { "PASS" } else { "FAIL" },
                c.suite,
                c.name,
                c.worst,
                c.tolerance,
                c.samples,
                if c.skipped > 0 {
                    format!(", {} skipped", c.skipped)
                } else {
                    String::new()
                },
                c.seconds
            )?;
        }
        Ok(())
    }
}

pub fn verify(suite: Suite) -> VerificationReport {
    verify_with_seed(suite, VERIFY_SEED)
}

pub fn verify_with_seed(suite: Suite, seed: u64) -> VerificationReport {
    let suites: Vec<Suite> = if suite == Suite::All {
        Suite::EACH.to_vec()
    } else {
        vec![suite]
    };
    let mut checks = Vec::new();
    for (i, s) in suites.into_iter().enumerate() {
        let mut rng = chain_rng(seed, 1000 + i as u64);
        match s {
            Suite::Reversibility => checks.extend(reversibility(&mut rng)),
            Suite::Volume => checks.extend(volume(&mut rng)),
            Suite::MainIdentity => checks.push(main_identity(&mut rng)),
            Suite::LahmcEquivalence => checks.push(lahmc_equivalence(&mut rng)),
            Suite::PalindromicCoupling => checks.extend(palindromic_coupling(seed)),
            Suite::All => unreachable!(),
        }
    }
    VerificationReport { checks }
}

struct Tally {
    start: Instant,
    samples: usize,
    skipped: usize,
    worst: f64,
}

impl Tally {
    fn new() -> Self {
        Self {
            start: Instant::now(),
            samples: 0,
            skipped: 0,
            worst: 0.0,
        }
    }

    fn add(&mut self, v: xcghmc::Result<f64>) {
        match v {
            Ok(v) => {
                self.samples += 1;
                // NaN must fail the check
                self.worst = if v.is_nan() {
                    f64::INFINITY
                } else {
                    self.worst.max(v)
                };
            }
            Err(Error::Diverged(_)) => self.skipped += 1,
            Err(_) => {
                self.samples += 1;
                self.worst = f64::INFINITY;
            }
        }
    }

    fn finish(
        self,
        suite: Suite,
        name: impl Into<String>,
        tolerance: f64,
        required: usize,
    ) -> CheckResult {
        CheckResult {
            suite: suite.name(),
            name: name.into(),
            samples: self.samples,
            skipped: self.skipped,
            worst: self.worst,
            tolerance,
            passed: self.samples >= required && self.worst <= tolerance,
            seconds: self.start.elapsed().as_secs_f64(),
        }
    }
}

fn normals(rng: &mut ChaCha20Rng, d: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    rng.fill_standard_normal(&mut v);
    v
}

/// Position `reference + 0.7 ξ`, momentum `ξ'`.
fn random_state(rng: &mut ChaCha20Rng, model: &TargetModel) -> PhaseState {
    let x = normals(rng, model.dim())
        .into_iter()
        .zip(model.reference_point())
        .map(|(n, r)| r + 0.7 * n)
        .collect();
    PhaseState::new(x, normals(rng, model.dim())).expect("finite draws")
}

fn target(name: &str, d: usize) -> TargetModel {
    let params = TargetParams {
        variances: (name == "gaussian").then(|| (0..d).map(|i| 0.5 * (i + 1) as f64).collect()),
        ..TargetParams::dims(d)
    };
    builtin_target(name, &params).expect("built-in target")
}

/// A random target and a leg with visible energy error.
fn random_problem(rng: &mut ChaCha20Rng) -> (TargetModel, LegSpec) {
    let steps = rng.random_range(1..=6);
    let (model, dt) = match rng.random_range(0..4) {
        0 => (target("gaussian", rng.random_range(1..=4)), 0.6),
        1 => (target("double_well", rng.random_range(1..=3)), 0.12),
        2 => (target("double_well", 1), 0.4),
        _ => {
            let params = TargetParams {
                curvature: Some(rng.random_range(0.2..1.0)),
                ..TargetParams::dims(rng.random_range(2..=4))
            };
            (
                builtin_target("banana", &params).expect("built-in target"),
                0.2,
            )
        }
    };
    (model, LegSpec::new(dt, steps).expect("valid leg"))
}

const POINTS_PER_TARGET: usize = 100;

fn per_target(
    rng: &mut ChaCha20Rng,
    suite: Suite,
    tolerance: f64,
    legs: [(&str, usize, f64, usize); 3],
    check: fn(&TargetModel, &LegSpec, &PhaseState) -> xcghmc::Result<f64>,
) -> Vec<CheckResult> {
    legs.iter()
        .map(|&(name, d, dt, steps)| {
            let model = target(name, d);
            let leg = LegSpec::new(dt, steps).expect("valid leg");
            let mut tally = Tally::new();
            for _ in 0..POINTS_PER_TARGET {
                let z = random_state(rng, &model);
                tally.add(check(&model, &leg, &z));
            }
            tally.finish(suite, name, tolerance, POINTS_PER_TARGET)
        })
        .collect()
}

fn reversibility(rng: &mut ChaCha20Rng) -> Vec<CheckResult> {
    let legs = [
        ("gaussian", 3, 0.3, 10),
        ("double_well", 2, 0.05, 10),
        ("banana", 2, 0.1, 10),
    ];
    per_target(rng, Suite::Reversibility, 1e-10, legs, check_reversibility)
}

fn volume(rng: &mut ChaCha20Rng) -> Vec<CheckResult> {
    let legs = [
        ("gaussian", 3, 0.1, 3),
        ("double_well", 2, 0.05, 5),
        ("banana", 2, 0.05, 5),
    ];
    per_target(rng, Suite::Volume, 1e-5, legs, check_volume_preservation)
}

pub const IDENTITY_TRIPLES: usize = 1000;

fn main_identity(rng: &mut ChaCha20Rng) -> CheckResult {
    let mut tally = Tally::new();
    // diverged triples are replaced, up to a bounded number of extra draws
    while tally.samples < IDENTITY_TRIPLES && tally.skipped < IDENTITY_TRIPLES {
        let (model, leg) = random_problem(rng);
        let z = random_state(rng, &model);
        let k = rng.random_range(1..=4);
        tally.add(check_main_identity(&model, &leg, &z, k));
    }
    tally.finish(
        Suite::MainIdentity,
        "rho_p_symmetry",
        1e-8,
        IDENTITY_TRIPLES,
    )
}

fn lahmc_equivalence(rng: &mut ChaCha20Rng) -> CheckResult {
    let mut tally = Tally::new();
    for _ in 0..IDENTITY_TRIPLES {
        let (model, leg) = random_problem(rng);
        let z = random_state(rng, &model);
        let k = [1, 2, 3, 5][rng.random_range(0..4)];
        let gap = sigma_sequence(&model, &leg, &z, k).and_then(|sd| {
            let la = lahmc_probabilities(&model, &leg, &z, k)?;
            Ok(sd
                .sigma()
                .iter()
                .zip(&la.cumulative)
                .map(|(s, c)| (s - c).abs())
                .fold(0.0, f64::max))
        });
        tally.add(gap);
    }
    tally.finish(
        Suite::LahmcEquivalence,
        "sigma_vs_accumulated",
        1e-12,
        IDENTITY_TRIPLES,
    )
}

/// Runs the palindromic chain for `n` transitions, maps its draws through
/// [`couple_noise`] onto an ordinary chain, and returns the worst
/// `‖Xₙ − xₙ‖∞ / max(1, ‖xₙ‖∞)`.
pub fn coupling_gap(
    model: &TargetModel,
    config: &SamplerConfig,
    n: usize,
    seed: u64,
) -> xcghmc::Result<f64> {
    if !model.mass().is_identity() {
        return Err(Error::InvalidParameter {
            name: "mass",
            reason: "coupling replay assumes a unit mass matrix".to_string(),
        });
    }
    let d = model.dim();
    let mut noise = RecordingNoise::new(chain_rng(seed, 0));
    let mut xi = vec![0.0; d];
    noise.fill_standard_normal(&mut xi);
    let big_y0 = model.mass().scale_standard_normal(&xi);
    let z0 = PhaseState::new(model.reference_point(), big_y0.clone())?;
    let pal = run_palindromic_chain(model, config, &z0, n, &mut noise)?;

    let draws = &noise.normals[1..];
    let zbar: Vec<Vec<f64>> = draws.iter().step_by(2).cloned().collect();
    let zhat: Vec<Vec<f64>> = draws.iter().skip(1).step_by(2).cloned().collect();
    let coupled = couple_noise(&config.angle, &big_y0, &zbar, &zhat)?;

    let mut script = ScriptedNoise::new();
    for ((zeta, &u), &w) in coupled
        .zeta
        .iter()
        .zip(&noise.acceptance)
        .zip(&noise.jitter)
    {
        script.push_normals(zeta).push_acceptance(u).push_jitter(w);
    }
    let start = PhaseState::new(model.reference_point(), coupled.y0)?;
    let ordinary = run_chain_with(model, config, &start, Budget::transitions(n), &mut script)?;

    Ok(pal
        .positions()
        .zip(ordinary.positions())
        .map(|(a, b)| {
            let scale = b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            a.iter()
                .zip(b)
                .fold(0.0f64, |m, (p, q)| m.max((p - q).abs()))
                / scale
        })
        .fold(0.0, f64::max))
}

pub const COUPLING_SIN_PSI: [f64; 3] = [0.25, 0.5, 1.0];

fn palindromic_coupling(seed: u64) -> Vec<CheckResult> {
    let mut out = Vec::new();
    // linear dynamics: rounding differences stay at the ulp level
    for (i, &s) in COUPLING_SIN_PSI.iter().enumerate() {
        let model = target("gaussian", 3);
        let cfg = SamplerConfig::new(
            LegSpec::new(0.3, 5).expect("valid leg"),
            RefreshAngle::from_sin(s).expect("valid angle"),
        )
        .with_extra_chances(2);
        let mut tally = Tally::new();
        tally.add(coupling_gap(&model, &cfg, 100, seed.wrapping_add(i as u64)));
        out.push(tally.finish(
            Suite::PalindromicCoupling,
            format!("gaussian_100_sin_psi_{s}"),
            1e-12,
            1,
        ));
    }
    // nonlinear targets amplify rounding differences, so the horizon is short
    for (j, name) in ["double_well", "banana"].into_iter().enumerate() {
        let model = target(name, 2);
        let mut tally = Tally::new();
        for (i, &s) in COUPLING_SIN_PSI.iter().enumerate() {
            let cfg = SamplerConfig::new(
                LegSpec::new(0.1, 5).expect("valid leg"),
                RefreshAngle::from_sin(s).expect("valid angle"),
            )
            .with_extra_chances(2);
            tally.add(coupling_gap(
                &model,
                &cfg,
                10,
                seed.wrapping_add(10 * (j as u64 + 1) + i as u64),
            ));
        }
        out.push(tally.finish(
            Suite::PalindromicCoupling,
            format!("{name}_10"),
            1e-12,
            COUPLING_SIN_PSI.len(),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::EACH.iter().chain([&Suite::All]) {
            assert_eq!(s.name().parse::<Suite>().unwrap(), *s);
        }
        assert!("bogus".parse::<Suite>().is_err());
    }

    #[test]
    fn tally_treats_nan_as_failure() {
        let mut t = Tally::new();
        t.add(Ok(0.0));
        t.add(Ok(f64::NAN));
        let r = t.finish(Suite::Volume, "x", 1.0, 1);
        assert!(!r.passed);
    }
}
