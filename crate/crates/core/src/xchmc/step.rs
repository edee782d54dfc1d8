use crate::error::Result;
use crate::integrator::{integrate, jitter_dt, LegSpec};
use crate::noise::NoiseSource;
use crate::phase::{PhaseState, TargetModel};

use super::{log_ratio, SamplerConfig};

/// Result of one application of the extra-chance operator `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionOutcome {
    pub next: PhaseState,
    /// `1…K+1` for an accepted candidate, `K + 2` for a momentum flip.
    pub slot: usize,
    /// Legs integrated, including a leg that diverged.
    pub candidates_computed: usize,
    pub force_evals: u64,
    /// The acceptance draw.
    pub u: f64,
    /// Time-step shared by every leg of this call.
    pub dt: f64,
    /// A leg left the finite domain; the remaining candidates were skipped.
    pub diverged: bool,
}

impl TransitionOutcome {
    pub fn is_flip(&self, extra_chances: usize) -> bool {
        self.slot == extra_chances + 2
    }
}

/// Applies `D` to `z`.
///
/// Draws `u` first and then one jitter value; all legs of this call share the
/// jittered time-step. Candidates are integrated lazily: `Iᵏz` is computed
/// only when `u` exceeded `Σ⁽ᵏ⁻¹⁾`. The first candidate is always computed,
/// which differs from a literal reading of the loop only on the null event
/// `u = 0`. Acceptance uses `log u ≤ log Σ⁽ᵏ⁾`.
pub fn extra_chance_step<N: NoiseSource + ?Sized>(
    model: &TargetModel,
    config: &SamplerConfig,
    z: &PhaseState,
    noise: &mut N,
) -> Result<TransitionOutcome> {
    model.check_dim(z)?;
    let u = noise.acceptance_uniform();
    let dt = jitter_dt(config.leg.dt(), config.jitter_fraction, noise);
    let leg = LegSpec::new(dt, config.leg.steps())?;
    Ok(lazy_extra_chances(
        model,
        &leg,
        config.extra_chances,
        z,
        u,
        dt,
    ))
}

pub(crate) fn lazy_extra_chances(
    model: &TargetModel,
    leg: &LegSpec,
    extra_chances: usize,
    z: &PhaseState,
    u: f64,
    dt: f64,
) -> TransitionOutcome {
    let log_u = u.ln();
    let log_rho0 = model.log_rho_unchecked(z);
    let mut log_sigma = f64::NEG_INFINITY;
    let mut current = z.clone();
    let mut force_evals = 0;
    let mut diverged = false;
    let mut computed = 0;

    for k in 1..=extra_chances + 1 {
        computed = k;
        match integrate(model, leg, &current) {
            Ok(out) => {
                force_evals += out.force_evals;
                let ratio = log_ratio(model.log_rho_unchecked(&out.state), log_rho0);
                log_sigma = log_sigma.max(ratio.min(0.0));
                if log_sigma > f64::NEG_INFINITY && log_u <= log_sigma {
                    return TransitionOutcome {
                        next: out.state,
                        slot: k,
                        candidates_computed: k,
                        force_evals,
                        u,
                        dt,
                        diverged,
                    };
                }
                current = out.state;
            }
            Err(d) => {
                force_evals += d.force_evals;
                diverged = true;
                break;
            }
        }
    }

    TransitionOutcome {
        next: z.flipped(),
        slot: extra_chances + 2,
        candidates_computed: computed,
        force_evals,
        u,
        dt,
        diverged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::verlet_leg;
    use crate::noise::ScriptedNoise;
    use crate::phase::{builtin_target, TargetParams};
    use crate::xchmc::{sigma_sequence, RefreshAngle};

    fn setup(k: usize) -> (TargetModel, SamplerConfig) {
        let model = builtin_target("gaussian", &TargetParams::dims(1)).unwrap();
        let cfg = SamplerConfig::new(LegSpec::new(0.5, 10).unwrap(), RefreshAngle::full())
            .with_extra_chances(k);
        (model, cfg)
    }

    #[test]
    fn zero_draw_accepts_first_candidate() {
        let (model, cfg) = setup(3);
        let z = PhaseState::new(vec![0.8], vec![-0.4]).unwrap();
        let mut noise = ScriptedNoise::new();
        noise.push_acceptance(0.0);
        let out = extra_chance_step(&model, &cfg, &z, &mut noise).unwrap();
        assert_eq!(out.slot, 1);
        assert_eq!(out.candidates_computed, 1);
        assert_eq!(out.force_evals, 11);
        assert_eq!(out.next, verlet_leg(&model, &cfg.leg, &z).unwrap().state);
    }

    #[test]
    fn rejection_flips_input_state() {
        let (model, cfg) = setup(2);
        let z = PhaseState::new(vec![0.0], vec![2.0]).unwrap();
        let sd = sigma_sequence(&model, &cfg.leg, &z, 2).unwrap();
        let u = 1.0 - 1e-16;
        assert!(
            u > sd.sigma()[2],
            "need an energy-increasing orbit for this test"
        );
        let mut noise = ScriptedNoise::new();
        noise.push_acceptance(u);
        let out = extra_chance_step(&model, &cfg, &z, &mut noise).unwrap();
        assert_eq!(out.slot, 4);
        assert!(out.is_flip(2));
        assert_eq!(out.candidates_computed, 3);
        assert_eq!(out.next, z.flipped());
        assert_eq!(out.force_evals, 33);
    }

    #[test]
    fn diverged_leg_is_never_accepted() {
        let model = builtin_target("double_well", &TargetParams::dims(1)).unwrap();
        let cfg = SamplerConfig::new(LegSpec::new(0.9, 30).unwrap(), RefreshAngle::full())
            .with_extra_chances(2);
        let z = PhaseState::new(vec![1e40], vec![0.0]).unwrap();
        let mut noise = ScriptedNoise::new();
        noise.push_acceptance(0.0);
        let out = extra_chance_step(&model, &cfg, &z, &mut noise).unwrap();
        assert!(out.diverged);
        assert_eq!(out.slot, 4);
        assert_eq!(out.next, z.flipped());
    }
}
