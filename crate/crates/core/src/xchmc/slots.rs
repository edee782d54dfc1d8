//! Slot probabilities of the extra-chance operator.
//!
//! For a fixed `z`, the running maxima `Σ⁽¹⁾ ≤ … ≤ Σ⁽ᴷ⁺¹⁾` split `[0, 1]`
//! into `K + 2` intervals. Their lengths are the probabilities that `D(z)`
//! returns `I¹z, …, Iᴷ⁺¹z` or the flipped state.

use crate::error::Result;
use crate::integrator::{integrate, LegSpec};
use crate::phase::{PhaseState, TargetModel};

use super::log_ratio;

#[derive(Debug, Clone, PartialEq)]
pub struct SlotDistribution {
    log_sigma: Vec<f64>,
    sigma: Vec<f64>,
    p: Vec<f64>,
}

impl SlotDistribution {
    /// Builds the distribution from `log ρ(Iʲz) − log ρ(z)`, `j = 1…K+1`.
    ///
    /// # Panics
    /// If `log_ratios` is empty.
    pub fn from_log_ratios(log_ratios: &[f64]) -> Self {
        assert!(!log_ratios.is_empty(), "at least one candidate is required");
        let mut log_sigma = Vec::with_capacity(log_ratios.len());
        let mut running = f64::NEG_INFINITY;
        for &r in log_ratios {
            running = running.max(r.min(0.0));
            log_sigma.push(running);
        }
        let sigma: Vec<f64> = log_sigma.iter().map(|l| l.exp()).collect();
        let mut p = Vec::with_capacity(sigma.len() + 1);
        let mut prev = 0.0;
        for &s in &sigma {
            p.push(s - prev);
            prev = s;
        }
        p.push(1.0 - prev);
        Self {
            log_sigma,
            sigma,
            p,
        }
    }

    /// Convenience for hand examples: builds from plain density ratios.
    pub fn from_ratios(ratios: &[f64]) -> Self {
        let logs: Vec<f64> = ratios.iter().map(|r| r.ln()).collect();
        Self::from_log_ratios(&logs)
    }

    /// `K`.
    pub fn extra_chances(&self) -> usize {
        self.sigma.len() - 1
    }

    /// `Σ⁽¹⁾ … Σ⁽ᴷ⁺¹⁾`.
    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn log_sigma(&self) -> &[f64] {
        &self.log_sigma
    }

    /// `p⁽¹⁾ … p⁽ᴷ⁺²⁾`; the last entry is the flip probability.
    pub fn p(&self) -> &[f64] {
        &self.p
    }

    /// `p⁽ᵏ⁾` for a 1-based slot.
    pub fn slot_probability(&self, slot: usize) -> f64 {
        self.p[slot - 1]
    }

    pub fn flip_probability(&self) -> f64 {
        *self.p.last().expect("non-empty")
    }

    /// The slot `D` selects for the draw `u`: the smallest `k` with
    /// `log u ≤ log Σ⁽ᵏ⁾`, or `K + 2` when none qualifies.
    pub fn slot_for(&self, u: f64) -> usize {
        let log_u = u.ln();
        self.log_sigma
            .iter()
            .position(|&ls| ls > f64::NEG_INFINITY && log_u <= ls)
            .map(|i| i + 1)
            .unwrap_or(self.sigma.len() + 1)
    }
}

/// `log ρ(Iʲz)` for `j = 0…legs`. Entries after a diverged leg are `-∞`.
pub fn forward_log_densities(
    model: &TargetModel,
    leg: &LegSpec,
    z: &PhaseState,
    legs: usize,
) -> Result<Vec<f64>> {
    model.check_dim(z)?;
    let mut out = Vec::with_capacity(legs + 1);
    out.push(model.log_rho_unchecked(z));
    let mut current = z.clone();
    for _ in 0..legs {
        match integrate(model, leg, &current) {
            Ok(next) => {
                out.push(model.log_rho_unchecked(&next.state));
                current = next.state;
            }
            Err(_) => break,
        }
    }
    out.resize(legs + 1, f64::NEG_INFINITY);
    Ok(out)
}

/// Eagerly evaluates all `K + 1` legs from `z` and returns the slot
/// distribution of `D(z)`.
pub fn sigma_sequence(
    model: &TargetModel,
    leg: &LegSpec,
    z: &PhaseState,
    extra_chances: usize,
) -> Result<SlotDistribution> {
    let ell = forward_log_densities(model, leg, z, extra_chances + 1)?;
    let ratios: Vec<f64> = ell[1..].iter().map(|&l| log_ratio(l, ell[0])).collect();
    Ok(SlotDistribution::from_log_ratios(&ratios))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::phase::FreeParticle;

    #[test]
    fn energy_conserving_flow_accepts_first_chance() {
        let model = TargetModel::new(Arc::new(FreeParticle::new(2)));
        let z = PhaseState::new(vec![0.1, 0.2], vec![1.0, -3.0]).unwrap();
        let leg = LegSpec::new(0.3, 4).unwrap();
        let sd = sigma_sequence(&model, &leg, &z, 3).unwrap();
        assert_eq!(sd.sigma(), &[1.0; 4]);
        assert_eq!(sd.p(), &[1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn two_candidate_hand_example() {
        let sd = SlotDistribution::from_ratios(&[0.6, 1.2]);
        assert_abs_diff_eq!(sd.sigma()[0], 0.6, epsilon = 1e-15);
        assert_eq!(sd.sigma()[1], 1.0);
        let expect = [0.6, 0.4, 0.0];
        for (a, b) in sd.p().iter().zip(expect) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn missed_chances_hand_example() {
        let sd = SlotDistribution::from_ratios(&[0.6, 0.3, 0.5]);
        for s in sd.sigma() {
            assert_abs_diff_eq!(*s, 0.6, epsilon = 1e-15);
        }
        let expect = [0.6, 0.0, 0.0, 0.4];
        for (a, b) in sd.p().iter().zip(expect) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        // p(2) and p(3) are exact zeros, not round-off
        assert_eq!(sd.p()[1], 0.0);
        assert_eq!(sd.p()[2], 0.0);
    }

    #[test]
    fn slot_for_partitions_unit_interval() {
        let sd = SlotDistribution::from_ratios(&[0.2, 0.1, 0.7]);
        assert_eq!(sd.slot_for(0.0), 1);
        assert_eq!(sd.slot_for(0.19), 1);
        assert_eq!(sd.slot_for(0.5), 3);
        assert_eq!(sd.slot_for(0.71), 4);
    }

    #[test]
    fn diverged_candidates_have_zero_density() {
        let sd = SlotDistribution::from_log_ratios(&[f64::NEG_INFINITY, -0.5, f64::NEG_INFINITY]);
        assert_eq!(sd.sigma()[0], 0.0);
        assert_eq!(sd.p()[0], 0.0);
        assert_eq!(sd.slot_for(0.0), 2);
        assert_eq!(sd.slot_for(0.99), 4);
    }
}
