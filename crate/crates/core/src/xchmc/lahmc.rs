//! Look-ahead HMC transition probabilities.
//!
//! The probability of moving to candidate `k` is defined recursively,
//!
//! ```text
//! π⁽ᵏ⁾(z) = min( 1 − Σ_{j<k} π⁽ʲ⁾(z),
//!                ρ(F Iᵏ z)/ρ(z) · (1 − Σ_{j<k} π⁽ʲ⁾(F Iᵏ z)) )
//! ```
//!
//! and involves the orbit of the flipped point `w = F Iᵏ z`. Because the leg
//! is reversible, `Iʲ w = F I^{k−j} z`, so `log ρ` along that orbit is the
//! forward sequence read backwards from index `k`. The recursion therefore
//! runs over windows of the forward log-densities `ℓ₀ … ℓ_{K+1}`, each
//! window described by a start index and a direction. This is computed
//! independently of the running-maximum formula and serves as its oracle.

use crate::error::Result;
use crate::integrator::LegSpec;
use crate::phase::{PhaseState, TargetModel};

use super::forward_log_densities;

#[derive(Debug, Clone, PartialEq)]
pub struct LahmcProbabilities {
    /// `π⁽¹⁾ … π⁽ᴷ⁺¹⁾`.
    pub pi: Vec<f64>,
    /// `S⁽ᵏ⁾ = Σ_{j≤k} π⁽ʲ⁾`.
    pub cumulative: Vec<f64>,
}

/// Evaluates the look-ahead probabilities at `z` with `K` extra chances.
pub fn lahmc_probabilities(
    model: &TargetModel,
    leg: &LegSpec,
    z: &PhaseState,
    extra_chances: usize,
) -> Result<LahmcProbabilities> {
    let ell = forward_log_densities(model, leg, z, extra_chances + 1)?;
    Ok(lahmc_from_log_densities(&ell))
}

/// Same as [`lahmc_probabilities`] from `ℓⱼ = log ρ(Iʲz)`, `j = 0…K+1`.
///
/// # Panics
/// If fewer than two values are given or `ℓ₀` is not finite.
pub fn lahmc_from_log_densities(ell: &[f64]) -> LahmcProbabilities {
    assert!(ell.len() >= 2, "need log ρ(z) and at least one candidate");
    assert!(ell[0].is_finite(), "log ρ(z) must be finite");
    let chances = ell.len() - 1;
    let mut orbit = Orbit::new(ell);
    let pi: Vec<f64> = (1..=chances).map(|k| orbit.pi(0, true, k)).collect();
    let cumulative = pi
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    LahmcProbabilities { pi, cumulative }
}

struct Orbit<'a> {
    ell: &'a [f64],
    memo: Vec<Option<f64>>,
}

impl<'a> Orbit<'a> {
    fn new(ell: &'a [f64]) -> Self {
        let n = ell.len();
        Self {
            ell,
            memo: vec![None; 2 * n * n],
        }
    }

    fn index(&self, start: usize, forward: bool, k: usize) -> usize {
        let n = self.ell.len();
        (start * 2 + usize::from(forward)) * n + k
    }

    /// `log ρ` of the `j`-th point of the window rooted at `start`.
    fn at(&self, start: usize, forward: bool, j: usize) -> f64 {
        if forward {
            self.ell[start + j]
        } else {
            self.ell[start - j]
        }
    }

    fn remaining(&mut self, start: usize, forward: bool, k: usize) -> f64 {
        1.0 - (1..k).map(|j| self.pi(start, forward, j)).sum::<f64>()
    }

    fn pi(&mut self, start: usize, forward: bool, k: usize) -> f64 {
        let key = self.index(start, forward, k);
        if let Some(v) = self.memo[key] {
            return v;
        }
        let log_here = self.at(start, forward, 0);
        let log_there = self.at(start, forward, k);
        let own = self.remaining(start, forward, k);
        let through_flip = if log_there == f64::NEG_INFINITY {
            0.0
        } else {
            let flipped_start = if forward { start + k } else { start - k };
            let rem = self.remaining(flipped_start, !forward, k);
            if rem <= 0.0 {
                0.0
            } else {
                (log_there - log_here + rem.ln()).exp()
            }
        };
        let v = own.min(through_flip);
        self.memo[key] = Some(v);
        v
    }
}
