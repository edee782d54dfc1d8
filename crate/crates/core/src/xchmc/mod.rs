//! Extra chance generalized hybrid Monte Carlo.
//!
//! Each transition of the outer chain refreshes the momentum partially and
//! then applies the extra-chance operator `D`: up to `K + 1` consecutive
//! Verlet legs are tried, candidate `k` being accepted when the uniform draw
//! `u` falls below the running maximum `Σ⁽ᵏ⁾ = min(1, max_{j≤k} ρ(Iʲz)/ρ(z))`.
//! When every candidate misses, the momentum is flipped. `K = 0` is GHMC and
//! `K = 0` with a full refresh (`ψ = π/2`) is plain HMC.

mod chain;
mod lahmc;
mod palindromic;
mod refresh;
mod slots;
mod step;

pub use chain::{
    run_chain, run_chain_with, transition, Budget, ChainRecord, Limit, TransitionRecord,
};
pub use lahmc::{lahmc_from_log_densities, lahmc_probabilities, LahmcProbabilities};
pub use palindromic::{couple_noise, run_palindromic_chain, CoupledNoise};
pub use refresh::refresh_momentum;
pub use slots::{forward_log_densities, sigma_sequence, SlotDistribution};
pub use step::{extra_chance_step, TransitionOutcome};

use std::f64::consts::{FRAC_PI_2, SQRT_2};

use crate::error::{Error, Result};
use crate::integrator::LegSpec;

/// Burn-in transitions used by force-evaluation budgets unless overridden.
pub const DEFAULT_BURN_IN: usize = 500;

/// Horowitz angle `ψ ∈ (0, π/2]` with its cosine and sine.
///
/// `ψ = π/2` is stored with `cos ψ = 0` exactly so that a full refresh
/// discards the old momentum bit-for-bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefreshAngle {
    psi: f64,
    cos: f64,
    sin: f64,
}

impl RefreshAngle {
    pub fn new(psi: f64) -> Result<Self> {
        if !(psi > 0.0 && psi <= FRAC_PI_2) {
            return Err(Error::invalid("psi", format!("{psi} is outside (0, π/2]")));
        }
        if psi == FRAC_PI_2 {
            return Ok(Self::full());
        }
        Ok(Self {
            psi,
            cos: psi.cos(),
            sin: psi.sin(),
        })
    }

    /// Angle with the given `sin ψ ∈ (0, 1]`.
    pub fn from_sin(sin_psi: f64) -> Result<Self> {
        if !(sin_psi > 0.0 && sin_psi <= 1.0) {
            return Err(Error::invalid(
                "sin_psi",
                format!("{sin_psi} is outside (0, 1]"),
            ));
        }
        if sin_psi == 1.0 {
            return Ok(Self::full());
        }
        Ok(Self {
            psi: sin_psi.asin(),
            cos: ((1.0 - sin_psi) * (1.0 + sin_psi)).sqrt(),
            sin: sin_psi,
        })
    }

    /// `ψ = π/2`: the momentum is replaced by a fresh draw.
    pub fn full() -> Self {
        Self {
            psi: FRAC_PI_2,
            cos: 0.0,
            sin: 1.0,
        }
    }

    pub fn psi(&self) -> f64 {
        self.psi
    }

    pub fn cos(&self) -> f64 {
        self.cos
    }

    pub fn sin(&self) -> f64 {
        self.sin
    }

    /// The angle `Ψ ∈ (0, π/2]` with `cos²Ψ = cos ψ` used by the
    /// palindromic chain.
    pub fn palindromic_partner(&self) -> Self {
        if self.cos == 0.0 {
            return Self::full();
        }
        // sin²Ψ = 1 − cos ψ = 2 sin²(ψ/2), evaluated without cancellation
        let sin = SQRT_2 * (0.5 * self.psi).sin();
        let cos = self.cos.sqrt();
        Self {
            psi: sin.atan2(cos),
            cos,
            sin,
        }
    }
}

/// Parameters of the sampler: leg, refresh angle, number of extra chances,
/// time-step jitter and master seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub leg: LegSpec,
    pub angle: RefreshAngle,
    pub extra_chances: usize,
    pub jitter_fraction: f64,
    pub seed: u64,
}

impl SamplerConfig {
    /// No extra chances, no jitter, seed 0.
    pub fn new(leg: LegSpec, angle: RefreshAngle) -> Self {
        Self {
            leg,
            angle,
            extra_chances: 0,
            jitter_fraction: 0.0,
            seed: 0,
        }
    }

    pub fn with_extra_chances(mut self, k: usize) -> Self {
        self.extra_chances = k;
        self
    }

    pub fn with_jitter(mut self, fraction: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&fraction) {
            return Err(Error::invalid(
                "jitter",
                format!("{fraction} is outside [0, 1)"),
            ));
        }
        self.jitter_fraction = fraction;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn psi(&self) -> f64 {
        self.angle.psi()
    }

    /// Number of outcome slots, `K + 2`.
    pub fn slot_count(&self) -> usize {
        self.extra_chances + 2
    }
}

/// `a − b` for log-densities, with `ρ = 0` handled as `-∞`.
pub(crate) fn log_ratio(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else if b == f64::NEG_INFINITY {
        f64::INFINITY
    } else {
        a - b
    }
}
