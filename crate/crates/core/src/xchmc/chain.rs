use crate::error::Result;
use crate::noise::{chain_rng, NoiseSource};
use crate::phase::{PhaseState, TargetModel};

use super::{
    extra_chance_step, refresh_momentum, SamplerConfig, TransitionOutcome, DEFAULT_BURN_IN,
};

/// When a production run stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Limit {
    /// Exactly this many transitions.
    Transitions(usize),
    /// Stop after the first transition whose completion brings the
    /// production force-evaluation count to at least the cap.
    ForceEvals(u64),
}

/// Production limit plus burn-in transitions.
///
/// Burn-in transitions run before the production phase, are not recorded,
/// and do not count against a force-evaluation cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub limit: Limit,
    pub burn_in: usize,
}

impl Budget {
    /// `n` transitions, no burn-in.
    pub fn transitions(n: usize) -> Self {
        Self {
            limit: Limit::Transitions(n),
            burn_in: 0,
        }
    }

    /// Force-evaluation cap with the default burn-in of 500 transitions.
    pub fn force_evals(cap: u64) -> Self {
        Self {
            limit: Limit::ForceEvals(cap),
            burn_in: DEFAULT_BURN_IN,
        }
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }
}

/// Metadata of one recorded transition `zₙ → zₙ₊₁`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionRecord {
    pub slot: usize,
    pub dt: f64,
    pub force_evals: u64,
    pub candidates: usize,
    pub u: f64,
    pub diverged: bool,
}

impl From<&TransitionOutcome> for TransitionRecord {
    fn from(o: &TransitionOutcome) -> Self {
        Self {
            slot: o.slot,
            dt: o.dt,
            force_evals: o.force_evals,
            candidates: o.candidates_computed,
            u: o.u,
            diverged: o.diverged,
        }
    }
}

/// Production trajectory `z₀ … z_N` and per-transition metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainRecord {
    pub extra_chances: usize,
    /// `N + 1` states; `states[0]` is the state after burn-in.
    pub states: Vec<PhaseState>,
    /// `N` entries; `transitions[n]` produced `states[n + 1]`.
    pub transitions: Vec<TransitionRecord>,
    pub burn_in_transitions: usize,
    pub burn_in_force_evals: u64,
}

impl ChainRecord {
    pub(crate) fn start(extra_chances: usize, z0: PhaseState) -> Self {
        Self {
            extra_chances,
            states: vec![z0],
            transitions: Vec::new(),
            burn_in_transitions: 0,
            burn_in_force_evals: 0,
        }
    }

    /// `N`.
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    /// Production force evaluations.
    pub fn force_evals(&self) -> u64 {
        self.transitions.iter().map(|t| t.force_evals).sum()
    }

    /// Running total of production force evaluations after each transition.
    pub fn cumulative_force_evals(&self) -> Vec<u64> {
        self.transitions
            .iter()
            .scan(0u64, |acc, t| {
                *acc += t.force_evals;
                Some(*acc)
            })
            .collect()
    }

    pub fn positions(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.states.iter().map(|s| s.x())
    }

    pub fn last_state(&self) -> &PhaseState {
        self.states
            .last()
            .expect("a record always holds its initial state")
    }
}

/// One transition of the outer chain: refresh, then `D`.
pub fn transition<N: NoiseSource + ?Sized>(
    model: &TargetModel,
    config: &SamplerConfig,
    z: &PhaseState,
    noise: &mut N,
) -> Result<TransitionOutcome> {
    let refreshed = refresh_momentum(model, z, &config.angle, noise);
    extra_chance_step(model, config, &refreshed, noise)
}

/// Runs the chain with the generator `chain_rng(config.seed, 0)`.
pub fn run_chain(
    model: &TargetModel,
    config: &SamplerConfig,
    z0: &PhaseState,
    budget: Budget,
) -> Result<ChainRecord> {
    let mut rng = chain_rng(config.seed, 0);
    run_chain_with(model, config, z0, budget, &mut rng)
}

/// Runs the chain drawing from `noise`.
pub fn run_chain_with<N: NoiseSource + ?Sized>(
    model: &TargetModel,
    config: &SamplerConfig,
    z0: &PhaseState,
    budget: Budget,
    noise: &mut N,
) -> Result<ChainRecord> {
    model.check_dim(z0)?;
    let mut z = z0.clone();
    let mut burn_evals = 0;
    for _ in 0..budget.burn_in {
        let out = transition(model, config, &z, noise)?;
        burn_evals += out.force_evals;
        z = out.next;
    }

    let mut record = ChainRecord::start(config.extra_chances, z);
    record.burn_in_transitions = budget.burn_in;
    record.burn_in_force_evals = burn_evals;

    let mut spent = 0u64;
    loop {
        let done = match budget.limit {
            Limit::Transitions(n) => record.transitions.len() >= n,
            Limit::ForceEvals(cap) => spent >= cap,
        };
        if done {
            break;
        }
        let out = transition(model, config, record.last_state(), noise)?;
        spent += out.force_evals;
        record.transitions.push(TransitionRecord::from(&out));
        record.states.push(out.next);
    }
    Ok(record)
}
