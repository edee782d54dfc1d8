//! Extra chance generalized hybrid Monte Carlo.
//!
//! A transition refreshes the momentum partially and then applies the
//! extra-chance operator: up to `K + 1` consecutive Verlet legs are tried
//! lazily against a single uniform draw, and the momentum is flipped if all
//! of them fail. `K = 0` is GHMC; `K = 0` with full refresh is HMC.
//!
//! ```
//! use xcghmc::{builtin_target, run_chain, Budget, LegSpec, PhaseState, RefreshAngle, SamplerConfig, TargetParams};
//!
//! let model = builtin_target("gaussian", &TargetParams::dims(2)).unwrap();
//! let config = SamplerConfig::new(LegSpec::new(0.3, 8).unwrap(), RefreshAngle::full())
//!     .with_extra_chances(2)
//!     .with_seed(7);
//! let z0 = PhaseState::at_rest(vec![0.0, 0.0]).unwrap();
//! let record = run_chain(&model, &config, &z0, Budget::transitions(100)).unwrap();
//! assert_eq!(record.states.len(), 101);
//! ```

pub mod diagnostics;
pub mod error;
pub mod integrator;
pub mod noise;
pub mod phase;
pub mod xchmc;

pub use diagnostics::{
    check_main_identity, ess_initial_monotone, estimate_average, slot_stats, EssEstimate,
    Observable, SlotStats,
};
pub use error::{DivergedLeg, Error, Result};
pub use integrator::{verlet_leg, LegOutcome, LegSpec};
pub use noise::{chain_rng, NoiseSource, RecordingNoise, ScriptedNoise};
pub use phase::{
    builtin_target, flip, log_rho, MassMatrix, PhaseState, Potential, TargetModel, TargetParams,
    BUILTIN_TARGETS,
};
pub use xchmc::{
    extra_chance_step, run_chain, run_chain_with, Budget, ChainRecord, Limit, RefreshAngle,
    SamplerConfig, TransitionOutcome,
};
