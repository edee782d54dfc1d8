//! Experiment harness for the `xcghmc` sampler: spec files, replica sweeps,
//! sample and summary output, and the invariant verification suites.

pub mod error;
pub mod experiment;
pub mod output;
pub mod scan;
pub mod spec;
pub mod verify;

pub use error::{HarnessError, Result};
pub use experiment::{
    replica_seed, run_experiment, run_experiment_with, run_replica, RunOptions, SummaryReport,
};
pub use spec::{load_spec, ExperimentSpec, FixedParams, Sweep, SweepAxis, TargetSpec};
pub use verify::{verify, Suite, VerificationReport};
