//! Sweeps over replicas and parameter values, and their summary report.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use xcghmc::{
    chain_rng, estimate_average, run_chain_with, slot_stats, Budget, ChainRecord, NoiseSource,
    Observable, PhaseState, SlotStats, TargetModel,
};

use crate::error::{HarnessError, Result};
use crate::output::write_samples;
use crate::spec::{ExperimentSpec, PointSettings, SweepAxis, TargetSpec};

/// Odd 64-bit increment used to derive replica seeds.
pub const REPLICA_SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

/// Seed of replica `r`: `master + r · stride` (wrapping). Replica 0 uses the
/// master seed itself, and every sweep value reuses the same replica seeds.
pub fn replica_seed(master: u64, replica: usize) -> u64 {
    master.wrapping_add((replica as u64).wrapping_mul(REPLICA_SEED_STRIDE))
}

/// Runs one chain from the target's reference point.
///
/// The generator is `chain_rng(seed, 0)`. It first draws the initial
/// momentum from `N(0, M)`, then drives burn-in and production.
pub fn run_replica(
    model: &TargetModel,
    settings: &PointSettings,
    budget: Budget,
    seed: u64,
) -> Result<ChainRecord> {
    let config = settings.config(seed);
    let mut rng = chain_rng(seed, 0);
    let mut xi = vec![0.0; model.dim()];
    rng.fill_standard_normal(&mut xi);
    let y0 = model.mass().scale_standard_normal(&xi);
    let z0 = PhaseState::new(model.reference_point(), y0)?;
    Ok(run_chain_with(model, &config, &z0, budget, &mut rng)?)
}

/// Slot fractions serialized as `{"a0": …, …, "aK": …, "flip": …}` in that order.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotFractions(pub Vec<f64>);

impl SlotFractions {
    pub fn extra_chances(&self) -> usize {
        self.0.len() - 2
    }

    pub fn acceptance(&self, k: usize) -> f64 {
        self.0[k]
    }

    pub fn flip(&self) -> f64 {
        *self.0.last().expect("at least two slots")
    }

    pub fn total_acceptance(&self) -> f64 {
        self.0[..self.0.len() - 1].iter().sum()
    }
}

impl From<&SlotStats> for SlotFractions {
    fn from(s: &SlotStats) -> Self {
        Self(s.fractions.clone())
    }
}

impl Serialize for SlotFractions {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        let k = self.extra_chances();
        for (i, v) in self.0.iter().enumerate() {
            if i <= k {
                map.serialize_entry(&format!("a{i}"), v)?;
            } else {
                map.serialize_entry("flip", v)?;
            }
        }
        map.end()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicaSummary {
    pub replica: usize,
    pub seed: u64,
    pub transitions: usize,
    pub force_evals: u64,
    pub burn_in_force_evals: u64,
    pub slots: Option<SlotFractions>,
    pub ess: Option<f64>,
    pub mean: Option<f64>,
    pub stderr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ReplicaSummary {
    fn failed(replica: usize, seed: u64, error: String) -> Self {
        Self {
            replica,
            seed,
            transitions: 0,
            force_evals: 0,
            burn_in_force_evals: 0,
            slots: None,
            ess: None,
            mean: None,
            stderr: None,
            error: Some(error),
        }
    }

    /// Condenses a chain record for the report.
    pub fn from_record(
        replica: usize,
        seed: u64,
        record: &ChainRecord,
        observable: &Observable,
    ) -> Self {
        let slots = slot_stats(record).ok().map(|s| SlotFractions::from(&s));
        let (ess, mean, stderr, error) = match estimate_average(record, observable) {
            Ok(avg) => {
                let error = avg.ess.as_ref().err().map(|e| format!("ess: {e}"));
                let ess = avg.ess.as_ref().ok().map(|e| e.ess);
                (ess, Some(avg.mean), avg.std_err(), error)
            }
            Err(e) => (None, None, None, Some(e.to_string())),
        };
        Self {
            replica,
            seed,
            transitions: record.len(),
            force_evals: record.force_evals(),
            burn_in_force_evals: record.burn_in_force_evals,
            slots,
            ess,
            mean,
            stderr,
            error,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    /// Replicas with a defined ESS.
    pub ess_count: usize,
    pub ess_mean: Option<f64>,
    /// Sample standard deviation across replicas (`n − 1` divisor).
    pub ess_std: Option<f64>,
    /// `ess_std / sqrt(n)`.
    pub ess_stderr: Option<f64>,
    pub slot_means: Option<SlotFractions>,
}

impl Aggregate {
    pub fn from_replicas(replicas: &[ReplicaSummary]) -> Self {
        let ess: Vec<f64> = replicas.iter().filter_map(|r| r.ess).collect();
        let (ess_mean, ess_std, ess_stderr) = match mean_std(&ess) {
            Some((m, s)) => (Some(m), Some(s), Some(s / (ess.len() as f64).sqrt())),
            None => (None, None, None),
        };
        let slots: Vec<&SlotFractions> = replicas.iter().filter_map(|r| r.slots.as_ref()).collect();
        let slot_means = slots.first().map(|first| {
            let mut acc = vec![0.0; first.0.len()];
            for s in &slots {
                for (a, v) in acc.iter_mut().zip(&s.0) {
                    *a += v;
                }
            }
            SlotFractions(acc.into_iter().map(|a| a / slots.len() as f64).collect())
        });
        Self {
            ess_count: ess.len(),
            ess_mean,
            ess_std,
            ess_stderr,
            slot_means,
        }
    }
}

/// Mean and sample standard deviation; the deviation is 0 for one value.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Some((mean, std))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointSummary {
    pub value: f64,
    pub dt: f64,
    #[serde(rename = "L")]
    pub steps: usize,
    pub sin_psi: f64,
    #[serde(rename = "K")]
    pub extra_chances: usize,
    pub replicas: Vec<ReplicaSummary>,
    pub aggregate: Aggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryReport {
    pub axis: SweepAxis,
    pub target: TargetSpec,
    pub observable: String,
    pub budget_force_evals: u64,
    pub burn_in: usize,
    pub jitter: f64,
    pub seed: u64,
    pub error_bars: &'static str,
    pub points: Vec<PointSummary>,
}

pub const ERROR_BAR_NOTE: &str =
    "ess_std is the sample standard deviation across replicas; ess_stderr = ess_std / sqrt(ess_count)";

impl SummaryReport {
    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Worker threads; `0` lets rayon decide.
    pub workers: usize,
    /// Write per-replica CSVs and `summary.json` under the spec's `out_dir`.
    pub write_outputs: bool,
    /// Add momentum columns to the sample CSVs.
    pub momenta: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            workers: 0,
            write_outputs: true,
            momenta: false,
        }
    }
}

pub fn samples_path(out_dir: &Path, point: usize, replica: usize) -> PathBuf {
    out_dir
        .join("samples")
        .join(format!("point{point:02}_replica{replica:02}.csv"))
}

pub fn summary_path(out_dir: &Path) -> PathBuf {
    out_dir.join("summary.json")
}

/// Runs a validated spec with default options.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<SummaryReport> {
    run_experiment_with(spec, &RunOptions::default())
}

pub fn run_experiment_with(spec: &ExperimentSpec, options: &RunOptions) -> Result<SummaryReport> {
    spec.validate()?;
    let model = spec.target.build()?;
    let observable = spec.parsed_observable()?;
    let points: Vec<PointSettings> = spec
        .sweep
        .values
        .iter()
        .map(|&v| spec.point(v))
        .collect::<Result<_>>()?;
    let budget = Budget::force_evals(spec.budget_force_evals).with_burn_in(spec.burn_in);

    if options.write_outputs {
        let dir = spec.out_dir.join("samples");
        std::fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;
    }

    let tasks: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..spec.replicas).map(move |r| (p, r)))
        .collect();
    let job = |&(p, r): &(usize, usize)| -> Result<ReplicaSummary> {
        let seed = replica_seed(spec.seed, r);
        match run_replica(&model, &points[p], budget, seed) {
            Ok(record) => {
                if options.write_outputs {
                    write_samples(&samples_path(&spec.out_dir, p, r), &record, options.momenta)?;
                }
                Ok(ReplicaSummary::from_record(r, seed, &record, &observable))
            }
            Err(e) => Ok(ReplicaSummary::failed(r, seed, e.to_string())),
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers)
        .build()
        .map_err(|e| HarnessError::spec("workers", e.to_string()))?;
    let results: Vec<ReplicaSummary> =
        pool.install(|| tasks.par_iter().map(job).collect::<Result<_>>())?;

    let mut results = results.into_iter();
    let points = spec
        .sweep
        .values
        .iter()
        .zip(&points)
        .map(|(&value, settings)| {
            let replicas: Vec<ReplicaSummary> = results.by_ref().take(spec.replicas).collect();
            PointSummary {
                value,
                dt: settings.leg.dt(),
                steps: settings.leg.steps(),
                sin_psi: settings.angle.sin(),
                extra_chances: settings.extra_chances,
                aggregate: Aggregate::from_replicas(&replicas),
                replicas,
            }
        })
        .collect();

    let report = SummaryReport {
        axis: spec.sweep.axis,
        target: spec.target.clone(),
        observable: spec.observable.clone(),
        budget_force_evals: spec.budget_force_evals,
        burn_in: spec.burn_in,
        jitter: spec.fixed.jitter,
        seed: spec.seed,
        error_bars: ERROR_BAR_NOTE,
        points,
    };
    if options.write_outputs {
        let path = summary_path(&spec.out_dir);
        std::fs::write(&path, report.to_json()?).map_err(|e| HarnessError::io(&path, e))?;
    }
    Ok(report)
}
