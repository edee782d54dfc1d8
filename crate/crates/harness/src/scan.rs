//! Step-size scan used to locate the stability edge of a target.

use serde::Serialize;
use xcghmc::{slot_stats, Budget, LegSpec, RefreshAngle, TargetModel};

use crate::error::Result;
use crate::experiment::run_replica;
use crate::spec::{steps_for_span, PointSettings};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanPoint {
    pub dt: f64,
    #[serde(rename = "L")]
    pub steps: usize,
    /// Acceptance rate of plain HMC (no extra chance, full refresh, no jitter).
    pub acceptance: f64,
}

/// Measures the single-chance acceptance rate at each `dt` with the leg
/// span held at `span`.
pub fn scan_dt(
    model: &TargetModel,
    span: f64,
    grid: &[f64],
    transitions: usize,
    seed: u64,
) -> Result<Vec<ScanPoint>> {
    grid.iter()
        .map(|&dt| {
            let steps = steps_for_span(span, dt);
            let settings = PointSettings {
                leg: LegSpec::new(dt, steps)?,
                angle: RefreshAngle::full(),
                extra_chances: 0,
                jitter: 0.0,
            };
            let budget = Budget::transitions(transitions).with_burn_in(transitions / 10);
            let record = run_replica(model, &settings, budget, seed)?;
            Ok(ScanPoint {
                dt,
                steps,
                acceptance: slot_stats(&record)?.acceptance(0),
            })
        })
        .collect()
}

/// Largest scanned `dt` whose acceptance is still at least `threshold`.
pub fn largest_stable_dt(points: &[ScanPoint], threshold: f64) -> Option<ScanPoint> {
    points
        .iter()
        .filter(|p| p.acceptance >= threshold)
        .max_by(|a, b| a.dt.total_cmp(&b.dt))
        .copied()
}
