//! Velocity Verlet integration legs and numerical checks of their geometry.
//!
//! One leg `I` advances `L` time-steps of length `Δt`:
//!
//! ```text
//! y ← y − (Δt/2) ∇V(x)
//! repeat L − 1 times:  x ← x + Δt M⁻¹y ;  y ← y − Δt ∇V(x)
//! x ← x + Δt M⁻¹y
//! y ← y − (Δt/2) ∇V(x)
//! ```
//!
//! which costs `L + 1` gradient evaluations. No gradient is cached between
//! legs, so the reported count is exactly the number of `∇V` calls.

use nalgebra::DMatrix;

use crate::error::{DivergedLeg, Error, Result};
use crate::noise::NoiseSource;
use crate::phase::{PhaseState, TargetModel};

/// Time-step `Δt > 0` and number of steps `L ≥ 1` of one leg.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegSpec {
    dt: f64,
    steps: usize,
}

impl LegSpec {
    pub fn new(dt: f64, steps: usize) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(
                "dt",
                format!("{dt} is not a positive time-step"),
            ));
        }
        if steps == 0 {
            return Err(Error::invalid("L", "a leg needs at least one time-step"));
        }
        Ok(Self { dt, steps })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// `L · Δt`.
    pub fn span(&self) -> f64 {
        self.dt * self.steps as f64
    }

    /// Same number of steps, different time-step.
    pub fn with_dt(&self, dt: f64) -> Result<Self> {
        Self::new(dt, self.steps)
    }

    /// `L + 1`.
    pub fn force_evals(&self) -> u64 {
        self.steps as u64 + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LegOutcome {
    pub state: PhaseState,
    pub force_evals: u64,
}

/// Applies one velocity Verlet leg `I` to `z`.
pub fn verlet_leg(model: &TargetModel, spec: &LegSpec, z: &PhaseState) -> Result<LegOutcome> {
    model.check_dim(z)?;
    integrate(model, spec, z).map_err(Error::from)
}

pub(crate) fn integrate(
    model: &TargetModel,
    spec: &LegSpec,
    z: &PhaseState,
) -> Result<LegOutcome, DivergedLeg> {
    let dt = spec.dt;
    let half = 0.5 * dt;
    let mass = model.mass();
    let mut x = z.x().to_vec();
    let mut y = z.y().to_vec();
    let mut grad = vec![0.0; x.len()];
    let mut evals = 0u64;

    let diverged = |step: usize, evals: u64| DivergedLeg {
        step,
        force_evals: evals,
    };

    model.gradient(&x, &mut grad);
    evals += 1;
    if !all_finite(&grad) {
        return Err(diverged(0, evals));
    }
    kick(&mut y, half, &grad);

    for step in 1..spec.steps {
        mass.add_scaled_inverse(&mut x, dt, &y);
        model.gradient(&x, &mut grad);
        evals += 1;
        if !all_finite(&x) || !all_finite(&grad) {
            return Err(diverged(step, evals));
        }
        kick(&mut y, dt, &grad);
    }

    mass.add_scaled_inverse(&mut x, dt, &y);
    model.gradient(&x, &mut grad);
    evals += 1;
    if !all_finite(&x) || !all_finite(&grad) {
        return Err(diverged(spec.steps, evals));
    }
    kick(&mut y, half, &grad);
    if !all_finite(&y) {
        return Err(diverged(spec.steps, evals));
    }

    Ok(LegOutcome {
        state: PhaseState::from_parts_unchecked(x, y),
        force_evals: evals,
    })
}

fn kick(y: &mut [f64], scale: f64, grad: &[f64]) {
    for (yi, gi) in y.iter_mut().zip(grad) {
        *yi -= scale * gi;
    }
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|a| a.is_finite())
}

/// `base_dt · (1 + w)` with `w` uniform on `[-fraction, fraction]`.
///
/// Always consumes exactly one jitter draw, also when `fraction == 0`, so
/// the draw sequence does not depend on the jitter setting.
pub fn jitter_dt<N: NoiseSource + ?Sized>(base_dt: f64, fraction: f64, noise: &mut N) -> f64 {
    let w = noise.jitter_uniform();
    base_dt * (1.0 + fraction * (2.0 * w - 1.0))
}

/// Finite-difference step used by the geometric checkers.
pub const FD_STEP: f64 = 1e-5;

/// Central finite-difference Jacobian of `I` at `z` (`2d × 2d`, columns
/// ordered `x₁…x_d, y₁…y_d`).
pub fn leg_jacobian(model: &TargetModel, spec: &LegSpec, z: &PhaseState) -> Result<DMatrix<f64>> {
    model.check_dim(z)?;
    let d = z.dim();
    let base: Vec<f64> = z.x().iter().chain(z.y()).copied().collect();
    let mut jac = DMatrix::zeros(2 * d, 2 * d);
    for c in 0..2 * d {
        let mut plus = base.clone();
        let mut minus = base.clone();
        plus[c] += FD_STEP;
        minus[c] -= FD_STEP;
        let fp = integrate(model, spec, &split(&plus, d))?.state;
        let fm = integrate(model, spec, &split(&minus, d))?.state;
        let diff = fp.x().iter().chain(fp.y()).zip(fm.x().iter().chain(fm.y()));
        for (r, (a, b)) in diff.enumerate() {
            jac[(r, c)] = (a - b) / (2.0 * FD_STEP);
        }
    }
    Ok(jac)
}

fn split(v: &[f64], d: usize) -> PhaseState {
    PhaseState::from_parts_unchecked(v[..d].to_vec(), v[d..].to_vec())
}

/// `|det J − 1|` for the finite-difference Jacobian of one leg.
pub fn check_volume_preservation(
    model: &TargetModel,
    spec: &LegSpec,
    z: &PhaseState,
) -> Result<f64> {
    let jac = leg_jacobian(model, spec, z)?;
    Ok((jac.determinant() - 1.0).abs())
}

/// Relative error of `F∘I∘F∘I(z)` against `z`:
/// `‖F I F I z − z‖∞ / max(1, ‖z‖∞)`.
pub fn check_reversibility(model: &TargetModel, spec: &LegSpec, z: &PhaseState) -> Result<f64> {
    model.check_dim(z)?;
    let forward = integrate(model, spec, z)?.state;
    let back = integrate(model, spec, &forward.flipped())?.state.flipped();
    Ok(relative_distance(&back, z))
}

/// `‖a − b‖∞ / max(1, ‖b‖∞)` over both positions and momenta.
pub fn relative_distance(a: &PhaseState, b: &PhaseState) -> f64 {
    let scale = b
        .x()
        .iter()
        .chain(b.y())
        .fold(1.0f64, |m, v| m.max(v.abs()));
    let diff = a
        .x()
        .iter()
        .chain(a.y())
        .zip(b.x().iter().chain(b.y()))
        .fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
    diff / scale
}
