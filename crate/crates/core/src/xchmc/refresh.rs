use crate::noise::NoiseSource;
use crate::phase::{PhaseState, TargetModel};

use super::RefreshAngle;

/// Partial momentum refresh `(x, y) ↦ (x, cos ψ · y + sin ψ · ζ)` with
/// `ζ ~ N(0, M)`. Consumes `d` standard normal draws.
pub fn refresh_momentum<N: NoiseSource + ?Sized>(
    model: &TargetModel,
    z: &PhaseState,
    angle: &RefreshAngle,
    noise: &mut N,
) -> PhaseState {
    let mut xi = vec![0.0; z.dim()];
    noise.fill_standard_normal(&mut xi);
    let zeta = model.mass().scale_standard_normal(&xi);
    let (c, s) = (angle.cos(), angle.sin());
    let y = z
        .y()
        .iter()
        .zip(&zeta)
        .map(|(yi, zi)| c * yi + s * zi)
        .collect();
    z.with_momentum(y)
}
