//! The palindromic chain `R ∘ D ∘ R` and its noise coupling with the
//! ordinary chain.
//!
//! `R` refreshes with the angle `Ψ`, `cos²Ψ = cos ψ`. Feeding the ordinary
//! chain the coupled draws from [`couple_noise`] (and the same acceptance
//! draws) makes both chains visit identical positions.

use crate::error::{Error, Result};
use crate::noise::NoiseSource;
use crate::phase::{PhaseState, TargetModel};

use super::{
    extra_chance_step, refresh_momentum, ChainRecord, RefreshAngle, SamplerConfig, TransitionRecord,
};

/// Runs `n` transitions of `Zₙ₊₁ = R(D(R(Zₙ)))`.
///
/// Per transition the draws are: `d` normals (`ζ̄`), the acceptance uniform,
/// the jitter uniform, `d` normals (`ζ̂`). The record holds `Z₀ … Z_N`.
pub fn run_palindromic_chain<N: NoiseSource + ?Sized>(
    model: &TargetModel,
    config: &SamplerConfig,
    z0: &PhaseState,
    n: usize,
    noise: &mut N,
) -> Result<ChainRecord> {
    model.check_dim(z0)?;
    let half = config.angle.palindromic_partner();
    let mut record = ChainRecord::start(config.extra_chances, z0.clone());
    for _ in 0..n {
        let current = record.last_state();
        let bar = refresh_momentum(model, current, &half, noise);
        let out = extra_chance_step(model, config, &bar, noise)?;
        let next = refresh_momentum(model, &out.next, &half, noise);
        record.transitions.push(TransitionRecord::from(&out));
        record.states.push(next);
    }
    Ok(record)
}

/// Initial momentum and refresh draws for the ordinary chain.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledNoise {
    pub y0: Vec<f64>,
    /// `ζ₁ … ζ_N`.
    pub zeta: Vec<Vec<f64>>,
}

/// Maps the palindromic chain's draws onto the ordinary chain's.
///
/// `zbar` holds `ζ̄₁ … ζ̄_N` and `zhat` at least `ζ̂₁ … ζ̂_{N−1}`, all in
/// momentum units (`N(0, M)` draws). Returns
///
/// ```text
/// y₀   = cos(ψ−Ψ) Y₀ − sin(ψ−Ψ) ζ̄₁
/// ζ₁   = sin(ψ−Ψ) Y₀ + cos(ψ−Ψ) ζ̄₁
/// ζₙ₊₁ = (cos Ψ sin Ψ ζ̂ₙ + sin Ψ ζ̄ₙ₊₁) / sin ψ,   n = 1 … N−1
/// ```
pub fn couple_noise(
    angle: &RefreshAngle,
    big_y0: &[f64],
    zbar: &[Vec<f64>],
    zhat: &[Vec<f64>],
) -> Result<CoupledNoise> {
    let n = zbar.len();
    if n == 0 {
        return Err(Error::invalid(
            "zbar_stream",
            "at least one draw is required",
        ));
    }
    if zhat.len() + 1 < n {
        return Err(Error::invalid(
            "zhat_stream",
            format!("{} draws given, {} required", zhat.len(), n - 1),
        ));
    }
    let d = big_y0.len();
    if let Some(bad) = zbar.iter().chain(zhat).find(|v| v.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: bad.len(),
        });
    }

    let half = angle.palindromic_partner();
    let (c, s) = (angle.cos(), angle.sin());
    let (ch, sh) = (half.cos(), half.sin());
    // angle-difference formulas keep ψ = Ψ exact
    let cos_diff = c * ch + s * sh;
    let sin_diff = s * ch - c * sh;

    let y0 = big_y0
        .iter()
        .zip(&zbar[0])
        .map(|(y, b)| cos_diff * y - sin_diff * b)
        .collect();
    let mut zeta = Vec::with_capacity(n);
    zeta.push(
        big_y0
            .iter()
            .zip(&zbar[0])
            .map(|(y, b)| sin_diff * y + cos_diff * b)
            .collect(),
    );
    for i in 1..n {
        zeta.push(
            zhat[i - 1]
                .iter()
                .zip(&zbar[i])
                .map(|(h, b)| (ch * sh * h + sh * b) / s)
                .collect(),
        );
    }
    Ok(CoupledNoise { y0, zeta })
}
